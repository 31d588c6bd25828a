//! Tetrahedral meshes: structured Kuhn meshes of cubes and a line-oriented
//! text format.
//!
//! The text format is
//!
//! ```text
//! tetmesh <N> <T>
//! x y z          (N lines)
//! i0 i1 i2 i3    (T lines, 0-based)
//! ```
//!
//! Tokens are whitespace separated and lines starting with `#` are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::vec3::{cross, dot, norm, sub, Vec3};

/// Relative volume threshold below which a tetrahedron counts as degenerate.
const DEGENERATE_VOLUME: f64 = 1e-14;

/// Tetrahedral triangulation. Immutable after construction; every cell has
/// strictly positive signed volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    h_max: f64,
}

/// Signed volume of the tetrahedron `(a, b, c, d)`.
pub fn signed_volume(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    dot(sub(b, a), cross(sub(c, a), sub(d, a))) / 6.0
}

fn longest_edge(p: [Vec3; 4]) -> f64 {
    let mut h = 0.0_f64;
    for i in 0..4 {
        for j in (i + 1)..4 {
            h = h.max(norm(sub(p[i], p[j])));
        }
    }
    h
}

impl Mesh {
    /// Builds a mesh, rejecting out-of-range indices and cells whose signed
    /// volume is not strictly positive.
    pub fn new(vertices: Vec<Vec3>, tets: Vec<[usize; 4]>) -> Result<Self> {
        Self::build(vertices, tets, false)
    }

    /// Like [`Mesh::new`] but swaps two indices of every negatively oriented
    /// cell. Degenerate cells are still rejected.
    pub fn new_oriented(vertices: Vec<Vec3>, tets: Vec<[usize; 4]>) -> Result<Self> {
        Self::build(vertices, tets, true)
    }

    fn build(vertices: Vec<Vec3>, mut tets: Vec<[usize; 4]>, orient: bool) -> Result<Self> {
        let n = vertices.len();
        if let Some((z, v)) = vertices
            .iter()
            .enumerate()
            .find(|(_, v)| v.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::Geometry(format!("vertex {z} has non-finite coordinates {v:?}")));
        }
        let mut h_max = 0.0_f64;
        for (t, tet) in tets.iter_mut().enumerate() {
            if let Some(&bad) = tet.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidParameter(format!(
                    "tet {t} references vertex {bad} but the mesh has {n} vertices"
                )));
            }
            let p = tet.map(|i| vertices[i]);
            let h = longest_edge(p);
            let mut vol = signed_volume(p[0], p[1], p[2], p[3]);
            if orient && vol < 0.0 {
                tet.swap(2, 3);
                vol = -vol;
            }
            if !(vol > DEGENERATE_VOLUME * h * h * h) {
                return Err(Error::Geometry(format!(
                    "tet {t} {tet:?} has non-positive volume {vol:e}"
                )));
            }
            h_max = h_max.max(h);
        }
        Ok(Self { vertices, tets, h_max })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    /// Maximum over all cells of the longest edge.
    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn tet_points(&self, t: usize) -> [Vec3; 4] {
        self.tets[t].map(|i| self.vertices[i])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let p = self.tet_points(t);
        signed_volume(p[0], p[1], p[2], p[3])
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.n_tets()).map(|t| self.tet_volume(t)).sum()
    }

    /// Number of cells sharing each triangular face, keyed by sorted vertex triple.
    pub fn face_counts(&self) -> HashMap<[usize; 3], usize> {
        const FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];
        let mut counts = HashMap::with_capacity(2 * self.tets.len());
        for tet in &self.tets {
            for f in FACES {
                let mut key = f.map(|i| tet[i]);
                key.sort_unstable();
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        counts
    }

    /// True when every face is shared by one (boundary) or two (interior) cells.
    pub fn is_conforming(&self) -> bool {
        self.face_counts().values().all(|&c| c == 1 || c == 2)
    }

    /// Index of the vertex at `p`, if any (exact coordinate match).
    pub fn find_vertex(&self, p: Vec3) -> Option<usize> {
        self.vertices.iter().position(|&v| v == p)
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for d in 0..3 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        (lo, hi)
    }
}

/// Cube of side `edge_length` centred at `center`, split into `n³` cells and
/// each cell into the 6 Kuhn tetrahedra sharing the diagonal from its lowest
/// to its highest corner.
pub fn build_cube_mesh(n: usize, edge_length: f64, center: Vec3) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidParameter("subdivisions per axis must be >= 1".into()));
    }
    if !(edge_length > 0.0) || !edge_length.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "edge length must be positive, got {edge_length}"
        )));
    }
    let np = n + 1;
    let h = edge_length / n as f64;
    let origin = center.map(|c| c - 0.5 * edge_length);
    let idx = |i: usize, j: usize, k: usize| i + np * (j + np * k);

    let mut vertices = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                vertices.push([
                    origin[0] + i as f64 * h,
                    origin[1] + j as f64 * h,
                    origin[2] + k as f64 * h,
                ]);
            }
        }
    }

    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut tets = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    let mut c = [i, j, k];
                    let mut tet = [idx(c[0], c[1], c[2]); 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        tet[s + 1] = idx(c[0], c[1], c[2]);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    Mesh::new_oriented(vertices, tets)
}

/// Serialises `mesh` in the `tetmesh` text format.
pub fn save_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tetmesh {} {}", mesh.n_vertices(), mesh.n_tets());
    for v in mesh.vertices() {
        let _ = writeln!(out, "{} {} {}", v[0], v[1], v[2]);
    }
    for t in mesh.tets() {
        let _ = writeln!(out, "{} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    out
}

/// Parses the `tetmesh` text format.
pub fn load_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty mesh file".into(),
    })?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 3 || tokens[0] != "tetmesh" {
        return Err(Error::Parse {
            line: hline,
            msg: format!("expected `tetmesh <N> <T>`, got `{header}`"),
        });
    }
    let count = |s: &str| {
        s.parse::<usize>().map_err(|e| Error::Parse {
            line: hline,
            msg: format!("bad count `{s}`: {e}"),
        })
    };
    let (n, t) = (count(tokens[1])?, count(tokens[2])?);

    let mut vertices = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, l) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: format!("expected {n} vertex lines, found {}", vertices.len()),
        })?;
        vertices.push(parse_row::<f64, 3>(line, l)?);
    }
    let mut tets = Vec::with_capacity(t);
    for _ in 0..t {
        let (line, l) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: format!("expected {t} tet lines, found {}", tets.len()),
        })?;
        let tet = parse_row::<usize, 4>(line, l)?;
        if let Some(&bad) = tet.iter().find(|&&i| i >= n) {
            return Err(Error::Parse {
                line,
                msg: format!("vertex index {bad} out of range for {n} vertices"),
            });
        }
        tets.push(tet);
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse {
            line,
            msg: "trailing data after the last tet".into(),
        });
    }
    Mesh::new(vertices, tets)
}

fn parse_row<T, const K: usize>(line: usize, l: &str) -> Result<[T; K]>
where
    T: std::str::FromStr + Copy + Default,
    T::Err: std::fmt::Display,
{
    let mut out = [T::default(); K];
    let mut it = l.split_whitespace();
    for slot in out.iter_mut() {
        let tok = it.next().ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected {K} values"),
        })?;
        *slot = tok.parse().map_err(|e| Error::Parse {
            line,
            msg: format!("bad value `{tok}`: {e}"),
        })?;
    }
    if it.next().is_some() {
        return Err(Error::Parse {
            line,
            msg: format!("expected {K} values"),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_cube() {
        let m = build_cube_mesh(1, 1.0, [0.5, 0.5, 0.5]).unwrap();
        assert_eq!(m.n_vertices(), 8);
        assert_eq!(m.n_tets(), 6);
        assert!((m.total_volume() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn two_cell_cube_counts() {
        let m = build_cube_mesh(2, 1.0, [0.0; 3]).unwrap();
        assert_eq!(m.n_vertices(), 27);
        assert_eq!(m.n_tets(), 48);
    }

    #[test]
    fn cube_volume_partition_and_orientation() {
        for n in 1..=5 {
            let l = 0.7 + n as f64;
            let m = build_cube_mesh(n, l, [0.3, -1.0, 2.0]).unwrap();
            assert!((m.total_volume() - l * l * l).abs() < 1e-13 * l * l * l);
            assert!((0..m.n_tets()).all(|t| m.tet_volume(t) > 0.0));
            assert!(m.is_conforming());
            let diag = (3.0_f64).sqrt() * l / n as f64;
            assert!((m.h_max() - diag).abs() <= 4.0 * f64::EPSILON * diag);
        }
    }

    #[test]
    fn kuhn_mesh_interior_faces_shared_twice() {
        let n = 3;
        let m = build_cube_mesh(n, 1.0, [0.0; 3]).unwrap();
        let counts = m.face_counts();
        let boundary = counts.values().filter(|&&c| c == 1).count();
        // 6 cube faces, n² squares each, 2 triangles per square
        assert_eq!(boundary, 6 * n * n * 2);
        assert!(counts.values().all(|&c| c <= 2));
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(build_cube_mesh(0, 1.0, [0.0; 3]), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_cube_mesh(2, 0.0, [0.0; 3]), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_cube_mesh(2, -1.0, [0.0; 3]), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn save_load_round_trip() {
        let m = build_cube_mesh(2, 1.3, [0.1, 0.2, 0.3]).unwrap();
        let text = save_mesh(&m);
        let back = load_mesh(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(save_mesh(&back), text);
    }

    #[test]
    fn load_skips_comments() {
        let text = "# unit tet\ntetmesh 4 1\n0 0 0\n1 0 0\n# middle\n0 1 0\n0 0 1\n0 1 2 3\n";
        let m = load_mesh(text).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert!((m.total_volume() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn load_rejects_out_of_range_index() {
        let mut text = String::from("tetmesh 8 1\n");
        for v in build_cube_mesh(1, 1.0, [0.5; 3]).unwrap().vertices() {
            text.push_str(&format!("{} {} {}\n", v[0], v[1], v[2]));
        }
        text.push_str("0 1 3 99\n");
        assert!(matches!(load_mesh(&text), Err(Error::Parse { line: 10, .. })));
    }

    #[test]
    fn load_rejects_degenerate_tet() {
        let text = "tetmesh 4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 1 3\n";
        assert!(matches!(load_mesh(text), Err(Error::Geometry(_))));
    }

    #[test]
    fn load_rejects_inverted_tet() {
        let text = "tetmesh 4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 2 1 3\n";
        assert!(matches!(load_mesh(text), Err(Error::Geometry(_))));
    }

    #[test]
    fn load_rejects_malformed_header() {
        assert!(matches!(load_mesh("trimesh 3 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(load_mesh(""), Err(Error::Parse { .. })));
        assert!(matches!(load_mesh("tetmesh 4 1\n0 0 0\n"), Err(Error::Parse { .. })));
    }
}

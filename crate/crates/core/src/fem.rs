//! P1 finite elements on tetrahedra and the mass-lumped discrete operators.
//!
//! Vector fields are stored nodally, one 3-vector per mesh vertex. The lumped
//! inner product is `⟨u, w⟩_h = Σ_z β_z u(z)·w(z)` with `β_z = ∫ φ_z`; the
//! discrete Laplacian is `Δ_h w = −β⁻¹ A w` (componentwise, `A` the P1
//! stiffness matrix); `P_h w = β⁻¹ M w` for P1 inputs (`M` the consistent
//! mass matrix).

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::Mesh;
use crate::vec3::{cross, dot, norm, scale, sub, Vec3};

/// Tolerance on `| |m(z)| − 1 |` for a field to count as unit length.
pub const UNIT_TOL: f64 = 1e-9;

/// Smallest nodal modulus accepted by the sphere projection.
pub const PROJECTION_MIN_MODULUS: f64 = 1e-12;

/// Off-diagonal stiffness entries above this value violate the angle condition.
pub const ANGLE_CONDITION_SLACK: f64 = 1e-13;

/// One 3-vector per mesh vertex. `unit` records that every nodal modulus is
/// within [`UNIT_TOL`] of one.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    values: Vec<Vec3>,
    unit: bool,
}

impl NodalField {
    pub fn new(values: Vec<Vec3>) -> Self {
        Self { values, unit: false }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![[0.0; 3]; n])
    }

    pub fn constant(n: usize, v: Vec3) -> Self {
        Self::new(vec![v; n])
    }

    pub fn from_flat(x: &[f64]) -> Result<Self> {
        let (chunks, rest) = x.as_chunks::<3>();
        if !rest.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "flat field length {} is not a multiple of 3",
                x.len()
            )));
        }
        Ok(Self::new(chunks.to_vec()))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    /// Mutable access; clears the `unit` flag.
    pub fn values_mut(&mut self) -> &mut [Vec3] {
        self.unit = false;
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Vec3> {
        self.values
    }

    pub fn as_flat(&self) -> &[f64] {
        self.values.as_flattened()
    }

    pub fn is_unit_flagged(&self) -> bool {
        self.unit
    }

    /// `max_z | |value(z)| − 1 |`
    pub fn max_unit_error(&self) -> f64 {
        self.values.iter().map(|v| (norm(*v) - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Sets the `unit` flag after checking every nodal modulus.
    pub fn into_unit(mut self) -> Result<Self> {
        let err = self.max_unit_error();
        if !(err <= UNIT_TOL) {
            return Err(Error::Precondition(format!(
                "field is not unit length (max | |m| - 1 | = {err:e})"
            )));
        }
        self.unit = true;
        Ok(self)
    }

    /// Sets the unit flag when every nodal modulus is within [`UNIT_TOL`] of 1,
    /// clears it otherwise.
    pub fn flag_if_unit(mut self) -> Self {
        self.unit = self.max_unit_error() <= UNIT_TOL;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().all(|c| c.is_finite())
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &NodalField) -> NodalField {
        debug_assert_eq!(self.len(), other.len());
        Self::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]])
                .collect(),
        )
    }

    /// `a * self + b * other`
    pub fn lin_comb(&self, a: f64, b: f64, other: &NodalField) -> NodalField {
        debug_assert_eq!(self.len(), other.len());
        Self::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| [a * x[0] + b * y[0], a * x[1] + b * y[1], a * x[2] + b * y[2]])
                .collect(),
        )
    }

    pub fn scaled(&self, s: f64) -> NodalField {
        Self::new(self.values.iter().map(|v| scale(s, *v)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| norm(*v)).fold(0.0, f64::max)
    }

    pub fn mean(&self) -> Vec3 {
        let n = self.len().max(1) as f64;
        let s = self.values.iter().fold([0.0; 3], |acc, v| crate::vec3::add(acc, *v));
        scale(1.0 / n, s)
    }
}

fn check_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::InvalidParameter(format!("{what}: length mismatch ({a} vs {b})")));
    }
    Ok(())
}

/// Nodal weights `β_z = ∫ φ_z`.
#[derive(Debug, Clone, PartialEq)]
pub struct LumpedMass(Vec<f64>);

impl LumpedMass {
    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl std::ops::Index<usize> for LumpedMass {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `β_z` = sum over incident tets of volume / 4.
pub fn lumped_mass(mesh: &Mesh) -> LumpedMass {
    let mut beta = vec![0.0; mesh.n_vertices()];
    for (t, tet) in mesh.tets().iter().enumerate() {
        let quarter = 0.25 * mesh.tet_volume(t);
        for &i in tet {
            beta[i] += quarter;
        }
    }
    LumpedMass(beta)
}

/// Gradients of the four barycentric hat functions and the cell volume.
pub fn p1_gradients(p: [Vec3; 4]) -> Result<([Vec3; 4], f64)> {
    let e1 = sub(p[1], p[0]);
    let e2 = sub(p[2], p[0]);
    let e3 = sub(p[3], p[0]);
    let det = dot(e1, cross(e2, e3));
    if !(det > 0.0) {
        return Err(Error::Geometry(format!("degenerate or inverted tet (6V = {det:e})")));
    }
    let g1 = scale(1.0 / det, cross(e2, e3));
    let g2 = scale(1.0 / det, cross(e3, e1));
    let g3 = scale(1.0 / det, cross(e1, e2));
    let g0 = [-(g1[0] + g2[0] + g3[0]), -(g1[1] + g2[1] + g3[1]), -(g1[2] + g2[2] + g3[2])];
    Ok(([g0, g1, g2, g3], det / 6.0))
}

fn assemble<F>(mesh: &Mesh, element: F) -> Result<CsrMatrix>
where
    F: Fn([Vec3; 4]) -> Result<[[f64; 4]; 4]>,
{
    let mut trip = Vec::with_capacity(16 * mesh.n_tets());
    for t in 0..mesh.n_tets() {
        let local = element(mesh.tet_points(t))?;
        let tet = mesh.tets()[t];
        for i in 0..4 {
            for j in 0..4 {
                trip.push((tet[i], tet[j], local[i][j]));
            }
        }
    }
    let n = mesh.n_vertices();
    CsrMatrix::from_triplets(n, n, &trip)
}

/// P1 stiffness matrix `a_{z,z'} = ∫ ∇φ_z' · ∇φ_z`.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<CsrMatrix> {
    assemble(mesh, |p| {
        let (g, vol) = p1_gradients(p)?;
        let mut k = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                k[i][j] = vol * dot(g[i], g[j]);
            }
        }
        Ok(k)
    })
}

/// Consistent P1 mass matrix, element matrix `V/20 (1 + δ_ij)`.
pub fn assemble_consistent_mass(mesh: &Mesh) -> Result<CsrMatrix> {
    assemble(mesh, |p| {
        let (_, vol) = p1_gradients(p)?;
        let off = vol / 20.0;
        let mut k = [[off; 4]; 4];
        for (i, row) in k.iter_mut().enumerate() {
            row[i] = 2.0 * off;
        }
        Ok(k)
    })
}

/// `⟨u, w⟩_h = Σ_z β_z u(z)·w(z)`
pub fn inner_h(beta: &LumpedMass, u: &NodalField, w: &NodalField) -> Result<f64> {
    check_len(u.len(), beta.len(), "inner_h")?;
    check_len(w.len(), beta.len(), "inner_h")?;
    Ok(beta.0.iter().zip(u.values().iter().zip(w.values())).map(|(b, (x, y))| b * dot(*x, *y)).sum())
}

pub fn norm_h(beta: &LumpedMass, u: &NodalField) -> Result<f64> {
    inner_h(beta, u, u).map(f64::sqrt)
}

/// `Δ_h w = −β⁻¹ A w`, componentwise.
pub fn discrete_laplacian(a: &CsrMatrix, beta: &LumpedMass, w: &NodalField) -> Result<NodalField> {
    check_len(w.len(), beta.len(), "discrete_laplacian")?;
    check_len(a.n_rows(), beta.len(), "discrete_laplacian")?;
    let mut out = vec![[0.0; 3]; w.len()];
    a.spmv_vec3(w.values(), &mut out);
    for (o, b) in out.iter_mut().zip(beta.weights()) {
        *o = scale(-1.0 / b, *o);
    }
    Ok(NodalField::new(out))
}

/// `(P_h w)(z) = β_z⁻¹ ∫ w φ_z = β_z⁻¹ (M w)(z)` for P1 fields `w`.
pub fn apply_ph(m: &CsrMatrix, beta: &LumpedMass, w: &NodalField) -> Result<NodalField> {
    check_len(w.len(), beta.len(), "apply_ph")?;
    check_len(m.n_rows(), beta.len(), "apply_ph")?;
    let mut out = vec![[0.0; 3]; w.len()];
    m.spmv_vec3(w.values(), &mut out);
    for (o, b) in out.iter_mut().zip(beta.weights()) {
        *o = scale(1.0 / b, *o);
    }
    Ok(NodalField::new(out))
}

/// Nodal interpolant of `u × w`.
pub fn nodal_cross(u: &NodalField, w: &NodalField) -> Result<NodalField> {
    check_len(u.len(), w.len(), "nodal_cross")?;
    Ok(NodalField::new(u.values().iter().zip(w.values()).map(|(a, b)| cross(*a, *b)).collect()))
}

/// `m(z) = u(z) / |u(z)|` at every vertex.
pub fn nodal_project_sphere(u: &NodalField) -> Result<NodalField> {
    let mut out = Vec::with_capacity(u.len());
    for (z, v) in u.values().iter().enumerate() {
        let r = norm(*v);
        if !(r >= PROJECTION_MIN_MODULUS) {
            return Err(Error::ProjectionDegenerate { vertex: z, modulus: r });
        }
        // already unit up to rounding: keep bits so the projection is idempotent
        if (r - 1.0).abs() <= 4.0 * f64::EPSILON {
            out.push(*v);
        } else {
            out.push(scale(1.0 / r, *v));
        }
    }
    Ok(NodalField { values: out, unit: true })
}

/// Outcome of [`check_angle_condition`].
#[derive(Debug, Clone, PartialEq)]
pub struct AngleReport {
    pub pass: bool,
    /// Largest off-diagonal stiffness entry (`-inf` for a 1x1 matrix).
    pub worst_offdiag: f64,
    /// `(z, z', a_{z,z'})` for every off-diagonal entry above the slack.
    pub offending: Vec<(usize, usize, f64)>,
}

/// Checks `a_{z,z'} ≤ 0` for all `z ≠ z'` (up to [`ANGLE_CONDITION_SLACK`]).
pub fn check_angle_condition(a: &CsrMatrix) -> AngleReport {
    let mut worst = f64::NEG_INFINITY;
    let mut offending = Vec::new();
    for i in 0..a.n_rows() {
        for (j, v) in a.row(i) {
            if i == j {
                continue;
            }
            worst = worst.max(v);
            if v > ANGLE_CONDITION_SLACK {
                offending.push((i, j, v));
            }
        }
    }
    AngleReport { pass: offending.is_empty(), worst_offdiag: worst, offending }
}

/// L², squared gradient and H¹ norms of a discrete field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub grad_sq: f64,
    pub h1: f64,
}

fn quadratic_form(a: &CsrMatrix, w: &NodalField) -> f64 {
    let mut aw = vec![[0.0; 3]; w.len()];
    a.spmv_vec3(w.values(), &mut aw);
    aw.iter().zip(w.values()).map(|(x, y)| dot(*x, *y)).sum()
}

/// `l2² = Σ_c w_cᵀ M w_c`, `grad_sq = Σ_c w_cᵀ A w_c`, `h1 = sqrt(l2² + grad_sq)`.
pub fn norms(m: &CsrMatrix, a: &CsrMatrix, w: &NodalField) -> Result<Norms> {
    check_len(w.len(), m.n_rows(), "norms")?;
    check_len(w.len(), a.n_rows(), "norms")?;
    let l2_sq = quadratic_form(m, w);
    let grad_sq = quadratic_form(a, w);
    Ok(Norms { l2: l2_sq.max(0.0).sqrt(), grad_sq, h1: (l2_sq + grad_sq).max(0.0).sqrt() })
}

/// Mesh-constant assembled objects shared by all schemes.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub beta: LumpedMass,
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub volume: f64,
}

impl Assembly {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        Ok(Self {
            beta: lumped_mass(mesh),
            stiffness: assemble_stiffness(mesh)?,
            mass: assemble_consistent_mass(mesh)?,
            volume: mesh.total_volume(),
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.beta.len()
    }

    pub fn laplacian(&self, w: &NodalField) -> Result<NodalField> {
        discrete_laplacian(&self.stiffness, &self.beta, w)
    }

    pub fn ph(&self, w: &NodalField) -> Result<NodalField> {
        apply_ph(&self.mass, &self.beta, w)
    }

    pub fn inner_h(&self, u: &NodalField, w: &NodalField) -> Result<f64> {
        inner_h(&self.beta, u, w)
    }

    pub fn norms(&self, w: &NodalField) -> Result<Norms> {
        norms(&self.mass, &self.stiffness, w)
    }

    /// `‖∇w‖²`
    pub fn grad_sq(&self, w: &NodalField) -> f64 {
        quadratic_form(&self.stiffness, w)
    }

    /// `‖w‖²` with the consistent mass matrix.
    pub fn l2_sq(&self, w: &NodalField) -> f64 {
        quadratic_form(&self.mass, w)
    }

    /// `(u, w)` with the consistent mass matrix.
    pub fn l2_inner(&self, u: &NodalField, w: &NodalField) -> f64 {
        let mut mu = vec![[0.0; 3]; u.len()];
        self.mass.spmv_vec3(u.values(), &mut mu);
        mu.iter().zip(w.values()).map(|(x, y)| dot(*x, *y)).sum()
    }
}

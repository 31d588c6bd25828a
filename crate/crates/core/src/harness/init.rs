use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fem::NodalField;
use crate::mesh::Mesh;
use crate::vec3::{norm, scale, Vec3};

/// Initial magnetization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitSpec {
    /// The same unit vector at every node (normalised on use).
    Uniform(Vec3),
    /// Independent uniformly distributed directions from a seeded ChaCha8 stream.
    Random(u64),
    /// `m(z) = z / |z|`, with `e3` at the origin.
    Hedgehog,
}

/// Per-node i.i.d. uniform directions: a standard Gaussian triple drawn from
/// `ChaCha8Rng::seed_from_u64(seed)` and normalised.
pub fn random_unit_field(n: usize, seed: u64) -> NodalField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n)
        .map(|_| loop {
            let g: Vec3 = [
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            ];
            let r = norm(g);
            if r > 1e-8 {
                break scale(1.0 / r, g);
            }
        })
        .collect();
    NodalField::new(values).flag_if_unit()
}

/// Builds the unit-flagged initial field on `mesh`.
pub fn init_state(spec: &InitSpec, mesh: &Mesh) -> Result<NodalField> {
    let n = mesh.n_vertices();
    let field = match *spec {
        InitSpec::Uniform(u) => {
            let r = norm(u);
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::Config(format!("uniform initial direction {u:?} is not usable")));
            }
            NodalField::constant(n, scale(1.0 / r, u))
        }
        InitSpec::Random(seed) => random_unit_field(n, seed),
        InitSpec::Hedgehog => {
            let (lo, hi) = mesh.bounding_box();
            if !(0..3).all(|d| lo[d] < 0.0 && hi[d] > 0.0) {
                return Err(Error::Config(
                    "hedgehog state needs a mesh containing the origin in its interior".into(),
                ));
            }
            let tol = 1e-12 * mesh.h_max();
            let values = mesh
                .vertices()
                .iter()
                .map(|&z| {
                    let r = norm(z);
                    if r <= tol {
                        [0.0, 0.0, 1.0]
                    } else {
                        scale(1.0 / r, z)
                    }
                })
                .collect();
            NodalField::new(values)
        }
    };
    field.into_unit()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_cube_mesh;

    #[test]
    fn uniform_everywhere() {
        let mesh = build_cube_mesh(2, 1.0, [0.5; 3]).unwrap();
        let m = init_state(&InitSpec::Uniform([1.0, 0.0, 0.0]), &mesh).unwrap();
        assert!(m.is_unit_flagged());
        assert!(m.values().iter().all(|v| *v == [1.0, 0.0, 0.0]));
    }

    #[test]
    fn random_is_unit_and_reproducible() {
        let mesh = build_cube_mesh(3, 1.0, [0.5; 3]).unwrap();
        let a = init_state(&InitSpec::Random(42), &mesh).unwrap();
        let b = init_state(&InitSpec::Random(42), &mesh).unwrap();
        let c = init_state(&InitSpec::Random(43), &mesh).unwrap();
        assert!(a.max_unit_error() <= 1e-15);
        assert_eq!(a.as_flat(), b.as_flat());
        assert_ne!(a.as_flat(), c.as_flat());
    }

    #[test]
    fn random_directions_have_zero_mean() {
        let m = random_unit_field(20000, 5);
        let mean = m.mean();
        assert!(norm(mean) < 0.03, "{mean:?}");
    }

    #[test]
    fn hedgehog_corner_and_origin() {
        let mesh = build_cube_mesh(2, 1.0, [0.0; 3]).unwrap();
        let m = init_state(&InitSpec::Hedgehog, &mesh).unwrap();
        let corner = mesh.find_vertex([-0.5, -0.5, -0.5]).unwrap();
        let s = -1.0 / 3f64.sqrt();
        for d in 0..3 {
            assert!((m.values()[corner][d] - s).abs() < 1e-15);
        }
        let origin = mesh.find_vertex([0.0; 3]).unwrap();
        assert_eq!(m.values()[origin], [0.0, 0.0, 1.0]);
    }

    #[test]
    fn hedgehog_needs_interior_origin() {
        let mesh = build_cube_mesh(2, 1.0, [0.5; 3]).unwrap();
        assert!(matches!(init_state(&InitSpec::Hedgehog, &mesh), Err(Error::Config(_))));
    }
}

//! Corrector steps: nodal projection (PC1) and the nodewise midpoint update (PC2).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{Assembly, NodalField, PROJECTION_MIN_MODULUS};
use crate::linalg::solve3;
use crate::vec3::{cross, norm, Vec3};

use super::config::IntegratorConfig;
use super::field::EffectiveField;

/// `m_next(z) = (m(z) + k v(z)) / |m(z) + k v(z)|`, unit-flagged.
pub fn corrector_project(m: &NodalField, v: &NodalField, k: f64) -> Result<NodalField> {
    if m.len() != v.len() {
        return Err(Error::InvalidParameter(format!(
            "corrector: m has {} nodes, v has {}",
            m.len(),
            v.len()
        )));
    }
    let out: Vec<Vec3> = m
        .values()
        .par_iter()
        .zip(v.values().par_iter())
        .enumerate()
        .map(|(z, (mz, vz))| {
            let w = [mz[0] + k * vz[0], mz[1] + k * vz[1], mz[2] + k * vz[2]];
            let r = norm(w);
            if !(r >= PROJECTION_MIN_MODULUS) {
                return Err(Error::ProjectionDegenerate { vertex: z, modulus: r });
            }
            if (r - 1.0).abs() <= 4.0 * f64::EPSILON {
                return Ok(w);
            }
            Ok([w[0] / r, w[1] / r, w[2] / r])
        })
        .collect::<Result<_>>()?;
    NodalField::new(out).into_unit()
}

/// Midpoint corrector. With `m̃ = m + (k/2) v`,
/// `h̃ = ℓ² Δ_h m̃ + P_h(π(m̃) + f(t + k/2))` and `b = h̃ + α m̃ × h̃`, each
/// node solves `(1+α²) η + (k/2) η × b(z) = (1+α²) m(z)` and the update is
/// `m_next = 2η − m`. Nodal moduli are preserved since `η·(η × b) = 0`.
pub fn corrector_pc2(
    asm: &Assembly,
    m: &NodalField,
    v: &NodalField,
    cfg: &IntegratorConfig,
    field: &EffectiveField,
    t: f64,
) -> Result<NodalField> {
    cfg.validate()?;
    if m.len() != v.len() || m.len() != asm.n_vertices() {
        return Err(Error::InvalidParameter(format!(
            "corrector: mesh has {} vertices, m has {}, v has {}",
            asm.n_vertices(),
            m.len(),
            v.len()
        )));
    }
    let half = 0.5 * cfg.k;
    let alpha = cfg.alpha;
    let lead = 1.0 + alpha * alpha;
    let ell_sq = field.ell_ex * field.ell_ex;

    let mid = m.axpy(half, v);
    let lap = asm.laplacian(&mid)?;
    let lower = field.lower_order_field(asm, &mid, t + half)?;

    let out: Vec<Vec3> = (0..m.len())
        .into_par_iter()
        .map(|z| {
            let l = lap.values()[z];
            let p = lower.values()[z];
            let h = [ell_sq * l[0] + p[0], ell_sq * l[1] + p[1], ell_sq * l[2] + p[2]];
            let mh = cross(mid.values()[z], h);
            let b = [h[0] + alpha * mh[0], h[1] + alpha * mh[1], h[2] + alpha * mh[2]];
            let s = half;
            // (1+α²) I − (k/2) [b]×, where [b]× x = b × x
            let a = [
                [lead, s * b[2], -s * b[1]],
                [-s * b[2], lead, s * b[0]],
                [s * b[1], -s * b[0], lead],
            ];
            let mz = m.values()[z];
            let eta = solve3(&a, [lead * mz[0], lead * mz[1], lead * mz[2]])?;
            Ok([2.0 * eta[0] - mz[0], 2.0 * eta[1] - mz[1], 2.0 * eta[2] - mz[2]])
        })
        .collect::<Result<_>>()?;
    let next = NodalField::new(out);
    Ok(if m.is_unit_flagged() { next.flag_if_unit() } else { next })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::random_unit_field;
    use crate::llg::{AppliedField, LowerOrder, Scheme};
    use crate::mesh::build_cube_mesh;

    fn close(a: Vec3, b: Vec3) -> bool {
        (0..3).all(|d| (a[d] - b[d]).abs() <= 1e-15)
    }

    #[test]
    fn projection_examples() {
        let s = 1.0 / 2f64.sqrt();
        let m = NodalField::new(vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        let v = NodalField::new(vec![[0.0, 1.0, 0.0], [0.5, 0.0, 0.0]]);
        let next = corrector_project(&m, &v, 1.0).unwrap();
        assert!(next.is_unit_flagged());
        assert!(close(next.values()[0], [s, s, 0.0]));
        let next = corrector_project(&m, &v, 4.0).unwrap();
        let r = 5f64.sqrt();
        assert!(close(next.values()[1], [2.0 / r, 0.0, 1.0 / r]));
    }

    #[test]
    fn projection_with_zero_velocity_is_identity() {
        let m = random_unit_field(50, 3);
        let next = corrector_project(&m, &NodalField::zeros(50), 0.1).unwrap();
        assert_eq!(next.values(), m.values());
    }

    #[test]
    fn projection_degenerate_node() {
        let m = NodalField::new(vec![[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let v = NodalField::new(vec![[0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        assert!(matches!(
            corrector_project(&m, &v, 1.0),
            Err(Error::ProjectionDegenerate { vertex: 1, .. })
        ));
    }

    #[test]
    fn pc2_at_rest() {
        let asm = Assembly::new(&build_cube_mesh(2, 1.0, [0.5; 3]).unwrap()).unwrap();
        let m = NodalField::constant(27, [0.0, 1.0, 0.0]).into_unit().unwrap();
        let cfg = IntegratorConfig::new(Scheme::Pc2, 0.5, 0.1, 1.0);
        let next = corrector_pc2(&asm, &m, &NodalField::zeros(27), &cfg, &EffectiveField::exchange_only(1.0), 0.0).unwrap();
        assert_eq!(next.values(), m.values());
    }

    #[test]
    fn pc2_preserves_nodal_moduli_for_any_input() {
        let asm = Assembly::new(&build_cube_mesh(2, 1.0, [0.5; 3]).unwrap()).unwrap();
        let field = EffectiveField {
            ell_ex: 0.7,
            pi: LowerOrder::Uniaxial { c: 2.0, axis: [0.0, 1.0, 0.0] },
            applied: AppliedField::Constant([1.0, -1.0, 0.5]),
        };
        let m = random_unit_field(27, 21).scaled(1.7);
        let v = random_unit_field(27, 22).scaled(3.0);
        for alpha in [0.0, 0.25, 1.0] {
            let cfg = IntegratorConfig::new(Scheme::Pc2, 0.5, 0.2, alpha);
            let next = corrector_pc2(&asm, &m, &v, &cfg, &field, 0.0).unwrap();
            for (a, b) in next.values().iter().zip(m.values()) {
                assert!((norm(*a) - norm(*b)).abs() <= 1e-12);
            }
        }
    }
}

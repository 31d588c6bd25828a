//! Predictor systems for the velocity `v ≈ ∂ₜm`.
//!
//! Tested against the hat functions `φ_z e_j`, the mass-lumped predictor is
//! the nodal system
//!
//! ```text
//! (1+α²) β_z v(z) − θkℓ² [m × A v + α m × (m × A v)](z) = β_z [−m × h₀ − α m × (m × h₀)](z)
//! h₀ = ℓ² Δ_h m + h_lower
//! ```
//!
//! which is what [`predictor_full`] hands to GMRES, Jacobi-preconditioned by
//! `((1+α²) β_z)⁻¹`. [`predictor_tangent`] solves the equivalent system posed
//! on the nodal tangent planes of a unit field.

use crate::error::{Error, Result};
use crate::fem::{Assembly, NodalField};
use crate::linalg::gmres;
use crate::vec3::{cross, dot, Vec3};

use super::config::IntegratorConfig;
use super::field::{EffectiveField, LowerOrder};
use super::tangent::tangent_basis;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorOutput {
    pub v: NodalField,
    /// Krylov iterations summed over all linear solves.
    pub linear_iterations: usize,
    /// Number of linear solves (fixed-point iterations for the implicit variant).
    pub solves: usize,
    /// Relative residual of the last linear solve.
    pub residual: f64,
}

fn check_inputs(asm: &Assembly, m: &NodalField, h_lower: &NodalField, cfg: &IntegratorConfig) -> Result<()> {
    cfg.validate()?;
    let n = asm.n_vertices();
    if m.len() != n || h_lower.len() != n {
        return Err(Error::InvalidParameter(format!(
            "predictor: mesh has {n} vertices, m has {}, h_lower has {}",
            m.len(),
            h_lower.len()
        )));
    }
    if !m.is_finite() || !h_lower.is_finite() {
        return Err(Error::InvalidParameter("predictor: non-finite input".into()));
    }
    Ok(())
}

/// `h₀(z) = ℓ² Δ_h m (z) + h_lower(z)`
fn explicit_field(asm: &Assembly, m: &NodalField, ell_sq: f64, h_lower: &NodalField) -> Vec<Vec3> {
    let mut am = vec![[0.0; 3]; m.len()];
    asm.stiffness.spmv_vec3(m.values(), &mut am);
    am.iter()
        .zip(asm.beta.weights())
        .zip(h_lower.values())
        .map(|((a, b), h)| {
            let s = -ell_sq / b;
            [s * a[0] + h[0], s * a[1] + h[1], s * a[2] + h[2]]
        })
        .collect()
}

/// Solves the full `3N` mass-lumped Landau-Lifshitz predictor with the
/// exchange field implicit (`θk`) and `h_lower` explicit.
pub fn predictor_full(
    asm: &Assembly,
    m: &NodalField,
    cfg: &IntegratorConfig,
    field: &EffectiveField,
    h_lower: &NodalField,
    initial_guess: Option<&NodalField>,
) -> Result<PredictorOutput> {
    check_inputs(asm, m, h_lower, cfg)?;
    let alpha = cfg.alpha;
    let ell_sq = field.ell_ex * field.ell_ex;
    let c = cfg.theta * cfg.k * ell_sq;
    let lead = 1.0 + alpha * alpha;
    let beta = asm.beta.weights();
    let mv = m.values();

    let h0 = explicit_field(asm, m, ell_sq, h_lower);
    let mut rhs = vec![0.0; 3 * m.len()];
    for (z, r) in rhs.as_chunks_mut::<3>().0.iter_mut().enumerate() {
        let t = cross(mv[z], h0[z]);
        let tt = cross(mv[z], t);
        for d in 0..3 {
            r[d] = -beta[z] * (t[d] + alpha * tt[d]);
        }
    }

    let apply = |x: &[f64], y: &mut [f64]| {
        let xv = x.as_chunks::<3>().0;
        let yv = y.as_chunks_mut::<3>().0;
        asm.stiffness.spmv_vec3(xv, yv);
        for z in 0..xv.len() {
            let t = cross(mv[z], yv[z]);
            let tt = cross(mv[z], t);
            for d in 0..3 {
                yv[z][d] = lead * beta[z] * xv[z][d] - c * (t[d] + alpha * tt[d]);
            }
        }
    };
    let jacobi: Vec<f64> = beta.iter().flat_map(|b| [1.0 / (lead * b); 3]).collect();
    let x0 = match initial_guess {
        Some(g) if g.len() == m.len() => g.as_flat().to_vec(),
        _ => vec![0.0; rhs.len()],
    };
    let (x, stats) = gmres(apply, Some(&jacobi), &rhs, &x0, &cfg.solver_options())?;
    Ok(PredictorOutput {
        v: NodalField::from_flat(&x)?,
        linear_iterations: stats.iterations,
        solves: 1,
        residual: stats.residual,
    })
}

/// Solves the predictor in the discrete tangent space of the unit field `m`:
/// find `v(z) ⟂ m(z)` with
/// `α⟨v, φ⟩_h + ⟨m × v, φ⟩_h − ℓ²θk⟨Δ_h v, φ⟩_h = ⟨ℓ²Δ_h m + h_lower, φ⟩_h`
/// for all tangent `φ`. Unknowns are the coordinates in the per-node basis
/// of [`tangent_basis`].
pub fn predictor_tangent(
    asm: &Assembly,
    m: &NodalField,
    cfg: &IntegratorConfig,
    field: &EffectiveField,
    h_lower: &NodalField,
) -> Result<PredictorOutput> {
    check_inputs(asm, m, h_lower, cfg)?;
    let err = m.max_unit_error();
    if !m.is_unit_flagged() && !(err <= crate::fem::UNIT_TOL) {
        return Err(Error::Precondition(format!(
            "tangent predictor needs a unit field (max | |m| - 1 | = {err:e})"
        )));
    }
    let ell_sq = field.ell_ex * field.ell_ex;
    let s = cfg.theta * cfg.k * ell_sq;
    let alpha = cfg.alpha;
    if !(alpha > 0.0 || s > 0.0) {
        return Err(Error::Precondition(
            "tangent predictor needs alpha > 0 or theta * k > 0".into(),
        ));
    }
    let n = m.len();
    let beta = asm.beta.weights();
    let basis: Vec<(Vec3, Vec3)> =
        m.values().iter().map(|&u| tangent_basis(u)).collect::<Result<_>>()?;

    let mut am = vec![[0.0; 3]; n];
    asm.stiffness.spmv_vec3(m.values(), &mut am);
    let mut rhs = vec![0.0; 2 * n];
    for (z, r) in rhs.as_chunks_mut::<2>().0.iter_mut().enumerate() {
        let h = h_lower.values()[z];
        let g = [
            -ell_sq * am[z][0] + beta[z] * h[0],
            -ell_sq * am[z][1] + beta[z] * h[1],
            -ell_sq * am[z][2] + beta[z] * h[2],
        ];
        *r = [dot(basis[z].0, g), dot(basis[z].1, g)];
    }

    let lift = |c: &[[f64; 2]], out: &mut [Vec3]| {
        for ((o, cz), (t1, t2)) in out.iter_mut().zip(c).zip(&basis) {
            *o = [
                cz[0] * t1[0] + cz[1] * t2[0],
                cz[0] * t1[1] + cz[1] * t2[1],
                cz[0] * t1[2] + cz[1] * t2[2],
            ];
        }
    };
    let scratch = std::cell::RefCell::new((vec![[0.0; 3]; n], vec![[0.0; 3]; n]));
    let apply = |x: &[f64], y: &mut [f64]| {
        let cv = x.as_chunks::<2>().0;
        let yv = y.as_chunks_mut::<2>().0;
        let mut guard = scratch.borrow_mut();
        let (v, av) = &mut *guard;
        lift(cv, v);
        asm.stiffness.spmv_vec3(v, av);
        for z in 0..n {
            let (t1, t2) = basis[z];
            let b = beta[z];
            yv[z] = [
                alpha * b * cv[z][0] - b * cv[z][1] + s * dot(t1, av[z]),
                alpha * b * cv[z][1] + b * cv[z][0] + s * dot(t2, av[z]),
            ];
        }
    };
    let diag = asm.stiffness.diagonal();
    let jacobi: Vec<f64> =
        (0..n).flat_map(|z| [1.0 / (alpha * beta[z] + s * diag[z]).max(f64::MIN_POSITIVE); 2]).collect();
    let (x, stats) = gmres(apply, Some(&jacobi), &rhs, &vec![0.0; 2 * n], &cfg.solver_options())?;

    let mut v = vec![[0.0; 3]; n];
    lift(x.as_chunks::<2>().0, &mut v);
    Ok(PredictorOutput {
        v: NodalField::new(v),
        linear_iterations: stats.iterations,
        solves: 1,
        residual: stats.residual,
    })
}

/// Predictor with the lower-order terms taken implicitly at `m + θk v`,
/// resolved by the fixed-point iteration
/// `v⁰ = 0`, `vⁱ⁺¹ = predictor_full(h_lower = P_h(π(m + θk vⁱ) + f(t + θk)))`,
/// stopped once `‖vⁱ⁺¹ − vⁱ‖_L² ≤ fixpoint_tol`.
pub fn predictor_fully_implicit(
    asm: &Assembly,
    m: &NodalField,
    cfg: &IntegratorConfig,
    field: &EffectiveField,
    t: f64,
) -> Result<PredictorOutput> {
    let tk = cfg.theta * cfg.k;
    let t_eval = t + tk;
    if field.pi == LowerOrder::None {
        // h_lower does not depend on v
        let h = field.lower_order_field(asm, m, t_eval)?;
        return predictor_full(asm, m, cfg, field, &h, None);
    }

    let mut v = NodalField::zeros(m.len());
    let mut linear_iterations = 0;
    let mut increment = f64::INFINITY;
    for i in 1..=cfg.fixpoint_maxit {
        let h = field.lower_order_field(asm, &m.axpy(tk, &v), t_eval)?;
        let out = predictor_full(asm, m, cfg, field, &h, Some(&v))?;
        linear_iterations += out.linear_iterations;
        let diff = out.v.axpy(-1.0, &v);
        increment = asm.l2_sq(&diff).max(0.0).sqrt();
        v = out.v;
        if increment <= cfg.fixpoint_tol {
            return Ok(PredictorOutput { v, linear_iterations, solves: i, residual: out.residual });
        }
        if !increment.is_finite() {
            break;
        }
    }
    Err(Error::FixedPointDivergence { iterations: cfg.fixpoint_maxit, increment })
}

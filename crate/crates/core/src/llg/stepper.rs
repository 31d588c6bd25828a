//! One time step of each integrator.

use crate::error::{Error, Result};
use crate::fem::{Assembly, NodalField};
use crate::vec3::dot;

use super::config::{IntegratorConfig, Scheme};
use super::corrector::{corrector_pc2, corrector_project};
use super::field::EffectiveField;
use super::predictor::{predictor_full, predictor_fully_implicit, PredictorOutput};

/// Discrete trajectory state at `t_ℓ = ℓ k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub step: usize,
    pub m_curr: NodalField,
    /// `m^{ℓ-1}`, kept for the extrapolated lower-order field of `PC2_IMEX`.
    pub m_prev: Option<NodalField>,
    /// Predictor velocity of the most recent step.
    pub v_last: Option<NodalField>,
}

impl SimState {
    pub fn new(m0: NodalField) -> Self {
        Self { step: 0, m_curr: m0, m_prev: None, v_last: None }
    }

    pub fn time(&self, k: f64) -> f64 {
        self.step as f64 * k
    }
}

/// Diagnostics of a single step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub linear_iterations: usize,
    pub solves: usize,
    pub residual: f64,
    /// `max_z |m(z)·v(z)| / (1 + max_z |v(z)|)` for the predictor velocity.
    pub tangency: f64,
}

/// `max_z |m(z)·v(z)| / (1 + max_z |v(z)|)`
pub fn tangency_defect(m: &NodalField, v: &NodalField) -> f64 {
    let md = m
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| dot(*a, *b).abs())
        .fold(0.0, f64::max);
    md / (1.0 + v.max_abs())
}

/// Advances `state` by one step of `cfg.scheme`. Errors carry the index of
/// the failing step.
pub fn step(
    state: &SimState,
    cfg: &IntegratorConfig,
    field: &EffectiveField,
    asm: &Assembly,
) -> Result<(SimState, StepInfo)> {
    advance(state, cfg, field, asm).map_err(|e| Error::Step { step: state.step, source: Box::new(e) })
}

fn advance(
    state: &SimState,
    cfg: &IntegratorConfig,
    field: &EffectiveField,
    asm: &Assembly,
) -> Result<(SimState, StepInfo)> {
    cfg.validate()?;
    field.validate()?;
    let m = &state.m_curr;
    let k = cfg.k;
    let t = state.time(k);
    let t_theta = t + cfg.theta * k;

    let scheme = match (cfg.scheme, state.step, &state.m_prev) {
        (Scheme::Pc2Imex, 0, _) => Scheme::Pc2,
        (Scheme::Pc2Imex, _, None) => {
            return Err(Error::Precondition("PC2_IMEX needs the previous state after step 0".into()))
        }
        (s, _, _) => s,
    };

    let (pred, m_next): (PredictorOutput, NodalField) = match scheme {
        Scheme::Pc1 => {
            let p = predictor_fully_implicit(asm, m, cfg, field, t)?;
            let next = corrector_project(m, &p.v, k)?;
            (p, next)
        }
        Scheme::Pc1Imex => {
            let h = field.lower_order_field(asm, m, t)?;
            let p = predictor_full(asm, m, cfg, field, &h, None)?;
            let next = corrector_project(m, &p.v, k)?;
            (p, next)
        }
        Scheme::Pc1ProjFree => {
            let h = field.lower_order_field(asm, m, t)?;
            let p = predictor_full(asm, m, cfg, field, &h, None)?;
            let next = m.axpy(k, &p.v).flag_if_unit();
            (p, next)
        }
        Scheme::Pc2 => {
            let p = predictor_fully_implicit(asm, m, cfg, field, t)?;
            let next = corrector_pc2(asm, m, &p.v, cfg, field, t)?;
            (p, next)
        }
        Scheme::Pc2Imex => {
            let prev = state.m_prev.as_ref().expect("checked above");
            // π is linear: (1+θ)π(m) − θπ(m_prev) = π((1+θ)m − θ m_prev)
            let extrapolated = m.lin_comb(1.0 + cfg.theta, -cfg.theta, prev);
            let h = field.lower_order_field(asm, &extrapolated, t_theta)?;
            let p = predictor_full(asm, m, cfg, field, &h, None)?;
            let next = corrector_pc2(asm, m, &p.v, cfg, field, t)?;
            (p, next)
        }
    };

    if !m_next.is_finite() {
        return Err(Error::InvalidParameter("non-finite magnetization after corrector".into()));
    }
    let info = StepInfo {
        linear_iterations: pred.linear_iterations,
        solves: pred.solves,
        residual: pred.residual,
        tangency: tangency_defect(m, &pred.v),
    };
    let next = SimState {
        step: state.step + 1,
        m_curr: m_next,
        m_prev: Some(m.clone()),
        v_last: Some(pred.v),
    };
    Ok((next, info))
}

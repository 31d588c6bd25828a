//! Effective field, Gibbs energy and the predictor-corrector time steppers.
//!
//! Every scheme first computes a velocity `v ≈ ∂ₜm` from a mass-lumped
//! Landau-Lifshitz system in which the exchange field is taken at
//! `m + θk v` (the predictor), then updates the magnetization (the
//! corrector): by nodal projection of `m + k v` (`PC1`), without projection
//! (`PC1_PROJFREE`), or by the length-preserving midpoint system (`PC2`).

mod config;
mod corrector;
mod field;
mod predictor;
mod stepper;
mod tangent;

pub use config::{IntegratorConfig, Scheme};
pub use corrector::{corrector_pc2, corrector_project};
pub use field::{apply_pi, energy, AppliedField, EffectiveField, LowerOrder};
pub use predictor::{
    predictor_full, predictor_fully_implicit, predictor_tangent, PredictorOutput,
};
pub use stepper::{step, tangency_defect, SimState, StepInfo};
pub use tangent::tangent_basis;

//! Mass-lumped predictor-corrector finite-element integrators for the
//! Landau-Lifshitz-Gilbert (LLG) equation.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: structured Kuhn tetrahedral meshes of boxes and a text mesh format.
//! * [`linalg`]: compressed-row matrices, restarted GMRES, CG and small dense solves.
//! * [`fem`]: P1 assembly, the lumped inner product, the discrete Laplacian,
//!   the mapping `P_h`, the nodal sphere projection and the angle-condition check.
//! * [`llg`]: effective field, energy and the time-stepping schemes
//!   (`PC1`, `PC1+IMEX`, projection-free `PC1`, `PC2`, `PC2+IMEX`).
//! * [`harness`]: initial states, trajectories, convergence studies and
//!   stability sweeps with CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fem;
pub mod harness;
pub mod linalg;
pub mod llg;
pub mod mesh;
pub mod vec3;

pub use error::{Error, Result};

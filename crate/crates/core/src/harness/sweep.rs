use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::Assembly;
use crate::llg::SimState;

use super::init::init_state;
use super::run::{run_simulation_on, RunConfig, Verdict};

/// Verdict of one `(θ, k)` cell of a stability sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub theta: f64,
    pub k: f64,
    pub stable: bool,
    pub steps_taken: usize,
    pub verdict: String,
    pub error: String,
}

/// Runs `base` (relax mode and stability monitoring forced on) for every
/// `(θ, k)` of the grid. Cells are returned in row-major `(θ, k)` order.
pub fn run_stability_sweep(base: &RunConfig, theta_grid: &[f64], k_grid: &[f64]) -> Result<Vec<SweepCell>> {
    if theta_grid.is_empty() || k_grid.is_empty() {
        return Err(Error::Config("stability sweep needs nonempty theta and k grids".into()));
    }
    let mut base = base.clone();
    base.relax = true;
    base.monitor_stability = true;
    let cells: Vec<RunConfig> = theta_grid
        .iter()
        .flat_map(|&theta| {
            let base = &base;
            k_grid.iter().map(move |&k| {
                let mut c = base.clone();
                c.integrator.theta = theta;
                c.integrator.k = k;
                c
            })
        })
        .collect();
    for c in &cells {
        c.validate()?;
    }
    let mesh = base.mesh.build()?;
    let asm = Assembly::new(&mesh)?;
    let m0 = init_state(&base.init, &mesh)?;

    Ok(cells
        .par_iter()
        .map(|c| {
            let (theta, k) = (c.integrator.theta, c.integrator.k);
            match run_simulation_on(&asm, SimState::new(m0.clone()), c) {
                Ok(out) => SweepCell {
                    theta,
                    k,
                    stable: out.verdict == Verdict::Stable,
                    steps_taken: out.steps_taken,
                    verdict: out.verdict.name().to_string(),
                    error: out.error.map(|e| e.to_string()).unwrap_or_default(),
                },
                Err(e) => SweepCell {
                    theta,
                    k,
                    stable: false,
                    steps_taken: 0,
                    verdict: "failed".into(),
                    error: e.to_string(),
                },
            }
        })
        .collect())
}

pub fn write_sweep_csv<W: Write>(out: W, cells: &[SweepCell]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for c in cells {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

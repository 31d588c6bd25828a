use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::Assembly;
use crate::llg::{energy, step, EffectiveField, IntegratorConfig, SimState};
use crate::mesh::{build_cube_mesh, load_mesh, Mesh};
use crate::vec3::Vec3;

use super::init::{init_state, InitSpec};

/// Relaxation threshold on `‖∇m‖²`.
pub const RELAX_GRAD_SQ: f64 = 1e-8;

/// Where the mesh comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    Cube { n: usize, edge: f64, center: Vec3 },
    File(PathBuf),
}

impl MeshSpec {
    pub fn build(&self) -> Result<Mesh> {
        match self {
            MeshSpec::Cube { n, edge, center } => build_cube_mesh(*n, *edge, *center),
            MeshSpec::File(path) => load_mesh(&std::fs::read_to_string(path)?),
        }
    }
}

/// A single trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSpec,
    pub integrator: IntegratorConfig,
    pub field: EffectiveField,
    pub init: InitSpec,
    /// Final time; the run takes `L = round(T / k)` steps.
    pub t_final: f64,
    /// A trace row is recorded every `stride` steps (and at the last step).
    pub stride: usize,
    /// Stop as soon as `‖∇m‖² ≤ RELAX_GRAD_SQ`.
    pub relax: bool,
    /// Abort at the first step that increases `‖∇m‖²`.
    pub monitor_stability: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.integrator.validate().map_err(as_config)?;
        self.field.validate()?;
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!("final time must be positive, got {}", self.t_final)));
        }
        if self.stride == 0 {
            return Err(Error::Config("trace stride must be >= 1".into()));
        }
        if self.n_steps() == 0 {
            return Err(Error::Config(format!(
                "final time {} is shorter than half a step (k = {})",
                self.t_final, self.integrator.k
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.integrator.k).round() as usize
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// One line of a trajectory trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    pub grad_sq: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub mean_z: f64,
    pub unit_error: f64,
    pub predictor_iterations: usize,
    pub wall_time: f64,
}

/// Outcome of a trajectory with respect to the relaxation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// `‖∇m‖²` decreased monotonically down to the relaxation threshold.
    Stable,
    /// `‖∇m‖²` increased at the recorded step.
    Unstable { step: usize },
    /// Reached the final time in relax mode without meeting the threshold.
    Inconclusive,
    /// Ran to the final time (relax mode off).
    Completed,
    /// A solver failed at the recorded step.
    Failed { step: usize },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable { .. } => "unstable",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Completed => "completed",
            Verdict::Failed { .. } => "failed",
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub trace: Vec<TraceRow>,
    pub verdict: Verdict,
    pub steps_taken: usize,
    pub final_state: SimState,
    /// Solver error that ended the run, if any; the trace up to it is kept.
    pub error: Option<Error>,
}

/// Builds the mesh and runs the trajectory described by `cfg`.
pub fn run_simulation(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mesh = cfg.mesh.build()?;
    let asm = Assembly::new(&mesh)?;
    let m0 = init_state(&cfg.init, &mesh)?;
    run_simulation_on(&asm, SimState::new(m0), cfg)
}

/// Runs `cfg` from `state` on prebuilt assemblies.
pub fn run_simulation_on(asm: &Assembly, state: SimState, cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    if state.m_curr.len() != asm.n_vertices() {
        return Err(Error::Config(format!(
            "initial state has {} nodes, mesh has {}",
            state.m_curr.len(),
            asm.n_vertices()
        )));
    }
    let k = cfg.integrator.k;
    let n_steps = cfg.n_steps();
    let row = |s: &SimState, grad_sq: f64, iterations: usize, wall: f64| -> Result<TraceRow> {
        let t = s.time(k);
        let mean = s.m_curr.mean();
        Ok(TraceRow {
            step: s.step,
            t,
            energy: energy(asm, &cfg.field, &s.m_curr, t)?,
            grad_sq,
            mean_x: mean[0],
            mean_y: mean[1],
            mean_z: mean[2],
            unit_error: s.m_curr.max_unit_error(),
            predictor_iterations: iterations,
            wall_time: wall,
        })
    };

    let start = state.step;
    let mut state = state;
    let mut grad_sq = asm.grad_sq(&state.m_curr);
    let mut trace = vec![row(&state, grad_sq, 0, 0.0)?];
    if cfg.relax && grad_sq <= RELAX_GRAD_SQ {
        return Ok(RunOutcome { trace, verdict: Verdict::Stable, steps_taken: 0, final_state: state, error: None });
    }

    let mut verdict = if cfg.relax { Verdict::Inconclusive } else { Verdict::Completed };
    let mut error = None;
    for _ in 0..n_steps {
        let clock = Instant::now();
        let (next, info) = match step(&state, &cfg.integrator, &cfg.field, asm) {
            Ok(r) => r,
            Err(e) => {
                verdict = Verdict::Failed { step: state.step };
                error = Some(e);
                break;
            }
        };
        let wall = clock.elapsed().as_secs_f64();
        let new_grad_sq = asm.grad_sq(&next.m_curr);
        let increased = new_grad_sq > grad_sq;
        let relaxed = cfg.relax && new_grad_sq <= RELAX_GRAD_SQ;
        state = next;
        grad_sq = new_grad_sq;
        let done = state.step - start == n_steps;
        if (state.step - start).is_multiple_of(cfg.stride) || done || relaxed || (increased && cfg.monitor_stability) {
            trace.push(row(&state, grad_sq, info.linear_iterations, wall)?);
        }
        if !grad_sq.is_finite() || (increased && cfg.monitor_stability) {
            verdict = Verdict::Unstable { step: state.step };
            break;
        }
        if relaxed {
            verdict = Verdict::Stable;
            break;
        }
    }
    Ok(RunOutcome { trace, verdict, steps_taken: state.step - start, final_state: state, error })
}

/// Writes trace rows as CSV with a header naming the [`TraceRow`] fields.
pub fn write_trace_csv<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "step",
            "t",
            "energy",
            "grad_sq",
            "mean_x",
            "mean_y",
            "mean_z",
            "unit_error",
            "predictor_iterations",
            "wall_time",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

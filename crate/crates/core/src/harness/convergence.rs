use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{Assembly, NodalField};
use crate::llg::{step, EffectiveField, IntegratorConfig, Scheme, SimState};

use super::init::{init_state, InitSpec};
use super::run::MeshSpec;

/// Self-convergence study: every scheme is compared with a reference
/// trajectory computed by `reference` at step `k_ref`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub mesh: MeshSpec,
    pub field: EffectiveField,
    pub init: InitSpec,
    pub theta: f64,
    pub alpha: f64,
    pub t_final: f64,
    pub schemes: Vec<Scheme>,
    pub k_list: Vec<f64>,
    pub k_ref: f64,
    pub reference: Scheme,
    pub lin_tol: f64,
    pub fixpoint_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub scheme: String,
    pub k: f64,
    /// `max_ℓ ‖m_k(t_ℓ) − m_ref(t_ℓ)‖_{H¹}` over the time nodes of step `k`.
    pub err_h1: f64,
    /// Linear (Krylov) iterations summed over the trajectory.
    pub linear_iterations: usize,
    /// Largest predictor tangency defect `max|m·v| / (1 + max|v|)` along the trajectory.
    pub max_tangency: f64,
    /// Wall time of the whole trajectory in seconds.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    /// Grouped by scheme in `schemes` order, then by `k_list` order.
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log err` against `log k` over the three finest steps.
    pub slopes: Vec<(Scheme, f64)>,
    pub reference_wall_time: f64,
}

impl ConvergenceTable {
    pub fn slope(&self, scheme: Scheme) -> Option<f64> {
        self.slopes.iter().find(|(s, _)| *s == scheme).map(|(_, v)| *v)
    }

    pub fn errors(&self, scheme: Scheme) -> Vec<(f64, f64)> {
        self.rows.iter().filter(|r| r.scheme == scheme.name()).map(|r| (r.k, r.err_h1)).collect()
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn ratio(k: f64, k_ref: f64) -> Result<usize> {
    let r = k / k_ref;
    let ri = r.round();
    if !(ri >= 1.0) || (r - ri).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::Config(format!("step {k} is not an integer multiple of k_ref = {k_ref}")));
    }
    Ok(ri as usize)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn h1_distance(asm: &Assembly, a: &NodalField, b: &NodalField) -> f64 {
    let d = a.axpy(-1.0, b);
    (asm.l2_sq(&d) + asm.grad_sq(&d)).max(0.0).sqrt()
}

/// Runs `n_steps` of `cfg`, calling `visit(ℓ, m^ℓ)` for ℓ = 0..=n_steps.
/// Returns the summed linear iterations and the largest tangency defect.
fn trajectory(
    asm: &Assembly,
    m0: &NodalField,
    cfg: &IntegratorConfig,
    field: &EffectiveField,
    n_steps: usize,
    mut visit: impl FnMut(usize, &NodalField),
) -> Result<(usize, f64)> {
    let mut state = SimState::new(m0.clone());
    let mut iterations = 0;
    let mut tangency = 0.0f64;
    visit(0, &state.m_curr);
    for _ in 0..n_steps {
        let (next, info) = step(&state, cfg, field, asm)?;
        iterations += info.linear_iterations;
        tangency = tangency.max(info.tangency);
        state = next;
        visit(state.step, &state.m_curr);
    }
    Ok((iterations, tangency))
}

pub fn run_convergence_study(cfg: &ConvergenceConfig) -> Result<ConvergenceTable> {
    if cfg.k_list.is_empty() || cfg.schemes.is_empty() {
        return Err(Error::Config("convergence study needs at least one scheme and one step size".into()));
    }
    if !(cfg.k_ref > 0.0) || !(cfg.t_final > 0.0) {
        return Err(Error::Config("k_ref and the final time must be positive".into()));
    }
    let ratios = cfg.k_list.iter().map(|&k| ratio(k, cfg.k_ref)).collect::<Result<Vec<_>>>()?;
    let base = |scheme: Scheme, k: f64| {
        let mut c = IntegratorConfig::new(scheme, cfg.theta, k, cfg.alpha);
        c.lin_tol = cfg.lin_tol;
        c.fixpoint_tol = cfg.fixpoint_tol;
        c
    };
    let steps_for = |k: f64| -> Result<usize> {
        let l = (cfg.t_final / k).round();
        if l < 1.0 || (l * k - cfg.t_final).abs() > 1e-9 * cfg.t_final {
            return Err(Error::Config(format!("final time {} is not a multiple of k = {k}", cfg.t_final)));
        }
        Ok(l as usize)
    };
    for &k in &cfg.k_list {
        steps_for(k)?;
        base(cfg.reference, k).validate().map_err(|e| Error::Config(e.to_string()))?;
    }
    cfg.field.validate()?;

    let mesh = cfg.mesh.build()?;
    let asm = Assembly::new(&mesh)?;
    let m0 = init_state(&cfg.init, &mesh)?;

    // the reference is sampled on the common refinement of all coarse grids
    let stride = ratios.iter().copied().fold(0, gcd);
    let n_ref = steps_for(cfg.k_ref)?;
    let clock = Instant::now();
    let mut reference: Vec<NodalField> = Vec::with_capacity(n_ref / stride + 1);
    trajectory(&asm, &m0, &base(cfg.reference, cfg.k_ref), &cfg.field, n_ref, |l, m| {
        if l % stride == 0 {
            reference.push(m.clone());
        }
    })?;
    let reference_wall_time = clock.elapsed().as_secs_f64();

    let jobs: Vec<(Scheme, f64, usize)> = cfg
        .schemes
        .iter()
        .flat_map(|&s| cfg.k_list.iter().zip(&ratios).map(move |(&k, &r)| (s, k, r)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(scheme, k, r)| -> Result<ConvergenceRow> {
            let clock = Instant::now();
            let mut err = 0.0f64;
            let (iterations, tangency) = trajectory(&asm, &m0, &base(scheme, k), &cfg.field, steps_for(k)?, |l, m| {
                err = err.max(h1_distance(&asm, m, &reference[l * r / stride]));
            })?;
            Ok(ConvergenceRow {
                scheme: scheme.name().to_string(),
                k,
                err_h1: err,
                linear_iterations: iterations,
                max_tangency: tangency,
                wall_time: clock.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let slopes = cfg
        .schemes
        .iter()
        .map(|&s| {
            let mut pts: Vec<(f64, f64)> =
                rows.iter().filter(|r| r.scheme == s.name()).map(|r| (r.k, r.err_h1)).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            pts.truncate(3);
            let slope = if pts.len() >= 2 && pts.iter().all(|p| p.1 > 0.0) { fit_slope(&pts) } else { f64::NAN };
            (s, slope)
        })
        .collect();
    Ok(ConvergenceTable { rows, slopes, reference_wall_time })
}

pub fn write_convergence_csv<W: Write>(out: W, table: &ConvergenceTable) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for r in &table.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llg::LowerOrder;

    fn small() -> ConvergenceConfig {
        ConvergenceConfig {
            mesh: MeshSpec::Cube { n: 2, edge: 1.0, center: [0.5; 3] },
            field: EffectiveField {
                ell_ex: 1.0,
                pi: LowerOrder::Uniaxial { c: 1.0, axis: [0.0, 0.0, 1.0] },
                applied: crate::llg::AppliedField::Constant([-2.0, -0.5, 0.0]),
            },
            init: InitSpec::Uniform([1.0, 0.0, 0.0]),
            theta: 0.5,
            alpha: 1.0,
            t_final: 0.1,
            schemes: vec![Scheme::Pc2],
            k_list: vec![0.02, 0.01, 0.005],
            k_ref: 0.005,
            reference: Scheme::Pc2,
            lin_tol: 1e-12,
            fixpoint_tol: 1e-10,
        }
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 0.5, 0.25].iter().map(|&k: &f64| (k, 3.0 * k * k)).collect();
        assert!((fit_slope(&pts) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reference_step_has_zero_error() {
        let table = run_convergence_study(&small()).unwrap();
        let errs = table.errors(Scheme::Pc2);
        assert_eq!(errs.len(), 3);
        assert_eq!(errs[2], (0.005, 0.0));
        assert!(errs[0].1 > errs[1].1 && errs[1].1 > 0.0);
    }

    #[test]
    fn rejects_non_commensurate_step() {
        let mut cfg = small();
        cfg.k_list = vec![0.0075];
        assert!(matches!(run_convergence_study(&cfg), Err(Error::Config(_))));
    }
}

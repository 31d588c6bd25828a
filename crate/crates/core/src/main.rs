#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use llg_pc::fem::{check_angle_condition, Assembly};
use llg_pc::harness::{
    run_convergence_study, run_simulation, run_stability_sweep, write_convergence_csv,
    write_sweep_csv, write_trace_csv, ConvergenceConfig, InitSpec, MeshSpec, RunConfig, Verdict,
};
use llg_pc::llg::{AppliedField, EffectiveField, IntegratorConfig, LowerOrder, Scheme};
use llg_pc::mesh::save_mesh;
use llg_pc::{Error, Result};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_UNSTABLE: u8 = 4;

#[derive(Parser)]
#[command(name = "llg-pc", version, about = "Predictor-corrector finite-element integrators for the LLG equation")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or load a mesh, print its statistics and optionally save it.
    Mesh {
        #[command(flatten)]
        mesh: MeshArgs,
        /// Check the angle condition on the stiffness matrix.
        #[arg(long)]
        check_angle: bool,
        /// Write the mesh in the text format to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate one trajectory and write its trace as CSV.
    Run {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value = "PC2")]
        scheme: Scheme,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long, default_value_t = 1e-3)]
        k: f64,
        /// Final time.
        #[arg(long = "T", default_value_t = 1.0)]
        t_final: f64,
        /// Record every n-th step.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// Stop once the exchange energy has relaxed.
        #[arg(long)]
        relax: bool,
        /// Stop at the first step that increases the exchange energy.
        #[arg(long)]
        monitor_stability: bool,
        /// Exit with status 4 when an instability is detected (implies --monitor-stability).
        #[arg(long)]
        fail_on_unstable: bool,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Self-convergence study against a fine reference trajectory.
    Converge {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_delimiter = ',', default_value = "PC1,PC1_IMEX,PC2,PC2_IMEX")]
        schemes: Vec<Scheme>,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long = "k-list", value_delimiter = ',', default_value = "0.008,0.004,0.002,0.001")]
        k_list: Vec<f64>,
        #[arg(long, default_value_t = 2.5e-4)]
        k_ref: f64,
        #[arg(long, default_value = "PC2")]
        reference: Scheme,
        #[arg(long = "T", default_value_t = 1.0)]
        t_final: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stability map over a (theta, k) grid.
    Sweep {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value = "PC2")]
        scheme: Scheme,
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
        thetas: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        ks: Vec<f64>,
        /// Time horizon of each cell.
        #[arg(long = "T", default_value_t = 50.0)]
        t_final: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MeshArgs {
    /// Subdivisions per axis of the cube mesh.
    #[arg(long = "mesh-n", default_value_t = 4)]
    mesh_n: usize,
    #[arg(long, default_value_t = 1.0)]
    edge: f64,
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true)]
    center: Option<Vec<f64>>,
    /// Load the mesh from a text file instead of building a cube.
    #[arg(long)]
    mesh_file: Option<PathBuf>,
}

impl MeshArgs {
    fn spec(&self) -> MeshSpec {
        match &self.mesh_file {
            Some(p) => MeshSpec::File(p.clone()),
            None => {
                let center = match &self.center {
                    Some(c) => [c[0], c[1], c[2]],
                    None => [0.5 * self.edge; 3],
                };
                MeshSpec::Cube { n: self.mesh_n, edge: self.edge, center }
            }
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InitKind {
    Uniform,
    Random,
    Hedgehog,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    ellex: f64,
    /// Uniaxial anisotropy: constant and axis.
    #[arg(long, num_args = 4, value_names = ["C", "AX", "AY", "AZ"], allow_negative_numbers = true)]
    pi_uniaxial: Option<Vec<f64>>,
    /// Constant applied field.
    #[arg(long, num_args = 3, value_names = ["FX", "FY", "FZ"], allow_negative_numbers = true)]
    f: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "uniform")]
    init: InitKind,
    /// Direction of the uniform initial state.
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true)]
    m0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    lin_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    fix_tol: f64,
}

impl SimArgs {
    fn field(&self) -> Result<EffectiveField> {
        let pi = match &self.pi_uniaxial {
            Some(p) => {
                let axis = [p[1], p[2], p[3]];
                let r = llg_pc::vec3::norm(axis);
                if !(r > 0.0) {
                    return Err(Error::Config("anisotropy axis must be nonzero".into()));
                }
                LowerOrder::Uniaxial { c: p[0], axis: llg_pc::vec3::scale(1.0 / r, axis) }
            }
            None => LowerOrder::None,
        };
        let applied = match &self.f {
            Some(f) => AppliedField::Constant([f[0], f[1], f[2]]),
            None => AppliedField::Zero,
        };
        let field = EffectiveField { ell_ex: self.ellex, pi, applied };
        field.validate()?;
        Ok(field)
    }

    fn init(&self) -> InitSpec {
        match self.init {
            InitKind::Uniform => {
                InitSpec::Uniform(self.m0.as_ref().map_or([1.0, 0.0, 0.0], |m| [m[0], m[1], m[2]]))
            }
            InitKind::Random => InitSpec::Random(self.seed),
            InitKind::Hedgehog => InitSpec::Hedgehog,
        }
    }

    fn integrator(&self, scheme: Scheme, theta: f64, k: f64) -> IntegratorConfig {
        let mut c = IntegratorConfig::new(scheme, theta, k, self.alpha);
        c.lin_tol = self.lin_tol;
        c.fixpoint_tol = self.fix_tol;
        c
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn exit_code(e: &Error) -> u8 {
    if e.is_solver_failure() {
        EXIT_SOLVER
    } else {
        EXIT_CONFIG
    }
}

fn execute(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Mesh { mesh, check_angle, out } => {
            let m = mesh.spec().build()?;
            println!("vertices {}", m.n_vertices());
            println!("tets {}", m.n_tets());
            println!("h_max {}", m.h_max());
            println!("volume {}", m.total_volume());
            println!("conforming {}", m.is_conforming());
            if check_angle {
                let report = check_angle_condition(&Assembly::new(&m)?.stiffness);
                println!("angle_condition {}", report.pass);
                println!("worst_offdiag {:e}", report.worst_offdiag);
            }
            if let Some(p) = out {
                std::fs::write(p, save_mesh(&m))?;
            }
            Ok(0)
        }
        Command::Run { sim, scheme, theta, k, t_final, stride, relax, monitor_stability, fail_on_unstable, out } => {
            let cfg = RunConfig {
                mesh: sim.mesh.spec(),
                integrator: sim.integrator(scheme, theta, k),
                field: sim.field()?,
                init: sim.init(),
                t_final,
                stride,
                relax,
                monitor_stability: monitor_stability || fail_on_unstable,
            };
            let outcome = run_simulation(&cfg)?;
            let mut w = output(&out)?;
            write_trace_csv(&mut w, &outcome.trace)?;
            w.flush()?;
            eprintln!("verdict {} after {} steps", outcome.verdict.name(), outcome.steps_taken);
            if let Some(e) = &outcome.error {
                eprintln!("error: {e}");
                return Ok(exit_code(e));
            }
            if fail_on_unstable && matches!(outcome.verdict, Verdict::Unstable { .. }) {
                return Ok(EXIT_UNSTABLE);
            }
            Ok(0)
        }
        Command::Converge { sim, schemes, theta, k_list, k_ref, reference, t_final, out } => {
            let cfg = ConvergenceConfig {
                mesh: sim.mesh.spec(),
                field: sim.field()?,
                init: sim.init(),
                theta,
                alpha: sim.alpha,
                t_final,
                schemes,
                k_list,
                k_ref,
                reference,
                lin_tol: sim.lin_tol,
                fixpoint_tol: sim.fix_tol,
            };
            let table = run_convergence_study(&cfg)?;
            let mut w = output(&out)?;
            write_convergence_csv(&mut w, &table)?;
            w.flush()?;
            for (s, slope) in &table.slopes {
                eprintln!("slope {s} {slope:.3}");
            }
            Ok(0)
        }
        Command::Sweep { sim, scheme, thetas, ks, t_final, out } => {
            let base = RunConfig {
                mesh: sim.mesh.spec(),
                integrator: sim.integrator(scheme, thetas[0], ks[0]),
                field: sim.field()?,
                init: sim.init(),
                t_final,
                stride: usize::MAX,
                relax: true,
                monitor_stability: true,
            };
            let cells = run_stability_sweep(&base, &thetas, &ks)?;
            let mut w = output(&out)?;
            write_sweep_csv(&mut w, &cells)?;
            w.flush()?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("nodal projection degenerate at vertex {vertex} (|u| = {modulus:e})")]
    ProjectionDegenerate { vertex: usize, modulus: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("fixed-point iteration did not converge in {iterations} iterations (increment {increment:e})")]
    FixedPointDivergence { iterations: usize, increment: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Strips any `Step` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of the numerical solvers (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self.root(),
            Error::NoConvergence { .. }
                | Error::SingularSystem(_)
                | Error::ProjectionDegenerate { .. }
                | Error::FixedPointDivergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

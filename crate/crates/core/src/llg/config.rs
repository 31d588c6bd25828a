use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::SolverOptions;

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Fully implicit predictor, nodal projection.
    Pc1,
    /// Explicit lower-order field, nodal projection.
    Pc1Imex,
    /// `Pc1Imex` predictor with `m + k v` as update.
    Pc1ProjFree,
    /// Fully implicit predictor, midpoint corrector.
    Pc2,
    /// Extrapolated lower-order field in the predictor, midpoint corrector.
    Pc2Imex,
}

impl Scheme {
    pub const ALL: [Scheme; 5] =
        [Scheme::Pc1, Scheme::Pc1Imex, Scheme::Pc1ProjFree, Scheme::Pc2, Scheme::Pc2Imex];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Pc1 => "PC1",
            Scheme::Pc1Imex => "PC1_IMEX",
            Scheme::Pc1ProjFree => "PC1_PROJFREE",
            Scheme::Pc2 => "PC2",
            Scheme::Pc2Imex => "PC2_IMEX",
        }
    }

    /// Schemes whose iterates stay on the unit sphere nodewise.
    pub fn preserves_unit_length(self) -> bool {
        !matches!(self, Scheme::Pc1ProjFree)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | '+'))
            .collect::<String>()
            .to_ascii_uppercase();
        Ok(match norm.as_str() {
            "PC1" => Scheme::Pc1,
            "PC1IMEX" => Scheme::Pc1Imex,
            "PC1PROJFREE" => Scheme::Pc1ProjFree,
            "PC2" => Scheme::Pc2,
            "PC2IMEX" => Scheme::Pc2Imex,
            _ => return Err(Error::Config(format!("unknown scheme `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Degree of implicitness of the exchange term in the predictor.
    pub theta: f64,
    /// Time-step size.
    pub k: f64,
    /// Gilbert damping.
    pub alpha: f64,
    /// Relative residual tolerance of the linear solves.
    pub lin_tol: f64,
    /// Absolute L² tolerance on the fixed-point increment.
    pub fixpoint_tol: f64,
    pub fixpoint_maxit: usize,
    pub restart: usize,
    pub maxit: Option<usize>,
}

impl IntegratorConfig {
    pub fn new(scheme: Scheme, theta: f64, k: f64, alpha: f64) -> Self {
        Self {
            scheme,
            theta,
            k,
            alpha,
            lin_tol: 1e-12,
            fixpoint_tol: 1e-10,
            fixpoint_maxit: 100,
            restart: 30,
            maxit: None,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::Config(format!("time-step size must be positive, got {}", self.k)));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.lin_tol > 0.0) || !(self.fixpoint_tol > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if self.restart == 0 || self.fixpoint_maxit == 0 {
            return Err(Error::Config("restart and fixpoint_maxit must be >= 1".into()));
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { rtol: self.lin_tol, restart: self.restart, maxit: self.maxit }
    }
}

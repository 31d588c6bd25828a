//! Restarted GMRES and conjugate gradients on matrix-free operators.
//!
//! Both solvers take the operator as a callback `apply(x, y)` computing
//! `y = A x`, an optional Jacobi preconditioner given as the diagonal of
//! `M⁻¹`, and stop once the true residual satisfies
//! `‖b − A x‖₂ ≤ rtol·‖b‖₂`.

use super::{dot, norm2};
use crate::error::{Error, Result};

/// Stopping parameters shared by [`gmres`] and [`cg`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub rtol: f64,
    /// Krylov dimension between restarts (GMRES only).
    pub restart: usize,
    /// Iteration cap; `None` means `10 * n`.
    pub maxit: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, restart: 30, maxit: None }
    }
}

impl SolverOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        Self { rtol, ..Self::default() }
    }

    fn validate(&self, n: usize) -> Result<usize> {
        if !(self.rtol > 0.0) {
            return Err(Error::InvalidParameter(format!("rtol must be positive, got {}", self.rtol)));
        }
        if self.restart == 0 {
            return Err(Error::InvalidParameter("restart must be >= 1".into()));
        }
        Ok(self.maxit.unwrap_or(10 * n.max(1)))
    }
}

/// Iteration count and achieved relative residual `‖b − A x‖₂ / ‖b‖₂`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Common argument checks. Returns `‖b‖₂`.
fn check_dims(b: &[f64], x0: &[f64], precond: Option<&[f64]>) -> Result<f64> {
    if x0.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "initial guess has {} entries, right-hand side {}",
            x0.len(),
            b.len()
        )));
    }
    if let Some(p) = precond {
        if p.len() != b.len() {
            return Err(Error::InvalidParameter("preconditioner dimension mismatch".into()));
        }
    }
    Ok(norm2(b))
}

fn residual<F: Fn(&[f64], &mut [f64])>(apply: &F, b: &[f64], x: &[f64], r: &mut [f64]) -> f64 {
    apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm2(r)
}

fn precondition(precond: Option<&[f64]>, v: &[f64], z: &mut [f64]) {
    match precond {
        Some(p) => z.iter_mut().zip(p.iter().zip(v)).for_each(|(zi, (pi, vi))| *zi = pi * vi),
        None => z.copy_from_slice(v),
    }
}

/// Right-preconditioned restarted GMRES with modified Gram-Schmidt.
pub fn gmres<F>(
    apply: F,
    precond: Option<&[f64]>,
    b: &[f64],
    x0: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveStats)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let maxit = opts.validate(n)?;
    let bnorm = check_dims(b, x0, precond)?;
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveStats::default()));
    }
    let tol = opts.rtol * bnorm;

    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    let mut rnorm = residual(&apply, b, &x, &mut r);
    let mut best = (x.clone(), rnorm);
    let mut iterations = 0;

    let m_max = opts.restart.min(n.max(1));
    let mut basis: Vec<Vec<f64>> = vec![vec![0.0; n]; m_max + 1];
    let mut hess = vec![vec![0.0; m_max]; m_max + 1];
    let mut cs = vec![0.0; m_max];
    let mut sn = vec![0.0; m_max];
    let mut g = vec![0.0; m_max + 1];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];

    loop {
        if rnorm <= tol {
            return Ok((x, SolveStats { iterations, residual: rnorm / bnorm }));
        }
        if iterations >= maxit {
            return Err(Error::NoConvergence {
                iterations,
                residual: best.1 / bnorm,
                best: best.0,
            });
        }
        let m = m_max.min(maxit - iterations);
        for (v, ri) in basis[0].iter_mut().zip(&r) {
            *v = ri / rnorm;
        }
        g.iter_mut().for_each(|gi| *gi = 0.0);
        g[0] = rnorm;

        let mut k = 0;
        for j in 0..m {
            precondition(precond, &basis[j], &mut z);
            apply(&z, &mut w);
            let wnorm0 = norm2(&w);
            for i in 0..=j {
                let h = dot(&w, &basis[i]);
                hess[i][j] = h;
                w.iter_mut().zip(&basis[i]).for_each(|(wk, vk)| *wk -= h * vk);
            }
            let mut wnorm = norm2(&w);
            if wnorm < 0.7 * wnorm0 {
                // second Gram-Schmidt pass
                for i in 0..=j {
                    let h = dot(&w, &basis[i]);
                    hess[i][j] += h;
                    w.iter_mut().zip(&basis[i]).for_each(|(wk, vk)| *wk -= h * vk);
                }
                wnorm = norm2(&w);
            }
            hess[j + 1][j] = wnorm;

            for i in 0..j {
                let (a, c) = (hess[i][j], hess[i + 1][j]);
                hess[i][j] = cs[i] * a + sn[i] * c;
                hess[i + 1][j] = -sn[i] * a + cs[i] * c;
            }
            let (a, c) = (hess[j][j], hess[j + 1][j]);
            let rho = a.hypot(c);
            if rho == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = a / rho;
                sn[j] = c / rho;
            }
            hess[j][j] = rho;
            hess[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];

            iterations += 1;
            k = j + 1;
            if g[j + 1].abs() <= tol || wnorm == 0.0 {
                break;
            }
            basis[j + 1].iter_mut().zip(&w).for_each(|(v, wk)| *v = wk / wnorm);
        }

        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for l in (i + 1)..k {
                s -= hess[i][l] * y[l];
            }
            y[i] = if hess[i][i] != 0.0 { s / hess[i][i] } else { 0.0 };
        }
        w.iter_mut().for_each(|wk| *wk = 0.0);
        for (yi, v) in y.iter().zip(&basis) {
            w.iter_mut().zip(v).for_each(|(wk, vk)| *wk += yi * vk);
        }
        precondition(precond, &w, &mut z);
        x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi += zi);

        rnorm = residual(&apply, b, &x, &mut r);
        if rnorm < best.1 {
            best = (x.clone(), rnorm);
        }
    }
}

/// Preconditioned conjugate gradients for symmetric positive-definite operators.
pub fn cg<F>(
    apply: F,
    precond: Option<&[f64]>,
    b: &[f64],
    x0: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveStats)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let maxit = opts.validate(n)?;
    let bnorm = check_dims(b, x0, precond)?;
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveStats::default()));
    }
    let tol = opts.rtol * bnorm;

    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    let mut rnorm = residual(&apply, b, &x, &mut r);
    let mut best = (x.clone(), rnorm);
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut iterations = 0;

    'outer: loop {
        if rnorm <= tol {
            return Ok((x, SolveStats { iterations, residual: rnorm / bnorm }));
        }
        precondition(precond, &r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        loop {
            if iterations >= maxit {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: best.1 / bnorm,
                    best: best.0,
                });
            }
            apply(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: best.1 / bnorm,
                    best: best.0,
                });
            }
            let step = rz / pq;
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += step * pi);
            r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= step * qi);
            iterations += 1;
            if norm2(&r) <= tol {
                // confirm against the true residual; restart from x if drifted
                rnorm = residual(&apply, b, &x, &mut r);
                if rnorm < best.1 {
                    best = (x.clone(), rnorm);
                }
                continue 'outer;
            }
            precondition(precond, &r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        }
    }
}

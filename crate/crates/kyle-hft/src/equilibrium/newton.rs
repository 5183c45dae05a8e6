//! Damped Newton iteration with a finite-difference Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-11, max_iter: 200, fd_step: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn half_sq(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|x| x * x).sum::<f64>()
}

fn evaluate<F>(f: &F, x: &[f64]) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    match f(x) {
        Ok(r) if r.iter().all(|v| v.is_finite()) => Some(r),
        _ => None,
    }
}

fn jacobian<F>(f: &F, x: &[f64], fx: &[f64], step: f64) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let (m, n) = (fx.len(), x.len());
    let mut jac = DMatrix::zeros(m, n);
    let mut probe = x.to_vec();
    for i in 0..n {
        let h = step * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let up = evaluate(f, &probe);
        probe[i] = x[i] - h;
        let down = evaluate(f, &probe);
        probe[i] = x[i];
        // Fall back to one-sided differences next to an infeasible region.
        let (col, width): (Vec<f64>, f64) = match (up, down) {
            (Some(u), Some(d)) => (u.iter().zip(&d).map(|(a, b)| a - b).collect(), 2.0 * h),
            (Some(u), None) => (u.iter().zip(fx).map(|(a, b)| a - b).collect(), h),
            (None, Some(d)) => (fx.iter().zip(&d).map(|(a, b)| a - b).collect(), h),
            (None, None) => return None,
        };
        for (r, c) in col.iter().enumerate() {
            jac[(r, i)] = c / width;
        }
    }
    Some(jac)
}

fn newton_step(jac: DMatrix<f64>, fx: &[f64]) -> Option<DVector<f64>> {
    let rhs = -DVector::from_column_slice(fx);
    if jac.is_square() {
        if let Some(dx) = jac.clone().lu().solve(&rhs) {
            if dx.iter().all(|v| v.is_finite()) {
                return Some(dx);
            }
        }
    }
    let dx = jac.svd(true, true).solve(&rhs, 1e-14).ok()?;
    dx.iter().all(|v| v.is_finite()).then_some(dx)
}

/// Solves `f(x) = 0` from `x0`. Trial points where `f` errors are treated as
/// infeasible and the line search backs away from them.
pub fn solve<F>(f: F, x0: &[f64], opts: NewtonOptions) -> NewtonOutcome
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = x0.to_vec();
    let Some(mut fx) = evaluate(&f, &x) else {
        return NewtonOutcome { x, norm: f64::INFINITY, iterations: 0, converged: false };
    };
    let mut norm = inf_norm(&fx);
    let mut iterations = 0;
    while norm > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let Some(jac) = jacobian(&f, &x, &fx, opts.fd_step) else { break };
        let Some(dx) = newton_step(jac, &fx) else { break };
        let phi = half_sq(&fx);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + t * d).collect();
            if let Some(ft) = evaluate(&f, &trial) {
                if half_sq(&ft) <= (1.0 - 2e-4 * t) * phi {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((nx, nf)) = accepted else { break };
        let stalled = x.iter().zip(&nx).all(|(a, b)| a == b);
        x = nx;
        fx = nf;
        norm = inf_norm(&fx);
        if stalled {
            break;
        }
    }
    NewtonOutcome { converged: norm <= opts.tol, x, norm, iterations }
}

//! Equilibria in the limit of vanishing fast noise trading (`theta_1+ -> 0`).
//!
//! With only Small-ITs the limit has closed forms: HFTs stop trading at
//! `1+` and act as back-runners at `t = 2`. With only Round-Trippers the
//! first HFT trade shrinks like `zeta * sqrt(theta_1+)`; `zeta` has no
//! equation of its own, so it is read off the finite-`theta_1+` path by
//! extrapolation and then fed to the limiting polynomial system.

use serde::{Deserialize, Serialize};

use crate::best_response::it_quadratic;
use crate::equilibrium::{continue_path, newton_solve, solve_point, NewtonOptions, Regime};
use crate::error::{Error, Result};
use crate::params::{MarketParams, StrategyProfile};
use crate::pricing::PricingRule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitSolution {
    pub regime: Regime,
    pub a1: f64,
    pub theta_z: f64,
    pub a21: f64,
    pub alpha22: f64,
    /// Back-running intensity of each Small-IT.
    pub beta21: Option<f64>,
    /// `lim beta12 / sqrt(theta_1+)` for Round-Trippers.
    pub zeta: Option<f64>,
    pub lambda1: f64,
    pub lambda22: f64,
}

fn check_common(j: usize, theta_eps: f64, theta_2: f64) -> Result<()> {
    if j == 0 {
        return Err(Error::ParameterDomain("the limit needs at least one HFT".into()));
    }
    if !(theta_eps >= 0.0 && theta_eps.is_finite()) {
        return Err(Error::ParameterDomain(format!("theta_eps = {theta_eps}")));
    }
    if !(theta_2 > 0.0 && theta_2.is_finite()) {
        return Err(Error::ParameterDomain(format!("theta_2 = {theta_2}")));
    }
    Ok(())
}

/// IT randomization intensity of the mixed Small-IT limit. The mixed limit
/// exists exactly when this is positive.
pub fn small_it_theta_z(j: usize, theta_eps: f64, theta_2: f64) -> f64 {
    let jf = j as f64;
    let m = jf + 2.0 + 4.0 * theta_eps;
    let k = small_it_k(jf, theta_eps, theta_2);
    (jf - 4.0 * theta_eps) / m - 1.0 / k
}

fn small_it_k(jf: f64, theta_eps: f64, theta_2: f64) -> f64 {
    let m = jf + 2.0 + 4.0 * theta_eps;
    1.0 + 4.0 * theta_eps / jf + theta_2 * (m / (jf + 1.0)).powi(2)
}

/// Pure-limit coefficients as functions of `A1`.
struct PureSmallIt {
    lambda1: f64,
    lambda22: f64,
    a21: f64,
    alpha22: f64,
    beta21: f64,
}

fn pure_small_it_at(a1: f64, jf: f64, te: f64, t2: f64) -> PureSmallIt {
    let a2 = a1 * a1;
    let lin = a2 * (4.0 * te + jf + 2.0) + 4.0 * te;
    let num = a2 * jf * (a2 * (te + 1.0) + te) + (2.0 * (a2 + 1.0) * te + a2).powi(2);
    let lambda22 = (num / ((a2 + 1.0) * t2 * lin * lin)).sqrt();
    let a21 = 1.0 / (2.0 * lambda22);
    let beta21 = 2.0 * a1 * a21 / lin;
    PureSmallIt { lambda1: a1 / (1.0 + a2), lambda22, a21, alpha22: -jf * beta21 / 2.0, beta21 }
}

/// IT's first-stage condition and second-order slack at a pure candidate.
fn pure_small_it_foc(a1: f64, jf: f64, te: f64, t2: f64) -> (f64, f64) {
    let c = pure_small_it_at(a1, jf, te, t2);
    let s = StrategyProfile { a1, a21: c.a21, alpha22: c.alpha22, ..Default::default() };
    let pr = PricingRule { lambda1: c.lambda1, lambda22: c.lambda22, ..Default::default() };
    let (q, l) = it_quadratic(&s, &pr);
    (2.0 * q * a1 - l, q)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Limit equilibrium of a market with `j` Small-ITs (`Gamma = 0`).
pub fn limit_small_it(j: usize, theta_eps: f64, theta_2: f64, regime: Regime) -> Result<LimitSolution> {
    check_common(j, theta_eps, theta_2)?;
    let jf = j as f64;
    let m = jf + 2.0 + 4.0 * theta_eps;
    match regime {
        Regime::Mixed => {
            let theta_z = small_it_theta_z(j, theta_eps, theta_2);
            if !(theta_z > 0.0) {
                return Err(Error::RegimeMismatch(format!("no mixed limit: theta_z = {theta_z}")));
            }
            let k = small_it_k(jf, theta_eps, theta_2);
            let a21 = (jf + 1.0) / m * k.sqrt();
            Ok(LimitSolution {
                regime,
                a1: 1.0 / k.sqrt(),
                theta_z,
                a21,
                alpha22: -(jf + 1.0) / m,
                beta21: Some(2.0 * (jf + 1.0) / (jf * m)),
                zeta: None,
                lambda1: 1.0 / (2.0 * a21),
                lambda22: 1.0 / (2.0 * a21),
            })
        }
        Regime::Pure => {
            const GRID: usize = 4000;
            const A1_MAX: f64 = 4.0;
            let f = |a: f64| pure_small_it_foc(a, jf, theta_eps, theta_2).0;
            let mut prev = (A1_MAX / GRID as f64, f(A1_MAX / GRID as f64));
            for i in 2..=GRID {
                let a = A1_MAX * i as f64 / GRID as f64;
                let fa = f(a);
                if fa.is_finite() && prev.1.is_finite() && (fa < 0.0) != (prev.1 < 0.0) {
                    let a1 = bisect(f, prev.0, a);
                    let (_, soc4) = pure_small_it_foc(a1, jf, theta_eps, theta_2);
                    if soc4 > 0.0 {
                        let c = pure_small_it_at(a1, jf, theta_eps, theta_2);
                        return Ok(LimitSolution {
                            regime,
                            a1,
                            theta_z: 0.0,
                            a21: c.a21,
                            alpha22: c.alpha22,
                            beta21: Some(c.beta21),
                            zeta: None,
                            lambda1: c.lambda1,
                            lambda22: c.lambda22,
                        });
                    }
                }
                prev = (a, fa);
            }
            Err(Error::RegimeMismatch("no admissible pure limit".into()))
        }
        Regime::NoEquilibrium => Err(Error::RegimeMismatch("a limit needs a regime".into())),
    }
}

/// Residual of the limiting Round-Tripper mixed system in `(A1, theta_z)`.
pub fn round_tripper_mixed_residual(a1: f64, tz: f64, zeta: f64, j: usize, te: f64, t2: f64) -> [f64; 2] {
    let jf = j as f64;
    let z2 = zeta * zeta;
    let e = te * jf * z2 + 1.0;
    let (a2, a4, a6, a8) = (a1 * a1, a1.powi(4), a1.powi(6), a1.powi(8));
    let j2z = jf * jf * z2;
    let first = a8 * e + a6 * (3.0 * tz + 2.0) * e - (tz + 1.0).powi(2) * (te * jf * tz * z2 + te * jf * z2 + j2z * tz + tz + 1.0)
        + a4 * (4.0 * t2 * (te * jf * z2 + j2z + 1.0) + tz * (3.0 * te * jf * tz * z2 + 3.0 * te * jf * z2 - j2z + 3.0 * tz + 3.0))
        + a2 * (4.0 * t2 * (te * jf * tz * z2 + te * jf * z2 + j2z * tz + tz + 1.0)
            + (tz + 1.0) * (-tz * (te * jf * z2 + 2.0 * j2z + 1.0) + tz * tz * e - 2.0 * e));
    let second = a8 * e
        + 3.0 * a6 * (te * jf * tz * z2 + tz)
        + a4 * (4.0 * t2 * (te * jf * z2 + j2z + 1.0) + (3.0 * tz * tz + tz - 2.0) * e)
        + a2 * (4.0 * t2 * (te * jf * tz * z2 + te * jf * z2 + j2z * tz - j2z + tz + 1.0) + tz * (tz + 1.0).powi(2) * e)
        + (tz + 1.0).powi(3) * e;
    [first, second]
}

/// Residual of the limiting Round-Tripper pure system in
/// `(Lambda22, A1, alpha22)`, and the second-order slack.
pub fn round_tripper_pure_residual(l22: f64, a1: f64, al: f64, zeta: f64, j: usize, te: f64, t2: f64) -> ([f64; 3], f64) {
    let jf = j as f64;
    let z2 = zeta * zeta;
    let e = te * jf * z2 + 1.0;
    let a2 = a1 * a1;
    let g = al * al * te * jf * z2 + al * al + te * jf * t2 * z2 + jf * jf * t2 * z2 + t2;
    let r1 = 2.0 * a2 * a2 * l22 + 2.0 * a2 * al * l22 - 4.0 * a1 * al * al * l22 * l22 + a1 - 2.0 * (al + 1.0) * l22;
    let r2 = 4.0 * a2 * l22 * l22 * g + (4.0 * l22 * l22 * t2 - 1.0) * e;
    let den = 4.0 * a2 * l22 * l22 * g + 4.0 * a1 * al * l22 * e + (4.0 * l22 * l22 * t2 + 1.0) * e;
    let r3 = al + 2.0 * a1 * jf * jf * l22 * t2 * z2 / den;
    let soc = 4.0 * a2 * a1 * l22 - a2 + 4.0 * a1 * (al + 1.0) * l22 - 4.0 * al * al * l22 * l22;
    ([r1, r2, r3], soc)
}

/// `theta_1+` values whose solutions feed the `zeta` extrapolation.
pub const ZETA_PATH: [f64; 3] = [1e-4, 1e-5, 1e-6];
/// Largest relative correction the extrapolation may apply.
pub const ZETA_TOL: f64 = 1e-3;

/// Richardson extrapolation of a quantity sampled at `theta_1+` shrinking
/// tenfold per step, with error `c1 sqrt(theta_1+) + c2 theta_1+ + ...`.
/// Returns the limit and the relative change between the two first-level
/// extrapolants.
pub fn richardson(q: [f64; 3]) -> (f64, f64) {
    let r = 10f64.sqrt();
    let first = |a: f64, b: f64| (r * b - a) / (r - 1.0);
    let (e1, e2) = (first(q[0], q[1]), first(q[1], q[2]));
    let limit = (10.0 * e2 - e1) / 9.0;
    (limit, ((e2 - e1) / e2.abs().max(f64::MIN_POSITIVE)).abs())
}

/// Limit equilibrium of a market with `j` Round-Trippers.
///
/// Runs continuation from `theta_1+ = 1` down to `1e-6`, extrapolates
/// `zeta` and solves the limiting system from the smallest path point.
pub fn limit_round_tripper(j: usize, theta_eps: f64, theta_2: f64, regime: Regime) -> Result<LimitSolution> {
    check_common(j, theta_eps, theta_2)?;
    if regime == Regime::NoEquilibrium {
        return Err(Error::RegimeMismatch("a limit needs a regime".into()));
    }
    let base = MarketParams::new(1.0, theta_2, theta_eps, 0, j)?;
    let grid: Vec<MarketParams> = (0..=60).map(|i| base.with_theta_1plus(10f64.powf(-(i as f64) / 10.0))).collect();
    let path = continue_path(&grid, true);
    let mut sols = Vec::with_capacity(3);
    for (k, &t) in ZETA_PATH.iter().enumerate() {
        let at = &path.solutions[40 + 10 * k];
        let p = base.with_theta_1plus(t);
        let sol = if at.regime == regime { at.clone() } else { solve_point(&p, Some(regime), at.is_equilibrium().then_some(&at.profile)) };
        if sol.regime != regime {
            return Err(Error::RegimeMismatch(format!("no {regime} equilibrium at theta_1+ = {t:e}")));
        }
        sols.push(sol);
    }
    let q = [0, 1, 2].map(|k| sols[k].profile.beta12 / ZETA_PATH[k].sqrt());
    let (zeta, change) = richardson(q);
    if !(change <= ZETA_TOL) {
        return Err(Error::LimitUnresolved(format!("zeta path {q:?} changes by {change:e}")));
    }
    let last = &sols[2].profile;
    let opts = NewtonOptions::default();
    match regime {
        Regime::Mixed => {
            let out = newton_solve(|x| Ok(round_tripper_mixed_residual(x[0], x[1], zeta, j, theta_eps, theta_2).to_vec()), &[last.a1, last.theta_z], opts);
            let (a1, theta_z) = (out.x[0], out.x[1]);
            if !out.converged || !(a1 > 0.0) || !(theta_z > 0.0) {
                return Err(Error::LimitUnresolved(format!("mixed limit system: residual {:e}", out.norm)));
            }
            let lambda1 = a1 / (a1 * a1 + theta_z + 1.0);
            Ok(LimitSolution {
                regime,
                a1,
                theta_z,
                a21: 1.0 / (2.0 * lambda1),
                alpha22: -(a1 * a1 + theta_z + 1.0) / 2.0,
                beta21: None,
                zeta: Some(zeta),
                lambda1,
                lambda22: lambda1,
            })
        }
        _ => {
            let x0 = [1.0 / (2.0 * last.a21), last.a1, last.alpha22];
            let out = newton_solve(|x| Ok(round_tripper_pure_residual(x[0], x[1], x[2], zeta, j, theta_eps, theta_2).0.to_vec()), &x0, opts);
            let (l22, a1, alpha22) = (out.x[0], out.x[1], out.x[2]);
            let (_, soc) = round_tripper_pure_residual(l22, a1, alpha22, zeta, j, theta_eps, theta_2);
            if !out.converged || !(l22 > 0.0) || !(a1 > 0.0) || !(soc > 0.0) {
                return Err(Error::LimitUnresolved(format!("pure limit system: residual {:e}, slack {soc:e}", out.norm)));
            }
            Ok(LimitSolution {
                regime,
                a1,
                theta_z: 0.0,
                a21: 1.0 / (2.0 * l22),
                alpha22,
                beta21: None,
                zeta: Some(zeta),
                lambda1: a1 / (a1 * a1 + 1.0),
                lambda22: l22,
            })
        }
    }
}

//! Bisection finders for the critical parameters at which roles, regimes or
//! profit rankings change.
//!
//! Every finder brackets a sign change of one monitored quantity, then
//! bisects on a square-root axis (`Gamma` is bisected linearly) until the
//! bracket is narrower than `1e-6 * max(1, value)`. Each bisection point is
//! warm-started from the nearest solved endpoint.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{
    assemble_residual, newton_solve, solve_point_with, EquilibriumSolution, Layout, NewtonOptions, Regime, SolveOptions, THETA_Z_FLOOR,
};
use crate::error::{Error, Result};
use crate::params::{Gamma, MarketParams, StrategyProfile};
use crate::profits::{benchmark_it_profit, expected_profits};

pub const BRACKET_TOL: f64 = 1e-6;
/// Upper end of the `Gamma` search.
pub const GAMMA_CAP: f64 = 1e6;
/// Lower end of every `theta_1+` search.
pub const THETA_1PLUS_FLOOR: f64 = 1e-9;
/// Upper end of the `theta_1+` search for the pure-strategy boundary.
pub const THETA_1PLUS_CAP: f64 = 16.0;
/// Points of the `sqrt(theta_eps)` grid over which the pure-strategy
/// boundary is maximized.
pub const THETA_EPS_GRID: usize = 64;
/// Upper end of the `theta_eps` search for profit thresholds.
pub const THETA_EPS_CAP: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    GammaBar,
    ThetaBar1plus,
    ThetaTildeEps,
    ThetaHatEps,
    ThetaHat1plus,
    InverseRtBoundary,
    ExistenceBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdStatus {
    /// A sign change was bracketed and refined.
    Found,
    /// The condition already holds at the lower end of the range; `value`
    /// is that end.
    AtLowerBound,
    /// The condition never switches inside the range; `value` is the upper
    /// end (infinite for `Gamma`).
    RightCensored,
    /// The monitored quantity has the wrong sign pattern for the claimed
    /// threshold, or the solver failed inside the bracket.
    NoSignChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub kind: ThresholdKind,
    pub value: f64,
    pub bracket: (f64, f64),
    /// What changes sign across the bracket.
    pub monitored: String,
    /// The monitored quantity at the two bracket ends.
    pub monitored_at_bracket: (f64, f64),
    pub status: ThresholdStatus,
    /// Equilibrium solves spent.
    pub evaluations: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Axis {
    Linear,
    Sqrt,
}

impl Axis {
    fn mid(self, a: f64, b: f64) -> f64 {
        match self {
            Axis::Linear => 0.5 * (a + b),
            Axis::Sqrt => (0.5 * (a.sqrt() + b.sqrt())).powi(2),
        }
    }
}

/// One evaluated point: location, monitored value, warm start for
/// neighbours.
#[derive(Debug, Clone)]
struct Probe {
    x: f64,
    m: f64,
    warm: Option<StrategyProfile>,
}

fn side(m: f64) -> bool {
    m > 0.0
}

/// Narrows `(a, b)`, whose monitored values lie on opposite sides of zero.
/// Stops early and returns `Err` with the last bracket if an evaluation is
/// not finite.
#[allow(clippy::result_large_err)]
fn refine(mut a: Probe, mut b: Probe, axis: Axis, evals: &mut usize, eval: &mut dyn FnMut(f64, Option<&StrategyProfile>) -> Probe) -> std::result::Result<(Probe, Probe), (Probe, Probe)> {
    debug_assert!(side(a.m) != side(b.m));
    let mut from_a = true;
    while (b.x - a.x).abs() > BRACKET_TOL * a.x.abs().max(b.x.abs()).max(1.0) {
        let x = axis.mid(a.x, b.x);
        if x == a.x || x == b.x {
            break;
        }
        let near = if from_a { a.warm.as_ref().or(b.warm.as_ref()) } else { b.warm.as_ref().or(a.warm.as_ref()) };
        let probe = eval(x, near);
        *evals += 1;
        if probe.m.is_nan() {
            return Err((a, b));
        }
        if side(probe.m) == side(a.m) {
            a = probe;
            from_a = true;
        } else {
            b = probe;
            from_a = false;
        }
    }
    Ok((a, b))
}

fn quiet() -> SolveOptions {
    SolveOptions { regime_evidence: false, ..SolveOptions::default() }
}

fn solve(p: &MarketParams, warm: Option<&StrategyProfile>) -> EquilibriumSolution {
    solve_point_with(p, None, warm, &quiet())
}

fn warm_of(sol: &EquilibriumSolution) -> Option<StrategyProfile> {
    sol.is_equilibrium().then_some(sol.profile)
}

fn result(kind: ThresholdKind, monitored: &str, a: &Probe, b: &Probe, status: ThresholdStatus, evaluations: usize) -> ThresholdResult {
    let (lo, hi) = if a.x <= b.x { (a, b) } else { (b, a) };
    let value = match status {
        ThresholdStatus::Found => 0.5 * (lo.x + hi.x),
        ThresholdStatus::AtLowerBound => lo.x,
        _ => hi.x,
    };
    ThresholdResult {
        kind,
        value,
        bracket: (lo.x, hi.x),
        monitored: monitored.to_string(),
        monitored_at_bracket: (lo.m, hi.m),
        status,
        evaluations,
        note: None,
    }
}

fn bracketed(kind: ThresholdKind, monitored: &str, a: Probe, b: Probe, axis: Axis, evals: &mut usize, eval: &mut dyn FnMut(f64, Option<&StrategyProfile>) -> Probe) -> ThresholdResult {
    match refine(a, b, axis, evals, eval) {
        Ok((a, b)) => result(kind, monitored, &a, &b, ThresholdStatus::Found, *evals),
        Err((a, b)) => {
            let mut r = result(kind, monitored, &a, &b, ThresholdStatus::NoSignChange, *evals);
            r.note = Some("solver failed inside the bracket".into());
            r
        }
    }
}

/// Inventory aversion at which a single HFT turns from Small-IT into
/// Round-Tripper. Monitors the direction of its second trade,
/// `beta21 + beta23 beta11`.
pub fn critical_gamma(theta_1plus: f64, theta_2: f64, theta_eps: f64) -> Result<ThresholdResult> {
    const WHAT: &str = "beta21 + beta23 * beta11 (second-trade direction)";
    let base = MarketParams::single(theta_1plus, theta_2, theta_eps, Gamma::Finite(1.0))?;
    let mut evals = 0;
    let mut eval = |g: f64, warm: Option<&StrategyProfile>| {
        let sol = solve(&base.with_gamma(g), warm);
        let s = &sol.profile;
        let m = if sol.is_equilibrium() { s.beta21 + s.beta23 * s.beta11 } else { f64::NAN };
        Probe { x: g, m, warm: warm_of(&sol) }
    };
    let mut lo = eval(0.0, None);
    evals += 1;
    if !(lo.m > 0.0) {
        let mut r = result(ThresholdKind::GammaBar, WHAT, &lo, &lo, ThresholdStatus::NoSignChange, evals);
        r.note = Some(format!("second-trade direction at Gamma = 0 is {}", lo.m));
        return Ok(r);
    }
    let mut g = 1.0;
    loop {
        let hi = eval(g, lo.warm.as_ref());
        evals += 1;
        if hi.m.is_nan() {
            let mut r = result(ThresholdKind::GammaBar, WHAT, &lo, &hi, ThresholdStatus::NoSignChange, evals);
            r.note = Some(format!("no equilibrium at Gamma = {g}"));
            return Ok(r);
        }
        if !side(hi.m) {
            return Ok(bracketed(ThresholdKind::GammaBar, WHAT, lo, hi, Axis::Linear, &mut evals, &mut eval));
        }
        if g >= GAMMA_CAP {
            // Still a Small-IT at the cap: only the symbolic Gamma = inf
            // end is a Round-Tripper.
            let inf = Probe { x: f64::INFINITY, m: -1.0, warm: None };
            let mut r = result(ThresholdKind::GammaBar, WHAT, &hi, &inf, ThresholdStatus::RightCensored, evals);
            r.value = f64::INFINITY;
            return Ok(r);
        }
        lo = hi;
        g *= 2.0;
    }
}

/// Near the mixed/pure boundary there is a sliver where the mixed root has
/// `theta_z` below the acceptance floor while the pure root still fails its
/// second-order condition, so neither is accepted. A converged mixed root
/// with `theta_z <= THETA_Z_FLOOR` places the point on the pure side.
fn on_pure_side_of_seam(p: &MarketParams, warm: Option<&StrategyProfile>) -> bool {
    let Some(w) = warm else { return false };
    let layout = Layout::new(p, Regime::Mixed);
    let x0 = layout.pack(&StrategyProfile { theta_z: w.theta_z.max(1e-4), ..w.masked(p) });
    let out = newton_solve(|x| assemble_residual(x, p, Regime::Mixed), &x0, NewtonOptions::default());
    out.converged && layout.unpack(&out.x).theta_z <= THETA_Z_FLOOR
}

/// `theta_1+` where a market's equilibrium switches from mixed (below) to
/// pure (above) at fixed `theta_eps`.
/// `seed` warm-starts the first probe; the returned profile is that probe's
/// solution, for chaining along a `theta_eps` grid.
fn pure_boundary_at(j: usize, theta_2: f64, theta_eps: f64, seed: Option<StrategyProfile>) -> Result<(ThresholdResult, Option<StrategyProfile>)> {
    const WHAT: &str = "theta_z of the equilibrium (positive when mixed)";
    let base = MarketParams::new(1.0, theta_2, theta_eps, 0, j)?;
    let mut evals = 0;
    let mut eval = |t: f64, warm: Option<&StrategyProfile>| {
        let sol = solve(&base.with_theta_1plus(t), warm);
        let m = if sol.is_equilibrium() {
            sol.profile.theta_z
        } else if on_pure_side_of_seam(&sol.params, warm) {
            0.0
        } else {
            f64::NAN
        };
        Probe { x: t, m, warm: warm_of(&sol) }
    };
    // Walk up a coarse grid from 1e-4 so each point is warm-started.
    let mut prev: Option<Probe> = None;
    let mut first = None;
    let steps = 2 * ((THETA_1PLUS_CAP / 1e-4).log10().ceil() as usize);
    for i in 0..=steps {
        let t = if i == steps { THETA_1PLUS_CAP } else { (1e-4 * 10f64.powf(i as f64 / 2.0)).min(THETA_1PLUS_CAP) };
        let probe = eval(t, prev.as_ref().map_or(seed.as_ref(), |p| p.warm.as_ref()));
        evals += 1;
        if i == 0 {
            first = probe.warm;
        }
        if probe.m.is_nan() {
            let at = prev.unwrap_or_else(|| probe.clone());
            let mut r = result(ThresholdKind::ThetaBar1plus, WHAT, &at, &probe, ThresholdStatus::NoSignChange, evals);
            r.note = Some(format!("no equilibrium at theta_1+ = {t:e}"));
            return Ok((r, first));
        }
        match prev {
            None if !side(probe.m) => {
                return Ok((result(ThresholdKind::ThetaBar1plus, WHAT, &probe, &probe, ThresholdStatus::AtLowerBound, evals), first))
            }
            Some(a) if side(a.m) && !side(probe.m) => {
                return Ok((bracketed(ThresholdKind::ThetaBar1plus, WHAT, a, probe, Axis::Sqrt, &mut evals, &mut eval), first));
            }
            _ => {}
        }
        prev = Some(probe);
    }
    let last = prev.expect("grid is not empty");
    Ok((result(ThresholdKind::ThetaBar1plus, WHAT, &last, &last, ThresholdStatus::RightCensored, evals), first))
}

/// Smallest `theta_1+` above which `j` Round-Trippers face a pure-strategy
/// IT for every `theta_eps` in `[0, theta_eps_max]`: the largest
/// mixed/pure boundary over a 64-point `sqrt(theta_eps)` grid.
pub fn critical_theta1plus_pure(j: usize, theta_eps_max: f64) -> Result<ThresholdResult> {
    critical_theta1plus_pure_with(j, theta_eps_max, 1.0)
}

pub fn critical_theta1plus_pure_with(j: usize, theta_eps_max: f64, theta_2: f64) -> Result<ThresholdResult> {
    if j == 0 {
        return Err(Error::UnsupportedConfiguration("needs at least one Round-Tripper".into()));
    }
    if !(theta_eps_max >= 0.0 && theta_eps_max.is_finite()) {
        return Err(Error::ParameterDomain(format!("theta_eps_max = {theta_eps_max}")));
    }
    let n = THETA_EPS_GRID;
    let mut best: Option<(f64, ThresholdResult)> = None;
    let mut evaluations = 0;
    // Sequential so each theta_eps starts from its neighbour's solution;
    // cold starts at theta_1+ = 1e-4 occasionally miss.
    let mut seed = None;
    for i in 0..n {
        let te = (theta_eps_max.sqrt() * i as f64 / (n - 1) as f64).powi(2);
        let (r, first) = pure_boundary_at(j, theta_2, te, seed)?;
        seed = first.or(seed);
        evaluations += r.evaluations;
        if r.status == ThresholdStatus::NoSignChange {
            let mut out = r;
            out.note = Some(format!("{} (theta_eps = {te})", out.note.unwrap_or_default()));
            out.evaluations = evaluations;
            return Ok(out);
        }
        if best.as_ref().map_or(true, |(_, b)| r.value > b.value) {
            best = Some((te, r));
        }
    }
    let (te, mut r) = best.expect("grid is not empty");
    r.evaluations = evaluations;
    r.note = Some(format!("attained at theta_eps = {te}"));
    Ok(r)
}

/// IT profit of a Round-Tripper market along a `sqrt(theta_eps)` grid,
/// warm-started point to point.
fn rt_profile(base: &MarketParams, grid: &[f64]) -> Vec<(f64, Option<EquilibriumSolution>)> {
    let mut warm: Option<StrategyProfile> = None;
    grid.iter()
        .map(|&te| {
            let sol = solve(&base.with_theta_eps(te), warm.as_ref());
            warm = warm_of(&sol).or(warm);
            (te, sol.is_equilibrium().then_some(sol))
        })
        .collect()
}

fn it_profit(sol: &EquilibriumSolution) -> f64 {
    expected_profits(sol).map_or(f64::NAN, |r| r.it_profit)
}

/// `theta_eps` above which Round-Trippers raise IT's profit over the no-HFT
/// benchmark, and `theta_eps` above which IT's profit falls with
/// `theta_eps`.
pub fn profit_thresholds(j: usize, theta_1plus: f64) -> Result<(ThresholdResult, ThresholdResult)> {
    profit_thresholds_with(j, theta_1plus, 1.0)
}

pub fn profit_thresholds_with(j: usize, theta_1plus: f64, theta_2: f64) -> Result<(ThresholdResult, ThresholdResult)> {
    if j == 0 {
        return Err(Error::UnsupportedConfiguration("needs at least one Round-Tripper".into()));
    }
    let base = MarketParams::new(theta_1plus, theta_2, 0.0, 0, j)?;
    let bench = benchmark_it_profit(theta_2)?;
    const STEPS: usize = 64;
    let grid: Vec<f64> = (0..=STEPS).map(|i| (THETA_EPS_CAP.sqrt() * i as f64 / STEPS as f64).powi(2)).collect();
    let path = rt_profile(&base, &grid);
    let tilde = profit_crossing(&base, &path, bench);
    let hat = profit_peak(&base, &path);
    Ok((tilde, hat))
}

fn profit_crossing(base: &MarketParams, path: &[(f64, Option<EquilibriumSolution>)], bench: f64) -> ThresholdResult {
    const WHAT: &str = "IT profit minus the no-HFT benchmark";
    let kind = ThresholdKind::ThetaTildeEps;
    let mut evals = path.len();
    let probes: Vec<Probe> = path
        .iter()
        .map(|(te, s)| Probe { x: *te, m: s.as_ref().map_or(f64::NAN, |s| it_profit(s) - bench), warm: s.as_ref().map(|s| s.profile) })
        .collect();
    if side(probes[0].m) {
        return result(kind, WHAT, &probes[0], &probes[0], ThresholdStatus::AtLowerBound, evals);
    }
    // The last switch from below to above the benchmark.
    let Some(i) = (1..probes.len()).rev().find(|&i| !side(probes[i - 1].m) && side(probes[i].m) && !probes[i - 1].m.is_nan()) else {
        let last = probes.last().expect("grid is not empty");
        let status = if probes.iter().any(|p| p.m.is_nan()) { ThresholdStatus::NoSignChange } else { ThresholdStatus::RightCensored };
        return result(kind, WHAT, last, last, status, evals);
    };
    let mut eval = |te: f64, warm: Option<&StrategyProfile>| {
        let sol = solve(&base.with_theta_eps(te), warm);
        let m = if sol.is_equilibrium() { it_profit(&sol) - bench } else { f64::NAN };
        Probe { x: te, m, warm: warm_of(&sol) }
    };
    bracketed(kind, WHAT, probes[i - 1].clone(), probes[i].clone(), Axis::Sqrt, &mut evals, &mut eval)
}

/// Central difference of IT profit in `sqrt(theta_eps)`.
const SLOPE_STEP: f64 = 1e-3;

fn profit_slope(base: &MarketParams, te: f64, warm: Option<&StrategyProfile>) -> (f64, Option<StrategyProfile>) {
    let u = te.sqrt();
    let at = |v: f64| {
        let sol = solve(&base.with_theta_eps(v * v), warm);
        (sol.is_equilibrium().then(|| it_profit(&sol)), warm_of(&sol))
    };
    let (lo, hi) = (u - SLOPE_STEP, u + SLOPE_STEP);
    let (up, w) = at(hi);
    // At theta_eps = 0 the profit is even in sqrt(theta_eps), so a
    // one-sided slope in theta_eps carries the sign.
    let down = if lo < 0.0 { at(0.0).0 } else { at(lo).0 };
    match (up, down) {
        (Some(a), Some(b)) => (a - b, w),
        _ => (f64::NAN, w),
    }
}

fn profit_peak(base: &MarketParams, path: &[(f64, Option<EquilibriumSolution>)]) -> ThresholdResult {
    const WHAT: &str = "d(IT profit)/d(sqrt theta_eps)";
    let kind = ThresholdKind::ThetaHatEps;
    let mut evals = 0;
    let probes: Vec<Probe> = path
        .iter()
        .map(|(te, s)| {
            let warm = s.as_ref().map(|s| s.profile);
            let (m, _) = profit_slope(base, *te, warm.as_ref());
            evals += 2;
            Probe { x: *te, m, warm }
        })
        .collect();
    let last = probes.last().expect("grid is not empty");
    if side(last.m) {
        return result(kind, WHAT, last, last, ThresholdStatus::RightCensored, evals);
    }
    // Profit falls from the last non-negative slope onwards.
    let Some(i) = (0..probes.len()).rev().find(|&i| side(probes[i].m) || probes[i].m == 0.0 || probes[i].m.is_nan()) else {
        return result(kind, WHAT, &probes[0], &probes[0], ThresholdStatus::AtLowerBound, evals);
    };
    if probes[i].m.is_nan() {
        return result(kind, WHAT, &probes[i], &probes[i + 1], ThresholdStatus::NoSignChange, evals);
    }
    let mut eval = |te: f64, warm: Option<&StrategyProfile>| {
        let (m, w) = profit_slope(base, te, warm);
        Probe { x: te, m, warm: w.or(warm.copied()) }
    };
    bracketed(kind, WHAT, probes[i].clone(), probes[i + 1].clone(), Axis::Sqrt, &mut evals, &mut eval)
}

/// Round-Tripper profit slope in `theta_eps` at `theta_eps = 0`, by a
/// second-order forward difference.
fn rt_profit_slope_at_zero(base: &MarketParams, warm: Option<&StrategyProfile>) -> (f64, Option<StrategyProfile>) {
    const H: f64 = 1e-4;
    let mut w = warm.copied();
    let mut vals = [0.0; 3];
    for (k, v) in vals.iter_mut().enumerate() {
        let sol = solve(&base.with_theta_eps(k as f64 * H), w.as_ref());
        let Some(pi) = expected_profits(&sol).ok().and_then(|r| r.hft_profit_rt) else {
            return (f64::NAN, w);
        };
        *v = pi;
        if k == 0 {
            w = warm_of(&sol);
        }
    }
    ((-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * H), w)
}

/// `theta_1+` at which Round-Trippers' profit stops rising with
/// `theta_eps` near perfect prediction. Searched on `(0, 1]`; an
/// increasing profit at `theta_1+ = 1` is reported right-censored at 1.
pub fn critical_theta1plus_rt_profit(j: usize, theta_2: f64) -> Result<ThresholdResult> {
    const WHAT: &str = "d(Round-Tripper profit)/d(theta_eps) at theta_eps = 0";
    if j == 0 {
        return Err(Error::UnsupportedConfiguration("needs at least one Round-Tripper".into()));
    }
    let base = MarketParams::new(1.0, theta_2, 0.0, 0, j)?;
    let mut evals = 0;
    let mut eval = |t: f64, warm: Option<&StrategyProfile>| {
        let (m, w) = rt_profit_slope_at_zero(&base.with_theta_1plus(t), warm);
        Probe { x: t, m, warm: w }
    };
    let mut prev: Option<Probe> = None;
    for i in (0..=8).rev() {
        let t = 10f64.powf(-(i as f64) / 2.0);
        let probe = eval(t, prev.as_ref().and_then(|p| p.warm.as_ref()));
        evals += 3;
        if probe.m.is_nan() {
            let at = prev.unwrap_or_else(|| probe.clone());
            return Ok(result(ThresholdKind::ThetaHat1plus, WHAT, &at, &probe, ThresholdStatus::NoSignChange, evals));
        }
        match prev {
            None if !side(probe.m) => return Ok(result(ThresholdKind::ThetaHat1plus, WHAT, &probe, &probe, ThresholdStatus::AtLowerBound, evals)),
            Some(a) if side(a.m) && !side(probe.m) => {
                return Ok(bracketed(ThresholdKind::ThetaHat1plus, WHAT, a, probe, Axis::Sqrt, &mut evals, &mut eval));
            }
            _ => {}
        }
        prev = Some(probe);
    }
    let last = prev.expect("grid is not empty");
    Ok(result(ThresholdKind::ThetaHat1plus, WHAT, &last, &last, ThresholdStatus::RightCensored, evals))
}

/// Walks `theta_1+` down from 1 on a log grid (ten points per decade),
/// warm-starting each point, until `stop` holds or the floor is reached.
fn walk_down(base: &MarketParams, mut stop: impl FnMut(&EquilibriumSolution) -> bool) -> (Vec<EquilibriumSolution>, usize) {
    let decades = (-THETA_1PLUS_FLOOR.log10()).round() as usize;
    let mut out: Vec<EquilibriumSolution> = Vec::new();
    for i in 0..=10 * decades {
        let t = 10f64.powf(-(i as f64) / 10.0);
        let warm = out.last().and_then(warm_of);
        let sol = solve(&base.with_theta_1plus(t), warm.as_ref());
        let done = stop(&sol);
        out.push(sol);
        if done {
            break;
        }
    }
    let n = out.len();
    (out, n)
}

fn check_mixed_population(j1: usize, j2: usize) -> Result<()> {
    if j1 == 0 || j2 == 0 {
        return Err(Error::UnsupportedConfiguration(format!("needs both HFT types, got j1 = {j1}, j2 = {j2}")));
    }
    Ok(())
}

/// `theta_1+` below which the `Gamma = 0` HFTs of a mixed population trade
/// against IT at `1+` (inverse Round-Trippers). Monitors `beta11`.
pub fn inverse_rt_boundary(j1: usize, j2: usize, theta_eps: f64) -> Result<ThresholdResult> {
    const WHAT: &str = "beta11 (first-trade direction of Gamma = 0 HFTs)";
    check_mixed_population(j1, j2)?;
    let base = MarketParams::new(1.0, 1.0, theta_eps, j1, j2)?;
    let (path, mut evals) = walk_down(&base, |s| !s.is_equilibrium() || s.profile.beta11 < 0.0);
    let probe = |s: &EquilibriumSolution| Probe {
        x: s.params.theta_1plus,
        m: if s.is_equilibrium() { s.profile.beta11 } else { f64::NAN },
        warm: warm_of(s),
    };
    let last = probe(path.last().expect("walk is not empty"));
    if path.len() == 1 {
        let status = if last.m.is_nan() { ThresholdStatus::NoSignChange } else { ThresholdStatus::RightCensored };
        return Ok(result(ThresholdKind::InverseRtBoundary, WHAT, &last, &last, status, evals));
    }
    let above = probe(&path[path.len() - 2]);
    if last.m.is_nan() {
        let mut r = result(ThresholdKind::InverseRtBoundary, WHAT, &last, &above, ThresholdStatus::NoSignChange, evals);
        r.note = Some("equilibrium ceased to exist before beta11 turned negative".into());
        return Ok(r);
    }
    if side(last.m) {
        return Ok(result(ThresholdKind::InverseRtBoundary, WHAT, &last, &last, ThresholdStatus::NoSignChange, evals));
    }
    let mut eval = |t: f64, warm: Option<&StrategyProfile>| probe(&solve(&base.with_theta_1plus(t), warm));
    Ok(bracketed(ThresholdKind::InverseRtBoundary, WHAT, last, above, Axis::Sqrt, &mut evals, &mut eval))
}

/// `theta_1+` below which no equilibrium is found. Monitors `+1` for an
/// accepted equilibrium and `-1` otherwise, so a failure here may be a
/// solver failure rather than true non-existence; the note carries the
/// number of starts spent at the failing end.
pub fn existence_boundary(j1: usize, j2: usize, theta_eps: f64) -> Result<ThresholdResult> {
    const WHAT: &str = "+1 if an equilibrium is accepted, -1 otherwise";
    let base = MarketParams::new(1.0, 1.0, theta_eps, j1, j2)?;
    if j1 == 0 || j2 == 0 {
        base.validate()?;
    }
    let probe = |s: &EquilibriumSolution| Probe {
        x: s.params.theta_1plus,
        m: if s.is_equilibrium() { 1.0 } else { -1.0 },
        warm: warm_of(s),
    };
    let (path, mut evals) = walk_down(&base, |s| !s.is_equilibrium());
    let last_sol = path.last().expect("walk is not empty");
    let last = probe(last_sol);
    if side(last.m) {
        // Exists down to the floor.
        return Ok(result(ThresholdKind::ExistenceBoundary, WHAT, &last, &last, ThresholdStatus::AtLowerBound, evals));
    }
    if path.len() == 1 {
        return Ok(result(ThresholdKind::ExistenceBoundary, WHAT, &last, &last, ThresholdStatus::RightCensored, evals));
    }
    let above = probe(&path[path.len() - 2]);
    let mut starts = last_sol.diagnostics.as_ref().map_or(0, |d| d.starts_tried);
    let mut eval = |t: f64, warm: Option<&StrategyProfile>| {
        let sol = solve(&base.with_theta_1plus(t), warm);
        if let Some(d) = &sol.diagnostics {
            starts = d.starts_tried;
        }
        probe(&sol)
    };
    let mut r = bracketed(ThresholdKind::ExistenceBoundary, WHAT, last, above, Axis::Sqrt, &mut evals, &mut eval);
    r.note = Some(format!("{starts} starts exhausted at the failing end"));
    Ok(r)
}

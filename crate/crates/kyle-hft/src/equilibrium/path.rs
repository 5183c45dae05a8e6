//! Warm-started continuation along parameter paths.

use serde::{Deserialize, Serialize};

use super::{solve_point_with, EquilibriumSolution, Regime, SolveOptions};
use crate::params::{Configuration, MarketParams};

/// Largest allowed jump in the coefficient vector between neighbours.
pub const CONTINUITY_GUARD: f64 = 0.2;
const MAX_BISECTIONS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PathEvent {
    RegimeSwitch { index: usize, from: Regime, to: Regime },
    /// The step to `index` needed intermediate points.
    Refined { index: usize, inserted: usize },
    /// The guard was exhausted; the point was solved cold.
    Break { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub solutions: Vec<EquilibriumSolution>,
    pub events: Vec<PathEvent>,
}

fn distance(a: &EquilibriumSolution, b: &EquilibriumSolution) -> f64 {
    a.coefficients().iter().zip(b.coefficients()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Parameter point halfway between `a` and `b`, on the square-root scale for
/// `theta_eps` and the log scale for `theta_1+`.
fn midpoint(a: &MarketParams, b: &MarketParams) -> MarketParams {
    let mut m = *b;
    m.theta_1plus = (a.theta_1plus * b.theta_1plus).sqrt();
    m.theta_eps = (0.5 * (a.theta_eps.sqrt() + b.theta_eps.sqrt())).powi(2);
    m.theta_2 = 0.5 * (a.theta_2 + b.theta_2);
    if let (Some(x), Some(y)) = (a.gamma, b.gamma) {
        m.gamma = Some(0.5 * (x + y));
    }
    m
}

struct Stepper<'a> {
    opts: &'a SolveOptions,
    inserted: usize,
}

impl Stepper<'_> {
    #[allow(clippy::result_large_err)]
    fn step(&mut self, prev: &EquilibriumSolution, target: &MarketParams, depth: usize) -> Result<EquilibriumSolution, EquilibriumSolution> {
        let sol = solve_point_with(target, None, Some(&prev.profile), self.opts);
        if sol.is_equilibrium() && distance(prev, &sol) < CONTINUITY_GUARD {
            return Ok(sol);
        }
        if depth == MAX_BISECTIONS {
            return Err(sol);
        }
        let mid = midpoint(&prev.params, target);
        self.inserted += 1;
        let m = self.step(prev, &mid, depth + 1)?;
        self.step(&m, target, depth + 1)
    }
}

/// Solves every point of `grid` in order. With `warm_start`, each point
/// starts from its predecessor and steps that jump by more than
/// [`CONTINUITY_GUARD`] are bisected; otherwise every point is solved cold.
pub fn continue_path(grid: &[MarketParams], warm_start: bool) -> PathResult {
    let opts = SolveOptions { continuation: false, regime_evidence: false, ..SolveOptions::default() };
    let first = SolveOptions { regime_evidence: false, ..SolveOptions::default() };
    continue_path_with(grid, warm_start, &first, &opts)
}

pub(crate) fn continue_path_with(grid: &[MarketParams], warm_start: bool, first: &SolveOptions, opts: &SolveOptions) -> PathResult {
    let mut solutions: Vec<EquilibriumSolution> = Vec::with_capacity(grid.len());
    let mut events = Vec::new();
    for (index, p) in grid.iter().enumerate() {
        let prev = solutions.last().filter(|s| warm_start && s.is_equilibrium());
        let sol = match prev {
            None if index == 0 => solve_point_with(p, None, None, first),
            None => solve_point_with(p, None, None, opts),
            Some(prev) => {
                let mut stepper = Stepper { opts, inserted: 0 };
                match stepper.step(prev, p, 0) {
                    Ok(s) => {
                        if stepper.inserted > 0 {
                            events.push(PathEvent::Refined { index, inserted: stepper.inserted });
                        }
                        s
                    }
                    Err(_) => {
                        events.push(PathEvent::Break { index });
                        solve_point_with(p, None, None, opts)
                    }
                }
            }
        };
        if let Some(prev) = solutions.last() {
            if prev.regime != sol.regime {
                events.push(PathEvent::RegimeSwitch { index, from: prev.regime, to: sol.regime });
            }
        }
        solutions.push(sol);
    }
    PathResult { solutions, events }
}

/// Log-spaced `theta_1+` values from `from` to `to`, ten per decade.
pub(crate) fn log_grid(p: &MarketParams, from: f64, to: f64) -> Vec<MarketParams> {
    let (a, b) = (from.log10(), to.log10());
    let n = ((b - a).abs() * 10.0).ceil().max(1.0) as usize;
    let mut g: Vec<MarketParams> = (0..=n).map(|i| p.with_theta_1plus(10f64.powf(a + (b - a) * i as f64 / n as f64))).collect();
    g[0].theta_1plus = from;
    g[n].theta_1plus = to;
    g
}

/// Last resort for [`solve_point_with`]: solve an anchor point where the
/// cold starts are known to work and walk to `p`.
pub(crate) fn anchored_solve(p: &MarketParams, hint: Option<Regime>, opts: &SolveOptions) -> Option<EquilibriumSolution> {
    let inner = SolveOptions { continuation: false, scan_multiplicity: false, regime_evidence: false, ..*opts };
    let grid = match p.configuration() {
        Configuration::NoHft => return None,
        Configuration::AllSmallIt if p.theta_1plus > 1e-6 => log_grid(p, 1e-6, p.theta_1plus),
        Configuration::AllRoundTripper | Configuration::MixedTypes if p.theta_1plus != 1.0 => log_grid(p, 1.0, p.theta_1plus),
        Configuration::SingleGeneralGamma => {
            let g = p.gamma.unwrap_or(0.0);
            let u = g / (1.0 + g);
            let anchor = MarketParams::new(p.theta_1plus, p.theta_2, p.theta_eps, 1, 0).ok()?;
            let start = solve_point_with(&anchor, None, None, &SolveOptions { continuation: true, ..inner });
            if !start.is_equilibrium() {
                return None;
            }
            let grid: Vec<MarketParams> = (1..=20)
                .map(|i| {
                    let ui = u * i as f64 / 20.0;
                    let mut q = *p;
                    q.gamma = Some(if i == 20 { g } else { ui / (1.0 - ui) });
                    q
                })
                .collect();
            let mut prev = start;
            for q in &grid {
                let mut stepper = Stepper { opts: &inner, inserted: 0 };
                prev = stepper.step(&prev, q, 0).ok()?;
            }
            return finish(p, hint, prev, &inner);
        }
        _ => return None,
    };
    let path = continue_path_with(&grid, true, &inner, &inner);
    let last = path.solutions.last()?.clone();
    if !last.is_equilibrium() || path.events.iter().any(|e| matches!(e, PathEvent::Break { .. })) {
        return None;
    }
    finish(p, hint, last, &inner)
}

fn finish(p: &MarketParams, hint: Option<Regime>, last: EquilibriumSolution, inner: &SolveOptions) -> Option<EquilibriumSolution> {
    match hint {
        Some(r) if r != Regime::NoEquilibrium && r != last.regime => {
            let s = solve_point_with(p, Some(r), Some(&last.profile), inner);
            s.is_equilibrium().then_some(s)
        }
        _ => Some(last),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_uses_axis_scales() {
        let a = MarketParams::new(1e-4, 1.0, 0.0, 1, 0).unwrap();
        let b = MarketParams::new(1e-2, 1.0, 4.0, 1, 0).unwrap();
        let m = midpoint(&a, &b);
        assert!((m.theta_1plus - 1e-3).abs() < 1e-15);
        assert_eq!(m.theta_eps, 1.0);
    }

    #[test]
    fn log_grid_endpoints() {
        let p = MarketParams::new(1.0, 1.0, 0.0, 0, 1).unwrap();
        let g = log_grid(&p, 1.0, 1e-3);
        assert_eq!(g.len(), 31);
        assert_eq!(g[30].theta_1plus, 1e-3);
    }
}

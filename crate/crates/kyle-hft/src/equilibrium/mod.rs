//! Equilibrium search: the fixed-point system, damped Newton, the start
//! ladder, regime selection and numerical continuation.
//!
//! A point is solved in stages, cheapest first:
//!
//! 1. the caller's warm start, if any;
//! 2. closed-form anchors (the `theta_1+ -> 0` limit for small `theta_1+`,
//!    the no-HFT Kyle solution otherwise, blends of the single-type
//!    solutions for mixed populations);
//! 3. 32 quasi-random starts;
//! 4. continuation from an anchor point where stages 2 and 3 are reliable.
//!
//! A root is accepted only if it is finite, `A1 > 0`, every applicable
//! second-order slack exceeds [`SOC_FLOOR`] and, for the mixed regime,
//! `theta_z > THETA_Z_FLOOR`.

mod newton;
mod path;
pub mod specialized;
mod system;

use serde::{Deserialize, Serialize};

use crate::best_response::{soc_check, SocReport};
use crate::error::Result;
use crate::limits::limit_small_it;
use crate::params::{Configuration, MarketParams, StrategyProfile};
use crate::pricing::PricingRule;
use crate::profits::it_profit_of;

pub use newton::{solve as newton_solve, NewtonOptions, NewtonOutcome};
pub use path::{continue_path, PathEvent, PathResult};
pub use specialized::solve_specialized;
pub use system::{assemble_residual, Layout};
pub(crate) use system::{pricing_of, residual_of};

pub const SOC_FLOOR: f64 = 1e-10;
pub const THETA_Z_FLOOR: f64 = 1e-8;
/// Largest residual accepted as a root.
pub const ACCEPT_TOL: f64 = 1e-10;
/// Unknown vectors closer than this are the same root.
const DISTINCT_ROOT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Pure,
    Mixed,
    #[serde(rename = "none")]
    NoEquilibrium,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Pure => "pure",
            Regime::Mixed => "mixed",
            Regime::NoEquilibrium => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    GeneralSystem,
    SpecializedSystem,
    ClosedFormLimit,
}

/// Why the pure candidate lost to an accepted mixed equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RegimeEvidence {
    PureSoc4Fails { slack: f64 },
    PureLowerProfit { gap: f64 },
    NoPureCandidate,
    /// A pure root with positive SOC4 and at least the mixed IT profit.
    Unresolved { pure_it_profit: f64, mixed_it_profit: f64 },
}

/// What went wrong when no equilibrium was accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub best_residual: f64,
    pub starts_tried: usize,
    /// Slacks of the best converged but rejected candidate.
    pub failing_slacks: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub params: MarketParams,
    pub regime: Regime,
    pub profile: StrategyProfile,
    pub pricing: PricingRule,
    pub soc: Option<SocReport>,
    pub residual_norm: f64,
    pub provenance: Provenance,
    pub multiplicity_flag: bool,
    pub regime_evidence: Option<RegimeEvidence>,
    pub diagnostics: Option<Diagnostics>,
}

impl EquilibriumSolution {
    pub fn is_equilibrium(&self) -> bool {
        self.regime != Regime::NoEquilibrium
    }

    /// The full coefficient vector in a fixed order, used for distances
    /// along paths.
    pub fn coefficients(&self) -> [f64; 9] {
        let s = &self.profile;
        [s.a1, s.theta_z, s.a21, s.alpha22, s.beta11, s.beta21, s.beta22, s.beta23, s.beta12]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub newton: NewtonOptions,
    pub multistarts: usize,
    /// Keep searching after the first admissible root to detect others.
    pub scan_multiplicity: bool,
    /// Fall back to continuation from an anchor point.
    pub continuation: bool,
    /// Look for a competing pure root when a mixed one is accepted.
    pub regime_evidence: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            newton: NewtonOptions::default(),
            multistarts: 32,
            scan_multiplicity: false,
            continuation: true,
            regime_evidence: true,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub regime: Regime,
    pub profile: StrategyProfile,
    pub pricing: PricingRule,
    pub soc: SocReport,
    pub norm: f64,
}

/// Checks a converged root; on rejection returns the violated conditions.
pub(crate) fn admit(p: &MarketParams, regime: Regime, s: &StrategyProfile, norm: f64) -> std::result::Result<Candidate, Vec<(String, f64)>> {
    let mut bad = Vec::new();
    if !(norm <= ACCEPT_TOL) {
        bad.push(("residual".to_string(), norm));
    }
    if !(s.a1 > 0.0) {
        bad.push(("a1".to_string(), s.a1));
    }
    if regime == Regime::Mixed && !(s.theta_z > THETA_Z_FLOOR) {
        bad.push(("theta_z".to_string(), s.theta_z));
    }
    let pricing = match pricing_of(s, p) {
        Ok(pr) => pr,
        Err(e) => {
            bad.push((e.to_string(), f64::NAN));
            return Err(bad);
        }
    };
    if !(pricing.lambda1 > 0.0) {
        bad.push(("lambda1".to_string(), pricing.lambda1));
    }
    let soc = match soc_check(s, &pricing, p, regime) {
        Ok(r) => r,
        Err(e) => {
            bad.push((e.to_string(), f64::NAN));
            return Err(bad);
        }
    };
    for (j, v) in soc.soc1.iter().enumerate() {
        if let Some(v) = v {
            if !(*v > SOC_FLOOR) {
                bad.push((format!("soc1[{j}]"), *v));
            }
        }
    }
    for (j, v) in soc.soc2.iter().enumerate() {
        if !(*v > SOC_FLOOR) {
            bad.push((format!("soc2[{j}]"), *v));
        }
    }
    if !(soc.soc3 > SOC_FLOOR) {
        bad.push(("soc3".to_string(), soc.soc3));
    }
    if let Some(v) = soc.soc4 {
        if !(v > SOC_FLOOR) {
            bad.push(("soc4".to_string(), v));
        }
    }
    if bad.is_empty() {
        Ok(Candidate { regime, profile: *s, pricing, soc, norm })
    } else {
        Err(bad)
    }
}

/// Bookkeeping across the starts of one solve.
#[derive(Default)]
struct Search {
    found: Vec<Candidate>,
    tried: usize,
    best_norm: Option<f64>,
    best_profile: Option<StrategyProfile>,
    best_rejection: Vec<(String, f64)>,
}

impl Search {
    fn run(&mut self, p: &MarketParams, regime: Regime, start: &StrategyProfile, opts: &SolveOptions) -> bool {
        let layout = Layout::new(p, regime);
        let mut s0 = start.masked(p);
        if regime == Regime::Pure {
            s0.theta_z = 0.0;
        }
        let x0 = layout.pack(&s0);
        self.tried += 1;
        let out = newton::solve(|x| residual_of(&layout.unpack(x), p, layout.mixed), &x0, opts.newton);
        let s = layout.unpack(&out.x);
        if self.best_norm.map_or(true, |b| out.norm < b) {
            self.best_norm = Some(out.norm);
            self.best_profile = Some(s);
        }
        if !out.norm.is_finite() || out.norm > ACCEPT_TOL {
            return false;
        }
        match admit(p, regime, &s, out.norm) {
            Ok(c) => {
                let x = layout.pack(&c.profile);
                let known = self.found.iter().any(|f| {
                    f.regime == regime && layout.pack(&f.profile).iter().zip(&x).all(|(a, b)| (a - b).abs() < DISTINCT_ROOT)
                });
                if !known {
                    self.found.push(c);
                }
                true
            }
            Err(bad) => {
                self.best_rejection = bad;
                false
            }
        }
    }

    fn first(&self, regime: Regime) -> Option<&Candidate> {
        self.found.iter().find(|c| c.regime == regime)
    }
}

/// Two-period Kyle benchmark without HFTs, used as a start and for profit
/// comparisons.
pub fn kyle_benchmark(theta_2: f64) -> Result<StrategyProfile> {
    let p = MarketParams::new(1.0, theta_2, 0.0, 0, 0)?;
    let layout = Layout::new(&p, Regime::Pure);
    let out = newton::solve(|x| residual_of(&layout.unpack(x), &p, false), &[0.6, 1.0, 0.0], NewtonOptions::default());
    let s = layout.unpack(&out.x);
    match admit(&p, Regime::Pure, &s, out.norm) {
        Ok(c) => Ok(c.profile),
        Err(_) => Err(crate::error::Error::NonFinite("Kyle benchmark did not converge")),
    }
}

fn kyle_start(p: &MarketParams, regime: Regime) -> StrategyProfile {
    let base = kyle_benchmark(p.theta_2).unwrap_or(StrategyProfile { a1: 0.6, a21: 1.0, ..Default::default() });
    StrategyProfile {
        theta_z: if regime == Regime::Mixed { 0.1 } else { 0.0 },
        beta11: 0.5,
        beta21: 0.5,
        beta22: -0.5,
        beta23: -0.5,
        beta12: 0.5,
        ..base
    }
}

/// Starts from the `theta_1+ -> 0` closed form for an all-Small-IT market.
fn limit_starts(p: &MarketParams, regime: Regime) -> Vec<StrategyProfile> {
    if p.configuration() != Configuration::AllSmallIt || p.theta_1plus > 1e-3 {
        return Vec::new();
    }
    let lim = limit_small_it(p.j1, p.theta_eps, p.theta_2, regime)
        .or_else(|_| limit_small_it(p.j1, p.theta_eps, p.theta_2, Regime::Mixed))
        .or_else(|_| limit_small_it(p.j1, p.theta_eps, p.theta_2, Regime::Pure));
    let Ok(lim) = lim else { return Vec::new() };
    let mut out = Vec::new();
    for g in [-0.5, -1.0, -2.0, -4.0, -8.0] {
        for c in [1.0, 4.0, 10.0] {
            out.push(StrategyProfile {
                a1: lim.a1,
                theta_z: if regime == Regime::Mixed { lim.theta_z.max(1e-3) } else { 0.0 },
                a21: lim.a21,
                alpha22: lim.alpha22,
                beta11: c * p.theta_1plus,
                beta21: lim.beta21.unwrap_or(1.0),
                beta22: g,
                beta23: g,
                beta12: 0.0,
            });
        }
    }
    out
}

/// Blends of the all-type-1 and all-Round-Tripper solutions with the same
/// total HFT count.
fn blend_starts(p: &MarketParams, regime: Regime, opts: &SolveOptions) -> Vec<StrategyProfile> {
    if p.configuration() != Configuration::MixedTypes {
        return Vec::new();
    }
    let j = p.hft_count();
    let inner = SolveOptions { continuation: false, scan_multiplicity: false, regime_evidence: false, ..*opts };
    let (Ok(p1), Ok(p2)) = (MarketParams::new(p.theta_1plus, p.theta_2, p.theta_eps, j, 0), MarketParams::new(p.theta_1plus, p.theta_2, p.theta_eps, 0, j)) else {
        return Vec::new();
    };
    let a = solve_point_with(&p1, None, None, &inner);
    let b = solve_point_with(&p2, None, None, &inner);
    if !a.is_equilibrium() || !b.is_equilibrium() {
        return Vec::new();
    }
    let (sa, sb) = (a.profile, b.profile);
    let mut out = Vec::new();
    for lam in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
        for b12 in [sb.beta12, 0.1, 0.3, 0.6] {
            let mix = |x: f64, y: f64| (1.0 - lam) * x + lam * y;
            let mut s = StrategyProfile {
                a1: mix(sa.a1, sb.a1),
                theta_z: mix(sa.theta_z, sb.theta_z),
                a21: mix(sa.a21, sb.a21),
                alpha22: mix(sa.alpha22, sb.alpha22),
                beta12: b12,
                ..sa
            };
            if regime == Regime::Mixed {
                s.theta_z = s.theta_z.max(1e-3);
            }
            out.push(s);
        }
    }
    out
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Halton points in `[0, 2]` per unknown, with the signs of `alpha22`,
/// `beta22` and `beta23` flipped to where they live at every known root.
fn multistarts(p: &MarketParams, regime: Regime, count: usize) -> Vec<StrategyProfile> {
    const PRIMES: [usize; 9] = [2, 3, 5, 7, 11, 13, 17, 19, 23];
    (1..=count)
        .map(|i| {
            let h = |d: usize| 2.0 * radical_inverse(i, PRIMES[d]);
            StrategyProfile {
                a1: h(0),
                theta_z: if regime == Regime::Mixed { h(1) } else { 0.0 },
                a21: h(2),
                alpha22: -h(3),
                beta11: h(4),
                beta21: h(5),
                beta22: -h(6),
                beta23: -h(7),
                beta12: h(8),
            }
            .masked(p)
        })
        .collect()
}

fn regimes(hint: Option<Regime>) -> Vec<Regime> {
    match hint {
        Some(Regime::NoEquilibrium) | None => vec![Regime::Mixed, Regime::Pure],
        Some(r) => vec![r],
    }
}

fn warm_variants(init: &StrategyProfile, regime: Regime) -> Vec<StrategyProfile> {
    match regime {
        Regime::Mixed if init.theta_z <= THETA_Z_FLOOR => {
            vec![StrategyProfile { theta_z: 1e-4, ..*init }, StrategyProfile { theta_z: 0.05, ..*init }]
        }
        _ => vec![*init],
    }
}

/// Solves one parameter point.
///
/// With `regime_hint = None` the mixed regime is tried first and the pure
/// regime second. Failure is not an error: the returned solution then has
/// regime [`Regime::NoEquilibrium`] and carries [`Diagnostics`].
pub fn solve_point(p: &MarketParams, regime_hint: Option<Regime>, init: Option<&StrategyProfile>) -> EquilibriumSolution {
    solve_point_with(p, regime_hint, init, &SolveOptions::default())
}

/// Mixed first, then pure.
pub fn detect_regime(p: &MarketParams) -> EquilibriumSolution {
    solve_point(p, None, None)
}

pub fn solve_point_with(p: &MarketParams, regime_hint: Option<Regime>, init: Option<&StrategyProfile>, opts: &SolveOptions) -> EquilibriumSolution {
    if let Err(e) = p.validate() {
        return failure(p, &Search::default(), Some(e.to_string()));
    }
    let order = regimes(regime_hint);
    let mut search = Search::default();
    let done = |search: &Search| order.iter().find_map(|r| search.first(*r).map(|c| c.regime));

    // Stage 1: warm start.
    if let Some(init) = init {
        for &r in &order {
            for s in warm_variants(init, r) {
                if search.run(p, r, &s, opts) {
                    break;
                }
            }
            if search.first(r).is_some() {
                break;
            }
        }
    }
    // Stages 2 and 3, mixed before pure within each stage.
    if done(&search).is_none() || opts.scan_multiplicity {
        for &r in &order {
            let mut starts = limit_starts(p, r);
            starts.push(kyle_start(p, r));
            starts.extend(blend_starts(p, r, opts));
            for s in &starts {
                if search.run(p, r, s, opts) && !opts.scan_multiplicity {
                    break;
                }
            }
            if search.first(r).is_some() && !opts.scan_multiplicity {
                break;
            }
        }
    }
    if done(&search).is_none() || opts.scan_multiplicity {
        for &r in &order {
            if search.first(r).is_some() && !opts.scan_multiplicity {
                break;
            }
            for s in multistarts(p, r, opts.multistarts) {
                if search.run(p, r, &s, opts) && !opts.scan_multiplicity {
                    break;
                }
            }
        }
    }
    if done(&search).is_none() && opts.continuation {
        if let Some(sol) = path::anchored_solve(p, regime_hint, opts) {
            return sol;
        }
    }
    let Some(regime) = done(&search) else {
        return failure(p, &search, None);
    };
    let c = search.first(regime).expect("accepted regime has a candidate").clone();
    let multiplicity_flag = search.found.iter().filter(|f| f.regime == regime).count() > 1;
    let regime_evidence = (regime == Regime::Mixed && opts.regime_evidence).then(|| evidence(p, &c, opts));
    EquilibriumSolution {
        params: *p,
        regime,
        profile: c.profile,
        pricing: c.pricing,
        soc: Some(c.soc),
        residual_norm: c.norm,
        provenance: Provenance::GeneralSystem,
        multiplicity_flag,
        regime_evidence,
        diagnostics: None,
    }
}

fn failure(p: &MarketParams, search: &Search, note: Option<String>) -> EquilibriumSolution {
    let profile = search.best_profile.unwrap_or_default();
    let mut failing_slacks = search.best_rejection.clone();
    if let Some(n) = note {
        failing_slacks.push((n, f64::NAN));
    }
    EquilibriumSolution {
        params: *p,
        regime: Regime::NoEquilibrium,
        profile,
        pricing: pricing_of(&profile, p).unwrap_or_default(),
        soc: None,
        residual_norm: search.best_norm.unwrap_or(f64::INFINITY),
        provenance: Provenance::GeneralSystem,
        multiplicity_flag: false,
        regime_evidence: None,
        diagnostics: Some(Diagnostics {
            best_residual: search.best_norm.unwrap_or(f64::INFINITY),
            starts_tried: search.tried,
            failing_slacks,
        }),
    }
}

/// Solves the pure system from the mixed root and records why it lost.
fn evidence(p: &MarketParams, mixed: &Candidate, opts: &SolveOptions) -> RegimeEvidence {
    let layout = Layout::new(p, Regime::Pure);
    let starts = [StrategyProfile { theta_z: 0.0, ..mixed.profile }, kyle_start(p, Regime::Pure)];
    for s in starts {
        let out = newton::solve(|x| residual_of(&layout.unpack(x), p, false), &layout.pack(&s.masked(p)), opts.newton);
        if out.norm > ACCEPT_TOL {
            continue;
        }
        let pure = layout.unpack(&out.x);
        let Ok(pr) = pricing_of(&pure, p) else { continue };
        let Ok(soc) = soc_check(&pure, &pr, p, Regime::Pure) else { continue };
        let slack = soc.soc4.unwrap_or(f64::NAN);
        if !(slack > 0.0) {
            return RegimeEvidence::PureSoc4Fails { slack };
        }
        let (Ok(pure_it), Ok(mixed_it)) = (it_profit_of(&pure, &pr, p), it_profit_of(&mixed.profile, &mixed.pricing, p)) else {
            continue;
        };
        if pure_it < mixed_it {
            return RegimeEvidence::PureLowerProfit { gap: mixed_it - pure_it };
        }
        return RegimeEvidence::Unresolved { pure_it_profit: pure_it, mixed_it_profit: mixed_it };
    }
    RegimeEvidence::NoPureCandidate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_points_are_spread() {
        let p = MarketParams::new(1.0, 1.0, 0.0, 1, 1).unwrap();
        let s = multistarts(&p, Regime::Mixed, 32);
        assert_eq!(s.len(), 32);
        assert!(s.iter().all(|x| x.alpha22 <= 0.0 && (0.0..=2.0).contains(&x.a1)));
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn regime_labels() {
        assert_eq!(Regime::NoEquilibrium.to_string(), "none");
        assert_eq!(serde_json::to_string(&Regime::Mixed).unwrap(), "\"mixed\"");
    }
}

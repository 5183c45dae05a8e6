//! Equilibrium verification: Monte-Carlo pricing and profit checks,
//! closed-form unilateral deviations, indifference of a randomizing IT,
//! break-even dealers and flat Round-Trippers.

use serde::{Deserialize, Serialize};

use crate::best_response::{it_first_stage, ItFirstStage};
use crate::equilibrium::{EquilibriumSolution, Regime};
use crate::error::{Error, Result};
use crate::params::{Gamma, HftStrategy};
use crate::profits::{expected_profits, hft_objective, it_objective};
use crate::shocks::{Beliefs, Flows, ItPlay, ShockSpace};
use crate::sim::{fit_all, simulate_market, MarketRows, Obs, Observer, Sampler, SimStats, KMAX};

/// Deterministic checks must hold to this absolute precision.
pub const ANALYTIC_TOL: f64 = 1e-9;
/// Largest admissible objective gain from a unilateral deviation.
pub const DEVIATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub n: usize,
    pub seed: u64,
    /// Additive perturbation sizes; each is applied with both signs.
    pub deviation_grid: Vec<f64>,
    /// Statistical checks pass within this many standard errors.
    pub k_se: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { n: 10_000_000, seed: 7, deviation_grid: vec![1e-3, 1e-2, 1e-1], k_se: 4.0 }
    }
}

/// One check with the measured margin next to its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub pass: bool,
    pub margin: f64,
    pub threshold: f64,
}

impl Check {
    fn at_most(margin: f64, threshold: f64) -> Check {
        Check { pass: margin <= threshold, margin, threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub regime: Regime,
    pub n: usize,
    pub seed: u64,
    /// Largest impact z-score among the four simulated regressions.
    pub pricing: Check,
    /// Largest objective gain over all agents and deviations.
    pub deviation: Check,
    /// The deviation that achieved it.
    pub worst_deviation: String,
    /// Analytic indifference residuals; `None` outside the mixed regime.
    pub indifference: Option<Check>,
    /// Largest t-statistic of IT profit on `i1` within `v` bins.
    pub indifference_sim: Option<Check>,
    pub zero_sum: Check,
    /// Largest position coefficient left by a Round-Tripper.
    pub clearing: Check,
    /// Largest z-score between simulated and closed-form profits.
    pub profit_agreement: Check,
    pub sim: Option<SimStats>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        let opt = |c: &Option<Check>| c.map_or(true, |c| c.pass);
        self.pricing.pass
            && self.deviation.pass
            && opt(&self.indifference)
            && opt(&self.indifference_sim)
            && self.zero_sum.pass
            && self.clearing.pass
            && self.profit_agreement.pass
    }
}

/// Accessor for one perturbable strategy coefficient.
type Field<T> = fn(&mut T) -> &mut f64;

fn failed(margin: f64, threshold: f64) -> Check {
    Check { pass: false, margin, threshold }
}

/// Runs every check. Failures show up as flags and margins, never as
/// errors.
pub fn verify_equilibrium(sol: &EquilibriumSolution, opts: &VerifyOptions) -> VerificationReport {
    let k = opts.k_se;
    let (deviation, worst_deviation) = max_deviation_gain(sol, &opts.deviation_grid);
    let mixed = sol.regime == Regime::Mixed;
    let indifference = mixed.then(|| match it_first_stage(&sol.profile, &sol.pricing, &sol.params, Regime::Mixed) {
        Ok(ItFirstStage::Mixed { z1, z2 }) => Check::at_most(z1.abs().max(z2.abs()), ANALYTIC_TOL),
        _ => failed(f64::INFINITY, ANALYTIC_TOL),
    });
    let profits = expected_profits(sol).ok();
    let zero_sum = match &profits {
        Some(r) => Check::at_most(r.total(&sol.params).abs(), ANALYTIC_TOL),
        None => failed(f64::INFINITY, ANALYTIC_TOL),
    };
    let sim = simulate_market(sol, opts.n, opts.seed).ok();
    let (pricing, profit_agreement) = match (&sim, &profits) {
        (Some(s), Some(r)) => {
            let pr = &sol.pricing;
            let pricing = [
                s.lambda1.z_score(pr.lambda1),
                s.lambda1plus.z_score(pr.lambda1plus),
                s.lambda21.z_score(pr.lambda21),
                s.lambda22.z_score(pr.lambda22),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            let mut agree = s.it_profit.z_score(r.it_profit).max(s.noise_profit.z_score(r.noise_profit));
            for (e, a) in [(s.hft_profit_small, r.hft_profit_small), (s.hft_profit_rt, r.hft_profit_rt)] {
                if let (Some(e), Some(a)) = (e, a) {
                    agree = agree.max(e.z_score(a));
                }
            }
            (Check::at_most(pricing, k), Check::at_most(agree, k))
        }
        _ => (failed(f64::INFINITY, k), failed(f64::INFINITY, k)),
    };
    let indifference_sim = (mixed && sim.is_some()).then(|| Check::at_most(indifference_t_stat(sol, opts.n, opts.seed), k));
    VerificationReport {
        regime: sol.regime,
        n: sim.as_ref().map_or(opts.n, |s| s.n),
        seed: opts.seed,
        pricing,
        deviation: Check::at_most(deviation, DEVIATION_TOL),
        worst_deviation,
        indifference,
        indifference_sim,
        zero_sum,
        clearing: Check::at_most(clearing_residual(sol), ANALYTIC_TOL),
        profit_agreement,
        sim,
    }
}

/// Largest absolute position coefficient of any Round-Tripper.
fn clearing_residual(sol: &EquilibriumSolution) -> f64 {
    let p = &sol.params;
    let f = Flows::equilibrium(p, &sol.profile);
    (p.n_type1()..p.hft_count())
        .map(|j| (&f.x1[j] + &f.x2[j]).0.iter().fold(0.0, |m: f64, c| m.max(c.abs())))
        .fold(0.0, f64::max)
}

/// Worst objective gain from perturbing one coefficient of one agent while
/// everyone else, dealers included, keeps the equilibrium play and beliefs.
pub fn max_deviation_gain(sol: &EquilibriumSolution, grid: &[f64]) -> (f64, String) {
    let p = &sol.params;
    let pr = &sol.pricing;
    let beliefs = Beliefs::from_profile(&sol.profile);
    let it = ItPlay::from(&sol.profile);
    let hfts = sol.profile.expand(p);
    let steps: Vec<f64> = grid.iter().flat_map(|&d| [d, -d]).collect();
    let mut worst = (f64::NEG_INFINITY, String::new());
    let mut record = |gain: f64, what: String| {
        if !(gain <= worst.0) {
            worst = (gain, what);
        }
    };

    let base = it_objective(&Flows::build(p, it, &hfts, beliefs), pr);
    let it_moves: [(&str, Field<ItPlay>); 4] = [
        ("it.a1", |x| &mut x.a1),
        ("it.theta_z", |x| &mut x.theta_z),
        ("it.a21", |x| &mut x.a21),
        ("it.alpha22", |x| &mut x.alpha22),
    ];
    for (name, field) in it_moves {
        for &d in &steps {
            let mut dev = it;
            *field(&mut dev) += d;
            if dev.theta_z < 0.0 {
                continue;
            }
            let gain = it_objective(&Flows::build(p, dev, &hfts, beliefs), pr) - base;
            record(gain, format!("{name} {d:+e}"));
        }
    }

    let n1 = p.n_type1();
    let reps = [(n1 > 0).then_some(0), (p.n_type2() > 0).then_some(n1)];
    for j in reps.into_iter().flatten() {
        let gamma = hfts[j].gamma;
        let base = hft_objective(&Flows::build(p, it, &hfts, beliefs), pr, j, gamma);
        let mut moves: Vec<(&str, Field<HftStrategy>)> = vec![("b1", |h| &mut h.b1)];
        if let Gamma::Finite(_) = gamma {
            moves.push(("b21", |h| &mut h.b21));
            moves.push(("b22", |h| &mut h.b22));
            moves.push(("b23", |h| &mut h.b23));
        }
        for (name, field) in moves {
            for &d in &steps {
                let mut dev = hfts.clone();
                *field(&mut dev[j]) += d;
                let gain = hft_objective(&Flows::build(p, it, &dev, beliefs), pr, j, gamma) - base;
                record(gain, format!("hft{j}.{name} {d:+e}"));
            }
        }
    }
    let (gain, what) = worst;
    (gain.max(0.0), what)
}

/// `v` bin edges at the standard-normal quintiles.
const V_QUINTILES: [f64; 4] = [-0.841_621_233_572_914_2, -0.253_347_103_135_799_7, 0.253_347_103_135_799_7, 0.841_621_233_572_914_2];

/// Within each `v` quintile, IT profit regressed on
/// `(1, v, v^2, i1, v i1, i1^2)`.
struct Indifference<'a> {
    rows: &'a MarketRows,
}

impl Observer for Indifference<'_> {
    fn dims(&self) -> Vec<usize> {
        vec![6; V_QUINTILES.len() + 1]
    }

    fn observe(&self, s: &[f64], out: &mut [Obs]) {
        let v = s[ShockSpace::V];
        let i1 = self.rows.i1.eval(s);
        let bin = V_QUINTILES.iter().take_while(|&&e| v > e).count();
        out.iter_mut().for_each(|o| o.active = false);
        let mut x = [0.0; KMAX];
        x[..6].copy_from_slice(&[1.0, v, v * v, i1, v * i1, i1 * i1]);
        out[bin] = Obs { active: true, x, y: self.rows.it_profit(s) };
    }
}

/// Largest `|t|` among the `i1` terms of the binned profit regressions.
fn indifference_t_stat(sol: &EquilibriumSolution, n: usize, seed: u64) -> f64 {
    let (rows, space) = MarketRows::new(sol);
    let sampler = Sampler::new(&space, n, seed);
    let fits = fit_all(&sampler, &Indifference { rows: &rows });
    let mut t = 0.0f64;
    for fit in &fits {
        for i in 3..6 {
            let e = fit.estimate(i);
            let z = e.z_score(0.0);
            t = t.max(if z.is_nan() { f64::INFINITY } else { z });
        }
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HftType {
    /// Finite inventory aversion (`Gamma = 0` in mixed populations).
    Type1,
    /// `Gamma = inf`.
    Type2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    SmallIT,
    RoundTripper,
    InverseRoundTripper,
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoleReport {
    pub role: Role,
    /// Loading of the first trade on the signal.
    pub first: f64,
    /// Loading of the second trade on the signal, other HFTs' first trades
    /// included.
    pub second: f64,
    /// Set when either loading is within `1e-9` of zero, so the sign pattern
    /// is not reliable.
    pub boundary: bool,
}

/// Role of the given HFT type by the signs of its two trades.
///
/// ```
/// use kyle_hft::{classify_role, solve_point, HftType, MarketParams, Role};
///
/// let p = MarketParams::new(0.5, 1.0, 0.0, 0, 2).unwrap();
/// let sol = solve_point(&p, None, None);
/// assert_eq!(classify_role(&sol, HftType::Type2).unwrap().role, Role::RoundTripper);
/// ```
pub fn classify_role(sol: &EquilibriumSolution, kind: HftType) -> Result<RoleReport> {
    let p = &sol.params;
    let s = &sol.profile;
    let (first, second) = match kind {
        HftType::Type1 if p.n_type1() > 0 => {
            let others = (p.n_type1() - 1) as f64 * s.beta11 + p.n_type2() as f64 * s.beta12;
            (s.beta11, s.beta21 + s.beta22 * others + s.beta23 * s.beta11)
        }
        HftType::Type2 if p.n_type2() > 0 => (s.beta12, -s.beta12),
        _ => return Err(Error::UnsupportedConfiguration(format!("no {kind:?} HFT in this market"))),
    };
    let role = match (first > 0.0, second > 0.0, first < 0.0, second < 0.0) {
        (true, true, _, _) => Role::SmallIT,
        (true, _, _, true) => Role::RoundTripper,
        (_, true, true, _) => Role::InverseRoundTripper,
        _ => Role::Unclassified,
    };
    Ok(RoleReport { role, first, second, boundary: first.abs() < 1e-9 || second.abs() < 1e-9 })
}

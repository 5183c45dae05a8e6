//! Expected trading profits in closed form.
//!
//! All flows and prices are linear in the shocks, so every expected profit is
//! a covariance on the shock basis. Profits are per `sigma_v * sigma_1`.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{kyle_benchmark, pricing_of, EquilibriumSolution};
use crate::error::{Error, Result};
use crate::params::{Gamma, MarketParams, StrategyProfile};
use crate::pricing::PricingRule;
use crate::shocks::Flows;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfitReport {
    pub it_profit: f64,
    /// Per-HFT gross profit of the first type (`Gamma = 0`, or the single
    /// general-Gamma HFT).
    pub hft_profit_small: Option<f64>,
    /// Per-HFT profit of a Round-Tripper.
    pub hft_profit_rt: Option<f64>,
    pub noise_profit: f64,
    /// IT profit in the same market without HFTs.
    pub benchmark_it: f64,
}

impl ProfitReport {
    /// Sum of all traders' expected profits; zero when dealers break even.
    pub fn total(&self, p: &MarketParams) -> f64 {
        self.it_profit
            + p.n_type1() as f64 * self.hft_profit_small.unwrap_or(0.0)
            + p.n_type2() as f64 * self.hft_profit_rt.unwrap_or(0.0)
            + self.noise_profit
    }
}

/// `E[(v - p1) i1 + (v - p2) i2]`.
pub fn it_objective(f: &Flows, pr: &PricingRule) -> f64 {
    let (p1, _, p2) = f.prices(pr);
    f.expect_product(&(&f.v - &p1), &f.i1) + f.expect_product(&(&f.v - &p2), &f.i2)
}

/// Gross trading profit of HFT `j`.
pub fn hft_gross_profit(f: &Flows, pr: &PricingRule, j: usize) -> f64 {
    let (_, p1p, p2) = f.prices(pr);
    f.expect_product(&(&f.v - &p1p), &f.x1[j]) + f.expect_product(&(&f.v - &p2), &f.x2[j])
}

/// Gross profit less the inventory penalty `Gamma (x1 + x2)^2`. The
/// Round-Tripper's position is flat by construction, so its penalty is zero.
pub fn hft_objective(f: &Flows, pr: &PricingRule, j: usize, gamma: Gamma) -> f64 {
    let gross = hft_gross_profit(f, pr, j);
    match gamma {
        Gamma::Finite(g) => {
            let pos = &f.x1[j] + &f.x2[j];
            gross - g * f.expect_product(&pos, &pos)
        }
        Gamma::Infinite => gross,
    }
}

pub fn noise_profit(f: &Flows, pr: &PricingRule) -> f64 {
    let (p1, p1p, p2) = f.prices(pr);
    f.expect_product(&(&f.v - &p1), &f.u1) + f.expect_product(&(&f.v - &p1p), &f.u1plus) + f.expect_product(&(&f.v - &p2), &f.u2)
}

pub(crate) fn it_profit_of(s: &StrategyProfile, pr: &PricingRule, p: &MarketParams) -> Result<f64> {
    Ok(it_objective(&Flows::equilibrium(p, s), pr))
}

/// IT profit in the two-period Kyle market without HFTs.
pub fn benchmark_it_profit(theta_2: f64) -> Result<f64> {
    let p = MarketParams::new(1.0, theta_2, 0.0, 0, 0)?;
    let s = kyle_benchmark(theta_2)?;
    it_profit_of(&s, &pricing_of(&s, &p)?, &p)
}

/// Profit of every agent at an accepted equilibrium.
pub fn expected_profits(sol: &EquilibriumSolution) -> Result<ProfitReport> {
    if !sol.is_equilibrium() {
        return Err(Error::RegimeMismatch("profits need an equilibrium".into()));
    }
    let p = &sol.params;
    let f = Flows::equilibrium(p, &sol.profile);
    let pr = &sol.pricing;
    let n1 = p.n_type1();
    Ok(ProfitReport {
        it_profit: it_objective(&f, pr),
        hft_profit_small: (n1 > 0).then(|| hft_gross_profit(&f, pr, 0)),
        hft_profit_rt: (p.n_type2() > 0).then(|| hft_gross_profit(&f, pr, n1)),
        noise_profit: noise_profit(&f, pr),
        benchmark_it: benchmark_it_profit(p.theta_2)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::price_impact;

    #[test]
    fn benchmark_is_two_party_zero_sum() {
        let p = MarketParams::new(1.0, 1.3, 0.0, 0, 0).unwrap();
        let s = kyle_benchmark(1.3).unwrap();
        let pr = price_impact(&s, &p).unwrap();
        let f = Flows::equilibrium(&p, &s);
        assert!((it_objective(&f, &pr) + noise_profit(&f, &pr)).abs() < 1e-14);
    }

    // Weak efficiency alone makes trading zero-sum, equilibrium or not.
    #[test]
    fn dealers_break_even_at_any_profile() {
        let p = MarketParams::new(0.6, 1.2, 0.4, 2, 3).unwrap();
        let s = StrategyProfile {
            a1: 0.7,
            theta_z: 0.2,
            a21: 1.1,
            alpha22: -0.5,
            beta11: 0.3,
            beta21: 0.5,
            beta22: -0.2,
            beta23: -0.6,
            beta12: 0.25,
        };
        let pr = price_impact(&s, &p).unwrap();
        let f = Flows::equilibrium(&p, &s);
        let total: f64 = it_objective(&f, &pr) + noise_profit(&f, &pr) + (0..5).map(|j| hft_gross_profit(&f, &pr, j)).sum::<f64>();
        assert!(total.abs() < 1e-14);
        // Round-Trippers carry no inventory.
        assert_eq!(hft_objective(&f, &pr, 4, Gamma::Infinite), hft_gross_profit(&f, &pr, 4));
    }
}

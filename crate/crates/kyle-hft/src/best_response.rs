//! Best responses of the IT and the HFTs, and the second-order conditions.
//!
//! HFT `j` conditions on its detection signal `s_j = r + eps_j` and on the
//! rest of the 1+ order flow `w_j = y1+ - x_1j`. The projection coefficients
//! of everything it cares about on `(s_j, w_j)` are collected in
//! [`HftSignalGeometry`]; the best responses are linear in them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::second_trade_loading;
use crate::params::{Gamma, HftStrategy, MarketParams, StrategyProfile};
use crate::pricing::PricingRule;
use crate::Regime;

/// Conditioning covariance of HFT `j` and the projections built on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HftSignalGeometry {
    pub sigma1j_sq: f64,
    pub sigma2j_sq: f64,
    pub sigma12j: f64,
    pub eta21: f64,
    pub eta22: f64,
    pub mu21: f64,
    pub mu22: f64,
    /// Projection of rival `k`'s signal on `(s_j, w_j)`, first component.
    /// The entry at index `j` itself is unused and left at zero.
    pub theta21jk: Vec<f64>,
    pub theta22jk: Vec<f64>,
    pub delta21: f64,
    pub delta22: f64,
    /// `E(v - p1 | s_j) / s_j`.
    pub eta: f64,
    /// `E(r | s_j) / s_j`.
    pub mu: f64,
    /// Sum of the rivals' first-trade coefficients.
    pub rivals_beta1: f64,
}

/// Signed slacks of the second-order conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocReport {
    /// `Lambda22 + Gamma_j` per HFT; `None` where the second trade is forced
    /// (`Gamma = inf`).
    pub soc1: Vec<Option<f64>>,
    /// Concavity of HFT `j`'s first-stage problem.
    pub soc2: Vec<f64>,
    /// `Lambda22`.
    pub soc3: f64,
    /// IT first-period concavity, only meaningful in the pure regime.
    pub soc4: Option<f64>,
}

impl SocReport {
    pub fn min_slack(&self) -> f64 {
        self.soc1
            .iter()
            .flatten()
            .chain(&self.soc2)
            .chain(std::iter::once(&self.soc3))
            .chain(&self.soc4)
            .fold(f64::INFINITY, |a, b| a.min(*b))
    }

    pub fn passes(&self, floor: f64) -> bool {
        self.min_slack() > floor
    }
}

/// Everything the fixed point needs about one HFT's problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct HftConditions {
    /// Numerators of the second-stage coefficients, before division by
    /// `2 (Lambda22 + Gamma)`.
    pub n21: f64,
    pub n22: f64,
    pub beta21: f64,
    pub beta22: f64,
    pub beta23: f64,
    pub soc1: Option<f64>,
    pub soc2: f64,
    /// First-stage numerator: the optimum is `foc / (2 soc2)`.
    pub foc: f64,
}

fn inverse_2x2(a: f64, b: f64, d: f64) -> Option<[f64; 3]> {
    let det = a * d - b * b;
    if !(det > 0.0) || !(a > 0.0) {
        return None;
    }
    Some([d / det, -b / det, a / det])
}

fn row_times(inv: &[f64; 3], x: f64, y: f64) -> (f64, f64) {
    (x * inv[0] + y * inv[1], x * inv[1] + y * inv[2])
}

pub(crate) fn geometry_of(s: &StrategyProfile, hfts: &[HftStrategy], p: &MarketParams, j: usize) -> Result<HftSignalGeometry> {
    let d = s.d();
    let vr = (s.a1 * s.a1 + s.theta_z) / d;
    let sj: f64 = hfts.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, h)| h.b1).sum();
    let sj_sq: f64 = hfts.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, h)| h.b1 * h.b1).sum();
    let sigma1j_sq = vr + p.theta_eps;
    let sigma2j_sq = vr * sj * sj + p.theta_eps * sj_sq + p.theta_1plus;
    let sigma12j = vr * sj;
    let inv = inverse_2x2(sigma1j_sq, sigma12j, sigma2j_sq).ok_or(Error::DegenerateConditioning {
        hft: j,
        det: sigma1j_sq * sigma2j_sq - sigma12j * sigma12j,
    })?;
    let (eta21, eta22) = row_times(&inv, s.a1 / d, s.a1 / d * sj);
    let (mu21, mu22) = row_times(&inv, vr, vr * sj);
    let mut theta21jk = vec![0.0; hfts.len()];
    let mut theta22jk = vec![0.0; hfts.len()];
    for (k, h) in hfts.iter().enumerate() {
        if k != j {
            let (a, b) = row_times(&inv, vr, p.theta_eps * h.b1 + vr * sj);
            theta21jk[k] = a;
            theta22jk[k] = b;
        }
    }
    let (delta21, delta22) = row_times(&inv, 0.0, p.theta_1plus);
    Ok(HftSignalGeometry {
        sigma1j_sq,
        sigma2j_sq,
        sigma12j,
        eta21,
        eta22,
        mu21,
        mu22,
        theta21jk,
        theta22jk,
        delta21,
        delta22,
        eta: s.a1 / d / sigma1j_sq,
        mu: vr / sigma1j_sq,
        rivals_beta1: sj,
    })
}

/// Projection geometry of HFT `j`.
pub fn hft_geometry(profile: &StrategyProfile, p: &MarketParams, j: usize) -> Result<HftSignalGeometry> {
    geometry_of(profile, &profile.expand(p), p, j)
}

pub(crate) fn conditions_of(
    s: &StrategyProfile,
    hfts: &[HftStrategy],
    pr: &PricingRule,
    p: &MarketParams,
    j: usize,
) -> Result<HftConditions> {
    let g = geometry_of(s, hfts, p, j)?;
    let (l21, l22) = (pr.lambda21, pr.lambda22);
    let others = || hfts.iter().enumerate().filter(move |(k, _)| *k != j);
    let rival_b22: f64 = others().map(|(_, h)| h.b22).sum();

    // Rivals' second trades, projected on (s_j, w_j).
    let mut bracket21 = s.alpha22 * g.mu21 + rival_b22 * g.delta21;
    let mut bracket22 = s.alpha22 * g.mu22 + rival_b22 * g.delta22;
    for (k, h) in others() {
        bracket21 += (h.b21 + h.b23 * h.b1) * g.theta21jk[k];
        bracket22 += (h.b21 + h.b23 * h.b1) * g.theta22jk[k];
        for (l, hl) in others() {
            if l != k {
                bracket21 += h.b22 * hl.b1 * g.theta21jk[l];
                bracket22 += h.b22 * hl.b1 * g.theta22jk[l];
            }
        }
    }
    let info = 1.0 - l22 * s.a21;
    let n21 = info * g.eta21 - l22 * bracket21;
    let n22 = info * g.eta22 - l21 - l22 * bracket22;
    let own = hfts[j];
    let m = g.mu * g.rivals_beta1;

    Ok(match own.gamma {
        Gamma::Finite(gamma) => {
            let soc1 = l22 + gamma;
            let beta21 = n21 / (2.0 * soc1);
            let beta22 = n22 / (2.0 * soc1);
            let beta23 = -(l21 + 2.0 * gamma + l22 * rival_b22) / (2.0 * soc1);
            let soc2 = pr.lambda1plus + gamma - soc1 * own.b23 * own.b23;
            let foc = g.eta - pr.lambda1plus * m + 2.0 * soc1 * own.b23 * (own.b21 + own.b22 * m);
            HftConditions { n21, n22, beta21, beta22, beta23, soc1: Some(soc1), soc2, foc }
        }
        Gamma::Infinite => {
            // Forced unwind: the HFT only chooses x_1j and earns p2 - p1+ on it.
            let c = l21 + l22 * rival_b22;
            let soc2 = pr.lambda1plus + l22 - c;
            let foc = g.eta - pr.lambda1plus * m - n21 - n22 * m;
            HftConditions { n21, n22, beta21: 0.0, beta22: 0.0, beta23: -1.0, soc1: None, soc2, foc }
        }
    })
}

/// Second-stage best response `(beta21, beta22, beta23)` of HFT `j`.
///
/// Round-Trippers return `(0, 0, -1)` exactly.
pub fn hft_second_stage(profile: &StrategyProfile, pr: &PricingRule, p: &MarketParams, j: usize) -> Result<(f64, f64, f64)> {
    let hfts = profile.expand(p);
    if hfts[j].gamma.is_infinite() {
        return Ok((0.0, 0.0, -1.0));
    }
    let c = conditions_of(profile, &hfts, pr, p, j)?;
    let slack = c.soc1.unwrap_or(f64::INFINITY);
    if !(slack > 0.0) {
        return Err(Error::Concavity { which: "SOC1", slack });
    }
    Ok((c.beta21, c.beta22, c.beta23))
}

/// First-stage best response `beta_1j`, given the HFT's own second-stage
/// coefficients in `profile`.
pub fn hft_first_stage(profile: &StrategyProfile, pr: &PricingRule, p: &MarketParams, j: usize) -> Result<f64> {
    let hfts = profile.expand(p);
    let c = conditions_of(profile, &hfts, pr, p, j)?;
    if !(c.soc2 > 0.0) {
        return Err(Error::Concavity { which: "SOC2", slack: c.soc2 });
    }
    Ok(c.foc / (2.0 * c.soc2))
}

/// IT second-period coefficients `(A21, alpha22)`.
pub fn it_second_stage(pr: &PricingRule, profile: &StrategyProfile, p: &MarketParams) -> Result<(f64, f64)> {
    if !(pr.lambda22 > 0.0) {
        return Err(Error::Concavity { which: "SOC3", slack: pr.lambda22 });
    }
    let hfts = profile.expand(p);
    Ok(it_second_stage_of(pr, &hfts))
}

pub(crate) fn it_second_stage_of(pr: &PricingRule, hfts: &[HftStrategy]) -> (f64, f64) {
    let sum_b1: f64 = hfts.iter().map(|h| h.b1).sum();
    let t = second_trade_loading(hfts);
    let a21 = 1.0 / (2.0 * pr.lambda22);
    let alpha22 = -(pr.lambda21 * sum_b1 + pr.lambda22 * t) / (2.0 * pr.lambda22);
    (a21, alpha22)
}

/// IT objective given `v`: `-q i1^2 + l i1 v + const`. Returns `(q, l)`.
pub(crate) fn it_quadratic(s: &StrategyProfile, pr: &PricingRule) -> (f64, f64) {
    let cc = (s.alpha22 - s.a21 * s.a1) / s.d();
    (pr.lambda1 - pr.lambda22 * cc * cc, 1.0 + 2.0 * pr.lambda22 * s.a21 * cc)
}

/// Outcome of the IT's first-period problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ItFirstStage {
    /// Indifference residuals: quadratic and linear coefficients of the
    /// objective in `i1`, both zero at a mixed equilibrium.
    Mixed { z1: f64, z2: f64 },
    /// Optimal `A1` and the concavity slack.
    Pure { alpha1: f64, soc4: f64 },
}

pub fn it_first_stage(profile: &StrategyProfile, pr: &PricingRule, _p: &MarketParams, regime: Regime) -> Result<ItFirstStage> {
    let (q, l) = it_quadratic(profile, pr);
    match regime {
        Regime::Mixed => Ok(ItFirstStage::Mixed { z1: q, z2: l }),
        Regime::Pure => {
            if !(q > 0.0) {
                return Err(Error::Concavity { which: "SOC4", slack: q });
            }
            Ok(ItFirstStage::Pure { alpha1: l / (2.0 * q), soc4: q })
        }
        Regime::NoEquilibrium => Err(Error::RegimeMismatch("no first stage without an equilibrium".into())),
    }
}

/// All second-order slacks at a profile.
pub fn soc_check(profile: &StrategyProfile, pr: &PricingRule, p: &MarketParams, regime: Regime) -> Result<SocReport> {
    let hfts = profile.expand(p);
    let mut soc1 = Vec::with_capacity(hfts.len());
    let mut soc2 = Vec::with_capacity(hfts.len());
    for j in 0..hfts.len() {
        let c = conditions_of(profile, &hfts, pr, p, j)?;
        soc1.push(c.soc1);
        soc2.push(c.soc2);
    }
    let soc4 = match regime {
        Regime::Pure => Some(it_quadratic(profile, pr).0),
        _ => None,
    };
    Ok(SocReport { soc1, soc2, soc3: pr.lambda22, soc4 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::price_impact;
    use crate::shocks::Flows;

    fn sample(j1: usize, j2: usize, te: f64) -> (MarketParams, StrategyProfile) {
        let p = MarketParams::new(0.6, 1.2, te, j1, j2).unwrap();
        let s = StrategyProfile {
            a1: 0.65,
            theta_z: 0.15,
            a21: 1.3,
            alpha22: -0.7,
            beta11: 0.45,
            beta21: 0.6,
            beta22: -0.4,
            beta23: -0.8,
            beta12: 0.35,
        };
        (p, s)
    }

    #[test]
    fn single_hft_geometry() {
        let p = MarketParams::new(1.3, 1.0, 0.0, 1, 0).unwrap();
        let s = StrategyProfile { a1: 0.6, theta_z: 0.1, a21: 1.0, beta11: 0.5, ..Default::default() };
        let g = hft_geometry(&s, &p, 0).unwrap();
        assert_eq!(g.sigma12j, 0.0);
        assert_eq!(g.delta21, 0.0);
        assert!((g.delta22 - 1.0).abs() < 1e-15);
        assert_eq!(g.sigma2j_sq, p.theta_1plus);
    }

    #[test]
    fn symmetric_rivals_share_projections() {
        let (p, s) = sample(3, 0, 0.4);
        let g = hft_geometry(&s, &p, 0).unwrap();
        assert_eq!(g.theta21jk[1], g.theta21jk[2]);
        assert_eq!(g.theta22jk[1], g.theta22jk[2]);
    }

    #[test]
    fn round_tripper_second_stage_is_fixed() {
        let (p, s) = sample(2, 2, 0.3);
        let pr = price_impact(&s, &p).unwrap();
        assert_eq!(hft_second_stage(&s, &pr, &p, 3).unwrap(), (0.0, 0.0, -1.0));
    }

    #[test]
    fn lone_zero_aversion_hft_beta23() {
        let p = MarketParams::new(1.0, 1.0, 0.5, 1, 0).unwrap();
        let s = StrategyProfile { a1: 0.6, a21: 1.2, alpha22: -0.3, beta11: 0.4, beta21: 0.5, beta22: -0.2, beta23: -0.4, ..Default::default() };
        let pr = price_impact(&s, &p).unwrap();
        let (_, _, b23) = hft_second_stage(&s, &pr, &p, 0).unwrap();
        assert!((b23 + pr.lambda21 / (2.0 * pr.lambda22)).abs() < 1e-15);
    }

    #[test]
    fn it_second_stage_values() {
        let pr = PricingRule { lambda1: 0.4, lambda1plus: 0.0, lambda21: 0.0, lambda22: 0.4 };
        let p = MarketParams::new(1.0, 1.0, 0.0, 0, 0).unwrap();
        let s = StrategyProfile { a1: 0.6, a21: 1.0, ..Default::default() };
        let (a21, alpha22) = it_second_stage(&pr, &s, &p).unwrap();
        assert_eq!(a21, 1.25);
        assert_eq!(alpha22, 0.0);
        let soc = soc_check(&s, &pr, &p, Regime::Pure).unwrap();
        assert_eq!(soc.soc3, 0.4);
    }

    // The projection coefficients must reproduce direct covariance algebra on
    // the shock basis, for every HFT and every population shape.
    #[test]
    fn second_stage_numerators_match_shock_algebra() {
        for (j1, j2, te) in [(1, 0, 0.0), (3, 0, 0.5), (4, 0, 0.2), (2, 3, 0.7), (1, 1, 0.0), (0, 3, 0.4)] {
            let (p, s) = sample(j1, j2, te);
            let pr = price_impact(&s, &p).unwrap();
            let hfts = s.expand(&p);
            let f = Flows::equilibrium(&p, &s);
            for j in 0..hfts.len() {
                let c = conditions_of(&s, &hfts, &pr, &p, j).unwrap();
                // Target of HFT j's second trade, net of its own impact.
                let mut rest = f.i2.clone();
                for (k, h) in hfts.iter().enumerate() {
                    if k != j {
                        let wk_wo_j = &f.w[k] - &f.x1[j];
                        let xk = &(&(h.b21 * &f.s[k]) + &(h.b22 * &wk_wo_j)) + &(h.b23 * &f.x1[k]);
                        rest = &rest + &xk;
                    }
                }
                let info = &f.v - &(f.lambda1 * &f.y1);
                let target = &info - &(pr.lambda22 * &rest);
                let (sj, wj) = (&f.s[j], &f.w[j]);
                let (a, b, d) = (f.cov(sj, sj), f.cov(sj, wj), f.cov(wj, wj));
                let det = a * d - b * b;
                let (cs, cw) = (f.cov(&target, sj), f.cov(&target, wj));
                let proj_s = (d * cs - b * cw) / det;
                let proj_w = (a * cw - b * cs) / det;
                assert!((c.n21 - proj_s).abs() < 1e-12, "n21 {j1} {j2} {j}: {} vs {}", c.n21, proj_s);
                assert!((c.n22 - (proj_w - pr.lambda21)).abs() < 1e-12, "n22 {j1} {j2} {j}");
            }
        }
    }
}

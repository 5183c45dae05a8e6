//! Dealers' price-impact coefficients under weak efficiency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{flow_moments, FlowMoments};
use crate::params::{MarketParams, StrategyProfile};

/// Dimensionless impacts: `p1 = L1 y1`, `p1+ = p1 + L1+ y1+`,
/// `p2 = p1 + L21 y1+ + L22 y2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PricingRule {
    pub lambda1: f64,
    pub lambda1plus: f64,
    pub lambda21: f64,
    pub lambda22: f64,
}

/// Below this `1 - rho^2` the two-regressor projection is treated as singular.
pub const COLLINEARITY_FLOOR: f64 = 1e-14;

/// Projects `v` on the order flows implied by `profile`.
///
/// ```
/// use kyle_hft::{price_impact, MarketParams, StrategyProfile};
///
/// let p = MarketParams::new(1.0, 1.0, 0.0, 0, 0).unwrap();
/// let s = StrategyProfile { a1: 1.0, a21: 1.0, ..Default::default() };
/// assert_eq!(price_impact(&s, &p).unwrap().lambda1, 0.5);
/// ```
pub fn price_impact(profile: &StrategyProfile, p: &MarketParams) -> Result<PricingRule> {
    let m = flow_moments(profile, p)?;
    pricing_from_moments(profile, &m)
}

pub fn pricing_from_moments(profile: &StrategyProfile, m: &FlowMoments) -> Result<PricingRule> {
    let lambda1 = profile.a1 / profile.d();
    let lambda1plus = m.cov_v_y1plus / m.var_y1plus;
    let rho = m.rho_y1plus_y2;
    let gap = 1.0 - rho * rho;
    if !(gap > COLLINEARITY_FLOOR) {
        return Err(Error::CollinearFlows { rho });
    }
    let (s1p, s2) = (m.var_y1plus.sqrt(), m.var_y2.sqrt());
    let lambda21 = (m.rho_v_y1plus - rho * m.rho_v_y2) / (gap * s1p);
    let lambda22 = (m.rho_v_y2 - m.rho_v_y1plus * rho) / (gap * s2);
    Ok(PricingRule { lambda1, lambda1plus, lambda21, lambda22 })
}

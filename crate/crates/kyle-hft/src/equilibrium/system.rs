//! The full fixed-point system in the per-type unknowns.

use crate::best_response::{conditions_of, it_quadratic, it_second_stage_of};
use crate::error::{Error, Result};
use crate::moments::moments_of;
use crate::params::{MarketParams, StrategyProfile};
use crate::pricing::{pricing_from_moments, PricingRule};
use crate::Regime;

/// Positions of the unknowns: `A1`, `theta_z` (mixed only), `A21`, `alpha22`,
/// then `(beta11, beta21, beta22, beta23)` if there are type-1 HFTs and
/// `beta12` if there are Round-Trippers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n1: usize,
    pub n2: usize,
    pub mixed: bool,
}

impl Layout {
    pub fn new(p: &MarketParams, regime: Regime) -> Layout {
        Layout { n1: p.n_type1(), n2: p.n_type2(), mixed: regime == Regime::Mixed }
    }

    pub fn len(&self) -> usize {
        3 + usize::from(self.mixed) + if self.n1 > 0 { 4 } else { 0 } + usize::from(self.n2 > 0)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pack(&self, s: &StrategyProfile) -> Vec<f64> {
        let mut x = vec![s.a1];
        if self.mixed {
            x.push(s.theta_z);
        }
        x.extend([s.a21, s.alpha22]);
        if self.n1 > 0 {
            x.extend([s.beta11, s.beta21, s.beta22, s.beta23]);
        }
        if self.n2 > 0 {
            x.push(s.beta12);
        }
        x
    }

    pub fn unpack(&self, x: &[f64]) -> StrategyProfile {
        let mut it = x.iter().copied();
        let mut next = || it.next().expect("unknown vector shorter than layout");
        let mut s = StrategyProfile { a1: next(), ..Default::default() };
        if self.mixed {
            s.theta_z = next();
        }
        s.a21 = next();
        s.alpha22 = next();
        if self.n1 > 0 {
            s.beta11 = next();
            s.beta21 = next();
            s.beta22 = next();
            s.beta23 = next();
        }
        if self.n2 > 0 {
            s.beta12 = next();
        }
        s
    }
}

pub(crate) fn pricing_of(s: &StrategyProfile, p: &MarketParams) -> Result<PricingRule> {
    let hfts = s.expand(p);
    pricing_from_moments(s, &moments_of(s, &hfts, p)?)
}

pub(crate) fn residual_of(s: &StrategyProfile, p: &MarketParams, mixed: bool) -> Result<Vec<f64>> {
    if !s.is_finite() {
        return Err(Error::NonFinite("profile"));
    }
    // theta_z may dip below zero inside Newton, but D must stay positive.
    if !(s.d() > 0.0) {
        return Err(Error::ParameterDomain("A1^2 + theta_z + 1 <= 0".into()));
    }
    let hfts = s.expand(p);
    let pr = pricing_from_moments(s, &moments_of(s, &hfts, p)?)?;
    let (a21, alpha22) = it_second_stage_of(&pr, &hfts);
    let (q, l) = it_quadratic(s, &pr);
    let mut r = Vec::with_capacity(9);
    if mixed {
        r.extend([q, l]);
    } else {
        r.push(2.0 * q * s.a1 - l);
    }
    r.extend([s.a21 - a21, s.alpha22 - alpha22]);
    let n1 = p.n_type1();
    if n1 > 0 {
        let c = conditions_of(s, &hfts, &pr, p, 0)?;
        r.extend([2.0 * c.soc2 * s.beta11 - c.foc, s.beta21 - c.beta21, s.beta22 - c.beta22, s.beta23 - c.beta23]);
    }
    if p.n_type2() > 0 {
        let c = conditions_of(s, &hfts, &pr, p, n1)?;
        r.push(2.0 * c.soc2 * s.beta12 - c.foc);
    }
    Ok(r)
}

/// Residual of the equilibrium conditions at `unknowns` (laid out as in
/// [`Layout`]). Pricing consistency is built in: the impacts are recomputed
/// from the profile on every call.
pub fn assemble_residual(unknowns: &[f64], p: &MarketParams, regime: Regime) -> Result<Vec<f64>> {
    let layout = Layout::new(p, regime);
    if regime == Regime::NoEquilibrium {
        return Err(Error::RegimeMismatch("no system for NoEquilibrium".into()));
    }
    if unknowns.len() != layout.len() {
        return Err(Error::ParameterDomain(format!("expected {} unknowns, got {}", layout.len(), unknowns.len())));
    }
    residual_of(&layout.unpack(unknowns), p, layout.mixed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_round_trip() {
        let p = MarketParams::new(1.0, 1.0, 0.0, 2, 3).unwrap();
        let l = Layout::new(&p, Regime::Mixed);
        assert_eq!(l.len(), 9);
        let s = StrategyProfile {
            a1: 0.1,
            theta_z: 0.2,
            a21: 0.3,
            alpha22: 0.4,
            beta11: 0.5,
            beta21: 0.6,
            beta22: 0.7,
            beta23: 0.8,
            beta12: 0.9,
        };
        assert_eq!(l.unpack(&l.pack(&s)), s);
        let pure = Layout::new(&MarketParams::new(1.0, 1.0, 0.0, 0, 2).unwrap(), Regime::Pure);
        assert_eq!(pure.len(), 4);
    }

    #[test]
    fn residual_matches_layout() {
        let p = MarketParams::new(1.0, 1.0, 0.0, 0, 0).unwrap();
        let r = assemble_residual(&[0.6, 1.2, 0.0], &p, Regime::Pure).unwrap();
        assert_eq!(r.len(), Layout::new(&p, Regime::Pure).len());
        assert!(assemble_residual(&[0.6, 1.2], &p, Regime::Pure).is_err());
    }
}

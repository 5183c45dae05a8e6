//! Linear combinations of the independent Gaussian shocks.
//!
//! Every order flow, price and position in the model is linear in
//! `(v, z, u1, eps_1..eps_J, u1+, u2)`, so second moments reduce to weighted
//! dot products. This module is the brute-force counterpart of the closed
//! forms in [`moments`](crate::moments): it builds each flow by literally
//! playing the strategies, which also makes it the engine behind off-path
//! objective evaluation.

use std::ops::{Add, Mul, Neg, Sub};

use crate::params::{HftStrategy, MarketParams, StrategyProfile};
use crate::pricing::PricingRule;

/// Coefficients on the shock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Lin(pub Vec<f64>);

impl Lin {
    pub fn zero(n: usize) -> Lin {
        Lin(vec![0.0; n])
    }

    pub fn unit(n: usize, i: usize) -> Lin {
        let mut l = Lin::zero(n);
        l.0[i] = 1.0;
        l
    }

    pub fn coef(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Value for one realization of the shocks.
    pub fn eval(&self, shocks: &[f64]) -> f64 {
        self.0.iter().zip(shocks).map(|(a, b)| a * b).sum()
    }
}

impl Add for &Lin {
    type Output = Lin;
    fn add(self, o: &Lin) -> Lin {
        Lin(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Lin {
    type Output = Lin;
    fn sub(self, o: &Lin) -> Lin {
        Lin(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<&Lin> for f64 {
    type Output = Lin;
    fn mul(self, o: &Lin) -> Lin {
        Lin(o.0.iter().map(|a| self * a).collect())
    }
}

impl Neg for &Lin {
    type Output = Lin;
    fn neg(self) -> Lin {
        -1.0 * self
    }
}

/// Shock basis with its variances.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockSpace {
    pub hfts: usize,
    pub var: Vec<f64>,
}

impl ShockSpace {
    pub const V: usize = 0;
    pub const Z: usize = 1;
    pub const U1: usize = 2;

    pub fn new(p: &MarketParams, theta_z: f64) -> ShockSpace {
        let j = p.hft_count();
        let mut var = vec![1.0, theta_z, 1.0];
        var.extend(std::iter::repeat(p.theta_eps).take(j));
        var.push(p.theta_1plus);
        var.push(p.theta_2);
        ShockSpace { hfts: j, var }
    }

    pub fn dim(&self) -> usize {
        self.var.len()
    }

    pub fn eps(&self, j: usize) -> usize {
        3 + j
    }

    pub fn u1plus(&self) -> usize {
        3 + self.hfts
    }

    pub fn u2(&self) -> usize {
        4 + self.hfts
    }

    pub fn cov(&self, a: &Lin, b: &Lin) -> f64 {
        a.0.iter().zip(&b.0).zip(&self.var).map(|((x, y), s)| x * y * s).sum()
    }

    pub fn var_of(&self, a: &Lin) -> f64 {
        self.cov(a, a)
    }
}

/// What dealers and HFTs believe about the time-1 flow: the filtering weight
/// `k = E(i1 | y1) / y1` and the time-1 impact. On the equilibrium path both
/// follow from the IT's own `(A1, theta_z)`; when the IT deviates they stay
/// put.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beliefs {
    pub k: f64,
    pub lambda1: f64,
}

impl Beliefs {
    pub fn from_profile(s: &StrategyProfile) -> Beliefs {
        let d = s.d();
        Beliefs { k: (s.a1 * s.a1 + s.theta_z) / d, lambda1: s.a1 / d }
    }
}

/// IT coefficients actually played.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItPlay {
    pub a1: f64,
    pub theta_z: f64,
    pub a21: f64,
    pub alpha22: f64,
}

impl From<&StrategyProfile> for ItPlay {
    fn from(s: &StrategyProfile) -> ItPlay {
        ItPlay { a1: s.a1, theta_z: s.theta_z, a21: s.a21, alpha22: s.alpha22 }
    }
}

/// All flows of one market round as linear maps of the shocks.
#[derive(Debug, Clone)]
pub struct Flows {
    pub space: ShockSpace,
    pub v: Lin,
    pub i1: Lin,
    pub y1: Lin,
    /// `i1 - E(i1 | y1)`, the part of the IT's first order HFTs try to detect.
    pub r: Lin,
    pub s: Vec<Lin>,
    pub x1: Vec<Lin>,
    pub y1plus: Lin,
    /// Order flow at 1+ net of HFT `j`'s own trade.
    pub w: Vec<Lin>,
    pub i2: Lin,
    pub x2: Vec<Lin>,
    pub y2: Lin,
    pub u1: Lin,
    pub u1plus: Lin,
    pub u2: Lin,
    pub lambda1: f64,
}

impl Flows {
    pub fn build(p: &MarketParams, it: ItPlay, hfts: &[HftStrategy], beliefs: Beliefs) -> Flows {
        let space = ShockSpace::new(p, it.theta_z);
        let n = space.dim();
        let v = Lin::unit(n, ShockSpace::V);
        let z = Lin::unit(n, ShockSpace::Z);
        let u1 = Lin::unit(n, ShockSpace::U1);
        let u1plus = Lin::unit(n, space.u1plus());
        let u2 = Lin::unit(n, space.u2());

        let i1 = &(it.a1 * &v) + &z;
        let y1 = &i1 + &u1;
        let r = &i1 - &(beliefs.k * &y1);
        let s: Vec<Lin> = (0..hfts.len()).map(|j| &r + &Lin::unit(n, space.eps(j))).collect();
        let x1: Vec<Lin> = hfts.iter().zip(&s).map(|(h, sj)| h.b1 * sj).collect();
        let mut y1plus = u1plus.clone();
        for x in &x1 {
            y1plus = &y1plus + x;
        }
        let w: Vec<Lin> = x1.iter().map(|x| &y1plus - x).collect();
        let info = &v - &(beliefs.lambda1 * &y1);
        let i2 = &(it.a21 * &info) + &(it.alpha22 * &r);
        let x2: Vec<Lin> = hfts
            .iter()
            .enumerate()
            .map(|(j, h)| &(&(h.b21 * &s[j]) + &(h.b22 * &w[j])) + &(h.b23 * &x1[j]))
            .collect();
        let mut y2 = &i2 + &u2;
        for x in &x2 {
            y2 = &y2 + x;
        }
        Flows {
            space,
            v,
            i1,
            y1,
            r,
            s,
            x1,
            y1plus,
            w,
            i2,
            x2,
            y2,
            u1,
            u1plus,
            u2,
            lambda1: beliefs.lambda1,
        }
    }

    /// Flows on the equilibrium path of `profile`.
    pub fn equilibrium(p: &MarketParams, profile: &StrategyProfile) -> Flows {
        Flows::build(p, ItPlay::from(profile), &profile.expand(p), Beliefs::from_profile(profile))
    }

    pub fn cov(&self, a: &Lin, b: &Lin) -> f64 {
        self.space.cov(a, b)
    }

    /// Transaction prices `(p1, p1+, p2)` net of `p0` under a pricing rule.
    pub fn prices(&self, pr: &PricingRule) -> (Lin, Lin, Lin) {
        let p1 = pr.lambda1 * &self.y1;
        let p1p = &p1 + &(pr.lambda1plus * &self.y1plus);
        let p2 = &(&p1 + &(pr.lambda21 * &self.y1plus)) + &(pr.lambda22 * &self.y2);
        (p1, p1p, p2)
    }

    /// `E[a * b]` for two linear flows; the building block of expected profits.
    pub fn expect_product(&self, a: &Lin, b: &Lin) -> f64 {
        self.cov(a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filtering_residual_is_orthogonal_to_y1() {
        let p = MarketParams::new(0.8, 1.1, 0.4, 2, 1).unwrap();
        let prof = StrategyProfile {
            a1: 0.7,
            theta_z: 0.3,
            a21: 1.2,
            alpha22: -0.6,
            beta11: 0.5,
            beta21: 0.4,
            beta22: -0.3,
            beta23: -0.5,
            beta12: 0.2,
        };
        let f = Flows::equilibrium(&p, &prof);
        assert!(f.cov(&f.r, &f.y1).abs() < 1e-15);
        let info = &f.v - &(f.lambda1 * &f.y1);
        assert!(f.cov(&info, &f.y1).abs() < 1e-15);
        // Round-Tripper positions net out.
        let j = 2;
        assert!((&f.x1[j] + &f.x2[j]).0.iter().all(|c| *c == 0.0));
    }
}

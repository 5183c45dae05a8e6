//! Second moments of the order flows and the asset value.
//!
//! [`flow_moments`] evaluates the closed forms with the rival sums expanded
//! HFT by HFT. [`flow_moments_generic`] computes the same quantities from the
//! shock-level flows in [`shocks`](crate::shocks); the two are kept in
//! agreement by tests and serve as each other's oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{HftStrategy, MarketParams, StrategyProfile};
use crate::shocks::{Flows, ShockSpace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowMoments {
    pub var_y1plus: f64,
    pub var_y2: f64,
    pub cov_y1plus_y2: f64,
    pub cov_v_y1plus: f64,
    pub cov_v_y2: f64,
    /// Loading of `y2` on `v`.
    pub kappa1: f64,
    /// Loading of `y2` on `z`.
    pub kappa2: f64,
    /// Loading of `y2` on `-u1`.
    pub kappa3: f64,
    pub rho_y1plus_y2: f64,
    pub rho_v_y1plus: f64,
    pub rho_v_y2: f64,
}

impl FlowMoments {
    fn assemble(
        var_y1plus: f64,
        var_y2: f64,
        cov_y1plus_y2: f64,
        cov_v_y1plus: f64,
        cov_v_y2: f64,
        kappa: [f64; 3],
    ) -> Result<FlowMoments> {
        if !(var_y1plus > 0.0) || !(var_y2 > 0.0) {
            return Err(Error::DegenerateMoment(format!(
                "flow variances must be positive (var_y1plus = {var_y1plus}, var_y2 = {var_y2})"
            )));
        }
        let (s1p, s2) = (var_y1plus.sqrt(), var_y2.sqrt());
        let m = FlowMoments {
            var_y1plus,
            var_y2,
            cov_y1plus_y2,
            cov_v_y1plus,
            cov_v_y2,
            kappa1: kappa[0],
            kappa2: kappa[1],
            kappa3: kappa[2],
            rho_y1plus_y2: cov_y1plus_y2 / (s1p * s2),
            rho_v_y1plus: cov_v_y1plus / s1p,
            rho_v_y2: cov_v_y2 / s2,
        };
        if [m.var_y2, m.cov_y1plus_y2, m.cov_v_y1plus, m.cov_v_y2, m.kappa1, m.kappa2, m.kappa3]
            .iter()
            .any(|x| !x.is_finite())
        {
            return Err(Error::NonFinite("flow moments"));
        }
        Ok(m)
    }
}

/// Sum over HFTs of the loading of `x_2j` on the filtering residual `r`.
pub(crate) fn second_trade_loading(hfts: &[HftStrategy]) -> f64 {
    let total: f64 = hfts.iter().map(|h| h.b1).sum();
    hfts.iter().map(|h| h.b21 + h.b23 * h.b1 + h.b22 * (total - h.b1)).sum()
}

/// Closed-form flow moments (with `sigma_v = sigma_1 = 1`).
pub fn flow_moments(profile: &StrategyProfile, p: &MarketParams) -> Result<FlowMoments> {
    moments_of(profile, &profile.expand(p), p)
}

pub(crate) fn moments_of(s: &StrategyProfile, hfts: &[HftStrategy], p: &MarketParams) -> Result<FlowMoments> {
    let (a1, tz) = (s.a1, s.theta_z);
    let a2 = a1 * a1;
    let d = a2 + tz + 1.0;
    let sum_b1: f64 = hfts.iter().map(|h| h.b1).sum();
    let sum_b1_sq: f64 = hfts.iter().map(|h| h.b1 * h.b1).sum();
    let sum_b22: f64 = hfts.iter().map(|h| h.b22).sum();
    let t = second_trade_loading(hfts);

    let kappa1 = s.a21 + a1 * (-s.a21 * a1 + s.alpha22 + t) / d;
    // (kappa1 - A21) / A1, written without the division so A1 = 0 is fine.
    let kappa2 = (-s.a21 * a1 + s.alpha22 + t) / d;
    let kappa3 = (s.a21 * a1 + (a2 + tz) * (s.alpha22 + t)) / d;

    let var_y1plus = (a2 + tz) / d * sum_b1 * sum_b1 + p.theta_eps * sum_b1_sq + p.theta_1plus;
    let eps_load = |h: &HftStrategy| h.b21 + h.b23 * h.b1 + h.b1 * (sum_b22 - h.b22);
    let eps_var: f64 = hfts.iter().map(|h| eps_load(h).powi(2)).sum();
    let var_y2 = kappa1 * kappa1
        + tz * kappa2 * kappa2
        + kappa3 * kappa3
        + p.theta_eps * eps_var
        + p.theta_1plus * sum_b22 * sum_b22
        + p.theta_2;
    let cov_y1plus_y2 = (a1 * kappa1 * sum_b1 + tz * kappa2 * sum_b1 + (a2 + tz) * kappa3 * sum_b1) / d
        + p.theta_1plus * sum_b22
        + p.theta_eps * hfts.iter().map(|h| h.b1 * eps_load(h)).sum::<f64>();
    let cov_v_y1plus = a1 * sum_b1 / d;
    let cov_v_y2 = kappa1;
    FlowMoments::assemble(var_y1plus, var_y2, cov_y1plus_y2, cov_v_y1plus, cov_v_y2, [kappa1, kappa2, kappa3])
}

/// The same moments evaluated as quadratic forms over the shock basis.
pub fn flow_moments_generic(profile: &StrategyProfile, p: &MarketParams) -> Result<FlowMoments> {
    let f = Flows::equilibrium(p, profile);
    moments_from_flows(&f)
}

pub(crate) fn moments_from_flows(f: &Flows) -> Result<FlowMoments> {
    let kappa = [
        f.y2.coef(ShockSpace::V),
        f.y2.coef(ShockSpace::Z),
        -f.y2.coef(ShockSpace::U1),
    ];
    FlowMoments::assemble(
        f.cov(&f.y1plus, &f.y1plus),
        f.cov(&f.y2, &f.y2),
        f.cov(&f.y1plus, &f.y2),
        f.cov(&f.v, &f.y1plus),
        f.cov(&f.v, &f.y2),
        kappa,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_evaluated_y1plus_variance() {
        let p = MarketParams::new(1.0, 1.0, 0.0, 1, 0).unwrap();
        let s = StrategyProfile { a1: 1.0, beta11: 0.5, a21: 1.0, ..Default::default() };
        let m = flow_moments(&s, &p).unwrap();
        assert!((m.var_y1plus - 1.125).abs() < 1e-15);
    }

    #[test]
    fn no_informed_flow_at_1plus() {
        let p = MarketParams::new(1.0, 1.0, 0.3, 2, 1).unwrap();
        let s = StrategyProfile { a1: 0.8, a21: 1.0, beta23: 0.0, ..Default::default() };
        let m = flow_moments(&s, &p).unwrap();
        assert_eq!(m.cov_v_y1plus, 0.0);
    }

    fn profile() -> impl Strategy<Value = StrategyProfile> {
        (
            (0.05f64..2.0, 0.0f64..1.0, 0.2f64..2.0, -1.5f64..0.5),
            (-1.0f64..2.0, -1.0f64..2.0, -3.0f64..1.0, -3.0f64..1.0, -1.0f64..2.0),
        )
            .prop_map(|((a1, theta_z, a21, alpha22), (beta11, beta21, beta22, beta23, beta12))| StrategyProfile {
                a1,
                theta_z,
                a21,
                alpha22,
                beta11,
                beta21,
                beta22,
                beta23,
                beta12,
            })
    }

    proptest! {
        #[test]
        fn closed_form_matches_quadratic_forms(
            s in profile(),
            j1 in 0usize..5,
            j2 in 0usize..5,
            t1 in 0.01f64..3.0,
            t2 in 0.1f64..3.0,
            te in 0.0f64..2.0,
        ) {
            let p = MarketParams::new(t1, t2, te, j1, j2).unwrap();
            let a = flow_moments(&s, &p).unwrap();
            let b = flow_moments_generic(&s, &p).unwrap();
            let pairs = [
                (a.var_y1plus, b.var_y1plus),
                (a.var_y2, b.var_y2),
                (a.cov_y1plus_y2, b.cov_y1plus_y2),
                (a.cov_v_y1plus, b.cov_v_y1plus),
                (a.cov_v_y2, b.cov_v_y2),
                (a.kappa1, b.kappa1),
                (a.kappa2, b.kappa2),
                (a.kappa3, b.kappa3),
            ];
            for (x, y) in pairs {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()), "{x} vs {y}");
            }
            for rho in [a.rho_y1plus_y2, a.rho_v_y1plus, a.rho_v_y2] {
                prop_assert!(rho.abs() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn round_trippers_clear_positions(s in profile(), j2 in 1usize..6) {
            let p = MarketParams::new(0.5, 1.0, 0.2, 1, j2).unwrap();
            let f = Flows::equilibrium(&p, &s);
            for j in 1..=j2 {
                let net = &f.x1[j] + &f.x2[j];
                prop_assert!(net.0.iter().all(|c| *c == 0.0));
            }
        }
    }
}

//! Reduced equilibrium systems for symmetric populations.
//!
//! These are independent formulations of the same equilibrium, used to
//! cross-check the general solver:
//!
//! - Round-Trippers only: the polynomial systems in `(A1, theta_z, beta12)`
//!   (mixed) and `(Lambda21, Lambda22, A1, beta12)` (pure).
//! - Every other population: scalar per-type conditions, where sums over
//!   rivals collapse to counts (`J - 1` rivals, `max(J - 2, 0)` third
//!   parties). In the mixed regime the IT's indifference is imposed through
//!   `Lambda22 = Lambda1`, `alpha22 = -D/2`, `A21 = 1/(2 Lambda1)` and
//!   `Lambda21 = Lambda1 (D - T)/S`; in the pure regime the unknowns are
//!   the two second-period impacts together with the strategies.

use super::{admit, multistarts, newton, EquilibriumSolution, Provenance, Regime, SolveOptions, ACCEPT_TOL};
use crate::error::{Error, Result};
use crate::params::{Configuration, MarketParams, StrategyProfile};
use crate::pricing::PricingRule;

/// Population counts and shock sizes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Typed {
    pub n1: f64,
    pub n2: f64,
    pub gamma: f64,
    pub t1: f64,
    pub t2: f64,
    pub te: f64,
}

impl Typed {
    pub fn new(p: &MarketParams) -> Typed {
        Typed {
            n1: p.n_type1() as f64,
            n2: p.n_type2() as f64,
            gamma: p.type1_gamma(),
            t1: p.theta_1plus,
            t2: p.theta_2,
            te: p.theta_eps,
        }
    }
}

/// Loading of all second HFT trades on `r`.
fn loading(s: &StrategyProfile, c: &Typed) -> f64 {
    let sum = c.n1 * s.beta11 + c.n2 * s.beta12;
    c.n1 * (s.beta21 + s.beta23 * s.beta11 + s.beta22 * (sum - s.beta11)) - c.n2 * s.beta12
}

pub(crate) fn typed_pricing(s: &StrategyProfile, c: &Typed) -> Result<PricingRule> {
    let a2 = s.a1 * s.a1;
    let d = a2 + s.theta_z + 1.0;
    let vr = (a2 + s.theta_z) / d;
    let sum = c.n1 * s.beta11 + c.n2 * s.beta12;
    let sq = c.n1 * s.beta11 * s.beta11 + c.n2 * s.beta12 * s.beta12;
    let b22 = c.n1 * s.beta22;
    let t = loading(s, c);
    let g = -s.a21 * s.a1 + s.alpha22 + t;
    let (k1, k2, k3) = (s.a21 + s.a1 * g / d, g / d, (s.a21 * s.a1 + (a2 + s.theta_z) * (s.alpha22 + t)) / d);
    let e1 = s.beta21 + s.beta23 * s.beta11 + s.beta11 * (b22 - s.beta22);
    let e2 = s.beta12 * (b22 - 1.0);
    let v1 = vr * sum * sum + c.te * sq + c.t1;
    let v2 = k1 * k1 + s.theta_z * k2 * k2 + k3 * k3 + c.te * (c.n1 * e1 * e1 + c.n2 * e2 * e2) + c.t1 * b22 * b22 + c.t2;
    let c12 = sum * (s.a1 * k1 + s.theta_z * k2 + (a2 + s.theta_z) * k3) / d
        + c.t1 * b22
        + c.te * (c.n1 * s.beta11 * e1 + c.n2 * s.beta12 * e2);
    let (cv1, cv2) = (s.a1 * sum / d, k1);
    let det = v1 * v2 - c12 * c12;
    if !(det > 1e-14 * v1 * v2) {
        return Err(Error::CollinearFlows { rho: c12 / (v1 * v2).sqrt() });
    }
    Ok(PricingRule {
        lambda1: s.a1 / d,
        lambda1plus: cv1 / v1,
        lambda21: (v2 * cv1 - c12 * cv2) / det,
        lambda22: (v1 * cv2 - c12 * cv1) / det,
    })
}

/// Scalar first- and second-stage conditions of a representative HFT.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TypedConditions {
    pub beta21: f64,
    pub beta22: f64,
    pub beta23: f64,
    pub soc2: f64,
    pub foc: f64,
}

pub(crate) fn typed_conditions(s: &StrategyProfile, pr: &PricingRule, c: &Typed, round_tripper: bool) -> Result<TypedConditions> {
    let (r1, r2) = if round_tripper { (c.n1, c.n2 - 1.0) } else { (c.n1 - 1.0, c.n2) };
    let a2 = s.a1 * s.a1;
    let d = a2 + s.theta_z + 1.0;
    let vr = (a2 + s.theta_z) / d;
    let sj = r1 * s.beta11 + r2 * s.beta12;
    let qj = r1 * s.beta11 * s.beta11 + r2 * s.beta12 * s.beta12;
    let (s11, s12, s22) = (vr + c.te, vr * sj, vr * sj * sj + c.te * qj + c.t1);
    let det = s11 * s22 - s12 * s12;
    if !(det > 0.0) {
        return Err(Error::DegenerateConditioning { hft: usize::from(round_tripper), det });
    }
    let proj = |x: f64, y: f64| ((x * s22 - y * s12) / det, (y * s11 - x * s12) / det);
    let eta2 = proj(s.a1 / d, s.a1 / d * sj);
    let mu2 = proj(vr, vr * sj);
    let th1 = proj(vr, c.te * s.beta11 + vr * sj);
    let th2 = proj(vr, c.te * s.beta12 + vr * sj);
    let delta = proj(0.0, c.t1);
    let third = (r1 - 1.0).max(0.0);
    let bracket = |k: usize| {
        let pick = |v: (f64, f64)| if k == 0 { v.0 } else { v.1 };
        s.alpha22 * pick(mu2)
            + r1 * s.beta22 * pick(delta)
            + r1 * (s.beta21 + s.beta23 * s.beta11) * pick(th1)
            - r2 * s.beta12 * pick(th2)
            + r1 * s.beta22 * (third * s.beta11 * pick(th1) + r2 * s.beta12 * pick(th2))
    };
    let info = 1.0 - pr.lambda22 * s.a21;
    let n21 = info * eta2.0 - pr.lambda22 * bracket(0);
    let n22 = info * eta2.1 - pr.lambda21 - pr.lambda22 * bracket(1);
    let eta = s.a1 / d / s11;
    let m = vr / s11 * sj;
    Ok(if round_tripper {
        let soc2 = pr.lambda1plus + pr.lambda22 - pr.lambda21 - pr.lambda22 * r1 * s.beta22;
        TypedConditions { beta21: 0.0, beta22: 0.0, beta23: -1.0, soc2, foc: eta - pr.lambda1plus * m - n21 - n22 * m }
    } else {
        let soc1 = pr.lambda22 + c.gamma;
        let beta23 = -(pr.lambda21 + 2.0 * c.gamma + pr.lambda22 * r1 * s.beta22) / (2.0 * soc1);
        TypedConditions {
            beta21: n21 / (2.0 * soc1),
            beta22: n22 / (2.0 * soc1),
            beta23,
            soc2: pr.lambda1plus + c.gamma - soc1 * s.beta23 * s.beta23,
            foc: eta - pr.lambda1plus * m + 2.0 * soc1 * s.beta23 * (s.beta21 + s.beta22 * m),
        }
    })
}

fn hft_rows(s: &StrategyProfile, pr: &PricingRule, c: &Typed, with_beta23: bool, r: &mut Vec<f64>) -> Result<()> {
    if c.n1 > 0.0 {
        let k = typed_conditions(s, pr, c, false)?;
        r.extend([2.0 * k.soc2 * s.beta11 - k.foc, s.beta21 - k.beta21, s.beta22 - k.beta22]);
        if with_beta23 {
            r.push(s.beta23 - k.beta23);
        }
    }
    if c.n2 > 0.0 {
        let k = typed_conditions(s, pr, c, true)?;
        r.push(2.0 * k.soc2 * s.beta12 - k.foc);
    }
    Ok(())
}

/// Unknown vector of one reduced system and its mapping to a profile.
trait Reduced {
    fn pack(&self, s: &StrategyProfile, pr: &PricingRule) -> Vec<f64>;
    fn profile(&self, x: &[f64]) -> StrategyProfile;
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// Mixed regime, scalar per-type conditions.
struct TypedMixed(Typed);

impl Reduced for TypedMixed {
    fn pack(&self, s: &StrategyProfile, _: &PricingRule) -> Vec<f64> {
        let mut x = vec![s.a1, s.theta_z];
        if self.0.n1 > 0.0 {
            x.extend([s.beta11, s.beta21, s.beta22, s.beta23]);
        }
        if self.0.n2 > 0.0 {
            x.push(s.beta12);
        }
        x
    }

    fn profile(&self, x: &[f64]) -> StrategyProfile {
        let (a1, theta_z) = (x[0], x[1]);
        let d = a1 * a1 + theta_z + 1.0;
        let mut s = StrategyProfile { a1, theta_z, a21: d / (2.0 * a1), alpha22: -d / 2.0, ..Default::default() };
        let mut i = 2;
        if self.0.n1 > 0.0 {
            (s.beta11, s.beta21, s.beta22, s.beta23) = (x[2], x[3], x[4], x[5]);
            i = 6;
        }
        if self.0.n2 > 0.0 {
            s.beta12 = x[i];
        }
        s
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let c = &self.0;
        let s = self.profile(x);
        let d = s.d();
        if !(d > 0.0) || !(s.a1 != 0.0) {
            return Err(Error::ParameterDomain("reduced mixed system off domain".into()));
        }
        let lambda1 = s.a1 / d;
        let sum = c.n1 * s.beta11 + c.n2 * s.beta12;
        let lambda21 = lambda1 * (d - loading(&s, c)) / sum;
        let computed = typed_pricing(&s, c)?;
        let pr = PricingRule { lambda1, lambda1plus: computed.lambda1plus, lambda21, lambda22: lambda1 };
        let mut r = vec![computed.lambda22 - lambda1, computed.lambda21 - lambda21];
        hft_rows(&s, &pr, c, true, &mut r)?;
        Ok(r)
    }
}

/// Pure regime, scalar per-type conditions, unknowns
/// `(Lambda21, Lambda22, A1, beta11, beta21, beta22, beta12)`.
struct TypedPure(Typed);

impl TypedPure {
    fn beta23(&self, l21: f64, l22: f64, beta22: f64) -> f64 {
        let c = &self.0;
        -(l21 + 2.0 * c.gamma + l22 * (c.n1 - 1.0) * beta22) / (2.0 * (l22 + c.gamma))
    }
}

impl Reduced for TypedPure {
    fn pack(&self, s: &StrategyProfile, pr: &PricingRule) -> Vec<f64> {
        let mut x = vec![pr.lambda21, pr.lambda22, s.a1];
        if self.0.n1 > 0.0 {
            x.extend([s.beta11, s.beta21, s.beta22]);
        }
        if self.0.n2 > 0.0 {
            x.push(s.beta12);
        }
        x
    }

    fn profile(&self, x: &[f64]) -> StrategyProfile {
        let c = &self.0;
        let (l21, l22) = (x[0], x[1]);
        let mut s = StrategyProfile { a1: x[2], a21: 1.0 / (2.0 * l22), ..Default::default() };
        let mut i = 3;
        if c.n1 > 0.0 {
            (s.beta11, s.beta21, s.beta22) = (x[3], x[4], x[5]);
            s.beta23 = self.beta23(l21, l22, s.beta22);
            i = 6;
        }
        if c.n2 > 0.0 {
            s.beta12 = x[i];
        }
        let sum = c.n1 * s.beta11 + c.n2 * s.beta12;
        s.alpha22 = -(l21 * sum + l22 * loading(&s, c)) / (2.0 * l22);
        s
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let c = &self.0;
        let (l21, l22) = (x[0], x[1]);
        if !(l22 > 0.0) || !(l22 + c.gamma > 0.0) {
            return Err(Error::Concavity { which: "SOC3", slack: l22 });
        }
        let s = self.profile(x);
        let lambda1 = s.a1 / s.d();
        let computed = typed_pricing(&s, c)?;
        let pr = PricingRule { lambda1, lambda1plus: computed.lambda1plus, lambda21: l21, lambda22: l22 };
        let cc = (s.alpha22 - s.a21 * s.a1) / s.d();
        let soc4 = lambda1 - l22 * cc * cc;
        let lin = 1.0 + 2.0 * l22 * s.a21 * cc;
        let mut r = vec![2.0 * soc4 * s.a1 - lin, computed.lambda21 - l21, computed.lambda22 - l22];
        hft_rows(&s, &pr, c, false, &mut r)?;
        Ok(r)
    }
}

/// Round-Trippers only, mixed regime: `(A1, theta_z, beta12)`.
struct RoundTripMixed(Typed);

impl Reduced for RoundTripMixed {
    fn pack(&self, s: &StrategyProfile, _: &PricingRule) -> Vec<f64> {
        vec![s.a1, s.theta_z, s.beta12]
    }

    fn profile(&self, x: &[f64]) -> StrategyProfile {
        let (a1, theta_z) = (x[0], x[1]);
        let d = a1 * a1 + theta_z + 1.0;
        StrategyProfile { a1, theta_z, a21: d / (2.0 * a1), alpha22: -d / 2.0, beta12: x[2], ..Default::default() }
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(round_trip_mixed(x, &self.0).to_vec())
    }
}

pub(crate) fn round_trip_mixed(x: &[f64], c: &Typed) -> [f64; 3] {
    let (a, tz, b) = (x[0], x[1], x[2]);
    let (j, t1, t2, te) = (c.n2, c.t1, c.t2, c.te);
    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let d = a2 + tz + 1.0;
    let core = j * (a4 * (4.0 * t1 + 4.0 * t2 - tz) - 2.0 * a2 * tz * (-2.0 * t1 - 2.0 * t2 + tz + 1.0) - tz * (tz + 1.0).powi(2))
        + te * d * (a6 + a4 * (2.0 * tz + 1.0) + a2 * (4.0 * t1 + 4.0 * t2 + tz * tz - 1.0) - (tz + 1.0).powi(2));
    let e1 = b.powi(3) * j * j * core
        + b * b * j * d
            * (4.0 * a2 * j * (t1 * (2.0 * a2 + 2.0 * tz - 1.0) + t2 * (a2 + tz - 1.0))
                + te * d * (a6 + a4 * (2.0 * tz - 1.0) + a2 * (4.0 * t1 + 4.0 * t2 + tz * tz - 1.0) + (tz + 1.0).powi(2)))
        + b * j * t1 * d * (5.0 * a6 + a4 * (10.0 * tz - 1.0) + a2 * (4.0 * t2 + 5.0 * tz * tz - 5.0) + (tz + 1.0).powi(2))
        + t1 * d * d * (a6 + a4 * (2.0 * tz - 1.0) + a2 * (4.0 * t2 + tz * tz - 1.0) + (tz + 1.0).powi(2));
    let e2 = 4.0 * a2 * b * j * t1 * (a4 + 2.0 * a2 * tz + a2 + tz * tz + tz)
        + b * b * j * core
        + t1 * d * (a6 + a4 * (2.0 * tz + 1.0) + a2 * (4.0 * t2 + tz * tz - 1.0) - (tz + 1.0).powi(2));
    let e3 = a4 * t1 * (4.0 * te + j + 2.0)
        + 2.0 * a2 * t1 * (4.0 * te * (tz + 1.0) + j * tz + j + 2.0 * tz + 1.0)
        + b * b
            * (a4 * j * (te + j) * (4.0 * te + j + 2.0)
                + a2 * j * (8.0 * te * te * (tz + 1.0) + 2.0 * te * (5.0 * j * tz + j + 2.0 * tz + 1.0) + j * (j + 2.0) * (2.0 * tz - 1.0))
                + j * (4.0 * te * te * (tz + 1.0).powi(2) + te * (tz + 1.0) * (j * (5.0 * tz - 3.0) + 2.0 * tz) + j * (j + 2.0) * (tz - 1.0) * tz))
        + t1 * (tz + 1.0) * (4.0 * te * (tz + 1.0) + j * tz + j + 2.0 * tz);
    [e1, e2, e3]
}

/// Round-Trippers only, pure regime: `(Lambda21, Lambda22, A1, beta12)`.
/// Three polynomial conditions plus consistency of `Lambda22`.
struct RoundTripPure(Typed);

impl Reduced for RoundTripPure {
    fn pack(&self, s: &StrategyProfile, pr: &PricingRule) -> Vec<f64> {
        vec![pr.lambda21, pr.lambda22, s.a1, s.beta12]
    }

    fn profile(&self, x: &[f64]) -> StrategyProfile {
        let (l21, l22, a1, b) = (x[0], x[1], x[2], x[3]);
        let j = self.0.n2;
        StrategyProfile { a1, a21: 1.0 / (2.0 * l22), alpha22: -b * j * (l21 - l22) / (2.0 * l22), beta12: b, ..Default::default() }
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !(x[1] > 0.0) {
            return Err(Error::Concavity { which: "SOC3", slack: x[1] });
        }
        let [e1, e2, e3] = round_trip_pure(x, &self.0);
        let computed = typed_pricing(&self.profile(x), &self.0)?;
        Ok(vec![e1, e2, e3, computed.lambda21 - x[0]])
    }
}

pub(crate) fn round_trip_pure(x: &[f64], c: &Typed) -> [f64; 3] {
    let (l21, l22, a, b) = (x[0], x[1], x[2], x[3]);
    let (j, t1, t2, te) = (c.n2, c.t1, c.t2, c.te);
    let a2 = a * a;
    let a4 = a2 * a2;
    let d = l21 - l22;
    let e1 = 2.0 * a4 * l22 + b * (a2 * j * (l22 - l21) + j * (l21 - l22)) - a * b * b * j * j * d * d + a - 2.0 * l22;
    let e2 = b * b * (-a2 * a * j * (3.0 * te + j + 2.0) - 3.0 * a * te * j)
        + a2 * a * t1
        + b.powi(3) * (a4 * j * (te + j) * (4.0 * te + j + 2.0) * d + a2 * te * j * (8.0 * te + 5.0 * j + 2.0) * d + 4.0 * te * te * j * d)
        + b * (a4 * t1 * (4.0 * te + j + 2.0) * d + a2 * t1 * (8.0 * te + j + 2.0) * d + 4.0 * te * t1 * d)
        + a * t1;
    let e3 = a2 * b.powi(4) * te * j.powi(3) * d * d
        + b * b * j * (te * (4.0 * (a2 + 1.0) * l22 * l22 * (t1 + t2) - 1.0) + a2 * j * (l21 * l21 * t1 + 2.0 * l21 * l22 * t1 + l22 * l22 * (t1 + 4.0 * t2)))
        + t1 * (4.0 * (a2 + 1.0) * l22 * l22 * t2 - 1.0);
    [e1, e2, e3]
}

fn system(p: &MarketParams, regime: Regime) -> Box<dyn Reduced> {
    let c = Typed::new(p);
    match (p.configuration(), regime) {
        (Configuration::AllRoundTripper, Regime::Mixed) => Box::new(RoundTripMixed(c)),
        (Configuration::AllRoundTripper, _) => Box::new(RoundTripPure(c)),
        (_, Regime::Mixed) => Box::new(TypedMixed(c)),
        _ => Box::new(TypedPure(c)),
    }
}

/// Residual of the reduced system at a profile, for cross-checks.
pub fn specialized_residual(p: &MarketParams, regime: Regime, s: &StrategyProfile) -> Result<Vec<f64>> {
    let sys = system(p, regime);
    let pr = super::pricing_of(s, p)?;
    sys.residual(&sys.pack(s, &pr))
}

/// Solves the reduced system for `p`, mixed regime first.
///
/// `init` seeds the search (typically a neighbouring solution); without it
/// the same cold starts as the general solver are used.
pub fn solve_specialized(p: &MarketParams, init: Option<&StrategyProfile>) -> EquilibriumSolution {
    let sol = search(p, init);
    if sol.is_equilibrium() || init.is_some() {
        return sol;
    }
    anchored(p).unwrap_or(sol)
}

/// Walks the reduced system in `theta_1+` from an anchor where cold starts
/// work, as the general solver does.
fn anchored(p: &MarketParams) -> Option<EquilibriumSolution> {
    let anchor = match p.configuration() {
        Configuration::AllSmallIt if p.theta_1plus > 1e-6 => 1e-6,
        Configuration::AllRoundTripper | Configuration::MixedTypes if p.theta_1plus != 1.0 => 1.0,
        _ => return None,
    };
    let mut prev: Option<EquilibriumSolution> = None;
    for q in super::path::log_grid(p, anchor, p.theta_1plus) {
        let sol = search(&q, prev.as_ref().map(|s| &s.profile));
        if !sol.is_equilibrium() {
            return None;
        }
        prev = Some(sol);
    }
    prev
}

fn search(p: &MarketParams, init: Option<&StrategyProfile>) -> EquilibriumSolution {
    let opts = SolveOptions::default();
    let mut best: Option<(f64, StrategyProfile)> = None;
    let mut tried = 0;
    let mut rejection = Vec::new();
    if p.configuration() == Configuration::NoHft || p.validate().is_err() {
        return super::failure(p, &super::Search::default(), Some("no reduced system for this population".into()));
    }
    for regime in [Regime::Mixed, Regime::Pure] {
        let sys = system(p, regime);
        let mut starts: Vec<StrategyProfile> = init.into_iter().copied().collect();
        if regime == Regime::Mixed {
            for s in starts.iter_mut() {
                s.theta_z = s.theta_z.max(1e-3);
            }
        }
        starts.extend(super::limit_starts(p, regime));
        starts.push(super::kyle_start(p, regime));
        starts.extend(super::blend_starts(p, regime, &opts));
        starts.extend(multistarts(p, regime, opts.multistarts));
        for s in &starts {
            let guess = super::pricing_of(s, p).unwrap_or(PricingRule { lambda1: 0.4, lambda1plus: 0.1, lambda21: 0.2, lambda22: 0.4 });
            let x0 = sys.pack(s, &guess);
            tried += 1;
            let out = newton::solve(|x| sys.residual(x), &x0, opts.newton);
            if !out.norm.is_finite() {
                continue;
            }
            let prof = sys.profile(&out.x);
            if best.map_or(true, |(n, _)| out.norm < n) {
                best = Some((out.norm, prof));
            }
            if out.norm > ACCEPT_TOL {
                continue;
            }
            match admit(p, regime, &prof, out.norm) {
                Ok(c) => {
                    return EquilibriumSolution {
                        params: *p,
                        regime,
                        profile: c.profile,
                        pricing: c.pricing,
                        soc: Some(c.soc),
                        residual_norm: out.norm,
                        provenance: Provenance::SpecializedSystem,
                        multiplicity_flag: false,
                        regime_evidence: None,
                        diagnostics: None,
                    };
                }
                Err(bad) => rejection = bad,
            }
        }
    }
    let search = super::Search {
        tried,
        best_norm: best.map(|b| b.0),
        best_profile: best.map(|b| b.1),
        best_rejection: rejection,
        ..Default::default()
    };
    let mut sol = super::failure(p, &search, None);
    sol.provenance = Provenance::SpecializedSystem;
    sol
}

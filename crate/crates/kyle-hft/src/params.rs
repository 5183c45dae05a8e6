//! Market environment, HFT population and the dimensionless reduction.
//!
//! Everything downstream works with `sigma_v = sigma_1 = 1` and `p0 = 0`. The
//! original scale is carried along in [`Scale`] so that results can be mapped
//! back.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Inventory aversion of one HFT.
///
/// Infinite aversion is its own variant. Formulas that would divide by
/// `Lambda_22 + Gamma` switch to the reduced Round-Tripper problem instead of
/// plugging in a large number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Finite(f64),
    Infinite,
}

impl Gamma {
    pub fn is_infinite(self) -> bool {
        matches!(self, Gamma::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Gamma::Finite(g) => Some(g),
            Gamma::Infinite => None,
        }
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Finite(g) => write!(f, "{g}"),
            Gamma::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Gamma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Gamma> {
        let t = s.trim();
        if matches!(t, "inf" | "Inf" | "infinity" | "+inf") {
            return Ok(Gamma::Infinite);
        }
        let g: f64 = t
            .parse()
            .map_err(|_| Error::ParameterDomain(format!("not an inventory aversion: {s:?}")))?;
        if !g.is_finite() {
            return Ok(Gamma::Infinite);
        }
        Ok(Gamma::Finite(g))
    }
}

impl Serialize for Gamma {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Gamma::Finite(g) => s.serialize_f64(*g),
            Gamma::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Gamma {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Gamma, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(g) => Ok(Gamma::Finite(g)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Market inputs in their natural units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub p0: f64,
    pub sigma_v: f64,
    pub sigma_1: f64,
    pub sigma_1plus: f64,
    pub sigma_2: f64,
    pub sigma_eps: f64,
    /// One entry per HFT.
    pub gammas: Vec<Gamma>,
}

/// Scale anchors kept for re-dimensionalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub sigma_v: f64,
    pub sigma_1: f64,
    pub p0: f64,
}

impl Default for Scale {
    fn default() -> Self {
        Scale { sigma_v: 1.0, sigma_1: 1.0, p0: 0.0 }
    }
}

/// Dimensionless market environment.
///
/// HFTs come in two inventory-aversion classes: `j1` with `Gamma = 0` and `j2`
/// with `Gamma = inf`. Alternatively `gamma` holds the aversion of a single
/// HFT with a general finite coefficient, in which case `j1 = j2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub theta_1plus: f64,
    pub theta_2: f64,
    pub theta_eps: f64,
    pub j1: usize,
    pub j2: usize,
    pub gamma: Option<f64>,
    pub scale: Scale,
}

/// Routing key for the specialized solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Configuration {
    NoHft,
    SingleGeneralGamma,
    AllSmallIt,
    AllRoundTripper,
    MixedTypes,
}

impl MarketParams {
    /// Population of `j1` zero-aversion and `j2` infinite-aversion HFTs.
    pub fn new(theta_1plus: f64, theta_2: f64, theta_eps: f64, j1: usize, j2: usize) -> Result<Self> {
        let p = MarketParams {
            theta_1plus,
            theta_2,
            theta_eps,
            j1,
            j2,
            gamma: None,
            scale: Scale::default(),
        };
        p.validate()?;
        Ok(p)
    }

    /// A single HFT with aversion `gamma`.
    ///
    /// `Gamma = 0` and `Gamma = inf` land in the typed populations, so a
    /// general coefficient is only stored when it is strictly positive and
    /// finite.
    pub fn single(theta_1plus: f64, theta_2: f64, theta_eps: f64, gamma: Gamma) -> Result<Self> {
        match gamma {
            Gamma::Infinite => Self::new(theta_1plus, theta_2, theta_eps, 0, 1),
            Gamma::Finite(0.0) => Self::new(theta_1plus, theta_2, theta_eps, 1, 0),
            Gamma::Finite(g) => {
                let p = MarketParams {
                    theta_1plus,
                    theta_2,
                    theta_eps,
                    j1: 0,
                    j2: 0,
                    gamma: Some(g),
                    scale: Scale::default(),
                };
                p.validate()?;
                Ok(p)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::ParameterDomain(format!("{name} must be positive and finite, got {x}")))
            }
        };
        pos("theta_1plus", self.theta_1plus)?;
        pos("theta_2", self.theta_2)?;
        if !(self.theta_eps.is_finite() && self.theta_eps >= 0.0) {
            return Err(Error::ParameterDomain(format!(
                "theta_eps must be nonnegative, got {}",
                self.theta_eps
            )));
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::ParameterDomain(format!("gamma must be finite and nonnegative, got {g}")));
            }
            if self.j1 + self.j2 > 0 {
                return Err(Error::UnsupportedConfiguration(
                    "a general finite gamma cannot be combined with typed populations".into(),
                ));
            }
        }
        pos("sigma_v", self.scale.sigma_v)?;
        pos("sigma_1", self.scale.sigma_1)?;
        Ok(())
    }

    /// HFTs playing the role of the first type: `Gamma = 0`, or the single
    /// general-Gamma HFT.
    pub fn n_type1(&self) -> usize {
        if self.gamma.is_some() {
            1
        } else {
            self.j1
        }
    }

    pub fn n_type2(&self) -> usize {
        self.j2
    }

    pub fn hft_count(&self) -> usize {
        self.n_type1() + self.n_type2()
    }

    /// Aversion of the first type.
    pub fn type1_gamma(&self) -> f64 {
        self.gamma.unwrap_or(0.0)
    }

    /// One entry per HFT, first type first.
    pub fn gammas(&self) -> Vec<Gamma> {
        let mut g = vec![Gamma::Finite(self.type1_gamma()); self.n_type1()];
        g.extend(std::iter::repeat(Gamma::Infinite).take(self.j2));
        g
    }

    pub fn configuration(&self) -> Configuration {
        validate_population(self)
    }

    pub fn with_theta_1plus(mut self, t: f64) -> Self {
        self.theta_1plus = t;
        self
    }

    pub fn with_theta_eps(mut self, t: f64) -> Self {
        self.theta_eps = t;
        self
    }

    pub fn with_theta_2(mut self, t: f64) -> Self {
        self.theta_2 = t;
        self
    }

    pub fn with_gamma(mut self, g: f64) -> Self {
        self.gamma = Some(g);
        self
    }

    /// Maps back to natural units using the stored scale.
    pub fn to_raw(&self) -> RawParams {
        let Scale { sigma_v, sigma_1, p0 } = self.scale;
        let unit = sigma_v / sigma_1;
        let gammas = self
            .gammas()
            .into_iter()
            .map(|g| match g {
                Gamma::Finite(x) => Gamma::Finite(x * unit),
                Gamma::Infinite => Gamma::Infinite,
            })
            .collect();
        RawParams {
            p0,
            sigma_v,
            sigma_1,
            sigma_1plus: sigma_1 * self.theta_1plus.sqrt(),
            sigma_2: sigma_1 * self.theta_2.sqrt(),
            sigma_eps: sigma_1 * self.theta_eps.sqrt(),
            gammas,
        }
    }
}

/// Reduces natural-unit inputs to the dimensionless environment.
///
/// ```
/// use kyle_hft::{to_dimensionless, Gamma, RawParams};
///
/// let raw = RawParams {
///     p0: 0.0,
///     sigma_v: 1.0,
///     sigma_1: 1.0,
///     sigma_1plus: 1.0,
///     sigma_2: 1.0,
///     sigma_eps: 0.0,
///     gammas: vec![Gamma::Finite(0.0)],
/// };
/// let p = to_dimensionless(&raw).unwrap();
/// assert_eq!((p.theta_1plus, p.theta_2, p.theta_eps, p.j1, p.j2), (1.0, 1.0, 0.0, 1, 0));
/// ```
pub fn to_dimensionless(raw: &RawParams) -> Result<MarketParams> {
    for (name, x) in [
        ("sigma_v", raw.sigma_v),
        ("sigma_1", raw.sigma_1),
        ("sigma_1plus", raw.sigma_1plus),
        ("sigma_2", raw.sigma_2),
    ] {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::ParameterDomain(format!("{name} must be positive, got {x}")));
        }
    }
    if !(raw.sigma_eps.is_finite() && raw.sigma_eps >= 0.0) {
        return Err(Error::ParameterDomain(format!("sigma_eps must be nonnegative, got {}", raw.sigma_eps)));
    }
    if !raw.p0.is_finite() {
        return Err(Error::ParameterDomain("p0 must be finite".into()));
    }
    let s1sq = raw.sigma_1 * raw.sigma_1;
    let unit = raw.sigma_v / raw.sigma_1;
    let (mut j1, mut j2) = (0, 0);
    let mut general = Vec::new();
    for g in &raw.gammas {
        match *g {
            Gamma::Infinite => j2 += 1,
            Gamma::Finite(x) if !(x.is_finite() && x >= 0.0) => {
                return Err(Error::ParameterDomain(format!("inventory aversion must be nonnegative, got {x}")))
            }
            Gamma::Finite(0.0) => j1 += 1,
            Gamma::Finite(x) => general.push(x / unit),
        }
    }
    if !general.is_empty() && raw.gammas.len() > 1 {
        return Err(Error::UnsupportedConfiguration(
            "a finite positive aversion is only supported for a single HFT".into(),
        ));
    }
    let p = MarketParams {
        theta_1plus: raw.sigma_1plus * raw.sigma_1plus / s1sq,
        theta_2: raw.sigma_2 * raw.sigma_2 / s1sq,
        theta_eps: raw.sigma_eps * raw.sigma_eps / s1sq,
        j1,
        j2,
        gamma: general.first().copied(),
        scale: Scale { sigma_v: raw.sigma_v, sigma_1: raw.sigma_1, p0: raw.p0 },
    };
    p.validate()?;
    Ok(p)
}

/// Tags the population so the matching specialized system can be chosen.
pub fn validate_population(p: &MarketParams) -> Configuration {
    if p.gamma.is_some() {
        return Configuration::SingleGeneralGamma;
    }
    match (p.j1, p.j2) {
        (0, 0) => Configuration::NoHft,
        (_, 0) => Configuration::AllSmallIt,
        (0, _) => Configuration::AllRoundTripper,
        _ => Configuration::MixedTypes,
    }
}

/// Linear strategy coefficients of the IT and of each HFT type, in
/// dimensionless units.
///
/// The Round-Tripper type only carries `beta12`; its second trade is always
/// the reverse of its first.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub a1: f64,
    pub theta_z: f64,
    pub a21: f64,
    pub alpha22: f64,
    pub beta11: f64,
    pub beta21: f64,
    pub beta22: f64,
    pub beta23: f64,
    pub beta12: f64,
}

/// Coefficients of one HFT after expanding the per-type profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HftStrategy {
    pub gamma: Gamma,
    pub b1: f64,
    pub b21: f64,
    pub b22: f64,
    pub b23: f64,
}

impl StrategyProfile {
    /// One entry per HFT, in the same order as [`MarketParams::gammas`].
    pub fn expand(&self, p: &MarketParams) -> Vec<HftStrategy> {
        let mut v = Vec::with_capacity(p.hft_count());
        let g1 = Gamma::Finite(p.type1_gamma());
        for _ in 0..p.n_type1() {
            v.push(HftStrategy { gamma: g1, b1: self.beta11, b21: self.beta21, b22: self.beta22, b23: self.beta23 });
        }
        for _ in 0..p.n_type2() {
            v.push(HftStrategy { gamma: Gamma::Infinite, b1: self.beta12, b21: 0.0, b22: 0.0, b23: -1.0 });
        }
        v
    }

    pub fn is_finite(&self) -> bool {
        [
            self.a1,
            self.theta_z,
            self.a21,
            self.alpha22,
            self.beta11,
            self.beta21,
            self.beta22,
            self.beta23,
            self.beta12,
        ]
        .iter()
        .all(|x| x.is_finite())
    }

    /// `A1^2 + theta_z + 1`, the time-1 order-flow variance.
    pub fn d(&self) -> f64 {
        self.a1 * self.a1 + self.theta_z + 1.0
    }

    /// Zeroes the coefficients of HFT types that are absent from `p`.
    pub fn masked(mut self, p: &MarketParams) -> Self {
        if p.n_type1() == 0 {
            self.beta11 = 0.0;
            self.beta21 = 0.0;
            self.beta22 = 0.0;
            self.beta23 = 0.0;
        }
        if p.n_type2() == 0 {
            self.beta12 = 0.0;
        }
        self
    }

    /// Maps dimensionless coefficients back to natural units.
    pub fn to_natural(&self, scale: &Scale) -> NaturalProfile {
        let r = scale.sigma_1 / scale.sigma_v;
        NaturalProfile {
            alpha1: self.a1 * r,
            sigma_z: self.theta_z.sqrt() * scale.sigma_1,
            alpha21: self.a21 * r,
            alpha22: self.alpha22,
        }
    }
}

/// IT coefficients in natural units. HFT betas are already unit-free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NaturalProfile {
    pub alpha1: f64,
    pub sigma_z: f64,
    pub alpha21: f64,
    pub alpha22: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(sv: f64, s1: f64, s1p: f64, s2: f64, se: f64, g: Vec<Gamma>) -> RawParams {
        RawParams { p0: 0.0, sigma_v: sv, sigma_1: s1, sigma_1plus: s1p, sigma_2: s2, sigma_eps: se, gammas: g }
    }

    #[test]
    fn ratios_from_rescaled_inputs() {
        let p = to_dimensionless(&raw(2.0, 0.5, 0.158, 0.5, 0.5, vec![Gamma::Infinite])).unwrap();
        assert!((p.theta_1plus - 0.099856).abs() < 1e-12);
        assert_eq!(p.theta_2, 1.0);
        assert_eq!(p.theta_eps, 1.0);
        assert_eq!((p.j1, p.j2), (0, 1));
    }

    #[test]
    fn zero_sigma_rejected() {
        let e = to_dimensionless(&raw(1.0, 0.0, 1.0, 1.0, 0.0, vec![])).unwrap_err();
        assert!(matches!(e, Error::ParameterDomain(_)));
    }

    #[test]
    fn general_gamma_only_alone() {
        let e = to_dimensionless(&raw(1.0, 1.0, 1.0, 1.0, 0.0, vec![Gamma::Finite(0.7), Gamma::Finite(0.0)]))
            .unwrap_err();
        assert!(matches!(e, Error::UnsupportedConfiguration(_)));
        let p = to_dimensionless(&raw(2.0, 1.0, 1.0, 1.0, 0.0, vec![Gamma::Finite(0.7)])).unwrap();
        assert_eq!(p.gamma, Some(0.35));
        assert_eq!(p.configuration(), Configuration::SingleGeneralGamma);
    }

    #[test]
    fn population_tags() {
        let tag = |j1, j2| MarketParams::new(1.0, 1.0, 0.0, j1, j2).unwrap().configuration();
        assert_eq!(tag(3, 0), Configuration::AllSmallIt);
        assert_eq!(tag(1, 9), Configuration::MixedTypes);
        assert_eq!(tag(0, 4), Configuration::AllRoundTripper);
        assert_eq!(tag(0, 0), Configuration::NoHft);
        let single = MarketParams::single(1.0, 1.0, 0.0, Gamma::Finite(0.7)).unwrap();
        assert_eq!(single.configuration(), Configuration::SingleGeneralGamma);
        assert_eq!(single.hft_count(), 1);
    }

    #[test]
    fn gamma_parsing() {
        assert_eq!("inf".parse::<Gamma>().unwrap(), Gamma::Infinite);
        assert_eq!("0.25".parse::<Gamma>().unwrap(), Gamma::Finite(0.25));
        assert!("abc".parse::<Gamma>().is_err());
    }

    #[test]
    fn round_trip_keeps_raw_inputs() {
        let r = raw(2.0, 3.0, 0.7, 1.3, 0.4, vec![Gamma::Finite(0.0), Gamma::Infinite, Gamma::Infinite]);
        let back = to_dimensionless(&r).unwrap().to_raw();
        for (a, b) in [
            (r.sigma_1plus, back.sigma_1plus),
            (r.sigma_2, back.sigma_2),
            (r.sigma_eps, back.sigma_eps),
        ] {
            assert!((a - b).abs() <= 1e-12 * a.abs());
        }
        assert_eq!(back.gammas, r.gammas);
    }
}

//! Sweep configuration: a TOML file whose values command-line flags can
//! override.
//!
//! ```toml
//! [population]      # j1 Gamma = 0 HFTs and j2 Gamma = inf HFTs,
//! j1 = 0            # or one HFT with a general `gamma` ("inf" allowed)
//! j2 = 5
//!
//! [fixed]           # values of the parameters no axis varies
//! theta_1plus = 1.0
//! theta_2 = 1.0
//! theta_eps = 0.0
//!
//! [axis1]           # varies fastest; `scale` is linear, sqrt or log
//! param = "theta_eps"
//! from = 0.0
//! to = 4.0
//! points = 41
//! scale = "sqrt"
//!
//! [axis2]           # optional, same fields
//!
//! [output]
//! outputs = ["coefficients", "regime", "profits"]   # and "thresholds"
//! n_sim = 0         # > 0 adds a Monte-Carlo verification per point
//! seed = 7
//! warm_start = true # continue along axis1 from the previous point
//! ```

use std::str::FromStr;

use kyle_hft::{Gamma, MarketParams};
use serde::Deserialize;

use crate::table::Outputs;
use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    #[serde(rename = "theta_1plus", alias = "theta-1plus")]
    Theta1plus,
    #[serde(rename = "theta_2", alias = "theta-2")]
    Theta2,
    #[serde(rename = "theta_eps", alias = "theta-eps")]
    ThetaEps,
    Gamma,
    J1,
    J2,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::Theta1plus => "theta_1plus",
            Param::Theta2 => "theta_2",
            Param::ThetaEps => "theta_eps",
            Param::Gamma => "gamma",
            Param::J1 => "j1",
            Param::J2 => "j2",
        }
    }

    fn is_count(self) -> bool {
        matches!(self, Param::J1 | Param::J2)
    }

    /// Sets this parameter on `p`; counts must be whole and nonnegative.
    pub fn apply(self, p: &mut MarketParams, x: f64) -> Result<()> {
        match self {
            Param::Theta1plus => p.theta_1plus = x,
            Param::Theta2 => p.theta_2 = x,
            Param::ThetaEps => p.theta_eps = x,
            Param::Gamma => {
                if p.j1 + p.j2 > 0 {
                    return Err(CliError::Usage("a gamma axis needs the single-HFT population".into()));
                }
                p.gamma = Some(x);
            }
            Param::J1 | Param::J2 => {
                if x < 0.0 || x.fract() != 0.0 {
                    return Err(CliError::Usage(format!("{} must be a whole count, got {x}", self.name())));
                }
                if p.gamma.is_some() {
                    return Err(CliError::Usage("HFT counts cannot vary in the single-HFT population".into()));
                }
                *(if self == Param::J1 { &mut p.j1 } else { &mut p.j2 }) = x as usize;
            }
        }
        Ok(())
    }
}

impl FromStr for Param {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Param> {
        Param::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(s))
            .map_err(|_| CliError::Usage(format!("unknown parameter {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Sqrt,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: Param,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.from];
        }
        let at = |i: usize| {
            let s = i as f64 / (n - 1) as f64;
            match self.scale {
                Scale::Linear => self.from + (self.to - self.from) * s,
                Scale::Sqrt => (self.from.sqrt() + (self.to.sqrt() - self.from.sqrt()) * s).powi(2),
                Scale::Log => 10f64.powf(self.from.log10() + (self.to.log10() - self.from.log10()) * s),
            }
        };
        let mut v: Vec<f64> = (0..n).map(at).collect();
        v[0] = self.from;
        v[n - 1] = self.to;
        if self.param.is_count() {
            v.iter_mut().for_each(|x| *x = x.round());
        }
        v
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Usage(format!("axis {}: {m}", self.param.name())));
        if self.points == 0 {
            return bad("needs at least one point".into());
        }
        if !(self.from.is_finite() && self.to.is_finite()) {
            return bad("range must be finite".into());
        }
        match self.scale {
            Scale::Sqrt if self.from < 0.0 || self.to < 0.0 => return bad("sqrt scale needs a nonnegative range".into()),
            Scale::Log if self.from <= 0.0 || self.to <= 0.0 => return bad("log scale needs a positive range".into()),
            _ => {}
        }
        if self.param.is_count() && self.scale != Scale::Linear {
            return bad("HFT counts only take a linear scale".into());
        }
        Ok(())
    }
}

/// `param:from:to:points[:scale]`, e.g. `theta_eps:0:4:41:sqrt`.
impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Axis> {
        let f: Vec<&str> = s.split(':').collect();
        if !(4..=5).contains(&f.len()) {
            return Err(CliError::Usage(format!("axis {s:?} is not param:from:to:points[:scale]")));
        }
        let x = |t: &str| t.parse::<f64>().map_err(|_| CliError::Usage(format!("bad number {t:?} in axis {s:?}")));
        let scale = match f.get(4) {
            None | Some(&"linear") => Scale::Linear,
            Some(&"sqrt") => Scale::Sqrt,
            Some(&"log") => Scale::Log,
            Some(other) => return Err(CliError::Usage(format!("unknown scale {other:?}"))),
        };
        Ok(Axis {
            param: f[0].parse()?,
            from: x(f[1])?,
            to: x(f[2])?,
            points: f[3].parse().map_err(|_| CliError::Usage(format!("bad point count in axis {s:?}")))?,
            scale,
        })
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Population {
    pub j1: Option<usize>,
    pub j2: Option<usize>,
    pub gamma: Option<Gamma>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixed {
    pub theta_1plus: Option<f64>,
    pub theta_2: Option<f64>,
    pub theta_eps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Coefficients,
    Profits,
    Regime,
    Thresholds,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub outputs: Option<Vec<OutputKind>>,
    pub n_sim: Option<usize>,
    pub seed: Option<u64>,
    pub warm_start: Option<bool>,
}

/// The file as written; every field optional so flags can fill the gaps.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    #[serde(default)]
    pub population: Population,
    #[serde(default)]
    pub fixed: Fixed,
    pub axis1: Option<Axis>,
    pub axis2: Option<Axis>,
    #[serde(default)]
    pub output: OutputSection,
}

impl SweepFile {
    pub fn parse(text: &str) -> Result<SweepFile> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }
}

/// A validated sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: MarketParams,
    pub axes: Vec<Axis>,
    pub outputs: Outputs,
    pub thresholds: bool,
    pub n_sim: usize,
    pub seed: u64,
    pub warm_start: bool,
}

impl SweepConfig {
    pub fn resolve(f: SweepFile) -> Result<SweepConfig> {
        let t1 = f.fixed.theta_1plus.unwrap_or(1.0);
        let t2 = f.fixed.theta_2.unwrap_or(1.0);
        let te = f.fixed.theta_eps.unwrap_or(0.0);
        let pop = f.population;
        let base = match pop.gamma {
            Some(g) if pop.j1.unwrap_or(0) + pop.j2.unwrap_or(0) == 0 => MarketParams::single(t1, t2, te, g)?,
            Some(_) => {
                return Err(CliError::Usage("gamma cannot be combined with j1 or j2".into()));
            }
            None => MarketParams::new(t1, t2, te, pop.j1.unwrap_or(0), pop.j2.unwrap_or(0))?,
        };
        if f.axis1.is_none() && f.axis2.is_some() {
            return Err(CliError::Usage("axis2 needs axis1".into()));
        }
        let axes: Vec<Axis> = f.axis1.into_iter().chain(f.axis2).collect();
        if axes.len() == 2 && axes[0].param == axes[1].param {
            return Err(CliError::Usage("the two axes vary the same parameter".into()));
        }
        let kinds = f.output.outputs.unwrap_or_else(|| vec![OutputKind::Coefficients, OutputKind::Regime, OutputKind::Profits]);
        let has = |k| kinds.contains(&k);
        let cfg = SweepConfig {
            base,
            axes,
            outputs: Outputs { coefficients: has(OutputKind::Coefficients), regime: has(OutputKind::Regime), profits: has(OutputKind::Profits) },
            thresholds: has(OutputKind::Thresholds),
            n_sim: f.output.n_sim.unwrap_or(0),
            seed: f.output.seed.unwrap_or(7),
            warm_start: f.output.warm_start.unwrap_or(true),
        };
        for a in &cfg.axes {
            a.check()?;
            for x in [a.from, a.to] {
                let mut p = cfg.base;
                a.param.apply(&mut p, x)?;
                p.validate()?;
            }
        }
        Ok(cfg)
    }

    /// Lines of the grid: one per `axis2` value, each running along `axis1`.
    pub fn lines(&self) -> Result<Vec<Vec<MarketParams>>> {
        let along = |base: MarketParams| -> Result<Vec<MarketParams>> {
            match self.axes.first() {
                None => Ok(vec![base]),
                Some(a) => a
                    .values()
                    .into_iter()
                    .map(|x| {
                        let mut p = base;
                        a.param.apply(&mut p, x)?;
                        p.validate()?;
                        Ok(p)
                    })
                    .collect(),
            }
        };
        match self.axes.get(1) {
            None => Ok(vec![along(self.base)?]),
            Some(a) => a
                .values()
                .into_iter()
                .map(|x| {
                    let mut p = self.base;
                    a.param.apply(&mut p, x)?;
                    along(p)
                })
                .collect(),
        }
    }
}

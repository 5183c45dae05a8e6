use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kyle_hft::limits::small_it_theta_z;
use kyle_hft::{
    critical_gamma, existence_boundary, inverse_rt_boundary, limit_round_tripper, limit_small_it, solve_point, solve_specialized, verify_equilibrium, Error,
    EquilibriumSolution, Gamma, MarketParams, Regime, ThresholdResult, VerifyOptions,
};
use kyle_hft::thresholds::{critical_theta1plus_pure_with, critical_theta1plus_rt_profit, profit_thresholds_with};
use serde::Serialize;

use crate::config::{Axis, OutputKind, SweepConfig, SweepFile};
use crate::plot::{AxisScale, PlotSpec};
use crate::table::Table;
use crate::{emit, figures, plot, read_text, sweep, CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "kyle-eq", version, about = "Equilibria of a three-period Kyle market with anticipatory HFTs")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one market and print the equilibrium as JSON.
    Solve(SolveArgs),
    /// Solve a one- or two-axis grid and write CSV.
    Sweep(SweepArgs),
    /// Closed-form or extrapolated theta_1+ -> 0 limit, as JSON.
    Limit(LimitArgs),
    /// Locate a critical parameter value, as JSON.
    Thresholds(ThresholdArgs),
    /// Check a solution by simulation and deviation tests.
    Verify(VerifyArgs),
    /// Regenerate the data behind a figure (fig1..fig19) as CSV.
    Figure(FigureArgs),
    /// Draw a line or contour SVG from a CSV table.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    Pure,
    Mixed,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Regime {
        match r {
            RegimeArg::Pure => Regime::Pure,
            RegimeArg::Mixed => Regime::Mixed,
        }
    }
}

#[derive(Debug, Args)]
struct MarketArgs {
    /// HFTs without inventory aversion.
    #[arg(long, default_value_t = 0)]
    j1: usize,
    /// HFTs that must end flat (infinite aversion).
    #[arg(long, default_value_t = 0)]
    j2: usize,
    /// Aversion of a single HFT; `inf` allowed. Excludes --j1/--j2.
    #[arg(long, conflicts_with_all = ["j1", "j2"])]
    gamma: Option<Gamma>,
    #[arg(long = "theta-1plus", default_value_t = 1.0)]
    theta_1plus: f64,
    #[arg(long = "theta-2", default_value_t = 1.0)]
    theta_2: f64,
    #[arg(long = "theta-eps", default_value_t = 0.0)]
    theta_eps: f64,
}

impl MarketArgs {
    fn params(&self) -> Result<MarketParams> {
        Ok(match self.gamma {
            Some(g) => MarketParams::single(self.theta_1plus, self.theta_2, self.theta_eps, g)?,
            None => MarketParams::new(self.theta_1plus, self.theta_2, self.theta_eps, self.j1, self.j2)?,
        })
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    market: MarketArgs,
    /// Regime to try first.
    #[arg(long)]
    regime: Option<RegimeArg>,
    /// Use the reduced system of the population instead of the general one.
    #[arg(long)]
    specialized: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// TOML file; the flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    j1: Option<usize>,
    #[arg(long)]
    j2: Option<usize>,
    #[arg(long)]
    gamma: Option<Gamma>,
    #[arg(long = "theta-1plus")]
    theta_1plus: Option<f64>,
    #[arg(long = "theta-2")]
    theta_2: Option<f64>,
    #[arg(long = "theta-eps")]
    theta_eps: Option<f64>,
    /// `param:from:to:points[:scale]`, scale linear, sqrt or log.
    #[arg(long)]
    axis1: Option<Axis>,
    #[arg(long)]
    axis2: Option<Axis>,
    /// Comma-separated subset of coefficients, regime, profits, thresholds.
    #[arg(long, value_delimiter = ',')]
    outputs: Option<Vec<OutputArg>>,
    /// Draws per point for Monte-Carlo verification; 0 skips it.
    #[arg(long)]
    n_sim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Solve every point from scratch instead of continuing along axis1.
    #[arg(long)]
    cold: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputArg {
    Coefficients,
    Regime,
    Profits,
    Thresholds,
}

impl From<OutputArg> for OutputKind {
    fn from(o: OutputArg) -> OutputKind {
        match o {
            OutputArg::Coefficients => OutputKind::Coefficients,
            OutputArg::Regime => OutputKind::Regime,
            OutputArg::Profits => OutputKind::Profits,
            OutputArg::Thresholds => OutputKind::Thresholds,
        }
    }
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("population").required(true).args(["small_it", "round_tripper"])))]
struct LimitArgs {
    /// All HFTs have zero inventory aversion.
    #[arg(long)]
    small_it: bool,
    /// All HFTs must end flat.
    #[arg(long)]
    round_tripper: bool,
    #[arg(long)]
    j: usize,
    #[arg(long = "theta-eps", default_value_t = 0.0)]
    theta_eps: f64,
    #[arg(long = "theta-2", default_value_t = 1.0)]
    theta_2: f64,
    /// Defaults to the regime in which the limit exists.
    #[arg(long)]
    regime: Option<RegimeArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ThresholdArg {
    /// Gamma above which a single HFT becomes a Round-Tripper.
    GammaBar,
    /// theta_1+ above which IT never mixes against J Round-Trippers.
    #[value(name = "theta-bar-1plus")]
    ThetaBar1plus,
    /// theta_eps thresholds for IT profit against Round-Trippers (two results).
    Profit,
    /// theta_1+ below which Round-Tripper profit peaks inside theta_eps.
    #[value(name = "theta-hat-1plus")]
    ThetaHat1plus,
    /// theta_1+ below which Gamma = 0 HFTs trade against IT at 1+.
    InverseRt,
    /// theta_1+ below which no equilibrium is found.
    Existence,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    kind: ThresholdArg,
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    j1: Option<usize>,
    #[arg(long)]
    j2: Option<usize>,
    #[arg(long = "theta-1plus")]
    theta_1plus: Option<f64>,
    #[arg(long = "theta-2", default_value_t = 1.0)]
    theta_2: f64,
    #[arg(long = "theta-eps", default_value_t = 0.0)]
    theta_eps: f64,
    /// Upper end of the theta_eps range for theta-bar-1plus.
    #[arg(long = "theta-eps-max", default_value_t = 16.0)]
    theta_eps_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Solution JSON as printed by `solve`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 10_000_000)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Statistical checks pass within this many standard errors.
    #[arg(long = "k-se", default_value_t = 4.0)]
    k_se: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FigureArgs {
    /// fig1..fig19.
    id: String,
    /// CSV destination; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also draw the figure's default chart here.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("second").required(true).args(["y", "z"])))]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    x: String,
    /// Line charts: the plotted column. Contours: the vertical axis.
    #[arg(long)]
    y: Option<String>,
    /// Filled contour of this column over (x, y).
    #[arg(long, requires = "y")]
    z: Option<String>,
    /// One line per distinct value of this column.
    #[arg(long, conflicts_with = "z")]
    group: Option<String>,
    /// `column=value`; repeatable.
    #[arg(long = "where")]
    filters: Vec<String>,
    #[arg(long)]
    sqrt_x: bool,
    #[arg(long)]
    sqrt_y: bool,
    #[arg(long)]
    title: Option<String>,
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| CliError::Failed(format!("cannot serialize: {e}")))
}

/// JSON has no infinity; an infinite threshold is written as `"inf"`.
fn threshold_json(r: &ThresholdResult) -> serde_json::Value {
    let mut v = serde_json::to_value(r).unwrap_or_default();
    if r.value.is_infinite() {
        v["value"] = serde_json::Value::from("inf");
    }
    v
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Limit(a) => limit(a),
        Command::Thresholds(a) => thresholds(a),
        Command::Verify(a) => verify(a),
        Command::Figure(a) => figure(a),
        Command::Plot(a) => draw(a),
    }
}

fn solve(a: SolveArgs) -> Result<()> {
    let p = a.market.params()?;
    let sol = if a.specialized { solve_specialized(&p, None) } else { solve_point(&p, a.regime.map(Into::into), None) };
    let text = json(&sol)?;
    if !sol.is_equilibrium() {
        return Err(CliError::NoEquilibrium(text.trim_end().to_string()));
    }
    emit(a.out.as_deref(), &text)
}

fn run_sweep(a: SweepArgs) -> Result<()> {
    let mut f = match &a.config {
        Some(path) => SweepFile::parse(&read_text(path)?)?,
        None => SweepFile::default(),
    };
    let pop = &mut f.population;
    if a.gamma.is_some() {
        pop.j1 = None;
        pop.j2 = None;
        pop.gamma = a.gamma;
    }
    if a.j1.is_some() || a.j2.is_some() {
        pop.gamma = None;
        pop.j1 = a.j1.or(pop.j1);
        pop.j2 = a.j2.or(pop.j2);
    }
    let fixed = &mut f.fixed;
    fixed.theta_1plus = a.theta_1plus.or(fixed.theta_1plus);
    fixed.theta_2 = a.theta_2.or(fixed.theta_2);
    fixed.theta_eps = a.theta_eps.or(fixed.theta_eps);
    f.axis1 = a.axis1.or(f.axis1);
    f.axis2 = a.axis2.or(f.axis2);
    let out = &mut f.output;
    if let Some(o) = a.outputs {
        out.outputs = Some(o.into_iter().map(Into::into).collect());
    }
    out.n_sim = a.n_sim.or(out.n_sim);
    out.seed = a.seed.or(out.seed);
    if a.cold {
        out.warm_start = Some(false);
    }
    let cfg = SweepConfig::resolve(f)?;
    emit(a.out.as_deref(), &sweep::run(&cfg)?.to_csv()?)
}

fn limit(a: LimitArgs) -> Result<()> {
    let r = if a.small_it {
        let regime = match a.regime {
            Some(r) => r.into(),
            None if small_it_theta_z(a.j, a.theta_eps, a.theta_2) > 0.0 => Regime::Mixed,
            None => Regime::Pure,
        };
        limit_small_it(a.j, a.theta_eps, a.theta_2, regime)?
    } else {
        match a.regime {
            Some(r) => limit_round_tripper(a.j, a.theta_eps, a.theta_2, r.into())?,
            None => match limit_round_tripper(a.j, a.theta_eps, a.theta_2, Regime::Mixed) {
                Err(Error::RegimeMismatch(_)) => limit_round_tripper(a.j, a.theta_eps, a.theta_2, Regime::Pure)?,
                other => other?,
            },
        }
    };
    emit(a.out.as_deref(), &json(&r)?)
}

fn thresholds(a: ThresholdArgs) -> Result<()> {
    let need = |x: Option<usize>, flag: &str| x.ok_or_else(|| CliError::Usage(format!("this threshold needs --{flag}")));
    let unit_theta_2 = || {
        if a.theta_2 == 1.0 {
            Ok(())
        } else {
            Err(CliError::Usage("mixed-population boundaries are computed at theta_2 = 1".into()))
        }
    };
    let value = match a.kind {
        ThresholdArg::GammaBar => {
            let t1 = a.theta_1plus.ok_or_else(|| CliError::Usage("gamma-bar needs --theta-1plus".into()))?;
            threshold_json(&critical_gamma(t1, a.theta_2, a.theta_eps)?)
        }
        ThresholdArg::ThetaBar1plus => threshold_json(&critical_theta1plus_pure_with(need(a.j, "j")?, a.theta_eps_max, a.theta_2)?),
        ThresholdArg::Profit => {
            let t1 = a.theta_1plus.ok_or_else(|| CliError::Usage("profit needs --theta-1plus".into()))?;
            let (tilde, hat) = profit_thresholds_with(need(a.j, "j")?, t1, a.theta_2)?;
            serde_json::Value::Array(vec![threshold_json(&tilde), threshold_json(&hat)])
        }
        ThresholdArg::ThetaHat1plus => threshold_json(&critical_theta1plus_rt_profit(need(a.j, "j")?, a.theta_2)?),
        ThresholdArg::InverseRt => {
            unit_theta_2()?;
            threshold_json(&inverse_rt_boundary(need(a.j1, "j1")?, need(a.j2, "j2")?, a.theta_eps)?)
        }
        ThresholdArg::Existence => {
            unit_theta_2()?;
            threshold_json(&existence_boundary(need(a.j1, "j1")?, need(a.j2, "j2")?, a.theta_eps)?)
        }
    };
    emit(a.out.as_deref(), &json(&value)?)
}

fn verify(a: VerifyArgs) -> Result<()> {
    let text = read_text(&a.input)?;
    let sol: EquilibriumSolution = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", a.input.display())))?;
    let opts = VerifyOptions { n: a.n, seed: a.seed, k_se: a.k_se, ..VerifyOptions::default() };
    let report = verify_equilibrium(&sol, &opts);
    emit(a.out.as_deref(), &json(&report)?)?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("verification failed (worst deviation: {})", report.worst_deviation)))
    }
}

fn figure(a: FigureArgs) -> Result<()> {
    let fig = figures::run(&a.id)?;
    emit(a.out.as_deref(), &fig.table.to_csv()?)?;
    if let Some(path) = &a.svg {
        emit(Some(path), &plot::render(&fig.table, &fig.plot)?)?;
    }
    Ok(())
}

fn draw(a: PlotArgs) -> Result<()> {
    let t = Table::from_csv(&read_text(&a.input)?)?;
    let y = a.y.as_deref().unwrap_or_default();
    let mut spec = match &a.z {
        Some(z) => PlotSpec::contour(&a.x, y, z),
        None => PlotSpec::line(&a.x, y, a.group.as_deref()),
    };
    for f in &a.filters {
        let (c, v) = f.split_once('=').ok_or_else(|| CliError::Usage(format!("--where expects column=value, got {f:?}")))?;
        spec = spec.filter(c, v);
    }
    if a.sqrt_x {
        spec.x_scale = AxisScale::Sqrt;
    }
    if a.sqrt_y {
        spec.y_scale = AxisScale::Sqrt;
    }
    spec.title = a.title;
    emit(a.out.as_deref(), &plot::render(&t, &spec)?)
}

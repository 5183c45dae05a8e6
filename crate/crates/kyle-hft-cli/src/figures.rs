//! Preset grids that regenerate the data behind each figure.
//!
//! | id | content | grid |
//! |----|---------|------|
//! | fig1 | J = 1 Small-IT: theta_z, profits vs theta_eps, with the back-runner limit | 3 panels x 41 sqrt(theta_eps) in [0, 2] |
//! | fig2-fig4 | J = 2 Small-ITs: theta_z, IT profit, HFT profit | as fig1 |
//! | fig5-fig7 | J = 3 Small-ITs: theta_z, IT profit, HFT profit | as fig1 |
//! | fig8-fig9 | J = 10 Small-ITs: theta_z, IT profit (HFT profit in the same table) | as fig1 |
//! | fig10 | Round-Trippers, theta_z over (theta_1+, theta_eps) for J = 1, 5, 10 | 20 sqrt(theta_1+) in [0.1, 2] x 21 sqrt(theta_eps) in [0, 2] |
//! | fig11 | critical theta_1+ above which IT never mixes, J = 1..10 Round-Trippers | 10 points |
//! | fig12 | Round-Trippers, IT profit and the no-HFT benchmark | as fig10 |
//! | fig13 | Round-Trippers, profit thresholds in theta_eps vs theta_1+ | 3 J x 13 sqrt(theta_1+) in [0.1, 1.3] |
//! | fig14 | Round-Trippers, per-HFT profit | as fig10 |
//! | fig15 | theta_z vs theta_eps by Small-IT share, J = 2, 5, 10, theta_1+ = 1 | 41 sqrt(theta_eps) in [0, 2] per population |
//! | fig16 | J = 10 profits by Small-IT share, theta_1+ = 1 | 5 shares x 41 sqrt(theta_eps) |
//! | fig17 | J1 = 1, J2 = 9, theta_eps = 0: directions, theta_z and profits vs theta_1+ | 49 log-spaced theta_1+ in [0.01, 10] |
//! | fig18 | inverse-Round-Tripper boundary, J = 10, theta_eps = 0 | J2 = 1..9 |
//! | fig19 | existence boundary, J = 10, theta_eps = 0 | J2 = 1..9 |
//!
//! Within every line of a grid each point starts from its neighbour's
//! solution; lines run in parallel.

use kyle_hft::{
    classify_role, critical_theta1plus_pure, existence_boundary, expected_profits, inverse_rt_boundary, profit_thresholds, EquilibriumSolution, HftType,
    MarketParams, ProfitReport, ThresholdResult,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::plot::{AxisScale, PlotSpec};
use crate::sweep::solve_lines;
use crate::table::{num, opt, Table};
use crate::{CliError, Result};

pub const IDS: [&str; 19] = [
    "fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12", "fig13", "fig14", "fig15", "fig16", "fig17",
    "fig18", "fig19",
];

/// Theta_1+ of the back-runner series, close enough to the limit that the
/// coefficients agree with the closed form to about 1e-3.
pub const BACK_RUNNER_THETA_1PLUS: f64 = 1e-6;

pub struct Figure {
    pub table: Table,
    pub plot: PlotSpec,
}

fn sqrt_grid(from: f64, to: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (from + (to - from) * i as f64 / (n - 1) as f64).powi(2)).collect()
}

fn params(t1: f64, te: f64, j1: usize, j2: usize) -> Result<MarketParams> {
    Ok(MarketParams::new(t1, 1.0, te, j1, j2)?)
}

fn profits(s: &EquilibriumSolution) -> Option<ProfitReport> {
    expected_profits(s).ok().filter(|_| s.is_equilibrium())
}

fn cell(s: &EquilibriumSolution, x: f64) -> String {
    if s.is_equilibrium() {
        num(x)
    } else {
        String::new()
    }
}

pub fn run(id: &str) -> Result<Figure> {
    let pool = crate::pool()?;
    pool.install(|| build(id))
}

fn build(id: &str) -> Result<Figure> {
    let theta_z_vs_eps = |y: &str, title: &str| {
        PlotSpec { x_scale: AxisScale::Sqrt, ..PlotSpec::line("theta_eps", y, Some("series")) }
            .filter("panel_theta_1plus", "1")
            .title(title)
    };
    let surface = |z: &str, title: &str| {
        PlotSpec { x_scale: AxisScale::Sqrt, y_scale: AxisScale::Sqrt, ..PlotSpec::contour("theta_1plus", "theta_eps", z) }
            .filter("j", "5")
            .title(title)
    };
    let fig = match id {
        "fig1" => small_it(1, theta_z_vs_eps("theta_z", "J = 1, IT's mixed strategy"))?,
        "fig2" => small_it(2, theta_z_vs_eps("theta_z", "J = 2, IT's mixed strategy"))?,
        "fig3" => small_it(2, theta_z_vs_eps("it_profit", "J = 2, IT's profit"))?,
        "fig4" => small_it(2, theta_z_vs_eps("hft_profit", "J = 2, HFT profit"))?,
        "fig5" => small_it(3, theta_z_vs_eps("theta_z", "J = 3, IT's mixed strategy"))?,
        "fig6" => small_it(3, theta_z_vs_eps("it_profit", "J = 3, IT's profit"))?,
        "fig7" => small_it(3, theta_z_vs_eps("hft_profit", "J = 3, HFT profit"))?,
        "fig8" => small_it(10, theta_z_vs_eps("theta_z", "J = 10, IT's mixed strategy"))?,
        "fig9" => small_it(10, theta_z_vs_eps("it_profit", "J = 10, IT's profit"))?,
        "fig10" => round_trippers(surface("theta_z", "Round-Trippers, J = 5, IT's mixed strategy"))?,
        "fig11" => theta_bar()?,
        "fig12" => round_trippers(surface("it_profit", "Round-Trippers, J = 5, IT's profit"))?,
        "fig13" => rt_profit_thresholds()?,
        "fig14" => round_trippers(surface("hft_profit_rt", "Round-Trippers, J = 5, HFT profit"))?,
        "fig15" => shares(&[2, 5, 10], "theta_z")?,
        "fig16" => shares(&[10], "it_profit")?,
        "fig17" => crowded_small_it()?,
        "fig18" => mixed_boundary(true)?,
        "fig19" => mixed_boundary(false)?,
        other => return Err(CliError::Usage(format!("unknown figure {other:?}; ids are fig1..fig19"))),
    };
    Ok(fig)
}

fn small_it(j: usize, plot: PlotSpec) -> Result<Figure> {
    let panels: [f64; 3] = if j == 1 { [1e-4, 0.1, 1.0] } else { [0.01, 0.1, 1.0] };
    let eps = sqrt_grid(0.0, 2.0, 41);
    let mut lines: Vec<Vec<MarketParams>> = Vec::new();
    for t1 in panels.iter().copied().chain([BACK_RUNNER_THETA_1PLUS]) {
        lines.push(eps.iter().map(|&te| params(t1, te, j, 0)).collect::<Result<_>>()?);
    }
    let solved = solve_lines(&lines, true);
    let mut t = Table::new(&[
        "series",
        "panel_theta_1plus",
        "theta_1plus",
        "theta_eps",
        "regime",
        "theta_z",
        "a1",
        "beta21",
        "it_profit",
        "benchmark_it",
        "hft_profit",
    ]);
    for (k, panel) in panels.iter().enumerate() {
        for (series, line) in [("small_it", &solved[k]), ("back_runner", &solved[3])] {
            for s in line {
                let r = profits(s);
                t.push(vec![
                    series.into(),
                    num(*panel),
                    num(s.params.theta_1plus),
                    num(s.params.theta_eps),
                    s.regime.to_string(),
                    cell(s, s.profile.theta_z),
                    cell(s, s.profile.a1),
                    cell(s, s.profile.beta21),
                    opt(r.map(|r| r.it_profit)),
                    opt(r.map(|r| r.benchmark_it)),
                    opt(r.and_then(|r| r.hft_profit_small)),
                ]);
            }
        }
    }
    Ok(Figure { table: t, plot })
}

fn round_trippers(plot: PlotSpec) -> Result<Figure> {
    let eps = sqrt_grid(0.0, 2.0, 21);
    let mut keys = Vec::new();
    let mut lines = Vec::new();
    for j in [1, 5, 10] {
        for t1 in sqrt_grid(0.1, 2.0, 20) {
            keys.push(j);
            lines.push(eps.iter().map(|&te| params(t1, te, 0, j)).collect::<Result<Vec<_>>>()?);
        }
    }
    let solved = solve_lines(&lines, true);
    let mut t = Table::new(&["j", "theta_1plus", "theta_eps", "regime", "theta_z", "it_profit", "benchmark_it", "hft_profit_rt"]);
    for (j, line) in keys.iter().zip(&solved) {
        for s in line {
            let r = profits(s);
            t.push(vec![
                j.to_string(),
                num(s.params.theta_1plus),
                num(s.params.theta_eps),
                s.regime.to_string(),
                cell(s, s.profile.theta_z),
                opt(r.map(|r| r.it_profit)),
                opt(r.map(|r| r.benchmark_it)),
                opt(r.and_then(|r| r.hft_profit_rt)),
            ]);
        }
    }
    Ok(Figure { table: t, plot })
}

fn theta_bar() -> Result<Figure> {
    let found: Vec<ThresholdResult> = (1..=10usize).into_par_iter().map(|j| critical_theta1plus_pure(j, 16.0)).collect::<kyle_hft::Result<_>>()?;
    let mut t = Table::new(&["j", "theta_bar_1plus"]);
    for (j, r) in (1..=10).zip(&found) {
        t.push(vec![j.to_string(), num(r.value)]);
    }
    let plot = PlotSpec::line("j", "theta_bar_1plus", None).title("Critical theta_1+ above which IT never mixes");
    Ok(Figure { table: t, plot })
}

fn status<T: Serialize>(s: &T) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn rt_profit_thresholds() -> Result<Figure> {
    let cases: Vec<(usize, f64)> = [1, 5, 10].iter().flat_map(|&j| sqrt_grid(0.1, 1.3, 13).into_iter().map(move |t| (j, t))).collect();
    let found: Vec<(ThresholdResult, ThresholdResult)> =
        cases.par_iter().map(|&(j, t1)| profit_thresholds(j, t1)).collect::<kyle_hft::Result<_>>()?;
    let mut t = Table::new(&["j", "theta_1plus", "threshold", "theta_eps", "status"]);
    for ((j, t1), (tilde, hat)) in cases.iter().zip(&found) {
        for (name, r) in [("tilde", tilde), ("hat", hat)] {
            t.push(vec![j.to_string(), num(*t1), name.into(), num(r.value), status(&r.status)]);
        }
    }
    let plot = PlotSpec { x_scale: AxisScale::Sqrt, y_scale: AxisScale::Sqrt, ..PlotSpec::line("theta_1plus", "theta_eps", Some("threshold")) }
        .filter("j", "1")
        .title("Round-Trippers, J = 1, profit thresholds in theta_eps");
    Ok(Figure { table: t, plot })
}

fn shares(js: &[usize], y: &str) -> Result<Figure> {
    let eps = sqrt_grid(0.0, 2.0, 41);
    let mut keys = Vec::new();
    let mut lines = Vec::new();
    for &j in js {
        let splits: Vec<usize> = match j {
            10 => vec![0, 2, 5, 8, 10],
            _ => (0..=j).collect(),
        };
        for j1 in splits {
            keys.push((j, j1));
            lines.push(eps.iter().map(|&te| params(1.0, te, j1, j - j1)).collect::<Result<Vec<_>>>()?);
        }
    }
    let solved = solve_lines(&lines, true);
    let mut t = Table::new(&[
        "j",
        "j1",
        "j2",
        "share_small_it",
        "theta_eps",
        "regime",
        "theta_z",
        "it_profit",
        "benchmark_it",
        "hft_profit_small",
        "hft_profit_rt",
    ]);
    for (&(j, j1), line) in keys.iter().zip(&solved) {
        for s in line {
            let r = profits(s);
            t.push(vec![
                j.to_string(),
                j1.to_string(),
                (j - j1).to_string(),
                num(j1 as f64 / j as f64),
                num(s.params.theta_eps),
                s.regime.to_string(),
                cell(s, s.profile.theta_z),
                opt(r.map(|r| r.it_profit)),
                opt(r.map(|r| r.benchmark_it)),
                opt(r.and_then(|r| r.hft_profit_small)),
                opt(r.and_then(|r| r.hft_profit_rt)),
            ]);
        }
    }
    let last = js[js.len() - 1].to_string();
    let plot = PlotSpec { x_scale: AxisScale::Sqrt, ..PlotSpec::line("theta_eps", y, Some("share_small_it")) }
        .filter("j", &last)
        .title(&format!("J = {last}, theta_1+ = 1, by Small-IT share"));
    Ok(Figure { table: t, plot })
}

fn crowded_small_it() -> Result<Figure> {
    // Walk down from the liquid end, where the solver starts reliably.
    let grid: Vec<MarketParams> = (0..49).rev().map(|i| params(10f64.powf(-2.0 + i as f64 / 16.0), 0.0, 1, 9)).collect::<Result<_>>()?;
    let mut line = solve_lines(&[grid], true).remove(0);
    line.reverse();
    let mut t = Table::new(&[
        "theta_1plus",
        "regime",
        "theta_z",
        "x11_direction",
        "x21_direction",
        "role",
        "it_profit",
        "hft_profit_small",
        "hft_profit_rt",
    ]);
    for s in &line {
        let r = profits(s);
        let role = classify_role(s, HftType::Type1).ok().filter(|_| s.is_equilibrium());
        t.push(vec![
            num(s.params.theta_1plus),
            s.regime.to_string(),
            cell(s, s.profile.theta_z),
            opt(role.map(|r| r.first)),
            opt(role.map(|r| r.second)),
            role.map(|r| status(&r.role)).unwrap_or_default(),
            opt(r.map(|r| r.it_profit)),
            opt(r.and_then(|r| r.hft_profit_small)),
            opt(r.and_then(|r| r.hft_profit_rt)),
        ]);
    }
    let plot = PlotSpec::line("theta_1plus", "x11_direction", None).title("J1 = 1, J2 = 9, theta_eps = 0");
    Ok(Figure { table: t, plot })
}

fn mixed_boundary(inverse: bool) -> Result<Figure> {
    let found: Vec<ThresholdResult> = (1..=9usize)
        .into_par_iter()
        .map(|j2| if inverse { inverse_rt_boundary(10 - j2, j2, 0.0) } else { existence_boundary(10 - j2, j2, 0.0) })
        .collect::<kyle_hft::Result<_>>()?;
    let mut t = Table::new(&["j1", "j2", "critical_theta_1plus", "status"]);
    for (j2, r) in (1..=9usize).zip(&found) {
        t.push(vec![(10 - j2).to_string(), j2.to_string(), num(r.value), status(&r.status)]);
    }
    let title = if inverse { "Critical theta_1+ for inverse Round-Trippers, J = 10" } else { "Critical theta_1+ for existence, J = 10" };
    Ok(Figure { table: t, plot: PlotSpec::line("j2", "critical_theta_1plus", None).title(title) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_grid_is_even_in_the_root() {
        assert_eq!(sqrt_grid(0.0, 2.0, 3), vec![0.0, 1.0, 4.0]);
    }

    #[test]
    fn unknown_id() {
        assert!(matches!(build("fig20"), Err(CliError::Usage(_))));
    }
}

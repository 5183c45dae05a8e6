//! Grid sweeps. Lines along the first axis run in parallel; within a line
//! each point starts from its predecessor. Rows come out in grid order
//! (first axis fastest) whatever the number of workers.

use kyle_hft::{continue_path, critical_gamma, solve_point, verify_equilibrium, EquilibriumSolution, MarketParams, VerifyOptions};
use rayon::prelude::*;

use crate::config::SweepConfig;
use crate::table::{num, param_cells, Table, PARAM_COLUMNS};
use crate::Result;

/// Solves every point of `lines`, warm-starting along each line if asked.
pub fn solve_lines(lines: &[Vec<MarketParams>], warm_start: bool) -> Vec<Vec<EquilibriumSolution>> {
    if warm_start {
        lines.par_iter().map(|l| continue_path(l, true).solutions).collect()
    } else {
        lines.par_iter().map(|l| l.par_iter().map(|p| solve_point(p, None, None)).collect()).collect()
    }
}

pub fn header(cfg: &SweepConfig) -> Vec<&'static str> {
    let mut h: Vec<&str> = PARAM_COLUMNS.to_vec();
    h.extend(cfg.outputs.columns());
    if cfg.thresholds {
        h.push("gamma_bar");
    }
    if cfg.n_sim > 0 {
        h.extend(["verified", "pricing_margin", "max_deviation_gain"]);
    }
    h
}

pub fn run(cfg: &SweepConfig) -> Result<Table> {
    let lines = cfg.lines()?;
    let pool = crate::pool()?;
    let solved = pool.install(|| solve_lines(&lines, cfg.warm_start));
    let sols: Vec<&EquilibriumSolution> = solved.iter().flatten().collect();
    let extra: Vec<Vec<String>> = pool.install(|| sols.par_iter().map(|s| extra_cells(cfg, s)).collect());
    let mut t = Table::new(&header(cfg));
    for (s, e) in sols.iter().zip(extra) {
        let mut row = param_cells(&s.params);
        row.extend(cfg.outputs.cells(s));
        row.extend(e);
        t.push(row);
    }
    Ok(t)
}

fn extra_cells(cfg: &SweepConfig, s: &EquilibriumSolution) -> Vec<String> {
    let mut c = Vec::new();
    if cfg.thresholds {
        let p = &s.params;
        c.push(critical_gamma(p.theta_1plus, p.theta_2, p.theta_eps).map(|r| num(r.value)).unwrap_or_default());
    }
    if cfg.n_sim > 0 {
        if s.is_equilibrium() {
            let opts = VerifyOptions { n: cfg.n_sim, seed: cfg.seed, ..VerifyOptions::default() };
            let r = verify_equilibrium(s, &opts);
            c.extend([r.passed().to_string(), num(r.pricing.margin), num(r.deviation.margin)]);
        } else {
            c.extend([String::new(), String::new(), String::new()]);
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SweepFile;

    #[test]
    fn two_axis_grid_is_row_major_in_axis1() {
        let mut f = SweepFile::default();
        f.population.j1 = Some(1);
        f.axis1 = Some("theta_eps:0:1:3".parse().unwrap());
        f.axis2 = Some("theta_1plus:0.5:1:2".parse().unwrap());
        let cfg = SweepConfig::resolve(f).unwrap();
        let t = run(&cfg).unwrap();
        assert_eq!(t.rows.len(), 6);
        let te = t.column("theta_eps").unwrap();
        let t1 = t.column("theta_1plus").unwrap();
        assert_eq!(t.rows[1][te], "0.5");
        assert_eq!(t.rows[1][t1], "0.5");
        assert_eq!(t.rows[3][t1], "1");
    }
}

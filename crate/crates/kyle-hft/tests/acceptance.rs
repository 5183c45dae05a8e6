//! Acceptance suite. One line per criterion; exits nonzero if any fails.
//!
//! Run with `cargo test -p kyle-hft --test acceptance`; append
//! `-- 2 6` to run only those criteria.

use std::cmp::Ordering;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use kyle_hft::equilibrium::specialized::specialized_residual;
use kyle_hft::limits::small_it_theta_z;
use kyle_hft::{
    critical_theta1plus_pure, existence_boundary, expected_profits, inverse_rt_boundary, limit_small_it, profit_thresholds, simulate_market, solve_point,
    solve_specialized, to_dimensionless, verify_equilibrium, Configuration, EquilibriumSolution, Gamma, MarketParams, Regime, ThresholdStatus,
    VerifyOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed <= budget, || format!("took {elapsed:.1?}, budget {budget:?}"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn max_coef_gap(a: &EquilibriumSolution, b: &EquilibriumSolution) -> f64 {
    a.coefficients().iter().zip(b.coefficients()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn closed_form_limits() -> Outcome {
    let t = Instant::now();
    let two = limit_small_it(2, 0.0, 1.0, Regime::Mixed).map_err(|e| e.to_string())?;
    let one = limit_small_it(1, 0.0, 1.0, Regime::Mixed).map_err(|e| e.to_string())?;
    let checks = [
        (two.theta_z, 0.14),
        (two.a1, 0.6),
        (two.a21, 1.25),
        (two.alpha22, -0.75),
        (two.beta21.unwrap_or(f64::NAN), 0.75),
        (two.lambda1, 0.4),
        (one.theta_z, 1.0 / 39.0),
        (one.a1, 1.0 / 3.25f64.sqrt()),
    ];
    let worst = checks.iter().map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-12, || format!("max error {worst:e}"))?;
    within(t.elapsed(), Duration::from_secs(1))?;
    Ok(format!("max error {worst:.1e}"))
}

fn limit_convergence() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for j in [1, 2, 3, 5, 10] {
        for te in [0.0, 0.5, 1.0] {
            let regime = if small_it_theta_z(j, te, 1.0) > 0.0 { Regime::Mixed } else { Regime::Pure };
            let l = limit_small_it(j, te, 1.0, regime).map_err(|e| format!("J={j} te={te}: {e}"))?;
            let sol = solve_point(&MarketParams::new(1e-6, 1.0, te, j, 0).unwrap(), None, None);
            ensure(sol.regime == regime, || format!("J={j} te={te}: {} instead of {regime}", sol.regime))?;
            let s = &sol.profile;
            let mut pairs = vec![
                (s.a1, l.a1),
                (s.a21, l.a21),
                (s.alpha22, l.alpha22),
                (s.beta21, l.beta21.unwrap()),
                (sol.pricing.lambda1, l.lambda1),
                (sol.pricing.lambda22, l.lambda22),
            ];
            if regime == Regime::Mixed {
                pairs.push((s.theta_z, l.theta_z));
            }
            for (got, want) in pairs {
                worst = worst.max(rel(got, want));
            }
        }
    }
    ensure(worst < 1e-3, || format!("max relative error {worst:e}"))?;
    within(t.elapsed(), Duration::from_secs(300))?;
    Ok(format!("max relative error {worst:.1e}"))
}

fn draw_point(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    (rng.random_range(0.05..3.0), rng.random_range(0.3..2.0), rng.random_range(0.0..2.0))
}

fn infinite_aversion_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut found = 0;
    for _ in 0..200 {
        if found == 10 {
            break;
        }
        let (t1, t2, te) = draw_point(&mut rng);
        let p = MarketParams::single(t1, t2, te, Gamma::Infinite).unwrap();
        let general = solve_point(&p, None, None);
        if !general.is_equilibrium() {
            continue;
        }
        found += 1;
        let special = solve_specialized(&p, None);
        ensure(special.regime == general.regime, || format!("regimes differ at {p:?}"))?;
        worst = worst.max(max_coef_gap(&special, &general));
        let h = general.profile.expand(&p)[0];
        ensure(h.b21 == 0.0 && h.b22 == 0.0 && h.b23 == -1.0, || format!("second trade {h:?}"))?;
        ensure(general.profile.beta12 > 0.0, || "beta12 <= 0".into())?;
    }
    ensure(found == 10, || format!("only {found} equilibria"))?;
    ensure(worst <= 1e-7, || format!("max gap {worst:e}"))?;
    Ok(format!("10 points, max gap {worst:.1e}"))
}

fn appendix_cross_validation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let configs = [Configuration::SingleGeneralGamma, Configuration::AllSmallIt, Configuration::AllRoundTripper, Configuration::MixedTypes];
    for config in configs {
        let mut found = 0;
        for _ in 0..400 {
            if found == 20 {
                break;
            }
            let (t1, t2, te) = draw_point(&mut rng);
            let p = match config {
                Configuration::SingleGeneralGamma => MarketParams::single(t1, t2, te, Gamma::Finite(rng.random_range(0.05..2.0))),
                Configuration::AllSmallIt => MarketParams::new(t1, t2, te, rng.random_range(1..=5), 0),
                Configuration::AllRoundTripper => MarketParams::new(t1, t2, te, 0, rng.random_range(1..=5)),
                _ => MarketParams::new(t1, t2, te, rng.random_range(1..=3), rng.random_range(1..=3)),
            }
            .unwrap();
            let general = solve_point(&p, None, None);
            if !general.is_equilibrium() {
                continue;
            }
            found += 1;
            let special = solve_specialized(&p, None);
            ensure(special.regime == general.regime, || format!("regimes differ at {p:?}"))?;
            worst = worst.max(max_coef_gap(&special, &general));
        }
        ensure(found == 20, || format!("{config:?}: only {found} equilibria"))?;
    }
    ensure(worst <= 1e-7, || format!("max gap {worst:e}"))?;

    // Third-party counts: the reduced residual vanishes at general
    // solutions with three and four HFTs.
    let mut third = 0.0f64;
    for (j1, j2) in [(3, 0), (4, 0), (0, 3), (0, 4), (2, 1), (1, 3), (2, 2)] {
        for te in [0.0, 0.7] {
            let p = MarketParams::new(0.6, 1.0, te, j1, j2).unwrap();
            let sol = solve_point(&p, None, None);
            ensure(sol.is_equilibrium(), || format!("no equilibrium at {p:?}"))?;
            let r = specialized_residual(&p, sol.regime, &sol.profile).map_err(|e| e.to_string())?;
            third = third.max(r.iter().fold(0.0, |m: f64, x| m.max(x.abs())));
        }
    }
    ensure(third <= 1e-9, || format!("reduced residual {third:e} at J=3,4"))?;
    Ok(format!("80 points, max gap {worst:.1e}; J=3,4 reduced residual {third:.1e}"))
}

fn sqrt_grid(n: usize, max: f64) -> Vec<f64> {
    (0..n).map(|i| max * (i as f64 / (n - 1) as f64).powi(2)).collect()
}

fn regime_claims() -> Outcome {
    for j2 in 1..=3 {
        for te in sqrt_grid(32, 16.0) {
            let sol = solve_point(&MarketParams::new(1.0, 1.0, te, 0, j2).unwrap(), None, None);
            ensure(sol.regime == Regime::Pure, || format!("J2={j2} te={te}: {}", sol.regime))?;
        }
    }
    let sol = solve_point(&MarketParams::new(1.0, 1.0, 0.0, 1, 0).unwrap(), None, None);
    ensure(sol.regime == Regime::Mixed && sol.profile.theta_z > 0.0, || "single Small-IT is not mixed".into())?;
    for te in [0.0, 0.25, 0.5, 1.0, 2.0] {
        let mut last = -1.0;
        for j1 in [0, 2, 5, 8, 10] {
            let sol = solve_point(&MarketParams::new(1.0, 1.0, te, j1, 10 - j1).unwrap(), None, None);
            ensure(sol.is_equilibrium(), || format!("no equilibrium at J1={j1} te={te}"))?;
            let tz = sol.profile.theta_z;
            ensure(tz >= last, || format!("theta_z falls to {tz:e} at J1={j1}, te={te}"))?;
            last = tz;
        }
    }
    Ok("pure for J2<=3 on 32 points; mixed single Small-IT; theta_z monotone in J1/J".into())
}

fn corpus() -> Vec<EquilibriumSolution> {
    serde_json::from_str(include_str!("data/corpus.json")).unwrap()
}

fn monte_carlo_verification() -> Outcome {
    let t = Instant::now();
    let corpus = corpus();
    let mut worst = [0.0f64; 4];
    for (i, sol) in corpus.iter().enumerate() {
        let r = verify_equilibrium(sol, &VerifyOptions { seed: 1000 + i as u64, ..VerifyOptions::default() });
        ensure(r.passed(), || format!("solution {i} ({:?}): {r:?}", sol.params))?;
        worst[0] = worst[0].max(r.pricing.margin);
        worst[1] = worst[1].max(r.deviation.margin);
        worst[2] = worst[2].max(r.indifference.map_or(0.0, |c| c.margin));
        worst[3] = worst[3].max(r.zero_sum.margin);
    }
    within(t.elapsed(), Duration::from_secs(600))?;
    Ok(format!(
        "{} solutions in {:.0?}: pricing {:.2} SE, gain {:.1e}, indifference {:.1e}, zero-sum {:.1e}",
        corpus.len(),
        t.elapsed(),
        worst[0],
        worst[1],
        worst[2],
        worst[3]
    ))
}

fn threshold_suite() -> Outcome {
    let mut failures = Vec::new();
    let mut bars = Vec::new();
    for j in 1..=10 {
        let r = critical_theta1plus_pure(j, 16.0).map_err(|e| e.to_string())?;
        let ok = r.status == ThresholdStatus::Found && if j <= 3 { r.value < 1.0 } else { r.value > 1.0 };
        if !ok {
            failures.push(format!("theta_bar_1+({j}) = {} ({:?})", r.value, r.status));
        }
        bars.push(r.value);
    }

    let mut irt = Vec::new();
    for j2 in 1..=9 {
        irt.push(inverse_rt_boundary(10 - j2, j2, 0.0).map_err(|e| e.to_string())?.value);
    }
    if (1..irt.len()).any(|k| irt[k] >= irt[k - 1]) {
        let shown: Vec<String> = irt.iter().map(|x| format!("{x:.2e}")).collect();
        failures.push(format!("inverse-RT boundary not decreasing in J2 = 1..9: [{}]", shown.join(", ")));
    }

    for j2 in 1..=9 {
        let r = existence_boundary(10 - j2, j2, 0.0).map_err(|e| e.to_string())?;
        if !(r.value > 0.0 && r.value.is_finite()) {
            failures.push(format!("existence boundary at J2={j2}: {} ({:?})", r.value, r.status));
        }
    }

    for j in [1, 2, 3] {
        for t1 in [0.01, 0.1, 1.0] {
            let (tilde, hat) = profit_thresholds(j, t1).map_err(|e| e.to_string())?;
            if !matches!(hat.value.partial_cmp(&tilde.value), Some(Ordering::Greater | Ordering::Equal)) {
                failures.push(format!("theta_hat_eps {} < theta_tilde_eps {} at J={j}, theta_1+={t1}", hat.value, tilde.value));
            }
        }
    }
    if failures.is_empty() {
        Ok(format!("theta_bar_1+ = {:.3?}", bars))
    } else {
        Err(failures.join("; "))
    }
}

fn comparative_statics() -> Outcome {
    for j in [1, 3, 5] {
        for te in [0.0, 1.0] {
            let mut last = f64::NEG_INFINITY;
            for i in 0..16 {
                let t1 = 10f64.powf(-3.0 + 4.0 * i as f64 / 15.0);
                let sol = solve_point(&MarketParams::new(t1, 1.0, te, 0, j).unwrap(), None, None);
                let pi = expected_profits(&sol).map_err(|e| format!("J={j} te={te} t1={t1:e}: {e}"))?.it_profit;
                ensure(pi > last, || format!("IT profit not increasing at J={j}, te={te}, t1={t1:e}"))?;
                last = pi;
            }
        }
    }
    let grid = sqrt_grid(41, 1.0);
    for t1 in [0.1, 1.0] {
        let mut larger = false;
        for &te in &grid {
            let limit = small_it_theta_z(1, te, 1.0);
            let sol = solve_point(&MarketParams::new(t1, 1.0, te, 1, 0).unwrap(), None, None);
            let tz = if sol.regime == Regime::Mixed { sol.profile.theta_z } else { 0.0 };
            if limit > 0.0 {
                ensure(sol.regime == Regime::Mixed, || format!("theta_1+={t1}, te={te}: back-runner mixed but Small-IT {}", sol.regime))?;
                ensure(tz > limit, || format!("theta_1+={t1}, te={te}: theta_z {tz} <= {limit}"))?;
            } else if sol.regime == Regime::Mixed {
                larger = true;
            }
        }
        ensure(larger, || format!("theta_1+={t1}: mixed region not strictly larger"))?;
    }
    Ok("IT profit increasing on 16-point grids; Small-IT mixed region and theta_z dominate back-runners".into())
}

fn determinism_and_scale() -> Outcome {
    let p = MarketParams::new(0.7, 1.2, 0.3, 2, 1).unwrap();
    let a = serde_json::to_string(&solve_point(&p, None, None)).unwrap();
    let b = serde_json::to_string(&solve_point(&p, None, None)).unwrap();
    ensure(a == b, || "solutions differ between runs".into())?;
    let sol = solve_point(&p, None, None);
    let s1 = serde_json::to_string(&simulate_market(&sol, 200_000, 9).unwrap()).unwrap();
    let s2 = serde_json::to_string(&simulate_market(&sol, 200_000, 9).unwrap()).unwrap();
    ensure(s1 == s2, || "simulations differ between runs".into())?;

    let mut worst = 0.0f64;
    for (sv, s1) in [(2.0, 0.5), (0.1, 7.0), (13.0, 13.0), (1e3, 1e-2)] {
        let mut raw = p.to_raw();
        let k = s1 / raw.sigma_1;
        raw.sigma_v = sv;
        raw.sigma_1 *= k;
        raw.sigma_1plus *= k;
        raw.sigma_2 *= k;
        raw.sigma_eps *= k;
        let q = to_dimensionless(&raw).map_err(|e| e.to_string())?;
        let scaled = solve_point(&q, None, None);
        worst = worst.max(max_coef_gap(&scaled, &sol));
        let (x, y) = (expected_profits(&scaled).unwrap(), expected_profits(&sol).unwrap());
        worst = worst.max((x.it_profit - y.it_profit).abs());
    }
    ensure(worst <= 1e-10, || format!("rescaling moves outputs by {worst:e}"))?;
    Ok(format!("byte-identical reruns; rescaling gap {worst:.1e}"))
}

type Criterion = fn() -> Outcome;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 9] = [
        ("closed-form limits", closed_form_limits),
        ("limit convergence", limit_convergence),
        ("infinite-aversion reduction", infinite_aversion_reduction),
        ("reduced-system cross-validation", appendix_cross_validation),
        ("regime claims", regime_claims),
        ("Monte-Carlo verification", monte_carlo_verification),
        ("threshold suite", threshold_suite),
        ("comparative statics", comparative_statics),
        ("determinism and scale invariance", determinism_and_scale),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {}. {name} [{:.1?}]: {detail}", i + 1, t.elapsed());
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

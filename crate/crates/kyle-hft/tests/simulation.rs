use kyle_hft::{expected_profits, simulate_market, solve_point, EquilibriumSolution, MarketParams};

fn solved(t1: f64, te: f64, j1: usize, j2: usize) -> EquilibriumSolution {
    let sol = solve_point(&MarketParams::new(t1, 1.0, te, j1, j2).unwrap(), None, None);
    assert!(sol.is_equilibrium());
    sol
}

#[test]
fn same_seed_same_stats() {
    let sol = solved(0.5, 1.0, 1, 2);
    let a = simulate_market(&sol, 100_000, 11).unwrap();
    let b = simulate_market(&sol, 100_000, 11).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = simulate_market(&sol, 100_000, 12).unwrap();
    assert_ne!(a.it_profit.mean, c.it_profit.mean);
}

#[test]
fn standard_errors_halve_with_four_times_the_draws() {
    let sol = solved(1.0, 0.0, 2, 0);
    let a = simulate_market(&sol, 250_000, 3).unwrap();
    let b = simulate_market(&sol, 1_000_000, 3).unwrap();
    for (x, y) in [
        (a.it_profit, b.it_profit),
        (a.noise_profit, b.noise_profit),
        (a.lambda1, b.lambda1),
        (a.lambda22, b.lambda22),
        (a.p2.mean, b.p2.mean),
    ] {
        let r = x.se / y.se;
        assert!((1.6..=2.5).contains(&r), "ratio {r}");
    }
}

#[test]
fn prices_are_martingales() {
    let sol = solved(0.3, 0.0, 1, 3);
    let s = simulate_market(&sol, 1_000_000, 5).unwrap();
    for f in [s.p1, s.p1plus, s.p2] {
        assert!(f.mean.z_score(0.0) < 4.0);
    }
    assert!(s.lambda1.z_score(sol.pricing.lambda1) < 4.0);
}

#[test]
fn too_few_draws_is_an_error() {
    assert!(simulate_market(&solved(1.0, 0.0, 1, 0), 9_999, 1).is_err());
}

// Ten solved points at full size; every closed-form profit within 4 SE.
#[test]
fn simulated_profits_match_closed_forms() {
    let points = [
        (1.0, 0.0, 1, 0),
        (0.2, 0.7, 1, 0),
        (1.0, 0.3, 3, 0),
        (0.5, 0.0, 0, 1),
        (2.0, 1.5, 0, 4),
        (0.7, 0.2, 2, 2),
        (1.5, 0.0, 1, 6),
        (0.4, 1.1, 4, 1),
        (1.0, 0.0, 0, 0),
        (0.9, 0.6, 6, 0),
    ];
    for (i, &(t1, te, j1, j2)) in points.iter().enumerate() {
        let sol = solved(t1, te, j1, j2);
        let r = expected_profits(&sol).unwrap();
        let s = simulate_market(&sol, 10_000_000, 100 + i as u64).unwrap();
        assert!(s.it_profit.z_score(r.it_profit) < 4.0, "IT at {i}");
        assert!(s.noise_profit.z_score(r.noise_profit) < 4.0, "noise at {i}");
        if let (Some(e), Some(a)) = (s.hft_profit_small, r.hft_profit_small) {
            assert!(e.z_score(a) < 4.0, "small at {i}");
        }
        if let (Some(e), Some(a)) = (s.hft_profit_rt, r.hft_profit_rt) {
            assert!(e.z_score(a) < 4.0, "RT at {i}");
        }
    }
}

use kyle_hft::shocks::Flows;
use kyle_hft::limits::{round_tripper_mixed_residual, small_it_theta_z};
use kyle_hft::{expected_profits, limit_round_tripper, limit_small_it, solve_point, Error, MarketParams, Regime};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

#[test]
fn one_back_runner_closed_form() {
    let l = limit_small_it(1, 0.0, 1.0, Regime::Mixed).unwrap();
    assert!((l.theta_z - 1.0 / 39.0).abs() < 1e-12);
    assert!((l.a1 - 1.0 / 3.25f64.sqrt()).abs() < 1e-12);
    assert_eq!(l.lambda1, l.lambda22);
}

#[test]
fn finite_market_approaches_small_it_limit() {
    for (j, te) in [(2, 0.5), (3, 0.0), (1, 1.0)] {
        let regime = if small_it_theta_z(j, te, 1.0) > 0.0 { Regime::Mixed } else { Regime::Pure };
        let l = limit_small_it(j, te, 1.0, regime).unwrap();
        let sol = solve_point(&MarketParams::new(1e-6, 1.0, te, j, 0).unwrap(), None, None);
        assert_eq!(sol.regime, regime);
        let s = &sol.profile;
        for (got, want) in [(s.a1, l.a1), (s.a21, l.a21), (s.alpha22, l.alpha22), (s.beta21, l.beta21.unwrap())] {
            assert!(rel(got, want) < 1e-3, "J={j} te={te}: {got} vs {want}");
        }
    }
}

#[test]
fn pure_limit_needs_pure_request() {
    // theta_z(2, 0, 1) = 0.14 > 0, so only the mixed limit exists.
    assert!(matches!(limit_small_it(2, 0.0, 1.0, Regime::Pure), Err(Error::RegimeMismatch(_))));
    assert!(limit_small_it(0, 0.0, 1.0, Regime::Mixed).is_err());
}

#[test]
fn round_tripper_limit_is_self_consistent() {
    let l = limit_round_tripper(1, 0.0, 1.0, Regime::Mixed).unwrap();
    let zeta = l.zeta.unwrap();
    let r = round_tripper_mixed_residual(l.a1, l.theta_z, zeta, 1, 0.0, 1.0);
    assert!(r[0].abs() < 1e-6 && r[1].abs() < 1e-6, "{r:?}");
    let sol = solve_point(&MarketParams::new(1e-6, 1.0, 0.0, 0, 1).unwrap(), Some(Regime::Mixed), None);
    assert!(rel(sol.profile.a1, l.a1) < 1e-2);
    assert!(rel(sol.profile.beta12 / 1e-3, zeta) < 1e-2);
}

// As fast noise vanishes the Round-Tripper's trades vanish with it.
#[test]
fn round_trippers_fade_out() {
    for (j, te) in [(1, 0.0), (2, 0.5), (3, 0.0)] {
        let at = |t: f64| solve_point(&MarketParams::new(t, 1.0, te, 0, j).unwrap(), None, None).profile.beta12;
        // x1 = -x2 = beta12 (r + eps), so the coefficient bounds every draw.
        let (big, small) = (at(1.0), at(1e-6));
        assert!(small < 1e-2 * big, "J={j}: {small} vs {big}");
    }
}

// The 1+ impact grows like 1/sqrt(theta_1+) while the flow shrinks like
// sqrt(theta_1+), so the 1+ price keeps moving by a stable amount.
#[test]
fn price_move_at_1plus_settles() {
    let var_move = |t: f64| {
        let p = MarketParams::new(t, 1.0, 0.0, 0, 1).unwrap();
        let sol = solve_point(&p, None, None);
        let f = Flows::equilibrium(&p, &sol.profile);
        let (p1, p1plus, _) = f.prices(&sol.pricing);
        f.space.var_of(&(&p1plus - &p1))
    };
    let (a, b) = (var_move(1e-5), var_move(1e-6));
    assert!(a > 0.2 && rel(b, a) < 5e-3, "{a} {b}");
}

#[test]
fn back_runners_profit_in_the_limit() {
    let sol = solve_point(&MarketParams::new(1e-6, 1.0, 0.0, 2, 0).unwrap(), None, None);
    let r = expected_profits(&sol).unwrap();
    assert!(r.hft_profit_small.unwrap() > 0.0);
    assert!(r.it_profit < r.benchmark_it);
}

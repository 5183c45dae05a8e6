use kyle_hft::{
    classify_role, inverse_rt_boundary, existence_boundary, solve_point, verify_equilibrium, EquilibriumSolution, Gamma, HftType, MarketParams,
    Regime, Role, VerifyOptions,
};

fn solved(p: MarketParams) -> EquilibriumSolution {
    let sol = solve_point(&p, None, None);
    assert!(sol.is_equilibrium());
    sol
}

fn quick() -> VerifyOptions {
    VerifyOptions { n: 200_000, ..VerifyOptions::default() }
}

#[test]
fn mixed_equilibrium_passes_everything() {
    let sol = solved(MarketParams::new(1.0, 1.0, 0.0, 1, 1).unwrap());
    assert_eq!(sol.regime, Regime::Mixed);
    let r = verify_equilibrium(&sol, &quick());
    assert!(r.passed(), "{r:#?}");
    assert!(r.indifference.unwrap().margin < 1e-9);
    assert!(r.indifference_sim.is_some());
}

#[test]
fn pure_equilibrium_skips_indifference() {
    let sol = solved(MarketParams::new(0.5, 1.0, 1.0, 1, 2).unwrap());
    assert_eq!(sol.regime, Regime::Pure);
    let r = verify_equilibrium(&sol, &quick());
    assert!(r.passed(), "{r:#?}");
    assert!(r.indifference.is_none() && r.indifference_sim.is_none());
    assert_eq!(r.clearing.margin, 0.0);
}

#[test]
fn corrupted_first_order_fails_deviation() {
    let mut sol = solved(MarketParams::new(0.5, 1.0, 1.0, 1, 2).unwrap());
    sol.profile.a1 *= 1.1;
    let r = verify_equilibrium(&sol, &quick());
    assert!(!r.deviation.pass);
    assert!(r.worst_deviation.starts_with("it.a1"), "{}", r.worst_deviation);
    assert!(!r.passed());
}

#[test]
fn report_serializes_with_margins() {
    let sol = solved(MarketParams::new(1.0, 1.0, 0.0, 2, 0).unwrap());
    let json = serde_json::to_value(verify_equilibrium(&sol, &quick())).unwrap();
    assert!(json["pricing"]["margin"].is_number());
    assert_eq!(json["deviation"]["threshold"], 1e-10);
}

#[test]
fn round_trippers_are_round_trippers() {
    for (t1, te, j1, j2) in [(0.5, 0.0, 0, 2), (2.0, 1.0, 0, 5), (1.0, 0.0, 3, 1), (0.2, 0.5, 1, 1)] {
        let sol = solved(MarketParams::new(t1, 1.0, te, j1, j2).unwrap());
        let r = classify_role(&sol, HftType::Type2).unwrap();
        assert_eq!(r.role, Role::RoundTripper);
        assert!(r.first > 0.0);
    }
}

#[test]
fn lone_fast_trader_is_small_it() {
    let sol = solved(MarketParams::single(1.0, 1.0, 0.0, Gamma::Finite(0.0)).unwrap());
    assert_eq!(classify_role(&sol, HftType::Type1).unwrap().role, Role::SmallIT);
}

// Nine Round-Trippers push the one zero-aversion HFT to supply liquidity
// first when it is fast enough.
#[test]
fn crowded_small_it_inverts() {
    let upper = inverse_rt_boundary(1, 9, 0.0).unwrap().value;
    let lower = existence_boundary(1, 9, 0.0).unwrap().value;
    assert!(lower < upper);
    let t1 = (lower * upper).sqrt();
    let sol = solved(MarketParams::new(t1, 1.0, 0.0, 1, 9).unwrap());
    let r = classify_role(&sol, HftType::Type1).unwrap();
    assert_eq!(r.role, Role::InverseRoundTripper, "{r:?} at {t1}");
    assert!(!r.boundary);
}

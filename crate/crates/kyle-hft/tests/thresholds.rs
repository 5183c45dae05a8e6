use kyle_hft::{
    classify_role, critical_gamma, critical_theta1plus_pure, critical_theta1plus_rt_profit, existence_boundary, profit_thresholds, solve_point, Gamma,
    HftType, MarketParams, Regime, Role, ThresholdKind, ThresholdStatus,
};

#[test]
fn gamma_threshold_separates_roles() {
    let r = critical_gamma(1.0, 1.0, 0.0).unwrap();
    assert_eq!(r.kind, ThresholdKind::GammaBar);
    assert_eq!(r.status, ThresholdStatus::Found);
    assert!((r.value - 0.24089).abs() < 1e-4, "{}", r.value);
    let (lo, hi) = r.bracket;
    assert!(hi - lo <= 1e-6 * hi.max(1.0));
    let role = |g: f64| {
        let sol = solve_point(&MarketParams::single(1.0, 1.0, 0.0, Gamma::Finite(g)).unwrap(), None, None);
        classify_role(&sol, HftType::Type1).unwrap().role
    };
    assert_eq!(role(0.9 * r.value), Role::SmallIT);
    assert_eq!(role(1.1 * r.value), Role::RoundTripper);
}

#[test]
fn pure_threshold_crosses_one_between_three_and_four() {
    let three = critical_theta1plus_pure(3, 16.0).unwrap();
    let four = critical_theta1plus_pure(4, 16.0).unwrap();
    assert!(three.value < 1.0 && four.value > 1.0, "{} {}", three.value, four.value);
    // Just above the threshold the market is pure at every theta_eps.
    let p = MarketParams::new(1.01 * three.value, 1.0, 0.0, 0, 3).unwrap();
    assert_eq!(solve_point(&p, None, None).regime, Regime::Pure);
}

#[test]
fn profit_peak_after_profit_crossing() {
    let (crossing, peak) = profit_thresholds(1, 0.1).unwrap();
    assert_eq!(crossing.status, ThresholdStatus::Found);
    assert_eq!(peak.status, ThresholdStatus::Found);
    assert!((crossing.value - 0.147).abs() < 5e-3, "{}", crossing.value);
    assert!((peak.value - 0.927).abs() < 5e-3, "{}", peak.value);
    assert!(peak.value >= crossing.value);
}

#[test]
fn fast_noise_already_beats_benchmark() {
    let (crossing, peak) = profit_thresholds(1, 1.0).unwrap();
    assert_eq!(crossing.status, ThresholdStatus::AtLowerBound);
    assert_eq!(peak.status, ThresholdStatus::AtLowerBound);
}

#[test]
fn round_tripper_profit_threshold() {
    let one = critical_theta1plus_rt_profit(1, 1.0).unwrap();
    assert_eq!(one.status, ThresholdStatus::Found);
    assert!((one.value - 0.088).abs() < 2e-3, "{}", one.value);
    assert_eq!(critical_theta1plus_rt_profit(5, 1.0).unwrap().status, ThresholdStatus::RightCensored);
}

#[test]
fn existence_boundary_is_interior() {
    let r = existence_boundary(1, 9, 0.0).unwrap();
    assert!(r.value > 0.0 && r.value < 1.0, "{}", r.value);
    assert!(!solve_point(&MarketParams::new(0.5 * r.value, 1.0, 0.0, 1, 9).unwrap(), None, None).is_equilibrium());
    assert!(solve_point(&MarketParams::new(2.0 * r.value, 1.0, 0.0, 1, 9).unwrap(), None, None).is_equilibrium());
}

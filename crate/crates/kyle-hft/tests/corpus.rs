//! The frozen solution corpus in `data/corpus.json` was produced by this
//! solver and is replayed here to catch numerical drift.

use kyle_hft::{expected_profits, solve_point, EquilibriumSolution, Regime};

pub fn corpus() -> Vec<EquilibriumSolution> {
    serde_json::from_str(include_str!("data/corpus.json")).unwrap()
}

#[test]
fn corpus_covers_every_configuration() {
    let c = corpus();
    assert_eq!(c.len(), 30);
    assert!(c.iter().all(|s| s.is_equilibrium()));
    let mixed = c.iter().filter(|s| s.regime == Regime::Mixed).count();
    assert!(mixed >= 10 && c.len() - mixed >= 10);
    let mut configs: Vec<_> = c.iter().map(|s| format!("{:?}", s.params.configuration())).collect();
    configs.sort();
    configs.dedup();
    assert_eq!(configs.len(), 5);
}

#[test]
fn solver_reproduces_corpus() {
    for frozen in corpus() {
        let sol = solve_point(&frozen.params, None, None);
        assert_eq!(sol.regime, frozen.regime, "{:?}", frozen.params);
        for (a, b) in sol.coefficients().iter().zip(frozen.coefficients()) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} vs {b} at {:?}", frozen.params);
        }
    }
}

#[test]
fn corpus_is_zero_sum() {
    for s in corpus() {
        assert!(expected_profits(&s).unwrap().total(&s.params).abs() < 1e-9);
    }
}

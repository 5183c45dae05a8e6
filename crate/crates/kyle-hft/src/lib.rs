//! Equilibria of a three-period Kyle market in which one informed trader (IT)
//! splits her order across two periods and `J` high-frequency traders (HFTs)
//! observe a noisy signal of her first order, trade ahead of it at `1+` and
//! trade again at `2`.
//!
//! Everything is solved in dimensionless form (`sigma_v = sigma_1 = 1`,
//! `p0 = 0`); [`to_dimensionless`] and [`StrategyProfile::to_natural`]
//! convert at the boundary.
//!
//! ```
//! use kyle_hft::{solve_point, MarketParams, Regime};
//!
//! // Two Small-ITs, fast noise as large as time-1 noise.
//! let p = MarketParams::new(1.0, 1.0, 0.0, 2, 0).unwrap();
//! let sol = solve_point(&p, None, None);
//! assert_eq!(sol.regime, Regime::Mixed);
//! assert!(sol.profile.theta_z > 0.0);
//! ```

// `!(x >= y)` is used on purpose so that NaN fails the comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod best_response;
pub mod equilibrium;
pub mod error;
pub mod limits;
pub mod moments;
pub mod params;
pub mod pricing;
pub mod profits;
pub mod shocks;
pub mod sim;
pub mod thresholds;
pub mod verify;

pub use best_response::{
    hft_first_stage, hft_geometry, hft_second_stage, it_first_stage, it_second_stage, soc_check, HftSignalGeometry, ItFirstStage, SocReport,
};
pub use equilibrium::{
    assemble_residual, continue_path, detect_regime, solve_point, solve_specialized, EquilibriumSolution, PathEvent, PathResult, Provenance, Regime,
    RegimeEvidence, SolveOptions,
};
pub use error::{Error, Result};
pub use limits::{limit_round_tripper, limit_small_it, LimitSolution};
pub use moments::{flow_moments, FlowMoments};
pub use params::{to_dimensionless, validate_population, Configuration, Gamma, MarketParams, RawParams, StrategyProfile};
pub use pricing::{price_impact, PricingRule};
pub use profits::{expected_profits, ProfitReport};
pub use sim::{simulate_market, Estimate, FlowStats, SimStats};
pub use thresholds::{
    critical_gamma, critical_theta1plus_pure, critical_theta1plus_rt_profit, existence_boundary, inverse_rt_boundary, profit_thresholds, ThresholdKind,
    ThresholdResult, ThresholdStatus,
};
pub use verify::{classify_role, verify_equilibrium, Check, HftType, Role, RoleReport, VerificationReport, VerifyOptions};

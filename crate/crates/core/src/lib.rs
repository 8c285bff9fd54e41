//! Cournot-Nash equilibria on a Hotelling linear market, classical
//! and with entangled (continuous-variable) strategies.
//!
//! The second-stage quantity subgame is solved for any location pair, any
//! transport rate (negative rates are travel allowances) and any entanglement
//! parameter. [`oracle`] checks solutions by brute-force best responses and
//! [`analysis`] runs sweeps and threshold searches.

pub mod analysis;
pub mod classical;
pub mod equilibrium;
pub mod error;
pub mod market;
mod newton;
pub mod oracle;
pub mod quantum;
mod subgame;

pub use analysis::{
    aggregate_output_peak, find_allowance_witness, find_critical_allowance, find_tg, ordering_report,
    run_sweep, AllowanceTarget, Axis, AxisRange, OrderingReport, OutputPeak, SweepQuantity,
    SweepResult, SweepSpec, ThresholdResult,
};
pub use classical::{central_limit_classical, classical_foc_residual, solve_classical};
pub use equilibrium::{Branch, Equilibrium, SolverSettings};
pub use error::{AnalysisError, ModelError, Rejection, SolveError};
pub use market::{
    demand_jacobian, market_boundary, prices_from_quantities, profit, quantities_from_prices,
    Firm, MarketConfig, PricePair, QuantityPair, TRANSPORT_EPS,
};
pub use quantum::{
    central_limit_quantum, quantum_benefit, quantum_foc_residual, quantum_quantities, solve_quantum,
    strategies_from_quantities, GameParams, StrategyPair,
};
pub use oracle::{
    best_response, best_response_iteration, multi_start_iteration, verify_equilibrium, BestResponse,
    IterationResult, OracleReport, OracleSettings,
};
pub use subgame::track_equilibrium;

/// 2 x 2 matrix `m[row][col]`.
pub use newton::Mat2;

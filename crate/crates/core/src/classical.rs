//! Classical Cournot quantity subgame for fixed locations.

use crate::equilibrium::{Equilibrium, SolverSettings};
use crate::error::{ModelError, SolveError};
use crate::market::{MarketConfig, PricePair};
use crate::subgame;

/// First-order conditions `p_i + q_i dp_i/dq_i = 0`, multiplied through by
/// `2t det J` so no inverse is formed. A root with `det J != 0` is a
/// Cournot-Nash price pair.
pub fn classical_foc_residual(prices: PricePair, cfg: &MarketConfig) -> Result<[f64; 2], ModelError> {
    subgame::foc_residual(prices, cfg, 0.0)
}

/// Nash equilibrium of the classical quantity subgame.
///
/// For `|t| < TRANSPORT_EPS` returns `q_i = p_i = 1/3`. Otherwise Newton from
/// `p = (1/3, 1/3)`, with continuation in `t` as the fallback. An accepted
/// root has prices, quantities and boundary strictly inside `(0, 1)` and a
/// negative own-profit curvature for both firms.
pub fn solve_classical(cfg: &MarketConfig, settings: &SolverSettings) -> Result<Equilibrium, SolveError> {
    subgame::solve_subgame(cfg, 0.0, settings)
}

/// Limit of the equilibrium quantity and price as both firms approach the
/// market centre: `q = (8 - 13t + R)/48`, `p = (16 + 7t - R)/24` with
/// `R = sqrt(97t^2 + 80t + 64)`.
pub fn central_limit_classical(t: f64) -> (f64, f64) {
    let root = (97.0 * t * t + 80.0 * t + 64.0).sqrt();
    ((8.0 - 13.0 * t + root) / 48.0, (16.0 + 7.0 * t - root) / 24.0)
}

//! Entanglement-parameterized quantity subgame.
//!
//! Each firm picks a displacement `x_i`; the measured quantities are
//! `q1 = x1 cosh γ + x2 sinh γ` and `q2 = x2 cosh γ + x1 sinh γ`. The map has
//! unit determinant, so the equilibrium is solved in price space exactly as in
//! the classical game and the strategies are recovered afterwards.

use serde::Serialize;

use crate::classical::solve_classical;
use crate::equilibrium::{Equilibrium, SolverSettings};
use crate::error::{ModelError, SolveError};
use crate::market::{MarketConfig, PricePair, QuantityPair};
use crate::subgame::{self, Entanglement};

/// Entanglement parameter and solver controls. `gamma = 0` is the classical game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameParams {
    pub gamma: f64,
    pub settings: SolverSettings,
}

impl GameParams {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            settings: SolverSettings::default(),
        }
    }

    pub fn classical() -> Self {
        Self::new(0.0)
    }
}

/// Displacement strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategyPair {
    pub x1: f64,
    pub x2: f64,
}

impl StrategyPair {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x1, self.x2]
    }

    pub fn from_array([x1, x2]: [f64; 2]) -> Self {
        Self { x1, x2 }
    }

    pub fn min(self) -> f64 {
        self.x1.min(self.x2)
    }
}

pub fn quantum_quantities(x: StrategyPair, gamma: f64) -> QuantityPair {
    if gamma == 0.0 {
        return QuantityPair::new(x.x1, x.x2);
    }
    let (c, s) = (gamma.cosh(), gamma.sinh());
    QuantityPair::new(x.x1 * c + x.x2 * s, x.x2 * c + x.x1 * s)
}

/// Inverse of [`quantum_quantities`]. Written as
/// `x1 = cosh γ (q1 - q2) + q2 e^-γ` to avoid cancelling two large terms.
/// Negative results are returned as-is; callers flag them.
pub fn strategies_from_quantities(q: QuantityPair, gamma: f64) -> StrategyPair {
    if gamma == 0.0 {
        return StrategyPair::new(q.q1, q.q2);
    }
    let c = gamma.cosh();
    let decay = (-gamma).exp();
    StrategyPair::new(c * (q.q1 - q.q2) + q.q2 * decay, c * (q.q2 - q.q1) + q.q1 * decay)
}

/// First-order conditions `d Pi_i / d x_i = 0`, normalized by `2t / cosh γ`.
/// Identical to the classical residual at `gamma = 0`.
pub fn quantum_foc_residual(
    prices: PricePair,
    cfg: &MarketConfig,
    gamma: f64,
) -> Result<[f64; 2], ModelError> {
    let ent = Entanglement::new(gamma)?;
    subgame::foc_residual(prices, cfg, ent.tanh)
}

/// Nash equilibrium of the entangled quantity subgame.
///
/// On the `t = 0` branch `q_i = cosh γ / (3 cosh γ + sinh γ)` and
/// `p_i = e^γ / (3 cosh γ + sinh γ)`. Negative recovered strategies set
/// `negative_strategy` but do not reject the root.
pub fn solve_quantum(cfg: &MarketConfig, params: &GameParams) -> Result<Equilibrium, SolveError> {
    subgame::solve_subgame(cfg, params.gamma, &params.settings)
}

/// Central-location limit of the entangled equilibrium `(q, p)`. Reduces to
/// [`central_limit_classical`](crate::classical::central_limit_classical) at
/// `gamma = 0`. Computed with `tanh γ` so large `gamma` does not overflow.
pub fn central_limit_quantum(t: f64, gamma: f64) -> (f64, f64) {
    let th = gamma.tanh();
    let root = ((64.0 + t * (80.0 + 97.0 * t)) + t * th * (2.0 * (40.0 + t) + t * th)).sqrt();
    let q = ((8.0 - 13.0 * t) - t * th + root) / (16.0 * (3.0 + th));
    let p = ((16.0 + 7.0 * t) + th * (8.0 - t) - root) / (8.0 * (3.0 + th));
    (q, p)
}

/// `Gamma_i = Pi_i(quantum) - Pi_i(classical)` at the two equilibria.
pub fn quantum_benefit(cfg: &MarketConfig, params: &GameParams) -> Result<[f64; 2], SolveError> {
    let quantum = solve_quantum(cfg, params)?;
    let classical = solve_classical(cfg, &params.settings)?;
    Ok([
        quantum.profits[0] - classical.profits[0],
        quantum.profits[1] - classical.profits[1],
    ])
}

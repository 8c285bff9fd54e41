use serde::Serialize;

use crate::error::ModelError;
use crate::market::{PricePair, QuantityPair};
use crate::quantum::StrategyPair;

/// Newton and continuation controls shared by both solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverSettings {
    /// Residual tolerance on the normalized first-order conditions.
    pub tol: f64,
    pub max_iter: usize,
    /// Step-halving limit of the line search.
    pub damping: usize,
    /// Largest step in `t` when tracking the branch from `t = 0`.
    pub homotopy_step: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100,
            damping: 30,
            homotopy_step: 0.05,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "tol = {} must be positive",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(ModelError::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !(self.homotopy_step > 0.0 && self.homotopy_step.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "homotopy_step = {} must be positive",
                self.homotopy_step
            )));
        }
        Ok(())
    }
}

/// How a solution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Damped Newton from the cold-start guess.
    Newton,
    /// `|t|` below the degenerate threshold: aggregate-demand closed form.
    TZeroClosedForm,
    /// Continuation in `t` from the `t = 0` solution.
    Homotopy,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Newton => "newton",
            Branch::TZeroClosedForm => "t_zero_closed_form",
            Branch::Homotopy => "homotopy",
        }
    }
}

/// One solved quantity subgame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    pub prices: PricePair,
    pub quantities: QuantityPair,
    /// Displacement strategies; equal to the quantities in the classical game.
    pub strategies: StrategyPair,
    /// Market boundary; the midpoint `(r1 + r2) / 2` on the `t = 0` branch.
    pub boundary: f64,
    /// `p_i * q_i`.
    pub profits: [f64; 2],
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub branch: Branch,
    /// Some recovered displacement is below `-1e-9`.
    pub negative_strategy: bool,
}

impl Equilibrium {
    pub fn total_output(&self) -> f64 {
        self.quantities.total()
    }

    pub fn total_profit(&self) -> f64 {
        self.profits[0] + self.profits[1]
    }

    pub fn min_profit(&self) -> f64 {
        self.profits[0].min(self.profits[1])
    }
}

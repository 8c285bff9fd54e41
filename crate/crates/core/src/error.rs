use thiserror::Error;

use crate::equilibrium::Equilibrium;
use crate::market::PricePair;

/// Failures of the demand geometry primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid market configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("transport rate {t} is below the degenerate threshold; use the t = 0 branch")]
    DegenerateTransport { t: f64 },
    #[error("market boundary {boundary} lies outside [0, 1]")]
    BoundaryOutOfRange { boundary: f64 },
    #[error("demand Jacobian is singular (det = {det:e})")]
    SingularJacobian { det: f64 },
    #[error("no admissible price pair produces quantities ({q1}, {q2})")]
    NoAdmissibleRoot { q1: f64, q2: f64 },
}

/// Why an otherwise converged root was not accepted as an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    PriceOutOfRange,
    QuantityOutOfRange,
    BoundaryOutOfRange,
    NotMaximum,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("Newton did not converge after {iterations} iterations (residual {residual:e}, last iterate ({}, {}))", last.p1, last.p2)]
    NonConvergence {
        last: PricePair,
        residual: f64,
        iterations: usize,
    },
    #[error("root rejected: {reason:?}")]
    Rejected {
        equilibrium: Box<Equilibrium>,
        reason: Rejection,
    },
}

impl SolveError {
    /// Short machine-readable code used in sweep output.
    pub fn code(&self) -> &'static str {
        match self {
            SolveError::Model(ModelError::InvalidConfig(_)) => "invalid_config",
            SolveError::Model(ModelError::InvalidParameter(_)) => "invalid_parameter",
            SolveError::Model(ModelError::DegenerateTransport { .. }) => "degenerate_transport",
            SolveError::Model(ModelError::BoundaryOutOfRange { .. }) => "boundary_out_of_range",
            SolveError::Model(ModelError::SingularJacobian { .. }) => "singular_jacobian",
            SolveError::Model(ModelError::NoAdmissibleRoot { .. }) => "no_admissible_root",
            SolveError::NonConvergence { .. } => "non_convergence",
            SolveError::Rejected { reason, .. } => match reason {
                Rejection::PriceOutOfRange => "price_out_of_range",
                Rejection::QuantityOutOfRange => "quantity_out_of_range",
                Rejection::BoundaryOutOfRange => "boundary_out_of_range",
                Rejection::NotMaximum => "not_maximum",
            },
        }
    }

    /// The root the solver reached, when it got that far.
    pub fn root(&self) -> Option<&Equilibrium> {
        match self {
            SolveError::Rejected { equilibrium, .. } => Some(equilibrium),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid analysis request: {0}")]
    InvalidSpec(String),
    #[error("predicate is {value} at both ends of [{lo}, {hi}]")]
    PredicateConstant { lo: f64, hi: f64, value: bool },
    #[error("minimum profit does not change sign on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NoCrossing { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
}

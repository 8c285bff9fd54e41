//! Solver kernel shared by the classical and the entangled game.
//!
//! Unknowns are the mill prices. Firm `i` moving its own strategy shifts the
//! quantity vector along `(1, tanh γ)` (firm 1) or `(tanh γ, 1)` (firm 2) per
//! unit of own quantity, and prices respond through the inverse of the demand
//! Jacobian. With `J = dq/dp` the first-order conditions become
//!
//! ```text
//! R1 = 2t [ p1 det J + q1 (J22 - tanh γ J12) ] = 0
//! R2 = 2t [ p2 det J + q2 (J11 - tanh γ J21) ] = 0
//! ```
//!
//! The `2t` factor keeps the residual O(1) as `t -> 0`. At `γ = 0` this is the
//! classical Cournot condition `p_i + q_i dp_i/dq_i = 0`.

use crate::equilibrium::{Branch, Equilibrium, SolverSettings};
use crate::error::{ModelError, Rejection, SolveError};
use crate::market::{
    demand_unchecked, jacobian_unchecked, prices_from_quantities, profit, Firm,
    MarketConfig, PricePair, QuantityPair,
};
use crate::newton::{damped_newton, det2, Mat2, NewtonOutcome, NewtonSettings};
use crate::quantum::strategies_from_quantities;

/// Jacobian determinants below this are treated as singular.
pub(crate) const SINGULAR_DET: f64 = 1e-14;
/// Own-quantity step of the second-order check.
pub(crate) const SOC_STEP: f64 = 1e-5;
/// Recovered displacements below this count as negative.
pub(crate) const NEGATIVE_STRATEGY_TOL: f64 = 1e-9;
const MIN_HOMOTOPY_STEP: f64 = 1e-6;

/// Hyperbolic mixing of strategies into quantities.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Entanglement {
    pub gamma: f64,
    pub tanh: f64,
}

impl Entanglement {
    pub fn new(gamma: f64) -> Result<Self, ModelError> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "gamma = {gamma} must be finite and >= 0"
            )));
        }
        Ok(Self {
            gamma,
            tanh: gamma.tanh(),
        })
    }

    /// Own-quantity-normalized direction in which firm `firm`'s strategy moves
    /// the quantity vector.
    pub fn direction(&self, firm: Firm) -> [f64; 2] {
        match firm {
            Firm::One => [1.0, self.tanh],
            Firm::Two => [self.tanh, 1.0],
        }
    }

    /// `t = 0` equilibrium: `q_i = 1/(3 + tanh γ)`, `p_i = (1 + tanh γ)/(3 + tanh γ)`.
    pub fn t_zero(&self) -> (f64, f64) {
        let denom = 3.0 + self.tanh;
        (1.0 / denom, (1.0 + self.tanh) / denom)
    }
}

/// Residual and its analytic Jacobian in prices.
///
/// The boundary consumer's individual demand `d = 1 - p1 - t(r - r1)` is the
/// same seen from either firm, so `2t det J = 2t r(1 - r) + d` and
/// `2t (J22 - tanh γ J12) = -2t(1 - r) - (1 + tanh γ) d`. Written this way the
/// residual has no `1/t` terms to cancel, and `dd/dp_k = -1/2`.
pub(crate) fn foc_system(prices: PricePair, cfg: &MarketConfig, tanh: f64) -> ([f64; 2], Mat2) {
    let t = cfg.t();
    let (q, r) = demand_unchecked(prices, cfg);
    let j = jacobian_unchecked(prices, cfg);
    let d = 1.0 - prices.p1 - t * (r - cfg.r1());
    let det = 2.0 * t * r * (1.0 - r) + d;
    let a1 = -2.0 * t * (1.0 - r) - (1.0 + tanh) * d;
    let a2 = -2.0 * t * r - (1.0 + tanh) * d;
    let res = [prices.p1 * det + q.q1 * a1, prices.p2 * det + q.q2 * a2];

    // dr/dp = (-1, 1) / 2t.
    let half = 0.5 * (1.0 + tanh);
    let ddet = [-(1.0 - 2.0 * r) - 0.5, (1.0 - 2.0 * r) - 0.5];
    let da1 = [half - 1.0, half + 1.0];
    let da2 = [half + 1.0, half - 1.0];
    let mut jac = [[0.0; 2]; 2];
    for k in 0..2 {
        let own1 = if k == 0 { det } else { 0.0 };
        let own2 = if k == 1 { det } else { 0.0 };
        jac[0][k] = own1 + prices.p1 * ddet[k] + j[0][k] * a1 + q.q1 * da1[k];
        jac[1][k] = own2 + prices.p2 * ddet[k] + j[1][k] * a2 + q.q2 * da2[k];
    }
    (res, jac)
}

/// Checked residual used by the public `*_foc_residual` functions.
pub(crate) fn foc_residual(
    prices: PricePair,
    cfg: &MarketConfig,
    tanh: f64,
) -> Result<[f64; 2], ModelError> {
    if cfg.is_zero_transport() {
        return Err(ModelError::DegenerateTransport { t: cfg.t() });
    }
    let det = det2(&jacobian_unchecked(prices, cfg));
    if det.abs() < SINGULAR_DET {
        return Err(ModelError::SingularJacobian { det });
    }
    Ok(foc_system(prices, cfg, tanh).0)
}

/// Residual tolerance actually demanded. Prices carry rounding error of order
/// `eps`, which moves the boundary by `eps / 2t`; below `|t| ~ 1e-4` that floor
/// exceeds the requested tolerance.
fn effective_tol(settings: &SolverSettings, cfg: &MarketConfig) -> f64 {
    settings.tol.max(f64::EPSILON / cfg.t().abs())
}

fn newton_at(
    cfg: &MarketConfig,
    ent: &Entanglement,
    guess: PricePair,
    settings: &SolverSettings,
) -> NewtonOutcome {
    let ns = NewtonSettings {
        tol: effective_tol(settings, cfg),
        max_iter: settings.max_iter,
        max_halvings: settings.damping,
    };
    damped_newton(
        |p| Some(foc_system(PricePair::from_array(p), cfg, ent.tanh)),
        guess.to_array(),
        &ns,
    )
}

fn t_zero_prices(ent: &Entanglement) -> PricePair {
    let (_, p) = ent.t_zero();
    PricePair::new(p, p)
}

fn closed_form(cfg: &MarketConfig, ent: &Entanglement) -> Equilibrium {
    let (q, p) = ent.t_zero();
    let prices = PricePair::new(p, p);
    let quantities = QuantityPair::new(q, q);
    let strategies = strategies_from_quantities(quantities, ent.gamma);
    Equilibrium {
        prices,
        quantities,
        strategies,
        boundary: 0.5 * (cfg.r1() + cfg.r2()),
        profits: profit(prices, quantities),
        residual_norm: 0.0,
        iterations: 0,
        converged: true,
        branch: Branch::TZeroClosedForm,
        negative_strategy: strategies.min() < -NEGATIVE_STRATEGY_TOL,
    }
}

fn assemble(
    prices: PricePair,
    cfg: &MarketConfig,
    ent: &Entanglement,
    out: &NewtonOutcome,
    iterations: usize,
    branch: Branch,
) -> Equilibrium {
    let (quantities, boundary) = demand_unchecked(prices, cfg);
    let strategies = strategies_from_quantities(quantities, ent.gamma);
    Equilibrium {
        prices,
        quantities,
        strategies,
        boundary,
        profits: profit(prices, quantities),
        residual_norm: out.residual_norm,
        iterations,
        converged: false,
        branch,
        negative_strategy: strategies.min() < -NEGATIVE_STRATEGY_TOL,
    }
}

/// Second difference of firm `firm`'s profit along its own deviation
/// direction, per unit of own quantity squared.
pub(crate) fn own_curvature(
    eq: &Equilibrium,
    cfg: &MarketConfig,
    ent: &Entanglement,
    firm: Firm,
) -> Result<f64, ModelError> {
    let dir = ent.direction(firm);
    let i = firm.index();
    let base = eq.quantities.to_array();
    let value = |s: f64| -> Result<f64, ModelError> {
        let q = QuantityPair::new(base[0] + s * dir[0], base[1] + s * dir[1]);
        let p = prices_from_quantities(q, cfg, eq.prices)?;
        Ok(p.to_array()[i] * q.to_array()[i])
    };
    let h = SOC_STEP;
    Ok((value(h)? - 2.0 * value(0.0)? + value(-h)?) / (h * h))
}

fn accept(
    mut eq: Equilibrium,
    cfg: &MarketConfig,
    ent: &Entanglement,
    settings: &SolverSettings,
) -> Result<Equilibrium, SolveError> {
    let open_unit = |v: f64| v > 0.0 && v < 1.0;
    let reason = if !(open_unit(eq.prices.p1) && open_unit(eq.prices.p2)) {
        Some(Rejection::PriceOutOfRange)
    } else if !(open_unit(eq.quantities.q1) && open_unit(eq.quantities.q2)) {
        Some(Rejection::QuantityOutOfRange)
    } else if !open_unit(eq.boundary) {
        Some(Rejection::BoundaryOutOfRange)
    } else if Firm::BOTH
        .iter()
        .any(|&f| !matches!(own_curvature(&eq, cfg, ent, f), Ok(c) if c < 0.0))
    {
        Some(Rejection::NotMaximum)
    } else {
        None
    };
    debug_assert!(cfg.is_zero_transport() || eq.residual_norm <= effective_tol(settings, cfg));
    match reason {
        None => {
            eq.converged = true;
            Ok(eq)
        }
        Some(reason) => Err(SolveError::Rejected {
            equilibrium: Box::new(eq),
            reason,
        }),
    }
}

/// Tracks the root from the `t = 0` solution to `cfg.t()` in steps of at most
/// `homotopy_step`, halving the step on failure.
fn continuation(
    cfg: &MarketConfig,
    ent: &Entanglement,
    settings: &SolverSettings,
) -> Result<(NewtonOutcome, usize), SolveError> {
    let target = cfg.t().abs();
    let sign = cfg.t().signum();
    let mut prices = t_zero_prices(ent);
    let mut done = 0.0;
    let mut step = settings.homotopy_step;
    let mut iterations = 0;
    let mut last = None;
    while done < target {
        let next = (done + step).min(target);
        let stage = cfg.with_transport(sign * next)?;
        let out = newton_at(&stage, ent, prices, settings);
        iterations += out.iterations;
        if out.converged {
            prices = PricePair::from_array(out.x);
            done = next;
            step = (2.0 * step).min(settings.homotopy_step);
            last = Some(out);
        } else {
            step *= 0.5;
            if step < MIN_HOMOTOPY_STEP {
                return Err(SolveError::NonConvergence {
                    last: prices,
                    residual: out.residual_norm,
                    iterations,
                });
            }
        }
    }
    // `target` is above the degenerate threshold, so at least one stage ran.
    Ok((last.expect("continuation ran at least one stage"), iterations))
}

/// Cold-start Newton, then continuation in `t` if that fails or lands on an
/// inadmissible root.
pub(crate) fn solve_subgame(
    cfg: &MarketConfig,
    gamma: f64,
    settings: &SolverSettings,
) -> Result<Equilibrium, SolveError> {
    settings.validate()?;
    let ent = Entanglement::new(gamma)?;
    if cfg.is_zero_transport() {
        return Ok(closed_form(cfg, &ent));
    }
    let cold = newton_at(cfg, &ent, t_zero_prices(&ent), settings);
    let first_error = if cold.converged {
        let eq = assemble(
            PricePair::from_array(cold.x),
            cfg,
            &ent,
            &cold,
            cold.iterations,
            Branch::Newton,
        );
        match accept(eq, cfg, &ent, settings) {
            Ok(eq) => return Ok(eq),
            Err(e) => e,
        }
    } else {
        SolveError::NonConvergence {
            last: PricePair::from_array(cold.x),
            residual: cold.residual_norm,
            iterations: cold.iterations,
        }
    };
    match continuation(cfg, &ent, settings) {
        Ok((out, iterations)) => {
            let eq = assemble(
                PricePair::from_array(out.x),
                cfg,
                &ent,
                &out,
                iterations + cold.iterations,
                Branch::Homotopy,
            );
            accept(eq, cfg, &ent, settings)
        }
        Err(_) => Err(first_error),
    }
}

/// Branch-tracked root by continuation from `t = 0`, returned even when it is
/// not an admissible equilibrium (`converged` is then false). Used where the
/// root must be followed past the point where a price or profit turns negative.
pub fn track_equilibrium(
    cfg: &MarketConfig,
    gamma: f64,
    settings: &SolverSettings,
) -> Result<Equilibrium, SolveError> {
    settings.validate()?;
    let ent = Entanglement::new(gamma)?;
    if cfg.is_zero_transport() {
        return Ok(closed_form(cfg, &ent));
    }
    let (out, iterations) = continuation(cfg, &ent, settings)?;
    let eq = assemble(
        PricePair::from_array(out.x),
        cfg,
        &ent,
        &out,
        iterations,
        Branch::Homotopy,
    );
    match accept(eq, cfg, &ent, settings) {
        Ok(eq) => Ok(eq),
        Err(SolveError::Rejected { equilibrium, .. }) => Ok(*equilibrium),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_residual_jacobian_matches_finite_differences() {
        let h = 1e-7;
        for (tanh, t) in [(0.0, 0.2), (0.76, -0.3), (0.9999, 0.6)] {
            let cfg = MarketConfig::new(0.3, 0.6, t).unwrap();
            let p = PricePair::new(0.37, 0.41);
            let (_, jac) = foc_system(p, &cfg, tanh);
            for k in 0..2 {
                let mut plus = p.to_array();
                let mut minus = p.to_array();
                plus[k] += h;
                minus[k] -= h;
                let (rp, _) = foc_system(PricePair::from_array(plus), &cfg, tanh);
                let (rm, _) = foc_system(PricePair::from_array(minus), &cfg, tanh);
                for i in 0..2 {
                    let fd = (rp[i] - rm[i]) / (2.0 * h);
                    assert!((fd - jac[i][k]).abs() < 1e-6, "{fd} vs {}", jac[i][k]);
                }
            }
        }
    }

    #[test]
    fn residual_vanishes_at_brute_force_classical_optimum() {
        // Independent route: firm 1's optimal quantity against q2 fixed, found
        // by golden-section search on profit after inverting demand.
        let cfg = MarketConfig::new(0.3, 0.6, 0.2).unwrap();
        let eq = solve_subgame(&cfg, 0.0, &SolverSettings::default()).unwrap();
        let q2 = eq.quantities.q2;
        let pi1 = |q1: f64| {
            let p = prices_from_quantities(QuantityPair::new(q1, q2), &cfg, eq.prices).unwrap();
            p.p1 * q1
        };
        let (mut a, mut b) = (0.2, 0.4);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if pi1(c) > pi1(d) {
                b = d;
            } else {
                a = c;
            }
        }
        assert!((0.5 * (a + b) - eq.quantities.q1).abs() < 1e-6);
    }

    #[test]
    fn continuation_matches_cold_start_on_moderate_t() {
        let s = SolverSettings::default();
        for t in [-0.4, 0.3, 0.8] {
            let cfg = MarketConfig::new(0.2, 0.65, t).unwrap();
            let a = solve_subgame(&cfg, 0.0, &s).unwrap();
            let b = track_equilibrium(&cfg, 0.0, &s).unwrap();
            assert!((a.prices.p1 - b.prices.p1).abs() < 1e-10);
            assert!((a.prices.p2 - b.prices.p2).abs() < 1e-10);
        }
    }

    #[test]
    fn tracked_root_may_be_inadmissible() {
        let cfg = MarketConfig::new(0.3, 0.6, -1.2).unwrap();
        let eq = track_equilibrium(&cfg, 0.0, &SolverSettings::default()).unwrap();
        assert!(!eq.converged);
        assert!(eq.min_profit() < 0.0);
    }
}

//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string; errors come back as `{"error": ...}`
//! so the page never has to catch a thrown value.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use spatial_cournot::{
    best_response, quantum_benefit, solve_quantum, Equilibrium, Firm, GameParams, MarketConfig,
    OracleSettings,
};

const GAMMA_MAX: f64 = 30.0;
const MAX_POINTS: usize = 401;

#[derive(Serialize)]
struct SolveOut {
    p1: f64,
    p2: f64,
    q1: f64,
    q2: f64,
    x1: f64,
    x2: f64,
    r: f64,
    pi1: f64,
    pi2: f64,
    residual: f64,
    iterations: usize,
    branch: &'static str,
    negative_strategy: bool,
}

impl From<&Equilibrium> for SolveOut {
    fn from(e: &Equilibrium) -> Self {
        Self {
            p1: e.prices.p1,
            p2: e.prices.p2,
            q1: e.quantities.q1,
            q2: e.quantities.q2,
            x1: e.strategies.x1,
            x2: e.strategies.x2,
            r: e.boundary,
            pi1: e.profits[0],
            pi2: e.profits[1],
            residual: e.residual_norm,
            iterations: e.iterations,
            branch: e.branch.as_str(),
            negative_strategy: e.negative_strategy,
        }
    }
}

#[derive(Serialize)]
struct BenefitCurve {
    t: Vec<f64>,
    /// `null` where either game has no admissible equilibrium.
    benefit1: Vec<Option<f64>>,
    benefit2: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct ReactionCurves {
    equilibrium: [f64; 2],
    /// `(x2, BR1(x2))` pairs.
    firm1: Vec<[f64; 2]>,
    /// `(x1, BR2(x1))` pairs.
    firm2: Vec<[f64; 2]>,
}

fn to_json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

fn check_gamma(gamma: f64) -> Result<(), String> {
    if (0.0..=GAMMA_MAX).contains(&gamma) {
        Ok(())
    } else {
        Err(format!("gamma = {gamma} violates 0 <= gamma <= {GAMMA_MAX}"))
    }
}

fn check_points(n: usize) -> Result<(), String> {
    if (2..=MAX_POINTS).contains(&n) {
        Ok(())
    } else {
        Err(format!("points = {n} must lie in [2, {MAX_POINTS}]"))
    }
}

fn solve_at(r1: f64, r2: f64, t: f64, gamma: f64) -> Result<(MarketConfig, Equilibrium), String> {
    check_gamma(gamma)?;
    let cfg = MarketConfig::new(r1, r2, t).map_err(|e| e.to_string())?;
    let eq = solve_quantum(&cfg, &GameParams::new(gamma)).map_err(|e| e.to_string())?;
    Ok((cfg, eq))
}

/// Equilibrium prices, quantities, strategies and profits.
#[wasm_bindgen]
pub fn solve(r1: f64, r2: f64, t: f64, gamma: f64) -> String {
    to_json(solve_at(r1, r2, t, gamma).map(|(_, eq)| SolveOut::from(&eq)))
}

/// Quantum benefit `Gamma_i` on `points` evenly spaced transport rates.
#[wasm_bindgen]
pub fn benefit_curve(r1: f64, r2: f64, gamma: f64, t_min: f64, t_max: f64, points: usize) -> String {
    let run = || -> Result<BenefitCurve, String> {
        check_gamma(gamma)?;
        check_points(points)?;
        if !(t_min.is_finite() && t_max.is_finite() && t_min < t_max) {
            return Err("need finite t_min < t_max".into());
        }
        let base = MarketConfig::new(r1, r2, t_min).map_err(|e| e.to_string())?;
        let params = GameParams::new(gamma);
        let mut out = BenefitCurve {
            t: Vec::with_capacity(points),
            benefit1: Vec::with_capacity(points),
            benefit2: Vec::with_capacity(points),
        };
        for k in 0..points {
            let t = t_min + (t_max - t_min) * k as f64 / (points - 1) as f64;
            let cfg = base.with_transport(t).map_err(|e| e.to_string())?;
            let g = quantum_benefit(&cfg, &params).ok();
            out.t.push(t);
            out.benefit1.push(g.map(|g| g[0]));
            out.benefit2.push(g.map(|g| g[1]));
        }
        Ok(out)
    };
    to_json(run())
}

/// Brute-force best-response curves around the equilibrium, in strategy
/// space. The rival's strategy spans `±span / cosh γ` around its equilibrium
/// value, so `span` is measured in quantity units.
#[wasm_bindgen]
pub fn reaction_curves(r1: f64, r2: f64, t: f64, gamma: f64, span: f64, points: usize) -> String {
    let run = || -> Result<ReactionCurves, String> {
        check_points(points)?;
        if !(span > 0.0 && span <= 0.5) {
            return Err(format!("span = {span} must lie in (0, 0.5]"));
        }
        let (cfg, eq) = solve_at(r1, r2, t, gamma)?;
        let settings = OracleSettings {
            grid_coarse: 5e-3,
            grid_fine: 5e-5,
            ..Default::default()
        };
        let half = span / gamma.cosh();
        let curve = |who: Firm| -> Vec<[f64; 2]> {
            let centre = eq.strategies.to_array()[who.rival().index()];
            (0..points)
                .filter_map(|k| {
                    let x = centre - half + 2.0 * half * k as f64 / (points - 1) as f64;
                    let br = best_response(x, who, &cfg, gamma, &settings);
                    br.found().then_some([x, br.value])
                })
                .collect()
        };
        Ok(ReactionCurves {
            equilibrium: eq.strategies.to_array(),
            firm1: curve(Firm::One),
            firm2: curve(Firm::Two),
        })
    };
    to_json(run())
}

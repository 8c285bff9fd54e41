//! Brute-force Nash checks: grid-search best responses with the rival's
//! strategy held fixed, and best-response iteration from cold starts.
//!
//! The own strategy is the quantity in the classical game and the
//! displacement `x_i` when `gamma > 0`. Grid steps are measured in units of
//! own quantity, so the displacement step is `step / cosh γ`. The scan covers
//! every own strategy that keeps both quantities in `[0, 1]`; that range can
//! include slightly negative displacements, which are allowed here and
//! flagged by the solver instead.

use serde::Serialize;

use crate::equilibrium::Equilibrium;
use crate::market::{prices_from_quantities, Firm, MarketConfig, PricePair, QuantityPair};
use crate::quantum::{quantum_quantities, strategies_from_quantities, StrategyPair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSettings {
    pub grid_coarse: f64,
    pub grid_fine: f64,
    /// Largest tolerated profit gain from a unilateral deviation.
    pub deviation_tol: f64,
    /// Largest tolerated distance between a best response and the candidate.
    pub match_tol: f64,
    pub max_sweeps: usize,
    /// Convergence threshold of best-response iteration.
    pub sweep_tol: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            grid_coarse: 1e-3,
            grid_fine: 1e-5,
            deviation_tol: 1e-6,
            match_tol: 1e-4,
            max_sweeps: 200,
            sweep_tol: 1e-6,
        }
    }
}

/// Result of one grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestResponse {
    /// Own strategy maximizing profit; `NaN` when no cell was admissible.
    pub value: f64,
    pub profit: f64,
    pub evaluated: usize,
    /// Cells with no admissible price root.
    pub skipped: usize,
    /// The coarse argmax sat on the upper end of the scan range.
    pub edge_hit: bool,
}

impl BestResponse {
    pub fn found(&self) -> bool {
        self.value.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub max_deviation_gain: f64,
    pub best_deviation: f64,
    /// Firm achieving `max_deviation_gain`.
    pub deviating_firm: usize,
    pub gains: [f64; 2],
    pub best_responses: [f64; 2],
    pub grid_coarse: f64,
    pub grid_fine: f64,
    pub iterations: usize,
    pub agrees: bool,
    pub skipped_cells: usize,
    pub edge_hit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationResult {
    pub strategies: StrategyPair,
    pub converged: bool,
    pub sweeps: usize,
}

/// Own-strategy range keeping both quantities in `[0, 1]` with the rival at
/// `opponent`. Empty ranges come back with `lo > hi`.
fn scan_range(opponent: f64, gamma: f64) -> (f64, f64) {
    if gamma == 0.0 {
        return if (0.0..=1.0).contains(&opponent) {
            (0.0, 1.0)
        } else {
            (1.0, 0.0)
        };
    }
    let (c, s) = (gamma.cosh(), gamma.sinh());
    // q_own = x c + opponent s, q_rival = opponent c + x s.
    let lo = (-opponent * s / c).max(-opponent * c / s);
    let hi = ((1.0 - opponent * s) / c).min((1.0 - opponent * c) / s);
    (lo, hi)
}

struct ProfitEval<'a> {
    cfg: &'a MarketConfig,
    gamma: f64,
    who: Firm,
    opponent: f64,
    guess: PricePair,
    evaluated: usize,
    skipped: usize,
}

impl ProfitEval<'_> {
    fn pair(&self, own: f64) -> StrategyPair {
        match self.who {
            Firm::One => StrategyPair::new(own, self.opponent),
            Firm::Two => StrategyPair::new(self.opponent, own),
        }
    }

    fn profit(&mut self, own: f64) -> f64 {
        self.evaluated += 1;
        let q = quantum_quantities(self.pair(own), self.gamma);
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(in_unit(q.q1) && in_unit(q.q2)) {
            self.skipped += 1;
            return f64::NEG_INFINITY;
        }
        match prices_from_quantities(q, self.cfg, self.guess) {
            Ok(p) => {
                self.guess = p;
                p.get(self.who) * q.get(self.who)
            }
            Err(_) => {
                self.skipped += 1;
                f64::NEG_INFINITY
            }
        }
    }
}

/// Lowest-index argmax of `profit` over `lo, lo + step, ...` up to `hi`.
fn scan(eval: &mut ProfitEval, lo: f64, hi: f64, step: f64) -> Option<(usize, usize, f64, f64)> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut best: Option<(usize, f64, f64)> = None;
    for k in 0..=n {
        let x = lo + k as f64 * step;
        let v = eval.profit(x);
        if v.is_finite() && best.is_none_or(|(_, _, b)| v > b) {
            best = Some((k, x, v));
        }
    }
    best.map(|(k, x, v)| (k, n, x, v))
}

/// Grid-search best response of firm `who` against the rival's strategy
/// `opponent_value` (a quantity when `gamma = 0`, a displacement otherwise).
pub fn best_response(
    opponent_value: f64,
    who: Firm,
    cfg: &MarketConfig,
    gamma: f64,
    settings: &OracleSettings,
) -> BestResponse {
    let scale = if gamma == 0.0 { 1.0 } else { gamma.cosh() };
    let coarse = settings.grid_coarse / scale;
    let fine = settings.grid_fine / scale;
    let (lo, hi) = scan_range(opponent_value, gamma);
    let start_q = (1.0 - opponent_value.clamp(0.0, 1.0)) / 2.0;
    let mut eval = ProfitEval {
        cfg,
        gamma,
        who,
        opponent: opponent_value,
        guess: PricePair::new(start_q, start_q),
        evaluated: 0,
        skipped: 0,
    };
    let none = |eval: &ProfitEval| BestResponse {
        value: f64::NAN,
        profit: f64::NEG_INFINITY,
        evaluated: eval.evaluated,
        skipped: eval.skipped,
        edge_hit: false,
    };
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return none(&eval);
    }
    let Some((k, n, x_coarse, _)) = scan(&mut eval, lo, hi, coarse) else {
        return none(&eval);
    };
    let edge_hit = k == n && n > 0;

    let f_lo = (x_coarse - coarse).max(lo);
    let f_hi = (x_coarse + coarse).min(hi);
    // Re-evaluating the coarse argmax warms the inversion guess.
    let _ = eval.profit(x_coarse);
    let (_, _, mut x, mut v) = scan(&mut eval, f_lo, f_hi, fine).expect("coarse argmax is admissible");

    // Parabolic vertex through the fine argmax and its neighbours.
    let left = eval.profit(x - fine);
    let right = eval.profit(x + fine);
    let curvature = left - 2.0 * v + right;
    if left.is_finite() && right.is_finite() && curvature < 0.0 {
        let offset = 0.5 * fine * (left - right) / curvature;
        let xv = x + offset.clamp(-fine, fine);
        if (lo..=hi).contains(&xv) {
            let vv = eval.profit(xv);
            if vv >= v {
                x = xv;
                v = vv;
            }
        }
    }
    BestResponse {
        value: x,
        profit: v,
        evaluated: eval.evaluated,
        skipped: eval.skipped,
        edge_hit,
    }
}

/// Checks that neither firm gains more than `deviation_tol` by deviating from
/// `candidate` and that both best responses are within `match_tol` of it.
pub fn verify_equilibrium(
    candidate: &Equilibrium,
    cfg: &MarketConfig,
    gamma: f64,
    settings: &OracleSettings,
) -> OracleReport {
    let own = candidate.strategies.to_array();
    let responses = Firm::BOTH.map(|f| best_response(own[f.rival().index()], f, cfg, gamma, settings));
    let gains = [0, 1].map(|i| responses[i].profit - candidate.profits[i]);
    let deviating_firm = if gains[1] > gains[0] { 1 } else { 0 };
    let best_responses = responses.map(|r| r.value);
    let agrees = (0..2).all(|i| {
        responses[i].found()
            && !responses[i].edge_hit
            && gains[i] <= settings.deviation_tol
            && (best_responses[i] - own[i]).abs() <= settings.match_tol
    });
    OracleReport {
        max_deviation_gain: gains[deviating_firm],
        best_deviation: best_responses[deviating_firm],
        deviating_firm,
        gains,
        best_responses,
        grid_coarse: settings.grid_coarse,
        grid_fine: settings.grid_fine,
        iterations: 1,
        agrees,
        skipped_cells: responses[0].skipped + responses[1].skipped,
        edge_hit: responses[0].edge_hit || responses[1].edge_hit,
    }
}

/// Alternating best responses from `start`, stopped once a full sweep moves
/// the pair by less than `sweep_tol`.
///
/// Each sweep applies `x2 -> G(x2) = BR2(BR1(x2))`. Under strong
/// entanglement the slope of `G` approaches one and plain iteration crawls,
/// so the next `x2` is a secant step on `h = G(x2) - x2`, safeguarded:
/// until `h` changes sign the step must point where the iteration itself
/// would move (otherwise `h` is followed with a doubling multiplier), and
/// once the root is bracketed every step stays inside the bracket.
pub fn best_response_iteration(
    start: StrategyPair,
    cfg: &MarketConfig,
    gamma: f64,
    settings: &OracleSettings,
) -> IterationResult {
    let sweep = |x2: f64| -> Option<(f64, f64)> {
        let r1 = best_response(x2, Firm::One, cfg, gamma, settings);
        if !r1.found() {
            return None;
        }
        let r2 = best_response(r1.value, Firm::Two, cfg, gamma, settings);
        r2.found().then_some((r1.value, r2.value))
    };
    let failed = |x: StrategyPair, sweeps| IterationResult {
        strategies: x,
        converged: false,
        sweeps,
    };

    let mut current = start;
    let mut previous: Option<(f64, f64)> = None;
    let mut anchor: Option<f64> = None;
    // Latest points with h > 0 and h < 0.
    let (mut rising, mut falling): (Option<f64>, Option<f64>) = (None, None);
    let mut boost = 1.0;
    let mut x2 = start.x2;
    for sweeps in 1..=settings.max_sweeps {
        let Some((x1_new, x2_new)) = sweep(x2) else {
            // No admissible response here: step back toward the last point
            // that had one.
            match anchor {
                Some(a) => {
                    x2 = a + 0.5 * (x2 - a);
                    continue;
                }
                None => return failed(current, sweeps),
            }
        };
        anchor = Some(x2);
        let next = StrategyPair::new(x1_new, x2_new);
        let h = x2_new - x2;
        let moved = (next.x1 - current.x1).abs().max((next.x2 - current.x2).abs());
        current = next;
        if h > 0.0 {
            rising = Some(x2);
        } else if h < 0.0 {
            falling = Some(x2);
        }

        let secant = match previous {
            Some((xa, ha)) if ha != h => Some(x2 - h * (x2 - xa) / (h - ha)),
            _ => None,
        };
        let proposal = match (rising, falling) {
            (Some(a), Some(b)) => {
                let (lo, hi) = (a.min(b), a.max(b));
                match secant {
                    Some(s) if s > lo && s < hi => s,
                    _ => 0.5 * (lo + hi),
                }
            }
            _ => match secant {
                Some(s) if (s - x2) * h > 0.0 => {
                    boost = 1.0;
                    s
                }
                _ => {
                    let step = x2 + boost * h;
                    boost *= 2.0;
                    step
                }
            },
        };
        let step = (proposal - x2).abs();
        if moved < settings.sweep_tol && step < settings.sweep_tol {
            return IterationResult {
                strategies: current,
                converged: true,
                sweeps,
            };
        }
        previous = Some((x2, h));
        x2 = proposal;
    }
    failed(current, settings.max_sweeps)
}

/// Quantity corners used as cold starts, mapped to strategies.
pub const CORNER_STARTS: [(f64, f64); 4] = [(0.1, 0.1), (0.1, 0.4), (0.4, 0.1), (0.4, 0.4)];

/// [`best_response_iteration`] from each of [`CORNER_STARTS`]. Distinct
/// fixed points are reported as found rather than reconciled.
pub fn multi_start_iteration(cfg: &MarketConfig, gamma: f64, settings: &OracleSettings) -> Vec<IterationResult> {
    CORNER_STARTS
        .iter()
        .map(|&(q1, q2)| {
            let start = strategies_from_quantities(QuantityPair::new(q1, q2), gamma);
            best_response_iteration(start, cfg, gamma, settings)
        })
        .collect()
}

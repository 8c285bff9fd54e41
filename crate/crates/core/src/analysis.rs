//! Parameter sweeps, threshold searches and ordering checks built on the
//! solvers.
//!
//! Cells and grid pairs are independent, so they are evaluated in parallel
//! when the `parallel` feature is on; results are always returned in grid
//! order and do not depend on the schedule.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::classical::solve_classical;
use crate::equilibrium::{Equilibrium, SolverSettings};
use crate::error::{AnalysisError, SolveError};
use crate::market::{Firm, MarketConfig};
use crate::quantum::{solve_quantum, GameParams};
use crate::subgame::track_equilibrium;

/// Differences below this count as zero in sign comparisons.
pub const SIGN_TOL: f64 = 1e-9;
/// Outward location step used by the location-incentive test in [`find_tg`].
pub const LOCATION_STEP: f64 = 1e-4;
/// Coarse step of the downward scan that brackets the critical allowance.
pub const ALLOWANCE_SCAN_STEP: f64 = 0.05;
/// Allowance search interval.
pub const ALLOWANCE_RANGE: (f64, f64) = (-1.5, 0.0);
/// Transport-rate interval of the `t_g` bisection. The lower end is kept off
/// zero because every profit is equal on the `t = 0` branch.
pub const TG_RANGE: (f64, f64) = (0.01, 1.0);

fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// `min, min + step, ...` up to `max` (inclusive within rounding), snapped to
/// 12 decimals so that values such as `0.5` come out exact.
pub fn grid_values(min: f64, max: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0 && min <= max && min.is_finite() && max.is_finite()) {
        return Vec::new();
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|k| ((min + k as f64 * step) * 1e12).round() / 1e12)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    R1,
    R2,
    T,
    Gamma,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::R1 => "r1",
            Axis::R2 => "r2",
            Axis::T => "t",
            Axis::Gamma => "gamma",
        }
    }

    fn is_location(self) -> bool {
        matches!(self, Axis::R1 | Axis::R2)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "r1" => Ok(Axis::R1),
            "r2" => Ok(Axis::R2),
            "t" => Ok(Axis::T),
            "gamma" => Ok(Axis::Gamma),
            _ => Err(format!("unknown axis '{s}' (expected r1, r2, t or gamma)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepQuantity {
    Price,
    Quantity,
    Profit,
    Benefit,
    Strategy,
}

impl SweepQuantity {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepQuantity::Price => "price",
            SweepQuantity::Quantity => "quantity",
            SweepQuantity::Profit => "profit",
            SweepQuantity::Benefit => "benefit",
            SweepQuantity::Strategy => "strategy",
        }
    }
}

impl FromStr for SweepQuantity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "price" => Ok(SweepQuantity::Price),
            "quantity" => Ok(SweepQuantity::Quantity),
            "profit" => Ok(SweepQuantity::Profit),
            "benefit" => Ok(SweepQuantity::Benefit),
            "strategy" => Ok(SweepQuantity::Strategy),
            _ => Err(format!(
                "unknown quantity '{s}' (expected price, quantity, profit, benefit or strategy)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisRange {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn new(axis: Axis, min: f64, max: f64, step: f64) -> Self {
        Self { axis, min, max, step }
    }

    pub fn values(&self) -> Vec<f64> {
        grid_values(self.min, self.max, self.step)
    }
}

/// Parameter values used for the axes that are not swept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub r1: f64,
    pub r2: f64,
    pub t: f64,
    pub gamma: f64,
}

impl Point {
    fn set(&mut self, axis: Axis, v: f64) {
        match axis {
            Axis::R1 => self.r1 = v,
            Axis::R2 => self.r2 = v,
            Axis::T => self.t = v,
            Axis::Gamma => self.gamma = v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub axis1: AxisRange,
    pub axis2: AxisRange,
    pub fixed: Point,
    pub quantity: SweepQuantity,
    pub settings: SolverSettings,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |m: String| Err(AnalysisError::InvalidSpec(m));
        if self.axis1.axis == self.axis2.axis {
            return bad(format!("axes must be distinct (both are {})", self.axis1.axis));
        }
        for a in [&self.axis1, &self.axis2] {
            if !(a.step > 0.0 && a.step.is_finite()) {
                return bad(format!("step of axis {} must be > 0", a.axis));
            }
            if !(a.min.is_finite() && a.max.is_finite() && a.min <= a.max) {
                return bad(format!("axis {} needs finite min <= max", a.axis));
            }
            if a.axis == Axis::Gamma && a.min < 0.0 {
                return bad("gamma must be >= 0".into());
            }
        }
        if !(self.fixed.gamma >= 0.0 && self.fixed.gamma.is_finite()) {
            return bad(format!("gamma = {} must be finite and >= 0", self.fixed.gamma));
        }
        if !self.fixed.t.is_finite() {
            return bad("t must be finite".into());
        }
        self.settings.validate()?;
        if self.points().is_empty() {
            return bad("grid has no admissible cells".into());
        }
        Ok(())
    }

    fn is_location_sweep(&self) -> bool {
        self.axis1.axis.is_location() || self.axis2.axis.is_location()
    }

    /// Cell parameters in grid order (axis 1 outer, axis 2 inner). Location
    /// sweeps keep only pairs with `r1 <= 0.5 <= r2` and `r1 < r2`.
    pub fn points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for &a in &self.axis1.values() {
            for &b in &self.axis2.values() {
                let mut p = self.fixed;
                p.set(self.axis1.axis, a);
                p.set(self.axis2.axis, b);
                if self.is_location_sweep() && !(p.r1 <= 0.5 && 0.5 <= p.r2 && p.r1 < p.r2) {
                    continue;
                }
                out.push(p);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub code: String,
    pub message: String,
}

impl From<&SolveError> for CellFailure {
    fn from(e: &SolveError) -> Self {
        Self {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub point: Point,
    pub equilibrium: Option<Equilibrium>,
    /// `Gamma_i`, filled when the sweep quantity is the benefit.
    pub benefit: Option<[f64; 2]>,
    pub failure: Option<CellFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.failure.is_some()).count()
    }
}

fn solve_point(p: &Point, want_benefit: bool, settings: &SolverSettings) -> SweepCell {
    let outcome = MarketConfig::new(p.r1, p.r2, p.t)
        .map_err(SolveError::from)
        .and_then(|cfg| {
            let params = GameParams {
                gamma: p.gamma,
                settings: *settings,
            };
            let q = solve_quantum(&cfg, &params)?;
            let benefit = if want_benefit {
                let c = solve_classical(&cfg, settings)?;
                Some([q.profits[0] - c.profits[0], q.profits[1] - c.profits[1]])
            } else {
                None
            };
            Ok((q, benefit))
        });
    match outcome {
        Ok((eq, benefit)) => SweepCell {
            point: *p,
            equilibrium: Some(eq),
            benefit,
            failure: None,
        },
        Err(e) => SweepCell {
            point: *p,
            equilibrium: None,
            benefit: None,
            failure: Some(CellFailure::from(&e)),
        },
    }
}

/// Solves every cell of the grid. Per-cell failures are recorded in the
/// cell and never abort the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, AnalysisError> {
    spec.validate()?;
    let want_benefit = spec.quantity == SweepQuantity::Benefit;
    let cells = par_map(&spec.points(), |p| solve_point(p, want_benefit, &spec.settings));
    Ok(SweepResult {
        spec: spec.clone(),
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub value: f64,
    /// Final bisection interval; the function differs in sign at its ends.
    pub bracket: (f64, f64),
    /// Location-grid step, for thresholds defined over a grid.
    pub grid_used: Option<f64>,
    pub evaluations: usize,
}

/// Location pairs `r1 in {step, .., 0.5}`, `r2 in {0.5, .., 1 - step}` with
/// `r1 < r2`.
pub fn location_grid(step: f64) -> Vec<(f64, f64)> {
    let r1s = grid_values(step, 0.5, step);
    let r2s = grid_values(0.5, 1.0 - step, step);
    r1s.iter()
        .flat_map(|&a| r2s.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
        .collect()
}

/// Location grid of the sweep tables: `r1 in {0.05, .., 0.5}`,
/// `r2 in {0.5, .., 0.95}`.
pub fn default_location_grid() -> Vec<(f64, f64)> {
    location_grid(0.05)
}

fn profits_at(r1: f64, r2: f64, t: f64, gamma: f64, settings: &SolverSettings) -> Result<[f64; 2], AnalysisError> {
    let cfg = MarketConfig::new(r1, r2, t)?;
    Ok(solve_quantum(&cfg, &GameParams { gamma, settings: *settings })?.profits)
}

/// Whether, at pair `(r1, r2)`, the firm nearer the centre earns strictly
/// more (asymmetric pairs only) and each firm loses profit by stepping
/// outward by [`LOCATION_STEP`].
fn centre_advantage(r1: f64, r2: f64, t: f64, gamma: f64, settings: &SolverSettings) -> Result<bool, AnalysisError> {
    let h = LOCATION_STEP;
    let base = profits_at(r1, r2, t, gamma, settings)?;
    let centrality = r1 - (1.0 - r2);
    if centrality.abs() > SIGN_TOL {
        let nearer = if centrality > 0.0 { 0 } else { 1 };
        if base[nearer] <= base[1 - nearer] {
            return Ok(false);
        }
    }
    if r1 - h >= 0.0 && profits_at(r1 - h, r2, t, gamma, settings)?[0] >= base[0] {
        return Ok(false);
    }
    if r2 + h <= 1.0 && profits_at(r1, r2 + h, t, gamma, settings)?[1] >= base[1] {
        return Ok(false);
    }
    Ok(true)
}

fn tg_predicate(
    pairs: &[(f64, f64)],
    t: f64,
    gamma: f64,
    settings: &SolverSettings,
) -> Result<bool, AnalysisError> {
    let results = par_map(pairs, |&(r1, r2)| centre_advantage(r1, r2, t, gamma, settings));
    for r in results {
        if !r? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Transport-rate threshold below which a firm always gains by being nearer
/// the market centre.
///
/// `P(t)` holds when, for every pair of [`location_grid`]`(grid_step)` plus
/// the near-agglomerated pair `(0.5 - h, 0.5 + h)`, the firm nearer the
/// centre earns strictly more and neither firm gains by moving outward by
/// `h` ([`LOCATION_STEP`]). Bisects on [`TG_RANGE`] to width `tol`.
pub fn find_tg(
    gamma: f64,
    grid_step: f64,
    tol: f64,
    settings: &SolverSettings,
) -> Result<ThresholdResult, AnalysisError> {
    if !(grid_step > 0.0 && grid_step <= 0.25) {
        return Err(AnalysisError::InvalidSpec(format!(
            "grid_step = {grid_step} must lie in (0, 0.25]"
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(AnalysisError::InvalidSpec(format!("tol = {tol} must be > 0")));
    }
    let mut pairs = location_grid(grid_step);
    pairs.push((0.5 - LOCATION_STEP, 0.5 + LOCATION_STEP));

    let (mut lo, mut hi) = TG_RANGE;
    let p_lo = tg_predicate(&pairs, lo, gamma, settings)?;
    let p_hi = tg_predicate(&pairs, hi, gamma, settings)?;
    let mut evaluations = 2;
    if p_lo == p_hi {
        return Err(AnalysisError::PredicateConstant { lo, hi, value: p_lo });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        if tg_predicate(&pairs, mid, gamma, settings)? == p_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdResult {
        value: 0.5 * (lo + hi),
        bracket: (lo, hi),
        grid_used: Some(grid_step),
        evaluations,
    })
}

/// Which profit defines the critical allowance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AllowanceTarget {
    /// `min_i Pi_i`: the first firm whose profit reaches zero.
    MinProfit,
    Firm(Firm),
}

/// Equilibrium profit used by [`find_critical_allowance`] at transport rate
/// `t`, following the root continuously from `t = 0` even past the point
/// where it stops being admissible.
pub fn allowance_profit(
    cfg: &MarketConfig,
    t: f64,
    gamma: f64,
    target: AllowanceTarget,
    settings: &SolverSettings,
) -> Result<f64, AnalysisError> {
    let eq = track_equilibrium(&cfg.with_transport(t)?, gamma, settings)?;
    Ok(match target {
        AllowanceTarget::MinProfit => eq.min_profit(),
        AllowanceTarget::Firm(f) => eq.profits[f.index()],
    })
}

/// Transport rate `t_c < 0` where the target profit first reaches zero
/// (`u_c = -t_c`). The bracket is found by stepping down from `t = 0` in
/// steps of [`ALLOWANCE_SCAN_STEP`] to [`ALLOWANCE_RANGE`]`.0`, then
/// bisected to width `tol`.
pub fn find_critical_allowance(
    cfg: &MarketConfig,
    gamma: f64,
    tol: f64,
    target: AllowanceTarget,
    settings: &SolverSettings,
) -> Result<ThresholdResult, AnalysisError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(AnalysisError::InvalidSpec(format!("tol = {tol} must be > 0")));
    }
    let f = |t: f64| allowance_profit(cfg, t, gamma, target, settings);
    let (lo_end, hi_end) = ALLOWANCE_RANGE;
    let steps = ((hi_end - lo_end) / ALLOWANCE_SCAN_STEP).round() as usize;
    let mut evaluations = 1;
    let f_top = f(hi_end)?;
    let mut upper = (hi_end, f_top);
    let mut bracket = None;
    for k in 1..=steps {
        let t = hi_end - k as f64 * ALLOWANCE_SCAN_STEP;
        let v = f(t)?;
        evaluations += 1;
        if (v > 0.0) != (upper.1 > 0.0) {
            bracket = Some((t, upper.0));
            break;
        }
        upper = (t, v);
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Err(AnalysisError::NoCrossing {
            lo: lo_end,
            hi: hi_end,
            f_lo: upper.1,
            f_hi: f_top,
        });
    };
    let positive_hi = f_top > 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        if (f(mid)? > 0.0) == positive_hi {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdResult {
        value: 0.5 * (lo + hi),
        bracket: (lo, hi),
        grid_used: None,
        evaluations,
    })
}

/// Profits of both games at one transport rate, for allowance comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AllowanceWitness {
    pub t: f64,
    pub quantum_profits: [f64; 2],
    pub classical_profits: [f64; 2],
}

/// First `t` on an even grid of `samples` interior points of `(lo, hi)`
/// where the entangled game has an admissible equilibrium with both profits
/// positive while some classical profit (followed from `t = 0`) is negative.
pub fn find_allowance_witness(
    cfg: &MarketConfig,
    gamma: f64,
    (lo, hi): (f64, f64),
    samples: usize,
    settings: &SolverSettings,
) -> Result<Option<AllowanceWitness>, AnalysisError> {
    for k in 1..=samples {
        let t = lo + (hi - lo) * k as f64 / (samples + 1) as f64;
        let c = cfg.with_transport(t)?;
        let quantum = track_equilibrium(&c, gamma, settings)?;
        let classical = track_equilibrium(&c, 0.0, settings)?;
        if quantum.converged && quantum.min_profit() > 0.0 && classical.min_profit() < 0.0 {
            return Ok(Some(AllowanceWitness {
                t,
                quantum_profits: quantum.profits,
                classical_profits: classical.profits,
            }));
        }
    }
    Ok(None)
}

fn sign(v: f64) -> i8 {
    if v > SIGN_TOL {
        1
    } else if v < -SIGN_TOL {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderingCell {
    pub r1: f64,
    pub r2: f64,
    /// Sign of `r1 - (1 - r2)`: positive when firm 1 is nearer the centre.
    pub centrality: i8,
    pub output: i8,
    pub price: i8,
    pub profit: i8,
}

impl OrderingCell {
    fn matches(&self, orientation: i8) -> bool {
        let c = self.centrality * orientation;
        self.output == c && self.price == c && self.profit == c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    pub t: f64,
    pub gamma: f64,
    pub cells: Vec<OrderingCell>,
    /// Output, price and profit differences all share the sign of centrality.
    pub aligned: bool,
    /// All three have the opposite sign: the peripheral firm sells more,
    /// charges more and earns more.
    pub anti_aligned: bool,
    /// Pairs breaking the pattern expected for the sign of `t`.
    pub violations: Vec<(f64, f64)>,
    pub failures: Vec<((f64, f64), CellFailure)>,
}

/// Signs of `q1 - q2`, `p1 - p2` and `Pi1 - Pi2` against centrality on every
/// pair of `grid`.
pub fn ordering_report(
    grid: &[(f64, f64)],
    t: f64,
    gamma: f64,
    settings: &SolverSettings,
) -> Result<OrderingReport, AnalysisError> {
    let mut cfgs = Vec::with_capacity(grid.len());
    for &(r1, r2) in grid {
        cfgs.push(MarketConfig::new(r1, r2, t)?);
    }
    let solved = par_map(&cfgs, |c| solve_quantum(c, &GameParams { gamma, settings: *settings }));
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for (&(r1, r2), result) in grid.iter().zip(solved) {
        match result {
            Ok(eq) => cells.push(OrderingCell {
                r1,
                r2,
                centrality: sign(r1 - (1.0 - r2)),
                output: sign(eq.quantities.q1 - eq.quantities.q2),
                price: sign(eq.prices.p1 - eq.prices.p2),
                profit: sign(eq.profits[0] - eq.profits[1]),
            }),
            Err(e) => failures.push(((r1, r2), CellFailure::from(&e))),
        }
    }
    let aligned = cells.iter().all(|c| c.matches(1));
    let anti_aligned = cells.iter().all(|c| c.matches(-1));
    let expected = if t >= 0.0 { 1 } else { -1 };
    let violations = cells
        .iter()
        .filter(|c| !c.matches(expected))
        .map(|c| (c.r1, c.r2))
        .collect();
    Ok(OrderingReport {
        t,
        gamma,
        cells,
        aligned,
        anti_aligned,
        violations,
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputPeak {
    pub r1: f64,
    pub r2: f64,
    pub total_output: f64,
    /// `|r1 - (1 - r2)| <= grid_step / 2`.
    pub symmetric: bool,
    /// Total output is constant over the grid to within [`SIGN_TOL`].
    pub flat: bool,
    /// Maximizer `a` of total output along the symmetric line `(a, 1 - a)`.
    pub symmetric_optimum: f64,
    pub symmetric_optimum_output: f64,
    pub cells_failed: usize,
}

fn total_output_at(a: f64, b: f64, t: f64, gamma: f64, settings: &SolverSettings) -> Result<f64, AnalysisError> {
    let cfg = MarketConfig::new(a, b, t)?;
    Ok(solve_quantum(&cfg, &GameParams { gamma, settings: *settings })?.total_output())
}

/// Location pair maximizing `q1 + q2` over [`location_grid`]`(grid_step)`
/// (lowest grid index wins ties), plus a golden-section refinement of the
/// optimum along the symmetric line.
pub fn aggregate_output_peak(
    t: f64,
    gamma: f64,
    grid_step: f64,
    settings: &SolverSettings,
) -> Result<OutputPeak, AnalysisError> {
    if !(grid_step > 0.0 && grid_step <= 0.25) {
        return Err(AnalysisError::InvalidSpec(format!(
            "grid_step = {grid_step} must lie in (0, 0.25]"
        )));
    }
    let grid = location_grid(grid_step);
    let totals = par_map(&grid, |&(a, b)| total_output_at(a, b, t, gamma, settings));
    let mut best: Option<(usize, f64)> = None;
    let (mut lowest, mut highest) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut cells_failed = 0;
    for (k, v) in totals.iter().enumerate() {
        match v {
            Ok(v) => {
                lowest = lowest.min(*v);
                highest = highest.max(*v);
                if best.is_none_or(|(_, b)| *v > b) {
                    best = Some((k, *v));
                }
            }
            Err(_) => cells_failed += 1,
        }
    }
    let Some((k, total_output)) = best else {
        return Err(match totals.into_iter().next() {
            Some(Err(e)) => e,
            _ => AnalysisError::InvalidSpec("empty location grid".into()),
        });
    };
    let (r1, r2) = grid[k];

    let objective = |a: f64| total_output_at(a, 1.0 - a, t, gamma, settings);
    let (symmetric_optimum, symmetric_optimum_output) = golden_max(objective, 0.0, 0.5 - 1e-6, 1e-10)?;
    Ok(OutputPeak {
        r1,
        r2,
        total_output,
        symmetric: (r1 - (1.0 - r2)).abs() <= grid_step / 2.0,
        flat: highest - lowest <= SIGN_TOL,
        symmetric_optimum,
        symmetric_optimum_output,
        cells_failed,
    })
}

fn golden_max<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64), AnalysisError>
where
    F: Fn(f64) -> Result<f64, AnalysisError>,
{
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s() -> SolverSettings {
        SolverSettings::default()
    }

    fn spec(axis1: AxisRange, axis2: AxisRange, fixed: Point, quantity: SweepQuantity) -> SweepSpec {
        SweepSpec {
            axis1,
            axis2,
            fixed,
            quantity,
            settings: s(),
        }
    }

    const BASE: Point = Point {
        r1: 0.3,
        r2: 0.6,
        t: 0.2,
        gamma: 0.0,
    };

    #[test]
    fn grid_values_are_snapped() {
        let v = grid_values(0.05, 0.5, 0.05);
        assert_eq!(v.len(), 10);
        assert_eq!(v[9], 0.5);
        assert_eq!(v[2], 0.15);
        assert!(grid_values(1.0, 0.0, 0.1).is_empty());
        assert_eq!(default_location_grid().len(), 10 * 10 - 1);
    }

    #[test]
    fn single_cell_sweep_equals_direct_solve() {
        let sp = spec(
            AxisRange::new(Axis::R1, 0.3, 0.3, 0.1),
            AxisRange::new(Axis::R2, 0.6, 0.6, 0.1),
            Point { gamma: 5.0, ..BASE },
            SweepQuantity::Price,
        );
        let res = run_sweep(&sp).unwrap();
        assert_eq!(res.cells.len(), 1);
        let cfg = MarketConfig::new(0.3, 0.6, 0.2).unwrap();
        let direct = solve_quantum(&cfg, &GameParams::new(5.0)).unwrap();
        assert_eq!(res.cells[0].equilibrium.as_ref(), Some(&direct));
    }

    #[test]
    fn location_sweep_mirror_cells_swap_firms() {
        let sp = spec(
            AxisRange::new(Axis::R1, 0.05, 0.5, 0.05),
            AxisRange::new(Axis::R2, 0.5, 0.95, 0.05),
            BASE,
            SweepQuantity::Profit,
        );
        let res = run_sweep(&sp).unwrap();
        assert_eq!(res.cells.len(), 99);
        assert_eq!(res.failures(), 0);
        let find = |r1: f64, r2: f64| {
            res.cells
                .iter()
                .find(|c| (c.point.r1 - r1).abs() < 1e-12 && (c.point.r2 - r2).abs() < 1e-12)
                .and_then(|c| c.equilibrium.clone())
        };
        let mut checked = 0;
        for cell in &res.cells {
            let (r1, r2) = (cell.point.r1, cell.point.r2);
            let Some(m) = find(1.0 - r2, 1.0 - r1) else { continue };
            let e = cell.equilibrium.as_ref().unwrap();
            assert!((e.quantities.q1 - m.quantities.q2).abs() < 1e-10);
            assert!((e.prices.p2 - m.prices.p1).abs() < 1e-10);
            assert!((e.profits[0] - m.profits[1]).abs() < 1e-10);
            checked += 1;
        }
        assert!(checked > 40);
    }

    #[test]
    fn location_sweep_skips_out_of_domain_pairs() {
        let sp = spec(
            AxisRange::new(Axis::R1, 0.4, 0.6, 0.1),
            AxisRange::new(Axis::R2, 0.4, 0.6, 0.1),
            BASE,
            SweepQuantity::Quantity,
        );
        let pts = sp.points();
        assert_eq!(pts.len(), 3);
        assert!(pts.iter().all(|p| p.r1 <= 0.5 && p.r2 >= 0.5 && p.r1 < p.r2));
    }

    #[test]
    fn benefit_sweep_peaks_at_zero_transport() {
        let sp = spec(
            AxisRange::new(Axis::T, 0.0, 1.0, 0.2),
            AxisRange::new(Axis::Gamma, 1.0, 5.0, 2.0),
            BASE,
            SweepQuantity::Benefit,
        );
        let res = run_sweep(&sp).unwrap();
        for (j, gamma) in [1.0, 3.0, 5.0].into_iter().enumerate() {
            let column: Vec<f64> = res
                .cells
                .iter()
                .skip(j)
                .step_by(3)
                .map(|c| {
                    assert_eq!(c.point.gamma, gamma);
                    let b = c.benefit.unwrap();
                    b[0] + b[1]
                })
                .collect();
            assert_eq!(column.len(), 6);
            assert!(column[1..].iter().all(|&v| v < column[0]));
        }
    }

    #[test]
    fn sweep_records_failures_without_aborting() {
        let sp = spec(
            AxisRange::new(Axis::T, -3.0, 0.0, 0.5),
            AxisRange::new(Axis::Gamma, 0.0, 0.0, 1.0),
            BASE,
            SweepQuantity::Profit,
        );
        let res = run_sweep(&sp).unwrap();
        assert_eq!(res.cells.len(), 7);
        assert!(res.failures() > 0);
        assert!(res.cells.last().unwrap().equilibrium.is_some());
        for c in &res.cells {
            assert_eq!(c.failure.is_some(), c.equilibrium.is_none());
        }
    }

    #[test]
    fn sweep_spec_validation() {
        let bad_axes = spec(
            AxisRange::new(Axis::T, 0.0, 1.0, 0.1),
            AxisRange::new(Axis::T, 0.0, 1.0, 0.1),
            BASE,
            SweepQuantity::Price,
        );
        assert!(matches!(run_sweep(&bad_axes), Err(AnalysisError::InvalidSpec(_))));
        let bad_step = spec(
            AxisRange::new(Axis::T, 0.0, 1.0, 0.0),
            AxisRange::new(Axis::Gamma, 0.0, 1.0, 0.1),
            BASE,
            SweepQuantity::Price,
        );
        assert!(run_sweep(&bad_step).is_err());
        let empty = spec(
            AxisRange::new(Axis::R1, 0.6, 0.9, 0.1),
            AxisRange::new(Axis::T, 0.0, 1.0, 0.5),
            BASE,
            SweepQuantity::Price,
        );
        assert!(run_sweep(&empty).is_err());
    }

    #[test]
    fn sweeps_are_reproducible() {
        let sp = spec(
            AxisRange::new(Axis::R1, 0.1, 0.5, 0.1),
            AxisRange::new(Axis::T, -0.4, 0.8, 0.4),
            Point { gamma: 2.0, ..BASE },
            SweepQuantity::Strategy,
        );
        assert_eq!(run_sweep(&sp).unwrap(), run_sweep(&sp).unwrap());
    }

    #[test]
    fn tg_bracket_straddles_predicate() {
        let r = find_tg(0.0, 0.05, 1e-3, &s()).unwrap();
        let (lo, hi) = r.bracket;
        assert!(hi - lo <= 1e-3 && lo <= r.value && r.value <= hi);
        let mut pairs = location_grid(0.05);
        pairs.push((0.5 - LOCATION_STEP, 0.5 + LOCATION_STEP));
        assert!(tg_predicate(&pairs, lo, 0.0, &s()).unwrap());
        assert!(!tg_predicate(&pairs, hi, 0.0, &s()).unwrap());
        assert_eq!(r.grid_used, Some(0.05));
    }

    #[test]
    fn tg_rejects_bad_grid() {
        assert!(find_tg(0.0, 0.3, 1e-3, &s()).is_err());
        assert!(find_tg(0.0, 0.05, 0.0, &s()).is_err());
    }

    #[test]
    fn classical_allowance_crossing() {
        let cfg = MarketConfig::new(0.3, 0.6, 0.0).unwrap();
        let r = find_critical_allowance(&cfg, 0.0, 1e-6, AllowanceTarget::MinProfit, &s()).unwrap();
        assert!(r.value < 0.0 && r.value > -1.5);
        let f = |t| allowance_profit(&cfg, t, 0.0, AllowanceTarget::MinProfit, &s()).unwrap();
        assert!(f(r.bracket.0) <= 0.0 && f(r.bracket.1) > 0.0);
        // Firm 2, farther from the centre, is the one driven to zero.
        let two = find_critical_allowance(&cfg, 0.0, 1e-6, AllowanceTarget::Firm(Firm::Two), &s()).unwrap();
        assert!((two.value - r.value).abs() < 1e-5);
    }

    #[test]
    fn allowance_without_crossing_is_an_error() {
        let cfg = MarketConfig::new(0.3, 0.6, 0.0).unwrap();
        let err = find_critical_allowance(&cfg, 5.0, 1e-6, AllowanceTarget::MinProfit, &s());
        assert!(matches!(err, Err(AnalysisError::NoCrossing { .. })), "{err:?}");
    }

    #[test]
    fn ordering_symmetric_cells_are_zero() {
        let grid = [(0.3, 0.7), (0.1, 0.9), (0.2, 0.7)];
        let r = ordering_report(&grid, 0.2, 0.0, &s()).unwrap();
        for c in &r.cells[..2] {
            assert_eq!((c.centrality, c.output, c.price, c.profit), (0, 0, 0, 0));
        }
        assert_eq!(r.cells[2].centrality, -1);
        assert!(r.aligned && r.violations.is_empty());
    }

    #[test]
    fn output_peak_is_flat_without_transport() {
        let p = aggregate_output_peak(0.0, 5.0, 0.05, &s()).unwrap();
        assert!(p.flat);
        let p = aggregate_output_peak(0.2, 0.0, 0.05, &s()).unwrap();
        assert!(!p.flat && p.symmetric);
    }
}

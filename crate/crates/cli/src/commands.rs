use clap::Args;
use serde::Serialize;

use spatial_cournot::analysis::{find_allowance_witness, ALLOWANCE_RANGE};
use spatial_cournot::{
    central_limit_quantum, find_critical_allowance, find_tg, run_sweep, solve_quantum,
    verify_equilibrium, AllowanceTarget, AnalysisError, Axis, AxisRange, Equilibrium, Firm,
    GameParams, MarketConfig, SweepQuantity, SweepSpec,
};
use spatial_cournot::analysis::{grid_values, Point, SweepCell};

use crate::render::{Cell, Table};
use crate::{check_gamma, AxisArg, CliError, OracleArgs, Range, SolverArgs};

pub struct Report {
    pub table: Table,
    pub exit_code: u8,
}

impl Report {
    fn ok(table: Table) -> Self {
        Self { table, exit_code: 0 }
    }
}

const EQUILIBRIUM_COLUMNS: [&str; 14] = [
    "p1", "p2", "q1", "q2", "x1", "x2", "r", "pi1", "pi2", "residual", "iterations", "branch",
    "converged", "negative_strategy",
];

fn equilibrium_cells(eq: Option<&Equilibrium>) -> Vec<Cell> {
    match eq {
        Some(e) => vec![
            e.prices.p1.into(),
            e.prices.p2.into(),
            e.quantities.q1.into(),
            e.quantities.q2.into(),
            e.strategies.x1.into(),
            e.strategies.x2.into(),
            e.boundary.into(),
            e.profits[0].into(),
            e.profits[1].into(),
            e.residual_norm.into(),
            e.iterations.into(),
            e.branch.as_str().into(),
            e.converged.into(),
            e.negative_strategy.into(),
        ],
        None => {
            let mut v = vec![Cell::Num(None); 11];
            v.extend([Cell::Text(String::new()), false.into(), false.into()]);
            v
        }
    }
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct SolveArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub r1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub r2: f64,
    /// Transport rate; negative values are allowances.
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    /// Entanglement parameter; 0 is the classical game.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub gamma: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
}

pub fn solve(a: &SolveArgs) -> Result<Report, CliError> {
    check_gamma(a.gamma)?;
    let cfg = MarketConfig::new(a.r1, a.r2, a.t)?;
    let settings = a.solver.settings()?;
    let eq = solve_quantum(&cfg, &GameParams { gamma: a.gamma, settings })?;
    let mut table = Table::new(EQUILIBRIUM_COLUMNS.to_vec());
    table.push(equilibrium_cells(Some(&eq)));
    Ok(Report::ok(table))
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct SweepArgs {
    /// Outer axis as AXIS:MIN:MAX:STEP (AXIS is r1, r2, t or gamma).
    #[arg(long, allow_hyphen_values = true)]
    pub x: AxisArg,
    /// Inner axis as AXIS:MIN:MAX:STEP.
    #[arg(long, allow_hyphen_values = true)]
    pub y: AxisArg,
    /// Emit only this pair of fields (price, quantity, profit, benefit, strategy).
    #[arg(long)]
    pub quantity: Option<SweepQuantity>,
    #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
    pub r1: f64,
    #[arg(long, default_value_t = 0.7, allow_hyphen_values = true)]
    pub r2: f64,
    #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub gamma: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
}

fn quantity_columns(q: SweepQuantity) -> [&'static str; 2] {
    match q {
        SweepQuantity::Price => ["p1", "p2"],
        SweepQuantity::Quantity => ["q1", "q2"],
        SweepQuantity::Profit => ["pi1", "pi2"],
        SweepQuantity::Benefit => ["benefit1", "benefit2"],
        SweepQuantity::Strategy => ["x1", "x2"],
    }
}

fn quantity_cells(q: SweepQuantity, cell: &SweepCell) -> [Cell; 2] {
    let pair = match (q, &cell.equilibrium) {
        (SweepQuantity::Benefit, _) => cell.benefit,
        (_, None) => None,
        (SweepQuantity::Price, Some(e)) => Some(e.prices.to_array()),
        (SweepQuantity::Quantity, Some(e)) => Some(e.quantities.to_array()),
        (SweepQuantity::Profit, Some(e)) => Some(e.profits),
        (SweepQuantity::Strategy, Some(e)) => Some(e.strategies.to_array()),
    };
    match pair {
        Some([a, b]) => [a.into(), b.into()],
        None => [Cell::Num(None), Cell::Num(None)],
    }
}

fn axis_value(p: &Point, axis: Axis) -> f64 {
    match axis {
        Axis::R1 => p.r1,
        Axis::R2 => p.r2,
        Axis::T => p.t,
        Axis::Gamma => p.gamma,
    }
}

fn check_axis(a: &AxisArg) -> Result<(), CliError> {
    if a.axis == Axis::Gamma {
        check_gamma(a.range.min)?;
        check_gamma(a.range.max)?;
    }
    Ok(())
}

fn status(cell: &SweepCell) -> Cell {
    match &cell.failure {
        Some(f) => f.code.as_str().into(),
        None => "ok".into(),
    }
}

fn sweep_table(spec: &SweepSpec, quantity: Option<SweepQuantity>) -> Result<Table, CliError> {
    let result = run_sweep(spec)?;
    let (ax1, ax2) = (spec.axis1.axis, spec.axis2.axis);
    let mut columns = vec![ax1.as_str(), ax2.as_str()];
    match quantity {
        Some(q) => columns.extend(quantity_columns(q)),
        None => columns.extend(EQUILIBRIUM_COLUMNS),
    }
    columns.push("status");
    let mut table = Table::new(columns);
    for cell in &result.cells {
        let mut row = vec![axis_value(&cell.point, ax1).into(), axis_value(&cell.point, ax2).into()];
        match quantity {
            Some(q) => row.extend(quantity_cells(q, cell)),
            None => row.extend(equilibrium_cells(cell.equilibrium.as_ref())),
        }
        row.push(status(cell));
        table.push(row);
    }
    table.note("cells", result.cells.len());
    table.note("failed", result.failures());
    if result.failures() == result.cells.len() {
        return Err(CliError::Compute(format!(
            "all {} cells failed; first: {}",
            result.cells.len(),
            result.cells[0].failure.as_ref().map_or("", |f| f.message.as_str())
        )));
    }
    Ok(table)
}

pub fn sweep(a: &SweepArgs) -> Result<Report, CliError> {
    check_gamma(a.gamma)?;
    check_axis(&a.x)?;
    check_axis(&a.y)?;
    let spec = SweepSpec {
        axis1: AxisRange::new(a.x.axis, a.x.range.min, a.x.range.max, a.x.range.step),
        axis2: AxisRange::new(a.y.axis, a.y.range.min, a.y.range.max, a.y.range.step),
        fixed: Point {
            r1: a.r1,
            r2: a.r2,
            t: a.t,
            gamma: a.gamma,
        },
        quantity: a.quantity.unwrap_or(SweepQuantity::Price),
        settings: a.solver.settings()?,
    };
    Ok(Report::ok(sweep_table(&spec, a.quantity)?))
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct BenefitArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub r1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub r2: f64,
    /// Transport rates as MIN:MAX:STEP or a single value.
    #[arg(long, default_value = "0:1:0.1", allow_hyphen_values = true)]
    pub t: Range,
    /// Entanglement levels as MIN:MAX:STEP or a single value.
    #[arg(long, default_value = "5")]
    pub gamma: Range,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
}

pub fn benefit(a: &BenefitArgs) -> Result<Report, CliError> {
    check_gamma(a.gamma.min)?;
    check_gamma(a.gamma.max)?;
    MarketConfig::new(a.r1, a.r2, a.t.min)?;
    let spec = SweepSpec {
        axis1: AxisRange::new(Axis::T, a.t.min, a.t.max, a.t.step),
        axis2: AxisRange::new(Axis::Gamma, a.gamma.min, a.gamma.max, a.gamma.step),
        fixed: Point {
            r1: a.r1,
            r2: a.r2,
            t: a.t.min,
            gamma: a.gamma.min,
        },
        quantity: SweepQuantity::Benefit,
        settings: a.solver.settings()?,
    };
    Ok(Report::ok(sweep_table(&spec, Some(SweepQuantity::Benefit))?))
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub gamma: f64,
    /// Step of the location grid the predicate is checked on.
    #[arg(long, default_value_t = 0.05)]
    pub grid: f64,
    /// Width of the final bisection bracket.
    #[arg(long = "bracket-tol", default_value_t = 1e-4)]
    pub bracket_tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
}

pub fn threshold(a: &ThresholdArgs) -> Result<Report, CliError> {
    check_gamma(a.gamma)?;
    let r = find_tg(a.gamma, a.grid, a.bracket_tol, &a.solver.settings()?)?;
    let mut table = Table::new(vec!["gamma", "t_g", "bracket_lo", "bracket_hi", "grid", "evaluations"]);
    table.push(vec![
        a.gamma.into(),
        r.value.into(),
        r.bracket.0.into(),
        r.bracket.1.into(),
        Cell::opt(r.grid_used),
        r.evaluations.into(),
    ]);
    Ok(Report::ok(table))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetArg {
    /// Whichever profit reaches zero first.
    Min,
    Firm1,
    Firm2,
}

impl From<TargetArg> for AllowanceTarget {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Min => AllowanceTarget::MinProfit,
            TargetArg::Firm1 => AllowanceTarget::Firm(Firm::One),
            TargetArg::Firm2 => AllowanceTarget::Firm(Firm::Two),
        }
    }
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct AllowanceArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub r1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub r2: f64,
    /// Entanglement parameter of the quantum game.
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value = "min")]
    pub target: TargetArg,
    #[arg(long = "bracket-tol", default_value_t = 1e-6)]
    pub bracket_tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
}

pub fn allowance(a: &AllowanceArgs) -> Result<Report, CliError> {
    check_gamma(a.gamma)?;
    let cfg = MarketConfig::new(a.r1, a.r2, 0.0)?;
    let settings = a.solver.settings()?;
    let mut table = Table::new(vec![
        "game", "gamma", "t_c", "u_c", "bracket_lo", "bracket_hi", "evaluations", "status",
    ]);
    let mut found = [None, None];
    for (k, (game, gamma)) in [("classical", 0.0), ("quantum", a.gamma)].into_iter().enumerate() {
        match find_critical_allowance(&cfg, gamma, a.bracket_tol, a.target.into(), &settings) {
            Ok(r) => {
                found[k] = Some(r.value);
                table.push(vec![
                    game.into(),
                    gamma.into(),
                    r.value.into(),
                    (-r.value).into(),
                    r.bracket.0.into(),
                    r.bracket.1.into(),
                    r.evaluations.into(),
                    "ok".into(),
                ]);
            }
            Err(AnalysisError::NoCrossing { .. }) => {
                let mut row = vec![game.into(), gamma.into()];
                row.extend(vec![Cell::Num(None); 4]);
                row.extend([Cell::Num(None), "no_crossing".into()]);
                table.push(row);
            }
            Err(e) => return Err(e.into()),
        }
    }
    table.note("search_range", vec![ALLOWANCE_RANGE.0, ALLOWANCE_RANGE.1]);
    if let [quantum_lo, Some(tc)] = [found[1], found[0]] {
        let lo = quantum_lo.unwrap_or(ALLOWANCE_RANGE.0);
        if lo < tc {
            let w = find_allowance_witness(&cfg, a.gamma, (lo, tc), 200, &settings)?;
            table.note(
                "witness",
                w.map(|w| {
                    serde_json::json!({
                        "t": crate::render::round_sig(w.t),
                        "quantum_profits": w.quantum_profits.map(crate::render::round_sig),
                        "classical_profits": w.classical_profits.map(crate::render::round_sig),
                    })
                }),
            );
        }
    }
    Ok(Report::ok(table))
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub point: SolveArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub oracle: OracleArgs,
}

pub fn verify(a: &VerifyArgs) -> Result<Report, CliError> {
    let p = &a.point;
    check_gamma(p.gamma)?;
    let oracle = a.oracle.settings()?;
    let cfg = MarketConfig::new(p.r1, p.r2, p.t)?;
    let eq = solve_quantum(&cfg, &GameParams { gamma: p.gamma, settings: p.solver.settings()? })?;
    let rep = verify_equilibrium(&eq, &cfg, p.gamma, &oracle);
    let mut table = Table::new(vec![
        "agrees", "max_deviation_gain", "deviating_firm", "gain1", "gain2", "x1", "x2", "br1",
        "br2", "skipped_cells", "edge_hit",
    ]);
    table.push(vec![
        rep.agrees.into(),
        rep.max_deviation_gain.into(),
        (rep.deviating_firm + 1).into(),
        rep.gains[0].into(),
        rep.gains[1].into(),
        eq.strategies.x1.into(),
        eq.strategies.x2.into(),
        rep.best_responses[0].into(),
        rep.best_responses[1].into(),
        rep.skipped_cells.into(),
        rep.edge_hit.into(),
    ]);
    table.note("grid_coarse", rep.grid_coarse);
    table.note("grid_fine", rep.grid_fine);
    if !rep.agrees {
        eprintln!(
            "oracle disagrees: firm {} gains {:e} by deviating",
            rep.deviating_firm + 1,
            rep.max_deviation_gain
        );
    }
    Ok(Report {
        table,
        exit_code: if rep.agrees { 0 } else { 3 },
    })
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct LimitsArgs {
    /// Transport rates as MIN:MAX:STEP or a single value.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Range,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub gamma: f64,
}

pub fn limits(a: &LimitsArgs) -> Result<Report, CliError> {
    check_gamma(a.gamma)?;
    let mut table = Table::new(vec!["t", "gamma", "q", "p"]);
    for t in grid_values(a.t.min, a.t.max, a.t.step) {
        let (q, p) = central_limit_quantum(t, a.gamma);
        table.push(vec![t.into(), a.gamma.into(), q.into(), p.into()]);
    }
    Ok(Report::ok(table))
}

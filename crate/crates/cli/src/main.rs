mod commands;
mod render;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use render::Format;
use spatial_cournot::{AnalysisError, Axis, ModelError, OracleSettings, SolveError, SolverSettings};

pub const GAMMA_MAX: f64 = 30.0;

#[derive(Debug, Parser)]
#[command(name = "spatial-cournot", version, about = "Cournot duopoly on a linear market, classical and entangled")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,

    /// Write output to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
enum Command {
    /// Solve one quantity subgame.
    Solve(commands::SolveArgs),
    /// Solve every cell of a two-axis grid.
    Sweep(commands::SweepArgs),
    /// Quantum benefit over a grid of transport rates and entanglement levels.
    Benefit(commands::BenefitArgs),
    /// Transport-rate threshold below which the central firm always earns more.
    Threshold(commands::ThresholdArgs),
    /// Critical transport allowance for the classical and entangled games.
    Allowance(commands::AllowanceArgs),
    /// Check a solution against brute-force best responses.
    Verify(commands::VerifyArgs),
    /// Equilibrium quantity and price as both firms approach the centre.
    Limits(commands::LimitsArgs),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Compute(String),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Compute(_) | CliError::Io(_) => 2,
        }
    }
}

fn model_is_usage(e: &ModelError) -> bool {
    matches!(e, ModelError::InvalidConfig(_) | ModelError::InvalidParameter(_))
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        if model_is_usage(&e) {
            CliError::Usage(e.to_string())
        } else {
            CliError::Compute(e.to_string())
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Model(m) => m.into(),
            other => CliError::Compute(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::InvalidSpec(m) => CliError::Usage(m),
            AnalysisError::Model(m) => m.into(),
            AnalysisError::Solve(s) => s.into(),
            other => CliError::Compute(other.to_string()),
        }
    }
}

/// `MIN:MAX:STEP`, or a single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("'{v}' is not a number"));
        let parts: Vec<&str> = s.split(':').collect();
        let r = match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                Range { min: v, max: v, step: 1.0 }
            }
            [a, b, c] => Range {
                min: num(a)?,
                max: num(b)?,
                step: num(c)?,
            },
            _ => return Err(format!("'{s}' is neither a value nor MIN:MAX:STEP")),
        };
        if !(r.min.is_finite() && r.max.is_finite() && r.min <= r.max) {
            return Err(format!("'{s}' needs finite MIN <= MAX"));
        }
        if !(r.step > 0.0 && r.step.is_finite()) {
            return Err(format!("'{s}' needs STEP > 0"));
        }
        Ok(r)
    }
}

/// `AXIS:MIN:MAX:STEP` with AXIS one of r1, r2, t, gamma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisArg {
    pub axis: Axis,
    pub range: Range,
}

impl FromStr for AxisArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("'{s}' is not AXIS:MIN:MAX:STEP"))?;
        Ok(AxisArg {
            axis: name.parse()?,
            range: rest.parse()?,
        })
    }
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct SolverArgs {
    /// Residual tolerance of the Newton solve.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

impl SolverArgs {
    pub fn settings(&self) -> Result<SolverSettings, CliError> {
        let s = SolverSettings {
            tol: self.tol,
            max_iter: self.max_iter,
            ..Default::default()
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct OracleArgs {
    /// Coarse best-response grid step, in quantity units.
    #[arg(long, default_value_t = 1e-3)]
    pub grid_coarse: f64,
    /// Fine grid step around the coarse maximum.
    #[arg(long, default_value_t = 1e-5)]
    pub grid_fine: f64,
    /// Largest tolerated gain from a unilateral deviation.
    #[arg(long, default_value_t = 1e-6)]
    pub deviation_tol: f64,
}

impl OracleArgs {
    pub fn settings(&self) -> Result<OracleSettings, CliError> {
        for (name, v) in [
            ("grid-coarse", self.grid_coarse),
            ("grid-fine", self.grid_fine),
            ("deviation-tol", self.deviation_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("--{name} = {v} must be > 0")));
            }
        }
        if self.grid_fine > self.grid_coarse {
            return Err(CliError::Usage("--grid-fine must not exceed --grid-coarse".into()));
        }
        Ok(OracleSettings {
            grid_coarse: self.grid_coarse,
            grid_fine: self.grid_fine,
            deviation_tol: self.deviation_tol,
            ..Default::default()
        })
    }
}

pub fn check_gamma(gamma: f64) -> Result<(), CliError> {
    if (0.0..=GAMMA_MAX).contains(&gamma) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("gamma = {gamma} violates 0 <= gamma <= {GAMMA_MAX}")))
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let report = match &cli.command {
        Command::Solve(a) => commands::solve(a)?,
        Command::Sweep(a) => commands::sweep(a)?,
        Command::Benefit(a) => commands::benefit(a)?,
        Command::Threshold(a) => commands::threshold(a)?,
        Command::Allowance(a) => commands::allowance(a)?,
        Command::Verify(a) => commands::verify(a)?,
        Command::Limits(a) => commands::limits(a)?,
    };
    let spec = serde_json::to_value(&cli.command).unwrap_or_default();
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.table.write(cli.format, spec, &mut w)?;
            w.flush()?;
        }
        None => report.table.write(cli.format, spec, io::stdout().lock())?,
    }
    Ok(report.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!("0.2".parse::<Range>().unwrap(), Range { min: 0.2, max: 0.2, step: 1.0 });
        let r: Range = "0:1:0.25".parse().unwrap();
        assert_eq!((r.min, r.max, r.step), (0.0, 1.0, 0.25));
        assert!("1:0:0.1".parse::<Range>().is_err());
        assert!("0:1:0".parse::<Range>().is_err());
        assert!("0:1".parse::<Range>().is_err());
        assert!("a".parse::<Range>().is_err());
    }

    #[test]
    fn axis_parsing() {
        let a: AxisArg = "gamma:0:5:1".parse().unwrap();
        assert_eq!(a.axis, Axis::Gamma);
        assert_eq!(a.range.max, 5.0);
        assert!("z:0:1:0.1".parse::<AxisArg>().is_err());
        assert!("r1".parse::<AxisArg>().is_err());
    }

    #[test]
    fn gamma_bounds() {
        assert!(check_gamma(0.0).is_ok() && check_gamma(30.0).is_ok());
        assert!(matches!(check_gamma(30.5), Err(CliError::Usage(_))));
        assert!(matches!(check_gamma(-0.1), Err(CliError::Usage(_))));
    }

    #[test]
    fn error_classes() {
        let e: CliError = SolveError::from(ModelError::InvalidConfig("x".into())).into();
        assert_eq!(e.exit_code(), 1);
        let e: CliError = AnalysisError::NoCrossing { lo: -1.0, hi: 0.0, f_lo: 1.0, f_hi: 1.0 }.into();
        assert_eq!(e.exit_code(), 2);
    }
}

//! Config-driven batch runs comparing the block method against stationary
//! corrections, Dyson quadrature and exact propagation.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;

use std::io::Write;
use std::path::{Path, PathBuf};

pub use config::{InitialState, Method, Metric, Problem, ProblemConfig, Requirement, Tolerances};
pub use error::CliError;
pub use output::{write_csv, ResultRow, Value, HEADER};
pub use runner::{check_requirements, run, scan_convergence, CheckOutcome, LoadedProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Scan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Scan => "scan",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub verify: bool,
}

/// Rows plus the outcome of every requirement that was checked.
#[derive(Debug, Clone)]
pub struct Report {
    pub config: ProblemConfig,
    pub rows: Vec<ResultRow>,
    pub checks: Vec<CheckOutcome>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

/// Loads, validates and evaluates a config without writing anything.
pub fn evaluate(command: Command, config_path: &Path, verify: bool) -> Result<Report, CliError> {
    let mut config = ProblemConfig::load(config_path)?;
    let mut requirements = config.require.clone();
    if verify {
        config = config.for_verification();
        for r in runner::verification_requirements(&config) {
            if !requirements.contains(&r) {
                requirements.push(r);
            }
        }
    }
    let problem = LoadedProblem::load(&config)?;
    let rows = match command {
        Command::Run => run(&config, &problem)?,
        Command::Scan => scan_convergence(&config, &problem)?,
    };
    let checks = check_requirements(&requirements, &rows);
    Ok(Report { config, rows, checks })
}

fn describe(c: &CheckOutcome) -> String {
    let r = &c.requirement;
    let pair = match r.method_b {
        Some(b) => format!("{}-{}", r.method_a, b),
        None => r.method_a.to_string(),
    };
    let order = r.order.map_or_else(String::new, |o| format!(" order {o}"));
    let bounds = match (r.min, r.max) {
        (Some(lo), Some(hi)) => format!("in [{lo:e}, {hi:e}]"),
        (None, Some(hi)) => format!("<= {hi:e}"),
        (Some(lo), None) => format!(">= {lo:e}"),
        (None, None) => String::new(),
    };
    let worst = match c.worst {
        Some(Value::Number(v)) => format!("{v:e}"),
        Some(Value::Floor) => "floor".into(),
        None => "no rows".into(),
    };
    let status = if c.passed { "pass" } else { "FAIL" };
    format!(
        "{status}: {pair} {}{order} {bounds} (worst {worst}, {} rows)",
        r.metric, c.matched
    )
}

/// Full CLI behavior: evaluate, write the table (and sidecar with `--out`),
/// report checks on `log`. Requirement breaches surface as an error after
/// the table has been written.
pub fn execute(inv: &Invocation, stdout: &mut dyn Write, log: &mut dyn Write) -> Result<Report, CliError> {
    let report = evaluate(inv.command, &inv.config, inv.verify)?;
    match &inv.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| CliError::Write {
                path: path.clone(),
                source: e,
            })?;
            write_csv(std::io::BufWriter::new(file), &report.rows)?;
            output::write_sidecar(
                &output::sidecar_path(path),
                inv.command.name(),
                inv.verify,
                &report.config,
            )?;
        }
        None => write_csv(&mut *stdout, &report.rows)?,
    }
    for c in &report.checks {
        let _ = writeln!(log, "{}", describe(c));
    }
    match report.failures() {
        0 => Ok(report),
        failed => Err(CliError::Requirement { failed }),
    }
}

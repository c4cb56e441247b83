//! Command-line front end: instance generation, solving, benchmark sweeps
//! and the self-test suite.

pub mod args;
pub mod bench;
pub mod selftest;

use std::fs;
use std::path::{Path, PathBuf};

use logdet_dspg::format::{problem_from_json, problem_to_json, trace_to_csv, ReportDoc};
use logdet_dspg::{generate, solve_with_method, InstanceSpec, Method, Problem, SolveReport, SolveStatus, SolverConfig, SolverError};
use thiserror::Error;

pub use args::{Cli, Command, MethodArg, StopArg};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELFTEST_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;
pub const EXIT_FAILURE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_INPUT
    }
}

pub fn status_exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::MaxIters | SolveStatus::TimeLimit => EXIT_LIMIT,
        SolveStatus::Failure => EXIT_FAILURE,
    }
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_owned(), source })
}

fn parse_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Parse { path: path.to_owned(), message: e.to_string() }
}

/// Solver configuration from `--config` plus flag overrides, validated.
pub fn load_config(cli: &Cli) -> Result<SolverConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => serde_json::from_str(&read_file(path)?).map_err(|e| parse_error(path, e))?,
        None => SolverConfig::default(),
    };
    if let Some(stop) = cli.stop {
        cfg.stop_rule = stop.into();
    }
    if let Some(k) = cli.max_iters {
        cfg.max_iters = k;
    }
    if let Some(t) = cli.time_limit {
        cfg.time_limit_seconds = t;
    }
    cfg.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(cfg)
}

pub fn load_spec(path: &Path, seed: Option<u64>) -> Result<InstanceSpec, CliError> {
    let mut spec: InstanceSpec = serde_json::from_str(&read_file(path)?).map_err(|e| parse_error(path, e))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate().map_err(|e| parse_error(path, e))?;
    Ok(spec)
}

pub fn load_problem(path: &Path) -> Result<Problem, CliError> {
    problem_from_json(&read_file(path)?).map_err(|e| parse_error(path, e))
}

/// Dispatches a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Generate { spec } => cmd_generate(cli, spec),
        Command::Solve { problem } => cmd_solve(cli, problem),
        Command::Bench { inputs } => bench::cmd_bench(cli, inputs),
        Command::Selftest => Ok(selftest::cmd_selftest(cli)),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}

pub fn cmd_generate(cli: &Cli, spec_path: &Path) -> Result<i32, CliError> {
    let spec = load_spec(spec_path, cli.seed)?;
    let problem = generate(&spec).map_err(|e| CliError::Invalid(e.to_string()))?;
    ensure_dir(&cli.out)?;
    let path = cli.out.join("problem.json");
    write_file(&path, &problem_to_json(&problem))?;
    println!(
        "wrote {}: n={} m={} H={} nnz(C)={}",
        path.display(),
        problem.dim(),
        problem.m(),
        problem.h(),
        problem.c().upper_nnz()
    );
    Ok(EXIT_OK)
}

/// File names for one method's outputs: plain names for a single method,
/// method-suffixed names when several run.
pub fn output_names(method: Method, several: bool) -> (String, String) {
    if several {
        (format!("report.{}.json", method.name()), format!("trace.{}.csv", method.name()))
    } else {
        ("report.json".to_owned(), "trace.csv".to_owned())
    }
}

pub fn cmd_solve(cli: &Cli, problem_path: &Path) -> Result<i32, CliError> {
    let cfg = load_config(cli)?;
    let problem = load_problem(problem_path)?;
    let methods = cli.method.unwrap_or(MethodArg::Dspg).methods();
    ensure_dir(&cli.out)?;
    let mut code = EXIT_OK;
    for &method in &methods {
        let (report_name, trace_name) = output_names(method, methods.len() > 1);
        let (doc, trace) = match solve_with_method(&problem, &cfg, method) {
            Ok(r) => {
                summarize(method, &r);
                (ReportDoc::from_report(&r), Some(trace_to_csv(&r.trace)))
            }
            Err(SolverError::InfeasibleStart(e)) => {
                eprintln!("{}: initial point is not dual feasible: {e}", method.name());
                (ReportDoc::failure(), None)
            }
            Err(e) => return Err(CliError::Invalid(e.to_string())),
        };
        write_file(&cli.out.join(report_name), &doc.to_json())?;
        let trace = trace.unwrap_or_else(|| trace_to_csv(&Default::default()));
        write_file(&cli.out.join(trace_name), &trace)?;
        code = code.max(status_exit_code(doc.status));
    }
    Ok(code)
}

fn summarize(method: Method, r: &SolveReport) {
    println!(
        "{}: {:?} iterations={} time={:.3}s primal={:.10e} dual={:.10e} gap={:.3e}",
        method.name(),
        r.status,
        r.iterations,
        r.time_s,
        r.primal,
        r.dual,
        r.gap
    );
    if let Some(msg) = &r.failure {
        eprintln!("{}: {msg}", method.name());
    }
}

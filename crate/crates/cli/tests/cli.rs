use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use logdet_dspg::model::relative_gap;
use logdet_dspg::{problem_from_json, ReportDoc, SolveStatus};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logdet-dspg"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    std::fs::create_dir_all(dir).unwrap();
    bin().arg("--out").arg(dir).args(args).current_dir(dir).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn report(dir: &Path, name: &str) -> ReportDoc {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn trace_rows(dir: &Path, name: &str) -> usize {
    std::fs::read_to_string(dir.join(name)).unwrap().lines().count() - 1
}

const SCALAR: &str = r#"{"n":1,"mu":1.0,"C":{"format":"coo","entries":[[1,1,2.0]]},
    "regularizers":[{"positions":[[1,1]],"lambda":1.0,"p":1.0}]}"#;

#[test]
fn generate_lp_instance() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", r#"{"family":"LpLogLikelihood","n":10,"seed":3}"#);
    let out = run(dir.path(), &["generate", spec.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let p = problem_from_json(&std::fs::read_to_string(dir.path().join("problem.json")).unwrap()).unwrap();
    assert_eq!(p.dim(), 10);
    assert_eq!(p.h(), 1);
    assert_eq!(p.regularizers()[0].positions().len(), 45);
    assert!(String::from_utf8_lossy(&out.stdout).contains("n=10"));
}

#[test]
fn generate_multitask_stacks_tasks() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", r#"{"family":"MultiTask","tasks":2,"n":3,"seed":0}"#);
    let out = run(dir.path(), &["generate", spec.to_str().unwrap()]);
    assert!(out.status.success());
    let p = problem_from_json(&std::fs::read_to_string(dir.path().join("problem.json")).unwrap()).unwrap();
    assert_eq!(p.dim(), 6);
}

#[test]
fn generate_rejects_bad_spec() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", r#"{"n":10}"#);
    let out = run(dir.path(), &["generate", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("family"));
}

#[test]
fn generate_is_seed_deterministic() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", r#"{"family":"BlockRegularized","k":3,"variant":"MaxNorm","n":12}"#);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&a, &["--seed", "9", "generate", spec.to_str().unwrap()]).status.success());
    assert!(run(&b, &["--seed", "9", "generate", spec.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read(a.join("problem.json")).unwrap(), std::fs::read(b.join("problem.json")).unwrap());
}

#[test]
fn solve_scalar_instance() {
    let dir = TempDir::new().unwrap();
    let problem = write(dir.path(), "p.json", SCALAR);
    let out = run(dir.path(), &["solve", problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path(), "report.json");
    assert_eq!(r.status, SolveStatus::Converged);
    let want = 1.0 + 3f64.ln();
    assert!((r.dual.unwrap() - want).abs() <= 1e-8);
    assert!((r.primal.unwrap() - want).abs() <= 1e-8);
    assert_eq!(trace_rows(dir.path(), "trace.csv"), r.iterations);
}

#[test]
fn report_gap_matches_values() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", r#"{"family":"LpLogLikelihood","n":20,"p":[1.0,"inf"],"seed":1}"#);
    assert!(run(dir.path(), &["generate", spec.to_str().unwrap()]).status.success());
    let out = run(dir.path(), &["solve", "problem.json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path(), "report.json");
    let gap = relative_gap(r.primal.unwrap(), r.dual.unwrap());
    assert!((r.gap.unwrap() - gap).abs() <= 1e-15);
    assert!(r.gap.unwrap() <= 1e-6);
    assert_eq!(trace_rows(dir.path(), "trace.csv"), r.iterations);
}

#[test]
fn solve_without_regularizers_stops_immediately() {
    let dir = TempDir::new().unwrap();
    let problem = write(dir.path(), "p.json", r#"{"n":2,"mu":0.5,"C":{"format":"coo","entries":[[1,1,2.0],[1,2,0.5],[2,2,1.0]]}}"#);
    let out = run(dir.path(), &["solve", problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path(), "report.json");
    assert_eq!(r.iterations, 0);
    assert_eq!(r.status, SolveStatus::Converged);
    assert_eq!(trace_rows(dir.path(), "trace.csv"), 0);
}

#[test]
fn solve_kkt_rule_and_both_methods() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", r#"{"family":"BlockRegularized","k":3,"variant":"FrobeniusNorm","n":15,"seed":2}"#);
    assert!(run(dir.path(), &["generate", spec.to_str().unwrap()]).status.success());
    let out = run(dir.path(), &["--stop", "kkt", "--method", "both", "solve", "problem.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["dspg", "pg"] {
        let r = report(dir.path(), &format!("report.{name}.json"));
        assert_eq!(r.status, SolveStatus::Converged);
        assert!(r.pinf.unwrap().max(r.dinf.unwrap()) <= 1e-6);
        assert_eq!(trace_rows(dir.path(), &format!("trace.{name}.csv")), r.iterations);
    }
}

#[test]
fn solve_iteration_limit_exit_code() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", r#"{"family":"LpLogLikelihood","n":15,"seed":4}"#);
    assert!(run(dir.path(), &["generate", spec.to_str().unwrap()]).status.success());
    let out = run(dir.path(), &["--max-iters", "2", "solve", "problem.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(report(dir.path(), "report.json").status, SolveStatus::MaxIters);
}

#[test]
fn solve_infeasible_start() {
    let dir = TempDir::new().unwrap();
    let problem = write(dir.path(), "p.json", r#"{"n":2,"mu":1.0,"C":{"format":"coo","entries":[[1,1,1.0],[2,2,-1.0]]}}"#);
    let out = run(dir.path(), &["solve", problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let r = report(dir.path(), "report.json");
    assert_eq!(r.status, SolveStatus::Failure);
    assert_eq!(r.dual, None);
}

#[test]
fn solve_rejects_invalid_config() {
    let dir = TempDir::new().unwrap();
    let problem = write(dir.path(), "p.json", SCALAR);
    let cfg = write(dir.path(), "cfg.json", r#"{"gamma":1.5}"#);
    let out = run(dir.path(), &["--config", cfg.to_str().unwrap(), "solve", problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
}

#[test]
fn bench_writes_rows() {
    let dir = TempDir::new().unwrap();
    let specs = write(
        dir.path(),
        "specs.json",
        r#"[{"family":"LpLogLikelihood","n":12,"seed":1},{"family":"MultiTask","tasks":2,"n":5,"seed":1}]"#,
    );
    let infeasible = write(dir.path(), "bad.json", r#"{"n":2,"mu":1.0,"C":{"format":"coo","entries":[[1,1,-1.0],[2,2,1.0]]}}"#);
    let out = bin()
        .args(["--out", dir.path().to_str().unwrap(), "--threads", "2", "--method", "dspg", "bench"])
        .args([&specs, &infeasible])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(dir.path().join("bench.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for row in &rows[..2] {
        assert_eq!(&row[3], "Converged");
        let primal: f64 = row[7].parse().unwrap();
        let dual: f64 = row[8].parse().unwrap();
        let gap: f64 = row[6].parse().unwrap();
        assert_eq!(gap, relative_gap(primal, dual));
    }
    assert_eq!(&rows[2][0], "bad");
    assert_eq!(&rows[2][3], "Failure");
    assert!(rows[2][6].is_empty() && rows[2][4].is_empty());
}

#[test]
fn selftest_passes() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["selftest"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn selftest_fails_on_bad_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"tau":0.0}"#);
    let out = run(dir.path(), &["--config", cfg.to_str().unwrap(), "selftest"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL config"));
}

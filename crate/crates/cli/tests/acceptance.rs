//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails.

use std::path::Path;
use std::time::Instant;

use clap::Parser;
use logdet_dspg::solver::audit_trace;
use logdet_dspg::{
    generate, problem_to_json, solve_with_method, BlockVariant, InstanceSpec, Method, NormOrder, SolveReport, SolveStatus,
    SolverConfig, StopRule,
};
use logdet_dspg_cli::selftest::{closed_form_suite, gradient_suite, projection_suite, ProjectionTolerances, PROJECTION_DIMS};
use logdet_dspg_cli::{cmd_solve, Cli, EXIT_OK};

const SEED: u64 = 7;
const GAP_TOL: f64 = 1e-6;
const ITER_CAP: usize = 5000;

struct Outcome {
    passed: bool,
    detail: String,
}

/// Runs collected for the trace audit.
type Runs = Vec<(String, SolverConfig, SolveReport)>;

fn report_line(criterion: usize, title: &str, o: &Outcome) -> String {
    format!("{} C{criterion} {title}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail)
}

fn base_config() -> SolverConfig {
    SolverConfig { max_iters: ITER_CAP, ..Default::default() }
}

fn order_name(p: NormOrder) -> String {
    match p {
        NormOrder::Infinity => "inf".into(),
        other => format!("{}", other.value()),
    }
}

fn gap_run(label: String, spec: &InstanceSpec, runs: &mut Runs) -> (bool, String) {
    let cfg = base_config();
    let problem = match generate(spec) {
        Ok(p) => p,
        Err(e) => return (false, format!("{label}: {e}")),
    };
    match solve_with_method(&problem, &cfg, Method::Dspg) {
        Ok(r) => {
            let ok = r.status == SolveStatus::Converged && r.gap <= GAP_TOL && r.iterations <= ITER_CAP;
            let msg = format!("{label}: {:?} it={} gap={:.2e} {:.1}s", r.status, r.iterations, r.gap, r.time_s);
            runs.push((label, cfg, r));
            (ok, msg)
        }
        Err(e) => (false, format!("{label}: {e}")),
    }
}

fn gap_criterion(cases: Vec<(String, InstanceSpec)>, runs: &mut Runs) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (label, spec) in cases {
        let (ok, msg) = gap_run(label, &spec, runs);
        passed &= ok;
        parts.push(msg);
    }
    Outcome { passed, detail: parts.join("; ") }
}

fn c1() -> Outcome {
    let results = closed_form_suite(&SolverConfig::default(), &[Method::Dspg, Method::Pg], 1e-8);
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.line()).collect();
    Outcome {
        passed: failed.is_empty() && !results.is_empty(),
        detail: if failed.is_empty() { format!("{} solves", results.len()) } else { failed.join("; ") },
    }
}

fn c2() -> Outcome {
    let start = Instant::now();
    let results = projection_suite(1000, 20240601, &PROJECTION_DIMS, ProjectionTolerances::default());
    let elapsed = start.elapsed().as_secs_f64();
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.line()).collect();
    Outcome {
        passed: failed.is_empty() && elapsed < 60.0,
        detail: format!("{} suites, {} failed, {elapsed:.1}s {}", results.len(), failed.len(), failed.join("; ")),
    }
}

fn c3() -> Outcome {
    let results = gradient_suite(5, 20, 1e-5);
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.line()).collect();
    Outcome {
        passed: failed.is_empty() && !results.is_empty(),
        detail: if failed.is_empty() { format!("{} instances", results.len()) } else { failed.join("; ") },
    }
}

fn c4(runs: &mut Runs) -> Outcome {
    let cases = [NormOrder::One, NormOrder::Two, NormOrder::Infinity]
        .into_iter()
        .map(|p| (format!("lp p={}", order_name(p)), InstanceSpec::lp_loglik(200, vec![p], SEED)))
        .collect();
    gap_criterion(cases, runs)
}

fn c5(runs: &mut Runs) -> Outcome {
    let pairs = [
        (NormOrder::One, NormOrder::Two),
        (NormOrder::One, NormOrder::Infinity),
        (NormOrder::Two, NormOrder::Infinity),
    ];
    let cases = pairs
        .into_iter()
        .map(|(a, b)| (format!("lp p=({},{})", order_name(a), order_name(b)), InstanceSpec::lp_loglik(200, vec![a, b], SEED)))
        .collect();
    gap_criterion(cases, runs)
}

fn c6(runs: &mut Runs) -> Outcome {
    let cfg = SolverConfig { stop_rule: StopRule::Kkt, ..base_config() };
    let mut passed = true;
    let mut parts = Vec::new();
    for variant in [BlockVariant::MaxNorm, BlockVariant::FrobeniusNorm] {
        let label = format!("block {variant:?}");
        let problem = match generate(&InstanceSpec::block(200, 10, variant, SEED)) {
            Ok(p) => p,
            Err(e) => {
                passed = false;
                parts.push(format!("{label}: {e}"));
                continue;
            }
        };
        let mut solved = Vec::new();
        for method in [Method::Dspg, Method::Pg] {
            match solve_with_method(&problem, &cfg, method) {
                Ok(r) => solved.push(r),
                Err(e) => parts.push(format!("{label} {}: {e}", method.name())),
            }
        }
        let [d, p] = match <[SolveReport; 2]>::try_from(solved) {
            Ok(pair) => pair,
            Err(_) => {
                passed = false;
                continue;
            }
        };
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
        let agree = rel(d.dual, p.dual).max(rel(d.primal, p.primal));
        let ok = d.status == SolveStatus::Converged
            && p.status == SolveStatus::Converged
            && d.kkt.max() <= 1e-6
            && p.kkt.max() <= 1e-6
            && agree <= 1e-5;
        passed &= ok;
        parts.push(format!(
            "{label}: dspg {:?} it={} kkt={:.1e}, pg {:?} it={} kkt={:.1e}, agreement {agree:.1e}",
            d.status,
            d.iterations,
            d.kkt.max(),
            p.status,
            p.iterations,
            p.kkt.max()
        ));
        runs.push((format!("{label} dspg"), cfg.clone(), d));
        runs.push((format!("{label} pg"), cfg.clone(), p));
    }
    Outcome { passed, detail: parts.join("; ") }
}

fn c7(runs: &mut Runs) -> Outcome {
    let cases = [5, 10]
        .into_iter()
        .map(|k| (format!("multitask K={k}"), InstanceSpec::multitask(50, k, SEED)))
        .collect();
    gap_criterion(cases, runs)
}

fn c8(runs: &Runs) -> Outcome {
    let bad: Vec<String> = runs
        .iter()
        .filter_map(|(label, cfg, r)| {
            let a = audit_trace(r, cfg);
            (!a.all_pass()).then(|| format!("{label}: {a:?}"))
        })
        .collect();
    Outcome {
        passed: bad.is_empty() && !runs.is_empty(),
        detail: if bad.is_empty() { format!("{} runs audited", runs.len()) } else { bad.join("; ") },
    }
}

fn solve_once(problem: &Path, out: &Path) -> Result<(serde_json::Value, Vec<Vec<String>>), String> {
    let cli = Cli::try_parse_from([
        "logdet-dspg".as_ref(),
        "--out".as_ref(),
        out.as_os_str(),
        "solve".as_ref(),
        problem.as_os_str(),
    ])
    .map_err(|e| e.to_string())?;
    let code = cmd_solve(&cli, problem).map_err(|e| e.to_string())?;
    if code != EXIT_OK {
        return Err(format!("exit code {code}"));
    }
    let text = std::fs::read_to_string(out.join("report.json")).map_err(|e| e.to_string())?;
    let mut report: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    report.as_object_mut().ok_or("report is not an object")?.remove("time_s");
    let trace = std::fs::read_to_string(out.join("trace.csv")).map_err(|e| e.to_string())?;
    let mut lines = trace.lines();
    let header: Vec<&str> = lines.next().ok_or("empty trace")?.split(',').collect();
    let keep: Vec<usize> = (0..header.len()).filter(|&i| header[i] != "elapsed_s").collect();
    let rows = lines
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            keep.iter().map(|&i| cells[i].to_owned()).collect()
        })
        .collect();
    Ok((report, rows))
}

fn c9() -> Outcome {
    let run = || -> Result<(usize, bool), String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let problem = generate(&InstanceSpec::lp_loglik(60, vec![NormOrder::One, NormOrder::Two], SEED)).map_err(|e| e.to_string())?;
        let path = dir.path().join("problem.json");
        std::fs::write(&path, problem_to_json(&problem)).map_err(|e| e.to_string())?;
        let first = solve_once(&path, &dir.path().join("a"))?;
        let second = solve_once(&path, &dir.path().join("b"))?;
        Ok((first.1.len(), first == second))
    };
    match run() {
        Ok((rows, same)) => Outcome { passed: same && rows > 0, detail: format!("{rows} trace rows, identical={same}") },
        Err(e) => Outcome { passed: false, detail: e },
    }
}

fn main() {
    let start = Instant::now();
    let mut runs = Runs::new();
    let outcomes = [
        (1, "closed-form oracles", c1()),
        (2, "projection properties", c2()),
        (3, "gradient check", c3()),
        (4, "lp instances, one term", c4(&mut runs)),
        (5, "lp instances, two terms", c5(&mut runs)),
        (6, "block instances vs baseline", c6(&mut runs)),
        (7, "multitask instances", c7(&mut runs)),
        (8, "trace audit", c8(&runs)),
        (9, "determinism", c9()),
    ];
    for (k, title, o) in &outcomes {
        println!("{}", report_line(*k, title, o));
    }
    let failed = outcomes.iter().filter(|(_, _, o)| !o.passed).count();
    println!("acceptance: {} criteria, {failed} failed, {:.1}s", outcomes.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}

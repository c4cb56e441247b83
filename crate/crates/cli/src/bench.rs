//! Benchmark sweeps over instance specs and problem files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use logdet_dspg::{
    generate, model, solve_with_method, Family, InstanceSpec, Method, NormOrder, Problem, SolveReport, SolveStatus, SolverConfig,
};
use serde::Serialize;

use crate::{load_config, parse_error, read_file, write_file, Cli, CliError, MethodArg, EXIT_OK};

#[derive(Debug, Clone)]
pub enum BenchSource {
    Spec(InstanceSpec),
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub label: String,
    pub source: BenchSource,
}

/// One `(instance, method)` result. Metrics are `None` when the solve
/// produced no iterate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub instance: String,
    pub n: Option<usize>,
    pub method: String,
    pub status: SolveStatus,
    pub iterations: Option<usize>,
    pub time_s: Option<f64>,
    pub gap: Option<f64>,
    pub primal: Option<f64>,
    pub dual: Option<f64>,
    pub note: String,
}

impl BenchRow {
    fn from_report(instance: &str, n: usize, r: &SolveReport) -> Self {
        Self {
            instance: instance.to_owned(),
            n: Some(n),
            method: r.method.name().to_owned(),
            status: r.status,
            iterations: Some(r.iterations),
            time_s: Some(r.time_s),
            gap: Some(model::relative_gap(r.primal, r.dual)),
            primal: Some(r.primal),
            dual: Some(r.dual),
            note: r.failure.clone().unwrap_or_default(),
        }
    }

    fn failed(instance: &str, n: Option<usize>, method: Method, note: String) -> Self {
        Self {
            instance: instance.to_owned(),
            n,
            method: method.name().to_owned(),
            status: SolveStatus::Failure,
            iterations: None,
            time_s: None,
            gap: None,
            primal: None,
            dual: None,
            note,
        }
    }
}

fn order_label(p: &NormOrder) -> String {
    match p {
        NormOrder::Infinity => "inf".into(),
        other => format!("{}", other.value()),
    }
}

pub fn spec_label(spec: &InstanceSpec) -> String {
    match &spec.family {
        Family::LpLogLikelihood { p, .. } => {
            let ps: Vec<String> = p.iter().map(order_label).collect();
            format!("lp(n={},p={},seed={})", spec.n, ps.join("+"), spec.seed)
        }
        Family::BlockRegularized { k, variant, .. } => {
            format!("block(n={},k={},{:?},seed={})", spec.n, k, variant, spec.seed)
        }
        Family::MultiTask { tasks, .. } => format!("multitask(n={},K={},seed={})", spec.n, tasks, spec.seed),
    }
}

/// Reads bench inputs: a spec object, an array of specs, or a problem file.
pub fn load_inputs(paths: &[PathBuf], seed: Option<u64>) -> Result<Vec<BenchInstance>, CliError> {
    let mut out = Vec::new();
    for path in paths {
        let text = read_file(path)?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_error(path, e))?;
        let specs: Vec<serde_json::Value> = match value {
            serde_json::Value::Array(items) => items,
            serde_json::Value::Object(ref map) if map.contains_key("C") => {
                out.push(BenchInstance {
                    label: path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned()),
                    source: BenchSource::File(path.clone()),
                });
                continue;
            }
            other => vec![other],
        };
        for v in specs {
            let mut spec: InstanceSpec = serde_json::from_value(v).map_err(|e| parse_error(path, e))?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            spec.validate().map_err(|e| parse_error(path, e))?;
            out.push(BenchInstance { label: spec_label(&spec), source: BenchSource::Spec(spec) });
        }
    }
    Ok(out)
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Applies `f` to every item on at most `threads` workers; results keep input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    let workers = threads.clamp(1, items.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("result slots poisoned")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots poisoned")
        .into_iter()
        .map(|r| r.expect("every item is processed"))
        .collect()
}

fn materialize(instance: &BenchInstance) -> Result<Problem, String> {
    match &instance.source {
        BenchSource::Spec(spec) => generate(spec).map_err(|e| e.to_string()),
        BenchSource::File(path) => crate::load_problem(path).map_err(|e| e.to_string()),
    }
}

/// Runs every `(instance, method)` pair. Instances are generated and
/// solved on the worker pool; each solve is deterministic on its own.
pub fn run_bench(instances: &[BenchInstance], methods: &[Method], cfg: &SolverConfig, threads: usize) -> Vec<BenchRow> {
    let problems = parallel_map(instances, threads, materialize);
    let jobs: Vec<(usize, Method)> = (0..instances.len()).flat_map(|i| methods.iter().map(move |&m| (i, m))).collect();
    parallel_map(&jobs, threads, |&(i, method)| {
        let label = &instances[i].label;
        match &problems[i] {
            Err(e) => BenchRow::failed(label, None, method, e.clone()),
            Ok(p) => match solve_with_method(p, cfg, method) {
                Ok(r) => BenchRow::from_report(label, p.dim(), &r),
                Err(e) => BenchRow::failed(label, Some(p.dim()), method, e.to_string()),
            },
        }
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["instance", "n", "method", "status", "iterations", "time_s", "gap", "primal", "dual", "note"])
        .expect("in-memory csv");
    for r in rows {
        let f = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.16e}"));
        w.write_record([
            r.instance.clone(),
            opt(r.n),
            r.method.clone(),
            format!("{:?}", r.status),
            opt(r.iterations),
            f(r.time_s),
            f(r.gap),
            f(r.primal),
            f(r.dual),
            r.note.clone(),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
}

/// Aligned text table with one row per instance and a column group per method.
pub fn rows_to_table(rows: &[BenchRow], methods: &[Method]) -> String {
    let mut instances: Vec<(&str, Option<usize>)> = Vec::new();
    for r in rows {
        if !instances.iter().any(|(l, _)| *l == r.instance) {
            instances.push((&r.instance, r.n));
        }
    }
    let label_w = instances.iter().map(|(l, _)| l.len()).max().unwrap_or(8).max(8);
    let mut out = String::new();
    let _ = write!(out, "{:<label_w$} {:>5}", "instance", "n");
    for m in methods {
        let _ = write!(out, " | {:>9} {:>6} {:>9} {:>10}", format!("{} status", m.name()), "iter", "time[s]", "gap");
    }
    out.push('\n');
    for (label, n) in instances {
        let _ = write!(out, "{:<label_w$} {:>5}", label, opt(n));
        for m in methods {
            match rows.iter().find(|r| r.instance == label && r.method == m.name()) {
                Some(r) => {
                    let status = format!("{:?}", r.status);
                    let time = r.time_s.map_or_else(String::new, |t| format!("{t:.3}"));
                    let gap = r.gap.map_or_else(String::new, |g| format!("{g:.2e}"));
                    let _ = write!(out, " | {:>9} {:>6} {:>9} {:>10}", status, opt(r.iterations), time, gap);
                }
                None => {
                    let _ = write!(out, " | {:>9} {:>6} {:>9} {:>10}", "", "", "", "");
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn cmd_bench(cli: &Cli, inputs: &[PathBuf]) -> Result<i32, CliError> {
    let cfg = load_config(cli)?;
    let instances = load_inputs(inputs, cli.seed)?;
    let methods = cli.method.unwrap_or(MethodArg::Both).methods();
    let threads = cli.threads.unwrap_or_else(default_threads).max(1);
    let rows = run_bench(&instances, &methods, &cfg, threads);
    print!("{}", rows_to_table(&rows, &methods));
    std::fs::create_dir_all(&cli.out).map_err(|source| CliError::Io { path: cli.out.clone(), source })?;
    let path: &Path = &cli.out.join("bench.csv");
    write_file(path, &rows_to_csv(&rows))?;
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}

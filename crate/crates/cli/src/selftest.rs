//! Built-in oracle suites: fixed projection vectors, projection properties,
//! finite-difference gradient checks and closed-form solves.

use std::time::Instant;

use logdet_dspg::model::{dual_slack, eval_g, grad_g, x_of_u};
use logdet_dspg::projections::{proj_l1_ball, proj_l2_ball, proj_linf_ball, proj_lp_ball};
use logdet_dspg::symmat::{self, SymmetricMatrix};
use logdet_dspg::{
    generate, solve_with_method, BlockVariant, CompositeVar, ConstraintMap, InstanceSpec, Method, NormOrder, Problem,
    RegularizerTerm, SolveStatus, SolverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{load_config, Cli, EXIT_OK, EXIT_SELFTEST_FAILED};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl SuiteResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

pub fn config_check(cfg: Result<SolverConfig, String>) -> SuiteResult {
    match cfg {
        Ok(_) => SuiteResult::new("config", true, "solver configuration is valid"),
        Err(e) => SuiteResult::new("config", false, e),
    }
}

pub fn fixed_vectors() -> SuiteResult {
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-15);
    let cases = [
        ("l1 (0.8, 0.6)", proj_l1_ball(&[0.8, 0.6], 1.0), vec![0.6, 0.4]),
        ("l2 (3, 4)", proj_l2_ball(&[3.0, 4.0], 1.0), vec![0.6, 0.8]),
        ("linf (2, -0.5)", proj_linf_ball(&[2.0, -0.5], 1.0), vec![1.0, -0.5]),
    ];
    let bad: Vec<String> = cases
        .iter()
        .filter(|(_, got, want)| !close(got, want))
        .map(|(name, got, want)| format!("{name}: {got:?} != {want:?}"))
        .collect();
    SuiteResult::new("fixed projection vectors", bad.is_empty(), if bad.is_empty() { "3 vectors".into() } else { bad.join("; ") })
}

/// Tolerances of the projection property suite.
#[derive(Debug, Clone, Copy)]
pub struct ProjectionTolerances {
    pub idempotence: f64,
    pub membership: f64,
    pub nonexpansive: f64,
    pub variational: f64,
    pub grid: f64,
}

impl Default for ProjectionTolerances {
    fn default() -> Self {
        Self { idempotence: 1e-10, membership: 1e-8, nonexpansive: 1e-10, variational: 1e-9, grid: 5e-3 }
    }
}

pub const PROJECTION_ORDERS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];
pub const PROJECTION_DIMS: [usize; 3] = [2, 10, 50];

fn project(z: &[f64], lambda: f64, p: f64) -> Vec<f64> {
    match NormOrder::new(p).expect("suite orders are valid") {
        NormOrder::One => proj_l1_ball(z, lambda),
        NormOrder::Two => proj_l2_ball(z, lambda),
        NormOrder::Infinity => proj_linf_ball(z, lambda),
        NormOrder::Finite(q) => proj_lp_ball(z, lambda, q).unwrap_or_else(|_| vec![f64::NAN; z.len()]),
    }
}

fn norm(x: &[f64], p: f64) -> f64 {
    NormOrder::new(p).expect("suite orders are valid").norm(x)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-1.5..1.5));
    let sparse = rng.random_bool(0.2);
    (0..dim)
        .map(|_| if sparse && rng.random_bool(0.7) { 0.0 } else { scale * rng.random_range(-1.0..1.0) })
        .collect()
}

fn random_ball_point(rng: &mut ChaCha8Rng, dim: usize, lambda: f64, p: f64) -> Vec<f64> {
    let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let t = rng.random_range(0.0..=1.0) * lambda / norm(&x, p).max(f64::MIN_POSITIVE);
    x.iter().map(|v| v * t).collect()
}

/// Brute-force projection in two or three dimensions: best point of a
/// boundary grid, refined by repeated local subdivision.
pub fn grid_oracle(z: &[f64], lambda: f64, p: f64) -> Vec<f64> {
    if norm(z, p) <= lambda {
        return z.to_vec();
    }
    let at = |angles: &[f64]| -> Vec<f64> {
        let d: Vec<f64> = match angles {
            [t] => vec![t.cos(), t.sin()],
            [t, s] => vec![t.cos() * s.sin(), t.sin() * s.sin(), s.cos()],
            _ => unreachable!("grid oracle supports two or three dimensions"),
        };
        let r = norm(&d, p);
        d.iter().map(|v| lambda * v / r).collect()
    };
    let cost = |a: &[f64]| dist(&at(a), z);
    let tau = std::f64::consts::TAU;
    let (mut best, mut width): (Vec<f64>, Vec<f64>) = match z.len() {
        2 => {
            let n = 4096;
            let step = tau / n as f64;
            let t = (0..n).map(|i| i as f64 * step).min_by(|a, b| cost(&[*a]).total_cmp(&cost(&[*b]))).expect("non-empty grid");
            (vec![t], vec![step])
        }
        3 => {
            let (nt, ns) = (256, 128);
            let (st, ss) = (tau / nt as f64, std::f64::consts::PI / ns as f64);
            let mut best = (f64::INFINITY, vec![0.0, 0.0]);
            for i in 0..nt {
                for j in 0..=ns {
                    let a = [i as f64 * st, j as f64 * ss];
                    let c = cost(&a);
                    if c < best.0 {
                        best = (c, a.to_vec());
                    }
                }
            }
            (best.1, vec![st, ss])
        }
        d => panic!("grid oracle supports two or three dimensions, got {d}"),
    };
    for _ in 0..60 {
        for axis in 0..best.len() {
            let offsets = [-1.0, -0.5, 0.0, 0.5, 1.0];
            let cands = offsets.map(|o| {
                let mut a = best.clone();
                a[axis] += o * width[axis];
                a
            });
            best = cands.into_iter().min_by(|a, b| cost(a).total_cmp(&cost(b))).expect("five candidates");
            width[axis] *= 0.5;
        }
    }
    at(&best)
}

/// Idempotence, membership, nonexpansiveness and the variational inequality
/// on `samples` random vectors per `(dim, p)`; dimensions up to three are
/// also compared with [`grid_oracle`].
pub fn projection_suite(samples: usize, seed: u64, dims: &[usize], tol: ProjectionTolerances) -> Vec<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &dim in dims {
        for &p in &PROJECTION_ORDERS {
            let mut worst = [0.0f64; 5];
            let mut finite = true;
            for _ in 0..samples {
                let lambda = 10f64.powf(rng.random_range(-1.0..1.0));
                let z = random_vector(&mut rng, dim);
                let pz = project(&z, lambda, p);
                finite &= pz.iter().all(|v| v.is_finite());
                worst[0] = worst[0].max(dist(&project(&pz, lambda, p), &pz));
                worst[1] = worst[1].max(norm(&pz, p) - lambda);
                let other = random_vector(&mut rng, dim);
                worst[2] = worst[2].max(dist(&pz, &project(&other, lambda, p)) - dist(&z, &other));
                let x = random_ball_point(&mut rng, dim, lambda, p);
                let vi: f64 = z.iter().zip(&pz).zip(&x).map(|((zk, pk), xk)| (zk - pk) * (xk - pk)).sum();
                worst[3] = worst[3].max(vi);
                if dim <= 3 {
                    worst[4] = worst[4].max(dist(&pz, &grid_oracle(&z, lambda, p)));
                }
            }
            let passed = finite
                && worst[0] <= tol.idempotence
                && worst[1] <= tol.membership
                && worst[2] <= tol.nonexpansive
                && worst[3] <= tol.variational
                && worst[4] <= tol.grid;
            let mut detail = format!(
                "{samples} vectors, worst idempotence {:.1e}, membership {:.1e}, nonexpansive {:.1e}, vi {:.1e}",
                worst[0], worst[1], worst[2], worst[3]
            );
            if dim <= 3 {
                detail.push_str(&format!(", grid {:.1e}", worst[4]));
            }
            out.push(SuiteResult::new(format!("projection dim={dim} p={p}"), passed, detail));
        }
    }
    out
}

/// The instances of the gradient check: `per_family` seeds of each
/// generator family, all of dimension at most 30.
pub fn gradient_instances(per_family: usize) -> Vec<(String, Problem)> {
    let mut out = Vec::new();
    for s in 0..per_family as u64 {
        let p = [NormOrder::One, NormOrder::Two, NormOrder::Infinity][s as usize % 3];
        let specs = [
            ("lp", InstanceSpec::lp_loglik(20 + 2 * (s as usize % 5), vec![p, NormOrder::Finite(1.5)], s)),
            (
                "block",
                InstanceSpec::block(30, 3 + s as usize % 5, if s % 2 == 0 { BlockVariant::MaxNorm } else { BlockVariant::FrobeniusNorm }, s),
            ),
            ("multitask", InstanceSpec::multitask(6, 2 + s as usize % 4, s)),
        ];
        for (name, spec) in specs {
            out.push((format!("{name} seed {s}"), generate(&spec).expect("gradient check specs are valid")));
        }
    }
    out
}

fn random_composite(problem: &Problem, rng: &mut ChaCha8Rng, scale: f64) -> CompositeVar {
    let mut u = CompositeVar::zeros(problem);
    u.y.iter_mut().for_each(|v| *v = scale * rng.random_range(-1.0..1.0));
    for z in &mut u.z {
        z.iter_mut().for_each(|v| *v = scale * rng.random_range(-1.0..1.0));
    }
    u
}

/// Central differences of `g` along random unit directions against
/// `⟨∇g, d⟩` at a random interior point. Returns the worst relative error.
pub fn gradient_error(problem: &Problem, directions: usize, rng: &mut ChaCha8Rng) -> f64 {
    let c_min = symmat::min_eigenvalue(problem.c());
    let mut scale = 0.05;
    let u = loop {
        let u = random_composite(problem, rng, scale);
        let slack = dual_slack(problem, &u).expect("shapes match");
        if symmat::min_eigenvalue(&slack) > 0.5 * c_min {
            break u;
        }
        scale *= 0.5;
    };
    let (_, factor) = eval_g(problem, &u).expect("interior point");
    let grad = grad_g(problem, &x_of_u(problem, &factor)).expect("shapes match").restricted(problem);
    let h = 1e-4 * c_min;
    let mut worst: f64 = 0.0;
    for _ in 0..directions {
        let d = random_composite(problem, rng, 1.0);
        let d = d.scaled(1.0 / problem.norm(&d));
        let analytic = problem.inner(&grad, &d);
        let gp = eval_g(problem, &u.add_scaled(h, &d)).map_or(f64::NAN, |r| r.0);
        let gm = eval_g(problem, &u.add_scaled(-h, &d)).map_or(f64::NAN, |r| r.0);
        let fd = (gp - gm) / (2.0 * h);
        let rel = (fd - analytic).abs() / analytic.abs().max(1e-3);
        worst = if rel.is_nan() { f64::INFINITY } else { worst.max(rel) };
    }
    worst
}

pub fn gradient_suite(per_family: usize, directions: usize, tol: f64) -> Vec<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    gradient_instances(per_family)
        .into_iter()
        .map(|(label, problem)| {
            let err = gradient_error(&problem, directions, &mut rng);
            SuiteResult::new(
                format!("gradient {label} (n={})", problem.dim()),
                err <= tol,
                format!("{directions} directions, worst relative error {err:.2e}"),
            )
        })
        .collect()
}

/// The three analytic instances with their optimal values and `X*`.
pub fn closed_form_instances() -> Vec<(&'static str, Problem, f64, SymmetricMatrix)> {
    let c = SymmetricMatrix::from_rows(&[vec![3.0, 1.0, 0.0], vec![1.0, 2.0, 0.5], vec![0.0, 0.5, 1.5]]).expect("symmetric");
    let mu: f64 = 0.7;
    let factor = symmat::cholesky(&c).expect("positive definite");
    let value = mu * symmat::logdet_from_factor(&factor) + 3.0 * mu - 3.0 * mu * mu.ln();
    let x0 = symmat::spd_inverse(&factor).scaled(mu);
    let plain = Problem::new(c, mu, ConstraintMap::none(), vec![]).expect("valid");

    let term = RegularizerTerm::selector(vec![(0, 0)], 1.0, NormOrder::One).expect("valid");
    let scalar = Problem::new(SymmetricMatrix::from_diagonal(&[2.0]), 1.0, ConstraintMap::none(), vec![term]).expect("valid");

    let pin = ConstraintMap::pinning(vec![(0, 1)], vec![0.0]).expect("valid");
    let pinned = Problem::new(SymmetricMatrix::from_diagonal(&[2.0, 4.0]), 1.0, pin, vec![]).expect("valid");

    vec![
        ("unregularized", plain, value, x0),
        ("scalar l1", scalar, 1.0 + 3f64.ln(), SymmetricMatrix::from_diagonal(&[1.0 / 3.0])),
        ("pinned pair", pinned, 2.0 + 8f64.ln(), SymmetricMatrix::from_diagonal(&[0.5, 0.25])),
    ]
}

/// Solves each analytic instance; passes when the primal and dual values
/// are within `tol·max(1, |value|)`, in under a second and 200 iterations.
pub fn closed_form_suite(cfg: &SolverConfig, methods: &[Method], tol: f64) -> Vec<SuiteResult> {
    let mut out = Vec::new();
    for (name, problem, value, x_star) in closed_form_instances() {
        for &method in methods {
            let start = Instant::now();
            let label = format!("closed form {name} ({})", method.name());
            let r = match solve_with_method(&problem, cfg, method) {
                Ok(r) => r,
                Err(e) => {
                    out.push(SuiteResult::new(label, false, e.to_string()));
                    continue;
                }
            };
            let elapsed = start.elapsed().as_secs_f64();
            let scale = value.abs().max(1.0);
            let err = (r.dual - value).abs().max((r.primal - value).abs()) / scale;
            let mut dx = r.x.clone();
            dx.axpy(-1.0, &x_star);
            let passed = r.status == SolveStatus::Converged && err <= tol && elapsed < 1.0 && r.iterations <= 200 && dx.max_abs() <= 1e-6;
            out.push(SuiteResult::new(
                label,
                passed,
                format!(
                    "{:?}, {} iterations, {:.3}s, value error {:.1e}, X error {:.1e}",
                    r.status,
                    r.iterations,
                    elapsed,
                    err,
                    dx.max_abs()
                ),
            ));
        }
    }
    out
}

pub fn cmd_selftest(cli: &Cli) -> i32 {
    let cfg = load_config(cli).map_err(|e| e.to_string());
    let mut results = vec![config_check(cfg.clone()), fixed_vectors()];
    results.extend(projection_suite(1000, 20240601, &PROJECTION_DIMS, ProjectionTolerances::default()));
    results.extend(gradient_suite(5, 20, 1e-5));
    if let Ok(cfg) = &cfg {
        results.extend(closed_form_suite(cfg, &[Method::Dspg, Method::Pg], 1e-8));
    }
    for r in &results {
        println!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} suites, {} failed", results.len(), failed);
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_SELFTEST_FAILED
    }
}

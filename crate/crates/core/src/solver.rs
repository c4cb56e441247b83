//! Dual spectral projected gradient (DSPG) method and a monotone
//! projected-gradient baseline.
//!
//! Both work on the dual over `U = (y, S₁, …, S_H)`. Every iterate stays
//! dual feasible: the step along `D` is capped by `ν` computed from the
//! minimum eigenvalue of `L⁻¹ℬ(D)L⁻ᵀ`, and the line search only accepts
//! points whose `C + ℬ(U)` factors.

use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{self, CompositeVar, KktResiduals, ModelError, Problem};
use crate::projections::{self, ProjectionError};
use crate::symmat::{self, CholeskyFactor, SymmetricMatrix};

/// Smallest backtracking factor before the line search gives up.
pub const SIGMA_FLOOR: f64 = 1e-16;
const ASYMMETRY_WARN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopRule {
    /// `‖P_ℳ(U + ∇g(U)) − U‖ ≤ ε`
    #[serde(rename = "residual", alias = "projresidual")]
    ProjResidual,
    /// `max{|P−D|/(1+|P|+|D|), pinf, dinf} ≤ gaptol`
    Kkt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub tau: f64,
    pub gamma: f64,
    pub beta: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_0: f64,
    /// Non-monotone memory `M`.
    #[serde(alias = "M")]
    pub memory: usize,
    pub max_iters: usize,
    pub time_limit_seconds: f64,
    pub stop_rule: StopRule,
    pub gaptol: f64,
    /// Fixed step of the projected-gradient baseline.
    pub pg_alpha: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-12,
            tau: 0.5,
            gamma: 1e-3,
            beta: 0.5,
            alpha_min: 1e-8,
            alpha_max: 1e8,
            alpha_0: 1.0,
            memory: 5,
            max_iters: 5000,
            time_limit_seconds: 7200.0,
            stop_rule: StopRule::ProjResidual,
            gaptol: 1e-6,
            pg_alpha: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.epsilon >= 0.0) {
            return bad(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if !open_unit(self.tau) {
            return bad(format!("tau must lie in (0, 1), got {}", self.tau));
        }
        if !open_unit(self.gamma) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !open_unit(self.beta) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.alpha_min > 0.0 && self.alpha_min < self.alpha_max && self.alpha_max.is_finite()) {
            return bad(format!(
                "need 0 < alpha_min < alpha_max < inf, got [{}, {}]",
                self.alpha_min, self.alpha_max
            ));
        }
        if !(self.alpha_0 >= self.alpha_min && self.alpha_0 <= self.alpha_max) {
            return bad(format!("alpha_0 = {} outside [alpha_min, alpha_max]", self.alpha_0));
        }
        if !(self.pg_alpha > 0.0 && self.pg_alpha.is_finite()) {
            return bad(format!("pg_alpha must be positive, got {}", self.pg_alpha));
        }
        if self.memory < 1 {
            return bad("memory M must be >= 1".into());
        }
        if !(self.time_limit_seconds > 0.0) {
            return bad(format!("time limit must be positive, got {}", self.time_limit_seconds));
        }
        if !(self.gaptol > 0.0) {
            return bad(format!("gaptol must be positive, got {}", self.gaptol));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("initial point is not dual feasible: {0}")]
    InfeasibleStart(ModelError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Mid-run breakdowns. These end the solve with [`SolveStatus::Failure`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Breakdown {
    #[error("line search stalled: no step down to sigma = {sigma:e} satisfied the acceptance test")]
    LineSearchStall { sigma: f64 },
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error("zero search direction with unit residual {residual:e} above tolerance")]
    ZeroDirection { residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    TimeLimit,
    Failure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dspg,
    Pg,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dspg => "dspg",
            Method::Pg => "pg",
        }
    }
}

/// One accepted iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `g(U^k)`
    pub g: f64,
    pub delta_u_norm: f64,
    pub d_norm: f64,
    pub theta: f64,
    pub nu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub ls_trials: usize,
    pub elapsed_s: f64,
    /// `⟨∇g(U^k), D^k⟩`
    pub grad_dot_d: f64,
    /// `g(U^{k+1})`
    pub g_next: f64,
    /// Reference value of the acceptance test (min over the memory window).
    pub g_ref: f64,
    /// Relative asymmetry of the congruence product before symmetrization.
    pub asymmetry: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `g(U^0), g(U^1), …` reconstructed from the records.
    pub fn dual_values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.records.iter().map(|r| r.g).collect();
        if let Some(last) = self.records.last() {
            out.push(last.g_next);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: Method,
    pub status: SolveStatus,
    pub iterations: usize,
    pub time_s: f64,
    /// `f(X(U))`
    pub primal: f64,
    /// `g(U)`
    pub dual: f64,
    pub gap: f64,
    pub kkt: KktResiduals,
    /// `‖P_ℳ(U + ∇g(U)) − U‖` at the reported point.
    pub residual_norm: f64,
    pub x: SymmetricMatrix,
    pub u: CompositeVar,
    pub trace: IterationTrace,
    pub failure: Option<String>,
}

/// Read-only view of an accepted iterate, handed to solve observers.
pub struct IterateView<'a> {
    pub k: usize,
    pub u: &'a CompositeVar,
    pub g: f64,
    pub factor: &'a CholeskyFactor,
}

/// `ΔU₍₁₎ = P_ℳ(U + ∇g(U)) − U`, with the gradient in restricted coordinates.
pub fn compute_unit_residual(problem: &Problem, u: &CompositeVar, grad: &CompositeVar) -> Result<CompositeVar, ProjectionError> {
    compute_direction(problem, u, grad, 1.0)
}

/// `D = P_ℳ(U + α∇g(U)) − U`
pub fn compute_direction(problem: &Problem, u: &CompositeVar, grad: &CompositeVar, alpha: f64) -> Result<CompositeVar, ProjectionError> {
    let y = grad.y.iter().map(|g| alpha * g).collect();
    let z = problem
        .regularizers()
        .iter()
        .zip(u.z.iter().zip(&grad.z))
        .map(|(term, (uh, gh))| {
            let v: Vec<f64> = gh.iter().map(|g| alpha * g).collect();
            projections::projected_step(uh, &v, term)
        })
        .collect::<Result<_, _>>()?;
    Ok(CompositeVar { y, z })
}

/// Step cap `ν` and `θ = λ_min(L⁻¹ℬ(D)L⁻ᵀ)`.
pub fn compute_nu(factor: &CholeskyFactor, bd: &SymmetricMatrix, tau: f64) -> (f64, f64) {
    let theta = symmat::congruence_min_eig(factor, bd);
    (nu_from_theta(theta, tau), theta)
}

fn nu_from_theta(theta: f64, tau: f64) -> f64 {
    if theta >= 0.0 {
        1.0
    } else {
        f64::min(1.0, -tau / theta)
    }
}

/// `t ↦ g(U + tD) − g(U)` for a fixed point and direction, evaluated as
/// `t·bᵀd_y + μ Σᵢ log(1 + tλᵢ)` with `λᵢ` the eigenvalues of `L⁻¹ℬ(D)L⁻ᵀ`.
/// Unlike a difference of two objective values this keeps full relative
/// accuracy when the increment is far below the magnitude of `g`.
#[derive(Debug, Clone)]
pub struct DualIncrement {
    linear: f64,
    mu: f64,
    eigs: Vec<f64>,
    asymmetry: f64,
}

impl DualIncrement {
    pub fn new(problem: &Problem, factor: &CholeskyFactor, d: &CompositeVar) -> Result<Self, ModelError> {
        let bd = model::apply_b(problem, d)?;
        let (eigs, asymmetry) = symmat::congruence_eigenvalues(factor, &bd);
        let linear = problem.constraints().b.iter().zip(&d.y).map(|(b, y)| b * y).sum();
        Ok(Self {
            linear,
            mu: problem.mu(),
            eigs,
            asymmetry,
        })
    }

    /// `λ_min(L⁻¹ℬ(D)L⁻ᵀ)`
    pub fn theta(&self) -> f64 {
        self.eigs[0]
    }

    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    /// Derivative at `t = 0`, which equals `⟨∇g(U), D⟩`.
    pub fn slope(&self) -> f64 {
        self.linear + self.mu * self.eigs.iter().sum::<f64>()
    }

    /// `None` when `U + tD` leaves the dual feasible region.
    pub fn at(&self, t: f64) -> Option<f64> {
        let mut acc = 0.0;
        for &l in &self.eigs {
            let s = t * l;
            if !(s > -1.0) {
                return None;
            }
            acc += s.ln_1p();
        }
        Some(t * self.linear + self.mu * acc)
    }
}

/// Error-free accumulation of the accepted dual values (hi + lo pair).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Compensated {
    hi: f64,
    lo: f64,
}

impl Compensated {
    fn new(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }

    fn add(self, x: f64) -> Self {
        let s = self.hi + x;
        let bp = s - self.hi;
        let err = (self.hi - (s - bp)) + (x - bp);
        let lo = self.lo + err;
        let hi = s + lo;
        Self { hi, lo: lo - (hi - s) }
    }

    /// `self − other` rounded once.
    fn minus(self, other: Self) -> f64 {
        (self.hi - other.hi) + (self.lo - other.lo)
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Safeguarded Barzilai–Borwein step from `‖ΔU‖²` and `p = ⟨ΔU, Δ∇g⟩`.
pub fn bb_step(step_sq: f64, p: f64, alpha_min: f64, alpha_max: f64) -> f64 {
    if p >= 0.0 {
        alpha_max
    } else {
        (-step_sq / p).clamp(alpha_min, alpha_max)
    }
}

pub fn update_alpha(
    problem: &Problem,
    u_prev: &CompositeVar,
    u_next: &CompositeVar,
    grad_prev: &CompositeVar,
    grad_next: &CompositeVar,
    alpha_min: f64,
    alpha_max: f64,
) -> f64 {
    let s = u_next.sub(u_prev);
    let yk = grad_next.sub(grad_prev);
    bb_step(problem.inner(&s, &s), problem.inner(&s, &yk), alpha_min, alpha_max)
}

/// Result of an accepted line search.
pub struct LineSearchStep {
    pub sigma: f64,
    pub trials: usize,
    pub u: CompositeVar,
    /// `g(U + σνD) − g(U)`
    pub increment: f64,
    /// `g(U + σνD)` evaluated from the new factor.
    pub g: f64,
    pub factor: CholeskyFactor,
}

/// Finds the largest `σ ∈ {1, β, β², …}` with
/// `g(U + σνD) ≥ g_ref + γσν⟨∇g, D⟩`, where `ref_offset = g_ref − g(U)`.
/// Trial points that leave the feasible region or whose `C + ℬ` fails to
/// factor count as rejected trials.
#[allow(clippy::too_many_arguments)]
pub fn line_search(
    problem: &Problem,
    u: &CompositeVar,
    d: &CompositeVar,
    increment: &DualIncrement,
    nu: f64,
    grad_dot_d: f64,
    ref_offset: f64,
    gamma: f64,
    beta: f64,
) -> Result<LineSearchStep, Breakdown> {
    let mut sigma = 1.0;
    let mut trials = 0;
    loop {
        trials += 1;
        let t = sigma * nu;
        if let Some(inc) = increment.at(t).filter(|&inc| inc >= ref_offset + gamma * t * grad_dot_d) {
            let trial = u.add_scaled(t, d);
            match model::eval_g(problem, &trial) {
                Ok((g, factor)) => {
                    return Ok(LineSearchStep {
                        sigma,
                        trials,
                        u: trial,
                        increment: inc,
                        g,
                        factor,
                    });
                }
                Err(ModelError::DualInfeasible(_)) => {}
                Err(e) => panic!("unexpected shape error in line search: {e}"),
            }
        }
        sigma *= beta;
        if sigma < SIGMA_FLOOR {
            return Err(Breakdown::LineSearchStall { sigma });
        }
    }
}

/// Runs the DSPG method from `u0` (default: `y = 0`, all `Sₕ = O`).
pub fn solve(problem: &Problem, config: &SolverConfig, u0: Option<CompositeVar>) -> Result<SolveReport, SolverError> {
    Solver::new(problem, config, Method::Dspg).run(u0, |_| {})
}

/// Monotone projected-gradient ascent sharing the DSPG safeguards:
/// fixed step `pg_alpha`, memory `M = 1`, same `ν` scaling and stop rules.
pub fn solve_pg_baseline(problem: &Problem, config: &SolverConfig) -> Result<SolveReport, SolverError> {
    Solver::new(problem, config, Method::Pg).run(None, |_| {})
}

pub fn solve_with_method(problem: &Problem, config: &SolverConfig, method: Method) -> Result<SolveReport, SolverError> {
    Solver::new(problem, config, method).run(None, |_| {})
}

/// Like [`solve`] but calls `observer` on the initial and every accepted iterate.
pub fn solve_with_observer(
    problem: &Problem,
    config: &SolverConfig,
    method: Method,
    u0: Option<CompositeVar>,
    observer: impl FnMut(&IterateView<'_>),
) -> Result<SolveReport, SolverError> {
    Solver::new(problem, config, method).run(u0, observer)
}

struct Iterate {
    u: CompositeVar,
    g: f64,
    factor: CholeskyFactor,
    x: SymmetricMatrix,
    grad: CompositeVar,
}

impl Iterate {
    fn new(problem: &Problem, u: CompositeVar, g: f64, factor: CholeskyFactor) -> Result<Self, ModelError> {
        let x = model::x_of_u(problem, &factor);
        let grad = model::grad_g(problem, &x)?.restricted(problem);
        Ok(Self { u, g, factor, x, grad })
    }
}

struct Solver<'a> {
    problem: &'a Problem,
    config: &'a SolverConfig,
    method: Method,
}

impl<'a> Solver<'a> {
    fn new(problem: &'a Problem, config: &'a SolverConfig, method: Method) -> Self {
        Self { problem, config, method }
    }

    fn memory(&self) -> usize {
        match self.method {
            Method::Dspg => self.config.memory,
            Method::Pg => 1,
        }
    }

    fn run(&self, u0: Option<CompositeVar>, mut observer: impl FnMut(&IterateView<'_>)) -> Result<SolveReport, SolverError> {
        let (problem, cfg) = (self.problem, self.config);
        cfg.validate()?;
        let u = u0.unwrap_or_else(|| CompositeVar::zeros(problem));
        problem.check_shape(&u)?;
        let (g, factor) = model::eval_g(problem, &u).map_err(|e| match e {
            ModelError::DualInfeasible(_) => SolverError::InfeasibleStart(e),
            other => SolverError::Model(other),
        })?;

        let start = Instant::now();
        let mut cur = Iterate::new(problem, u, g, factor)?;
        observer(&IterateView {
            k: 0,
            u: &cur.u,
            g: cur.g,
            factor: &cur.factor,
        });
        let memory = self.memory();
        let mut g_acc = Compensated::new(cur.g);
        let mut history: VecDeque<Compensated> = VecDeque::with_capacity(memory);
        history.push_back(g_acc);
        let mut alpha = match self.method {
            Method::Dspg => cfg.alpha_0,
            Method::Pg => cfg.pg_alpha,
        };
        let mut best: Option<(f64, CompositeVar, CholeskyFactor, SymmetricMatrix)> = None;
        let mut trace = IterationTrace::default();
        let mut failure = None;
        let mut k = 0;
        let mut residual_norm;

        let status = loop {
            // Step 1
            let unit = match compute_unit_residual(problem, &cur.u, &cur.grad) {
                Ok(r) => r,
                Err(e) => {
                    failure = Some(Breakdown::from(e).to_string());
                    residual_norm = f64::NAN;
                    break SolveStatus::Failure;
                }
            };
            residual_norm = problem.norm(&unit);
            let stationary = residual_norm <= cfg.epsilon;
            match cfg.stop_rule {
                StopRule::ProjResidual if stationary => break SolveStatus::Converged,
                StopRule::Kkt if self.kkt_satisfied(&cur)? => break SolveStatus::Converged,
                _ => {}
            }
            if k >= cfg.max_iters {
                break SolveStatus::MaxIters;
            }
            if start.elapsed().as_secs_f64() > cfg.time_limit_seconds {
                break SolveStatus::TimeLimit;
            }

            // Step 2
            let d = match compute_direction(problem, &cur.u, &cur.grad, alpha) {
                Ok(d) => d,
                Err(e) => {
                    failure = Some(Breakdown::from(e).to_string());
                    break SolveStatus::Failure;
                }
            };
            let d_norm = problem.norm(&d);
            if d_norm == 0.0 {
                failure = Some(Breakdown::ZeroDirection { residual: residual_norm }.to_string());
                break SolveStatus::Failure;
            }
            let increment = DualIncrement::new(problem, &cur.factor, &d)?;
            let (theta, asymmetry) = (increment.theta(), increment.asymmetry());
            let nu = nu_from_theta(theta, cfg.tau);
            if asymmetry > ASYMMETRY_WARN {
                log::warn!("iteration {k}: congruence product asymmetry {asymmetry:e}");
            }
            let grad_dot_d = problem.inner(&cur.grad, &d);
            let g_ref = history.iter().copied().fold(g_acc, |m, h| if h.minus(m) < 0.0 { h } else { m });
            let ref_offset = g_ref.minus(g_acc);
            let step = match line_search(problem, &cur.u, &d, &increment, nu, grad_dot_d, ref_offset, cfg.gamma, cfg.beta) {
                Ok(s) => s,
                Err(e) => {
                    failure = Some(e.to_string());
                    break SolveStatus::Failure;
                }
            };

            // Step 3
            let step_increment = step.increment;
            let next = Iterate::new(problem, step.u, step.g, step.factor)?;
            let alpha_used = alpha;
            alpha = match self.method {
                Method::Dspg => update_alpha(problem, &cur.u, &next.u, &cur.grad, &next.grad, cfg.alpha_min, cfg.alpha_max),
                Method::Pg => cfg.pg_alpha,
            };
            let g_next = g_acc.add(step_increment);
            trace.records.push(IterationRecord {
                k,
                g: g_acc.value(),
                delta_u_norm: residual_norm,
                d_norm,
                theta,
                nu,
                sigma: step.sigma,
                alpha: alpha_used,
                ls_trials: step.trials,
                elapsed_s: start.elapsed().as_secs_f64(),
                grad_dot_d,
                g_next: g_next.value(),
                g_ref: g_ref.value(),
                asymmetry,
            });
            if history.len() == memory {
                history.pop_front();
            }
            history.push_back(g_next);
            if best.as_ref().map_or(true, |b| g_acc.value() > b.0) {
                best = Some((g_acc.value(), cur.u.clone(), cur.factor.clone(), cur.x.clone()));
            }
            g_acc = g_next;
            cur = next;
            k += 1;
            observer(&IterateView {
                k,
                u: &cur.u,
                g: cur.g,
                factor: &cur.factor,
            });
        };

        if status == SolveStatus::TimeLimit {
            if let Some((_, u, factor, x)) = best.filter(|b| b.0 > g_acc.value()) {
                let g = model::dual_value_from_factor(problem, &u, &factor);
                let grad = model::grad_g(problem, &x)?.restricted(problem);
                cur = Iterate { u, g, factor, x, grad };
                residual_norm = compute_unit_residual(problem, &cur.u, &cur.grad)
                    .map(|r| problem.norm(&r))
                    .unwrap_or(f64::NAN);
            }
        }
        let time_s = start.elapsed().as_secs_f64();
        let primal = model::eval_f(problem, &cur.x).unwrap_or(f64::NAN);
        let kkt = model::kkt_residuals(problem, &cur.x, primal, cur.g)?;
        Ok(SolveReport {
            method: self.method,
            status,
            iterations: k,
            time_s,
            primal,
            dual: cur.g,
            gap: model::relative_gap(primal, cur.g),
            kkt,
            residual_norm,
            x: cur.x,
            u: cur.u,
            trace,
            failure,
        })
    }

    fn kkt_satisfied(&self, it: &Iterate) -> Result<bool, SolverError> {
        let Ok(primal) = model::eval_f(self.problem, &it.x) else {
            return Ok(false);
        };
        let r = model::kkt_residuals(self.problem, &it.x, primal, it.g)?;
        Ok(r.max() <= self.config.gaptol)
    }
}

/// Outcome of re-checking a finished solve against its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceAudit {
    /// Every accepted step satisfies the non-monotone acceptance test,
    /// with the reference recomputed from the logged `g` values.
    pub armijo_certificate: bool,
    /// `⟨∇g, D⟩ ≥ ‖D‖²/α` at every iteration.
    pub projection_inequality: bool,
    pub alpha_in_bounds: bool,
    pub positive_steps: bool,
    /// All logged dual values are finite.
    pub finite_values: bool,
    /// The minimum of every M-window of consecutive `g` values is non-decreasing.
    pub window_min_monotone: bool,
    /// The maximum of every M-window of consecutive `g` values is non-decreasing.
    pub window_max_monotone: bool,
    pub trace_len_matches: bool,
}

impl TraceAudit {
    pub fn all_pass(&self) -> bool {
        self.armijo_certificate
            && self.projection_inequality
            && self.alpha_in_bounds
            && self.positive_steps
            && self.finite_values
            && self.window_min_monotone
            && self.window_max_monotone
            && self.trace_len_matches
    }
}

pub fn audit_trace(report: &SolveReport, config: &SolverConfig) -> TraceAudit {
    let memory = match report.method {
        Method::Dspg => config.memory,
        Method::Pg => 1,
    };
    let recs = &report.trace.records;
    let gs = report.trace.dual_values();
    let scale = |v: f64| 1e-10 * v.abs().max(1.0);

    let mut armijo = true;
    let mut projection = true;
    let mut alpha_ok = true;
    let mut positive = true;
    for (k, r) in recs.iter().enumerate() {
        let lo = (k + 1).saturating_sub(memory);
        let g_ref = gs[lo..=k].iter().copied().fold(f64::INFINITY, f64::min);
        let t = r.sigma * r.nu;
        if gs[k + 1] < g_ref + config.gamma * t * r.grad_dot_d - scale(g_ref) {
            armijo = false;
        }
        let bound = r.d_norm * r.d_norm / r.alpha;
        if r.grad_dot_d < bound - 1e-10 * bound.max(1.0) {
            projection = false;
        }
        let (amin, amax) = match report.method {
            Method::Dspg => (config.alpha_min, config.alpha_max),
            Method::Pg => (config.pg_alpha, config.pg_alpha),
        };
        if !(r.alpha >= amin && r.alpha <= amax) {
            alpha_ok = false;
        }
        if !(t > 0.0) {
            positive = false;
        }
    }
    let window = |f: fn(f64, f64) -> f64, init: f64| -> bool {
        if gs.len() <= memory {
            return true;
        }
        let vals: Vec<f64> = gs.windows(memory).map(|w| w.iter().copied().fold(init, f)).collect();
        vals.windows(2).all(|p| p[1] >= p[0] - scale(p[0]))
    };
    TraceAudit {
        armijo_certificate: armijo,
        projection_inequality: projection,
        alpha_in_bounds: alpha_ok,
        positive_steps: positive,
        finite_values: gs.iter().all(|g| g.is_finite()),
        window_min_monotone: window(f64::min, f64::INFINITY),
        window_max_monotone: window(f64::max, f64::NEG_INFINITY),
        trace_len_matches: recs.len() == report.iterations,
    }
}

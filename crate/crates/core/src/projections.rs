//! Euclidean projections onto ℓp balls and onto the dual sets `𝒮ₕ`.
//!
//! `𝒮ₕ = {𝒬ₕᵀ(z) : ‖z‖_{pₕ*} ≤ λₕ}`. Because a selector's adjoint maps
//! distinct coefficients to disjoint entry slots, the Frobenius projection
//! onto `𝒮ₕ` reduces to a weighted least-squares projection of the
//! coefficient vector onto the ball, with weight 1 for diagonal coefficients
//! and 1/2 for off-diagonal ones (times the selector's squared scale).

use thiserror::Error;

use crate::model::{CompositeVar, NormOrder, Problem, RegularizerTerm};
use crate::symmat::SymmetricMatrix;

pub const MAX_NEWTON_ITERS: usize = 200;
const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("ℓp-ball projection did not converge after {iterations} iterations (relative norm residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },
}

/// Radius `λ ≥ 0` of the ball `{x : ‖x‖_{p*} ≤ λ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallSpec {
    pub p_dual: NormOrder,
    pub radius: f64,
}

/// Coordinatewise clamp to `[−λ, λ]`.
pub fn proj_linf_ball(z: &[f64], lambda: f64) -> Vec<f64> {
    z.iter().map(|&v| v.clamp(-lambda, lambda)).collect()
}

/// `λz / max{‖z‖₂, λ}`
pub fn proj_l2_ball(z: &[f64], lambda: f64) -> Vec<f64> {
    let norm = accurate_sum(z.iter().map(|v| v * v)).sqrt();
    if norm <= lambda {
        return z.to_vec();
    }
    let s = lambda / norm;
    z.iter().map(|v| v * s).collect()
}

/// Soft-thresholding at the `s` with `Σ max{0, |zᵢ| − s} = λ`.
pub fn proj_l1_ball(z: &[f64], lambda: f64) -> Vec<f64> {
    let l1 = accurate_sum(z.iter().map(|v| v.abs()));
    if l1 <= lambda {
        return z.to_vec();
    }
    if lambda <= 0.0 {
        return vec![0.0; z.len()];
    }
    let a: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    let t = l1_threshold(&a, None, lambda);
    z.iter()
        .zip(&a)
        .map(|(&v, &av)| (av - t).max(0.0).copysign(v))
        .collect()
}

/// Euclidean projection onto `{x : ‖x‖_p ≤ λ}` for `p ∈ (1, ∞)`.
pub fn proj_lp_ball(z: &[f64], lambda: f64, p: f64) -> Result<Vec<f64>, ProjectionError> {
    match NormOrder::new(p).unwrap_or(NormOrder::Infinity) {
        NormOrder::One => Ok(proj_l1_ball(z, lambda)),
        NormOrder::Two => Ok(proj_l2_ball(z, lambda)),
        NormOrder::Infinity => Ok(proj_linf_ball(z, lambda)),
        NormOrder::Finite(q) => weighted_lp(z, lambda, q, None),
    }
}

/// `argmin Σ w_k (x_k − z_k)²` subject to `‖x‖_{p*} ≤ λ`.
pub fn proj_weighted_ball(z: &[f64], lambda: f64, p_dual: NormOrder, w: &[f64]) -> Result<Vec<f64>, ProjectionError> {
    assert_eq!(z.len(), w.len(), "weights must match the vector length");
    debug_assert!(w.iter().all(|&v| v > 0.0));
    let uniform = w.windows(2).all(|p| p[0] == p[1]);
    if uniform {
        return Ok(match p_dual {
            NormOrder::One => proj_l1_ball(z, lambda),
            NormOrder::Two => proj_l2_ball(z, lambda),
            NormOrder::Infinity => proj_linf_ball(z, lambda),
            NormOrder::Finite(q) => weighted_lp(z, lambda, q, None)?,
        });
    }
    Ok(match p_dual {
        NormOrder::Infinity => proj_linf_ball(z, lambda),
        NormOrder::One => weighted_l1(z, lambda, w),
        NormOrder::Two => weighted_l2(z, lambda, w),
        NormOrder::Finite(q) => weighted_lp(z, lambda, q, Some(w))?,
    })
}

/// Frobenius projection of `V` onto `𝒮ₕ`.
pub fn proj_onto_sh(v: &SymmetricMatrix, term: &RegularizerTerm) -> Result<SymmetricMatrix, ProjectionError> {
    let z = project_coefficients(&term.coefficients_of(v), term)?;
    Ok(term.adjoint(v.dim(), &z))
}

/// Projects a coefficient vector: `𝒬ᵀ(result) = P_{𝒮ₕ}(𝒬ᵀ(z))`.
pub fn project_coefficients(z: &[f64], term: &RegularizerTerm) -> Result<Vec<f64>, ProjectionError> {
    proj_weighted_ball(z, term.lambda(), term.p_dual(), term.weights())
}

/// `D = P(u + v) − u` for one coefficient block, where `P` projects onto the
/// ball of radius `max{λ, ‖u‖_{p*}}`.
///
/// The step is corrected along the boundary normal so that `u + D` meets the
/// boundary to working precision relative to `‖D‖` rather than to `λ`. In
/// exact arithmetic, and for feasible `u`, this is the plain projected step;
/// in floating point it keeps the directional derivative of a step that
/// slides along an active face free of rounding noise of order `ε·λ`.
pub fn projected_step(u: &[f64], v: &[f64], term: &RegularizerTerm) -> Result<Vec<f64>, ProjectionError> {
    assert_eq!(u.len(), v.len());
    let w = term.weights();
    let lambda = term.lambda();
    let z: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
    let q = match term.p_dual() {
        NormOrder::Infinity => {
            return Ok(u
                .iter()
                .zip(&z)
                .map(|(&uk, &zk)| {
                    let bound = lambda.max(uk.abs());
                    zk.clamp(-bound, bound) - uk
                })
                .collect());
        }
        other => other.value(),
    };
    let current = power_sum(u.iter().map(|&x| (x, 0.0)), q);
    let level = current.max(lambda.powf(q));
    if power_sum(z.iter().map(|&x| (x, 0.0)), q) <= level {
        return Ok(v.to_vec());
    }
    let radius = level.powf(1.0 / q);
    let p = proj_weighted_ball(&z, radius, term.p_dual(), w)?;
    let mut d: Vec<f64> = p.iter().zip(u).map(|(a, b)| a - b).collect();
    // first-order correction along the metric normal n_k / w_k, driving the
    // change of Σ|x|^q to its target measured relative to u itself
    let target = (lambda.powf(q) - current).max(0.0);
    let r = target - power_delta(u, &d, q);
    let normal: Vec<f64> = p.iter().map(|&x| if x == 0.0 { 0.0 } else { q * x.abs().powf(q - 1.0) * x.signum() }).collect();
    let denom = accurate_sum(normal.iter().zip(w).map(|(n, wk)| n * n / wk));
    if denom > 0.0 && r.is_finite() {
        let beta = r / denom;
        for ((dk, nk), wk) in d.iter_mut().zip(&normal).zip(w) {
            *dk += beta * nk / wk;
        }
    }
    Ok(d)
}

/// `a·b = hi + lo` exactly.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let hi = a * b;
    (hi, a.mul_add(b, -hi))
}

/// `Σ |x_k|^q` with compensated accumulation.
fn power_sum(x: impl Iterator<Item = (f64, f64)>, q: f64) -> f64 {
    let mut acc = CompensatedSum::default();
    for (hi, lo) in x {
        if q == 1.0 {
            acc.add(hi.abs());
            acc.add(lo * hi.signum());
        } else if q == 2.0 {
            let (sq, err) = two_prod(hi, hi);
            acc.add(sq);
            acc.add(err);
            acc.add(2.0 * hi * lo);
        } else {
            let a = hi.abs();
            acc.add(a.powf(q));
            acc.add(q * a.powf(q - 1.0) * hi.signum() * lo);
        }
    }
    acc.value()
}

/// `Σ (|u_k + d_k|^q − |u_k|^q)`, accurate relative to the size of `d`
/// rather than of `u` for `q ∈ {1, 2}`.
fn power_delta(u: &[f64], d: &[f64], q: f64) -> f64 {
    let mut acc = CompensatedSum::default();
    for (&a, &b) in u.iter().zip(d) {
        if q == 1.0 {
            if a == 0.0 || b == 0.0 || a.signum() == b.signum() {
                acc.add(b.abs());
            } else if b.abs() <= a.abs() {
                acc.add(-b.abs());
            } else {
                acc.add(b.abs());
                acc.add(-2.0 * a.abs());
            }
        } else if q == 2.0 {
            // 2ab + b²
            let (p, pe) = two_prod(2.0 * a, b);
            let (s, se) = two_prod(b, b);
            acc.add(p);
            acc.add(pe);
            acc.add(s);
            acc.add(se);
        } else {
            acc.add((a + b).abs().powf(q) - a.abs().powf(q));
        }
    }
    acc.value()
}

/// `P_ℳ(V)`: identity on `y`, `𝒮ₕ`-projection on each coefficient block.
pub fn proj_m(problem: &Problem, v: &CompositeVar) -> Result<CompositeVar, ProjectionError> {
    let z = problem
        .regularizers()
        .iter()
        .zip(&v.z)
        .map(|(term, zh)| project_coefficients(zh, term))
        .collect::<Result<_, _>>()?;
    Ok(CompositeVar { y: v.y.clone(), z })
}

/// `P_ℳ` applied to a point given with dense matrix components.
pub fn proj_m_dense(problem: &Problem, y: &[f64], s: &[SymmetricMatrix]) -> Result<CompositeVar, ProjectionError> {
    assert_eq!(s.len(), problem.h());
    let z = problem
        .regularizers()
        .iter()
        .zip(s)
        .map(|(term, sh)| project_coefficients(&term.coefficients_of(sh), term))
        .collect::<Result<_, _>>()?;
    Ok(CompositeVar { y: y.to_vec(), z })
}

/// Neumaier-compensated running sum. Keeps radii and thresholds of boundary
/// points accurate to a few ulps regardless of the vector length.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn accurate_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Threshold `t ≥ 0` with `Σ max{0, a_k − t/w_k} = λ`, where `a ≥ 0` and
/// `Σ a > λ > 0`. Unit weights when `w` is `None`.
fn l1_threshold(a: &[f64], w: Option<&[f64]>, lambda: f64) -> f64 {
    let weight = |k: usize| w.map_or(1.0, |w| w[k]);
    let mut order: Vec<usize> = (0..a.len()).collect();
    let breakpoint = |k: usize| a[k] * weight(k);
    order.sort_by(|&i, &j| breakpoint(j).total_cmp(&breakpoint(i)));
    let (mut sum_a, mut sum_inv_w) = (CompensatedSum::default(), CompensatedSum::default());
    sum_a.add(-lambda);
    for (idx, &k) in order.iter().enumerate() {
        sum_a.add(a[k]);
        sum_inv_w.add(1.0 / weight(k));
        let t = sum_a.value() / sum_inv_w.value();
        let next = order.get(idx + 1).map_or(0.0, |&k2| breakpoint(k2));
        if t >= next {
            return t.max(0.0);
        }
    }
    // unreachable when Σ a > λ
    0.0
}

fn weighted_l1(z: &[f64], lambda: f64, w: &[f64]) -> Vec<f64> {
    let l1 = accurate_sum(z.iter().map(|v| v.abs()));
    if l1 <= lambda {
        return z.to_vec();
    }
    if lambda <= 0.0 {
        return vec![0.0; z.len()];
    }
    let a: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    let t = l1_threshold(&a, Some(w), lambda);
    z.iter()
        .zip(&a)
        .zip(w)
        .map(|((&v, &av), &wk)| (av - t / wk).max(0.0).copysign(v))
        .collect()
}

fn weighted_l2(z: &[f64], lambda: f64, w: &[f64]) -> Vec<f64> {
    let norm = accurate_sum(z.iter().map(|v| v * v)).sqrt();
    if norm <= lambda {
        return z.to_vec();
    }
    if lambda <= 0.0 {
        return vec![0.0; z.len()];
    }
    // x_k(θ) = w_k z_k / (w_k + θ); φ(θ) = ‖x(θ)‖² − λ² is convex decreasing,
    // so Newton from θ = 0 increases monotonically to the root.
    let x_of = |theta: f64| -> Vec<f64> { z.iter().zip(w).map(|(&v, &wk)| wk * v / (wk + theta)).collect() };
    let wz = z.iter().zip(w).map(|(v, wk)| (v * wk).powi(2)).sum::<f64>().sqrt();
    let hi = wz / lambda;
    let mut theta = 0.0;
    for _ in 0..MAX_NEWTON_ITERS {
        let (mut phi, mut dphi) = (CompensatedSum::default(), 0.0);
        phi.add(-lambda * lambda);
        for (&v, &wk) in z.iter().zip(w) {
            let d = wk + theta;
            let xk = wk * v / d;
            phi.add(xk * xk);
            dphi -= 2.0 * xk * xk / d;
        }
        let phi = phi.value();
        if phi.abs() <= 2.0 * NORM_TOL * lambda * lambda || dphi == 0.0 {
            break;
        }
        let next = (theta - phi / dphi).clamp(0.0, hi);
        if next == theta {
            break;
        }
        theta = next;
    }
    clip_to_radius(x_of(theta), lambda, NormOrder::Two)
}

/// Weighted projection onto the ℓq ball for `q ∈ (1, ∞)`.
///
/// KKT: `w_k(x_k − z_k) + η |x_k|^{q−1} sign(x_k) = 0` with `Σ|x_k|^q = λ^q`.
/// The outer loop is a bracketed Newton iteration on `η`; each coordinate is
/// a monotone scalar equation solved by Newton from the right.
fn weighted_lp(z: &[f64], lambda: f64, q: f64, w: Option<&[f64]>) -> Result<Vec<f64>, ProjectionError> {
    let order = NormOrder::Finite(q);
    if order.norm(z) <= lambda {
        return Ok(z.to_vec());
    }
    if lambda <= 0.0 {
        return Ok(vec![0.0; z.len()]);
    }
    let weight = |k: usize| w.map_or(1.0, |w| w[k]);
    // normalize so that max |z| = 1
    let scale = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let a: Vec<f64> = z.iter().map(|v| v.abs() / scale).collect();
    let radius = lambda / scale;
    let target = radius.powf(q);

    let eval = |eta: f64, x: &mut [f64]| -> (f64, f64) {
        let (mut phi, mut dphi) = (-target, 0.0);
        for k in 0..a.len() {
            let wk = weight(k);
            let xk = coordinate_root(a[k], wk, eta, q);
            x[k] = xk;
            if xk > 0.0 {
                phi += xk.powf(q);
                // dx/dη = −x / (w x^{2−q} + η(q−1))
                let dx = -xk / (wk * xk.powf(2.0 - q) + eta * (q - 1.0));
                dphi += q * xk.powf(q - 1.0) * dx;
            }
        }
        (phi, dphi)
    };

    let wa_sum: f64 = (0..a.len())
        .map(|k| (weight(k) * a[k]).powf(q / (q - 1.0)))
        .sum();
    let mut hi = wa_sum.powf((q - 1.0) / q) / radius.powf(q - 1.0);
    let mut lo = 0.0;
    let mut eta = hi;
    let mut x = vec![0.0; a.len()];
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..MAX_NEWTON_ITERS {
        let (phi, dphi) = eval(eta, &mut x);
        let norm = (phi + target).max(0.0).powf(1.0 / q);
        residual = (norm - radius).abs() / radius;
        if residual <= NORM_TOL {
            converged = true;
            break;
        }
        if phi > 0.0 {
            lo = eta;
        } else {
            hi = eta;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            converged = residual <= 1e-9;
            break;
        }
        let newton = if dphi < 0.0 { eta - phi / dphi } else { f64::NAN };
        eta = if newton > lo && newton < hi {
            newton
        } else if lo == 0.0 {
            0.125 * hi
        } else {
            (lo * hi).sqrt()
        };
    }
    if !converged {
        return Err(ProjectionError::ConvergenceFailure {
            iterations: MAX_NEWTON_ITERS,
            residual,
        });
    }
    let out: Vec<f64> = x
        .iter()
        .zip(z)
        .map(|(&xk, &zk)| (xk * scale).copysign(zk))
        .collect();
    Ok(clip_to_radius(out, lambda, order))
}

/// Root of `w(x − a) + η x^{q−1} = 0` on `[0, a]`.
fn coordinate_root(a: f64, w: f64, eta: f64, q: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if eta == 0.0 {
        return a;
    }
    if q >= 2.0 {
        // convex increasing in x: Newton from x = a decreases monotonically
        let mut x = a;
        for _ in 0..100 {
            let f = w * (x - a) + eta * x.powf(q - 1.0);
            let df = w + eta * (q - 1.0) * x.powf(q - 2.0);
            let next = (x - f / df).max(0.0);
            if next >= x || x - next <= 1e-16 * x {
                return next.min(x);
            }
            x = next;
        }
        x
    } else {
        // substitute u = x^{q−1}; w(u^r − a) + ηu is convex increasing in u
        let r = 1.0 / (q - 1.0);
        let mut u = a.powf(q - 1.0);
        for _ in 0..100 {
            let ur = u.powf(r);
            let f = w * (ur - a) + eta * u;
            let df = w * r * ur / u + eta;
            let next = (u - f / df).max(0.0);
            if next >= u || u - next <= 1e-16 * u {
                return next.min(u).powf(r);
            }
            u = next;
        }
        u.powf(r)
    }
}

/// Rescales a point that overshoots the radius by roundoff.
fn clip_to_radius(mut x: Vec<f64>, lambda: f64, order: NormOrder) -> Vec<f64> {
    let norm = order.norm(&x);
    if norm > lambda {
        let s = lambda / norm;
        for v in &mut x {
            *v *= s;
        }
    }
    x
}

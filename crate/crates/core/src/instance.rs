//! Seeded synthetic instances: sparse inverse-covariance log-likelihood with
//! ℓp penalties, block-regularized log-likelihood, and multi-task structure
//! learning.

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ConstraintKind, ConstraintMap, ModelError, NormOrder, Position, Problem, RegularizerTerm};
use crate::symmat::{self, SymmetricMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("invalid instance spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockVariant {
    MaxNorm,
    FrobeniusNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Family {
    LpLogLikelihood {
        #[serde(default = "default_density")]
        density: f64,
        /// One regularizer per entry, each with `λ = 0.001·n^{1−1/p}`.
        #[serde(default = "default_p_list")]
        p: Vec<NormOrder>,
    },
    BlockRegularized {
        /// Number of index groups.
        k: usize,
        #[serde(default = "default_rho")]
        rho: f64,
        variant: BlockVariant,
        #[serde(default = "default_density")]
        density: f64,
    },
    MultiTask {
        /// Number of tasks `K`; `n` is the per-task dimension.
        tasks: usize,
        #[serde(default = "default_task_lambda")]
        lambda: f64,
        #[serde(default = "default_density")]
        density: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    #[serde(flatten)]
    pub family: Family,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Sample count per covariance; defaults to `max(2n, 2000)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

fn default_density() -> f64 {
    0.1
}
fn default_p_list() -> Vec<NormOrder> {
    vec![NormOrder::One]
}
fn default_rho() -> f64 {
    0.001
}
fn default_task_lambda() -> f64 {
    0.005
}
fn default_mu() -> f64 {
    1.0
}

impl InstanceSpec {
    pub fn lp_loglik(n: usize, p: Vec<NormOrder>, seed: u64) -> Self {
        Self {
            family: Family::LpLogLikelihood {
                density: default_density(),
                p,
            },
            n,
            seed,
            mu: 1.0,
            samples: None,
        }
    }

    pub fn block(n: usize, k: usize, variant: BlockVariant, seed: u64) -> Self {
        Self {
            family: Family::BlockRegularized {
                k,
                rho: default_rho(),
                variant,
                density: default_density(),
            },
            n,
            seed,
            mu: 1.0,
            samples: None,
        }
    }

    pub fn multitask(n: usize, tasks: usize, seed: u64) -> Self {
        Self {
            family: Family::MultiTask {
                tasks,
                lambda: default_task_lambda(),
                density: default_density(),
            },
            n,
            seed,
            mu: 1.0,
            samples: None,
        }
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let bad = |m: String| Err(InstanceError::Invalid(m));
        if self.n < 2 {
            return bad(format!("n must be >= 2, got {}", self.n));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if let Some(s) = self.samples {
            if s < self.n + 1 {
                return bad(format!("samples must be >= n + 1, got {s}"));
            }
        }
        let density = match &self.family {
            Family::LpLogLikelihood { density, .. } => *density,
            Family::BlockRegularized { k, rho, density, .. } => {
                if *k < 1 || *k > self.n {
                    return bad(format!("group count k must lie in [1, n], got {k}"));
                }
                if !(*rho >= 0.0 && rho.is_finite()) {
                    return bad(format!("rho must be >= 0, got {rho}"));
                }
                *density
            }
            Family::MultiTask { tasks, lambda, density } => {
                if *tasks < 1 {
                    return bad("task count must be >= 1".into());
                }
                if !(*lambda >= 0.0 && lambda.is_finite()) {
                    return bad(format!("lambda must be >= 0, got {lambda}"));
                }
                *density
            }
        };
        if !(density > 0.0 && density < 1.0) {
            return bad(format!("density must lie in (0, 1), got {density}"));
        }
        Ok(())
    }

    fn sample_count(&self) -> usize {
        self.samples.unwrap_or((2 * self.n).max(2000))
    }
}

/// Builds the problem described by `spec`.
pub fn generate(spec: &InstanceSpec) -> Result<Problem, InstanceError> {
    match spec.family {
        Family::LpLogLikelihood { .. } => gen_lp_loglik(spec),
        Family::BlockRegularized { .. } => gen_block(spec),
        Family::MultiTask { .. } => gen_multitask(spec),
    }
}

/// Independent sub-seed `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Box–Muller pair of independent standard normals.
fn normal_pair(rng: &mut impl Rng) -> (f64, f64) {
    // 1 − U lies in (0, 1], keeping the logarithm finite
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let t = std::f64::consts::TAU * u2;
    (r * t.cos(), r * t.sin())
}

/// Sparse strictly diagonally dominant `Σ⁻¹`: each off-diagonal entry is
/// nonzero with probability `density`, drawn from `U[−1, 1]`; the diagonal is
/// the row's absolute sum plus one.
pub fn gen_sparse_invcov(n: usize, density: f64, seed: u64) -> SymmetricMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < density {
                s.set(i, j, rng.random_range(-1.0..=1.0));
            }
        }
    }
    for i in 0..n {
        let off: f64 = s.row(i).iter().map(|v| v.abs()).sum();
        s.set(i, i, off + 1.0);
    }
    s
}

/// Uncentered sample covariance `(1/N) Σ x xᵀ` of `N` draws `x = L⁻ᵀ z`.
///
/// Panics if `inv_cov` is not positive definite.
pub fn sample_covariance(inv_cov: &SymmetricMatrix, sample_count: usize, seed: u64) -> SymmetricMatrix {
    let n = inv_cov.dim();
    let l = symmat::cholesky(inv_cov).expect("inverse covariance must be positive definite");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = vec![0.0; n * n];
    let mut z = vec![0.0; n];
    let mut x = vec![0.0; n];
    for _ in 0..sample_count {
        for pair in z.chunks_mut(2) {
            let (a, b) = normal_pair(&mut rng);
            pair[0] = a;
            if pair.len() > 1 {
                pair[1] = b;
            }
        }
        // back substitution with Lᵀ
        for i in (0..n).rev() {
            let mut v = z[i];
            for k in i + 1..n {
                v -= l.get(k, i) * x[k];
            }
            x[i] = v / l.get(i, i);
        }
        for i in 0..n {
            let xi = x[i];
            let row = &mut acc[i * n..i * n + i + 1];
            for (r, &xj) in row.iter_mut().zip(&x[..=i]) {
                *r += xi * xj;
            }
        }
    }
    let inv_n = 1.0 / sample_count as f64;
    SymmetricMatrix::from_lower_fn(n, |i, j| acc[i * n + j] * inv_n)
}

/// Half of the zero positions of `inv_cov` farther than 5 from the diagonal,
/// chosen uniformly without replacement and returned in row-major order.
pub fn build_omega(inv_cov: &SymmetricMatrix, seed: u64) -> Vec<Position> {
    let n = inv_cov.dim();
    let candidates: Vec<Position> = (0..n)
        .flat_map(|i| (i + 6..n).map(move |j| (i, j)))
        .filter(|&(i, j)| inv_cov.get(i, j) == 0.0)
        .collect();
    let take = candidates.len() / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = index::sample(&mut rng, candidates.len(), take).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|k| candidates[k]).collect()
}

/// `λ = 0.001·n^{1−1/p}`
pub fn lp_lambda(n: usize, p: NormOrder) -> f64 {
    let exponent = match p {
        NormOrder::Infinity => 1.0,
        other => 1.0 - 1.0 / other.value(),
    };
    0.001 * (n as f64).powf(exponent)
}

pub fn gen_lp_loglik(spec: &InstanceSpec) -> Result<Problem, InstanceError> {
    spec.validate()?;
    let Family::LpLogLikelihood { density, p } = &spec.family else {
        return Err(InstanceError::Invalid("expected the LpLogLikelihood family".into()));
    };
    let n = spec.n;
    let inv_cov = gen_sparse_invcov(n, *density, derive_seed(spec.seed, 0));
    let c = sample_covariance(&inv_cov, spec.sample_count(), derive_seed(spec.seed, 1));
    let omega = build_omega(&inv_cov, derive_seed(spec.seed, 2));
    let upper: Vec<Position> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let terms = p
        .iter()
        .map(|&ph| RegularizerTerm::selector(upper.clone(), lp_lambda(n, ph), ph))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Problem::new(c, spec.mu, ConstraintMap::pin_zero(omega)?, terms)?)
}

/// Contiguous groups of sizes differing by at most one.
pub fn contiguous_groups(n: usize, k: usize) -> Vec<std::ops::Range<usize>> {
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    (0..k)
        .map(|g| {
            let len = base + usize::from(g < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

pub fn gen_block(spec: &InstanceSpec) -> Result<Problem, InstanceError> {
    spec.validate()?;
    let Family::BlockRegularized { k, rho, variant, density } = &spec.family else {
        return Err(InstanceError::Invalid("expected the BlockRegularized family".into()));
    };
    let n = spec.n;
    let inv_cov = gen_sparse_invcov(n, *density, derive_seed(spec.seed, 0));
    let c = sample_covariance(&inv_cov, spec.sample_count(), derive_seed(spec.seed, 1));
    let groups = contiguous_groups(n, *k);
    let mut terms = Vec::with_capacity(k * (k + 1) / 2);
    for h1 in 0..*k {
        for h2 in h1..*k {
            let (g1, g2) = (groups[h1].clone(), groups[h2].clone());
            let positions: Vec<Position> = g1
                .clone()
                .flat_map(|i| g2.clone().filter(move |&j| j >= i).map(move |j| (i, j)))
                .collect();
            let ordered = if h1 == h2 { g1.len() * g1.len() } else { 2 * g1.len() * g2.len() } as f64;
            let term = match variant {
                BlockVariant::MaxNorm => RegularizerTerm::ordered_pairs(positions, rho * ordered, NormOrder::Infinity)?,
                BlockVariant::FrobeniusNorm => RegularizerTerm::ordered_pairs(positions, rho * ordered.sqrt(), NormOrder::Two)?,
            };
            terms.push(term);
        }
    }
    Ok(Problem::new(c, spec.mu, ConstraintMap::none(), terms)?)
}

/// Block-diagonal multi-task problem of dimension `nK`. Off-block entries are
/// pinned to zero. Task-level entry `(a, b)`, `a <= b`, gets one ℓ∞ term over
/// its `K` copies; off-diagonal terms carry `2λ` because the task-level sum
/// runs over both `(a, b)` and `(b, a)`.
pub fn gen_multitask(spec: &InstanceSpec) -> Result<Problem, InstanceError> {
    spec.validate()?;
    let Family::MultiTask { tasks, lambda, density } = &spec.family else {
        return Err(InstanceError::Invalid("expected the MultiTask family".into()));
    };
    let (n, kk) = (spec.n, *tasks);
    let dim = n * kk;
    let mut c = SymmetricMatrix::zeros(dim);
    for t in 0..kk {
        let stream = 2 * t as u64;
        let inv_cov = gen_sparse_invcov(n, *density, derive_seed(spec.seed, stream));
        let ct = sample_covariance(&inv_cov, spec.sample_count(), derive_seed(spec.seed, stream + 1));
        for i in 0..n {
            for j in 0..=i {
                c.set(t * n + i, t * n + j, ct.get(i, j));
            }
        }
    }
    let pinned: Vec<Position> = (0..dim)
        .flat_map(|i| (i + 1..dim).map(move |j| (i, j)))
        .filter(|&(i, j)| i / n != j / n)
        .collect();
    let mut terms = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        for b in a..n {
            let positions = (0..kk).map(|t| (t * n + a, t * n + b)).collect();
            let weight = if a == b { *lambda } else { 2.0 * lambda };
            terms.push(RegularizerTerm::selector(positions, weight, NormOrder::Infinity)?);
        }
    }
    Ok(Problem::new(c, spec.mu, ConstraintMap::pin_zero(pinned)?, terms)?)
}

/// A positive definite `X` with `𝒜(X) = b` for entry-pinning problems: a
/// multiple of the identity with the pinned entries overwritten, scaled up
/// until it factors.
pub fn strictly_feasible_point(problem: &Problem) -> Result<SymmetricMatrix, InstanceError> {
    let cm = problem.constraints();
    let ConstraintKind::EntryPinning(positions) = &cm.kind else {
        return Err(InstanceError::Invalid("feasible point construction needs entry-pinning constraints".into()));
    };
    let n = problem.dim();
    let mut scale = 1.0 + cm.b.iter().map(|v| v.abs()).sum::<f64>();
    for _ in 0..64 {
        let mut x = SymmetricMatrix::identity(n).scaled(scale);
        for (&(i, j), &v) in positions.iter().zip(&cm.b) {
            x.set(i, j, v);
        }
        if symmat::cholesky(&x).is_ok() {
            return Ok(x);
        }
        scale *= 2.0;
    }
    Err(InstanceError::Invalid("no positive definite point satisfies the pinned entries".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn off_diagonal_nnz(s: &SymmetricMatrix) -> usize {
        s.upper_nnz() - (0..s.dim()).filter(|&i| s.get(i, i) != 0.0).count()
    }

    #[test]
    fn invcov_density_limit_is_diagonal() {
        let s = gen_sparse_invcov(20, 1e-300, 3);
        assert_eq!(off_diagonal_nnz(&s), 0);
        assert!(symmat::cholesky(&s).is_ok());
    }

    #[test]
    fn invcov_count_near_expected() {
        let s = gen_sparse_invcov(50, 0.1, 17);
        let expected = 0.1 * (50.0 * 49.0 / 2.0);
        let got = off_diagonal_nnz(&s) as f64;
        assert!((got - expected).abs() <= 0.15 * expected, "{got} vs {expected}");
    }

    #[test]
    fn invcov_is_positive_definite_for_many_seeds() {
        for seed in 0..100 {
            let s = gen_sparse_invcov(30, 0.2, seed);
            assert!(symmat::cholesky(&s).is_ok(), "seed {seed}");
        }
    }

    #[test]
    fn sample_covariance_is_deterministic_and_psd() {
        let inv = gen_sparse_invcov(8, 0.3, 1);
        let a = sample_covariance(&inv, 50, 9);
        let b = sample_covariance(&inv, 50, 9);
        assert_eq!(a, b);
        assert!(symmat::min_eigenvalue(&a) >= -1e-10);
        assert_ne!(a, sample_covariance(&inv, 50, 10));
    }

    #[test]
    fn omega_on_dense_and_tiny_patterns() {
        let dense = SymmetricMatrix::from_lower_fn(10, |_, _| 1.0);
        assert!(build_omega(&dense, 0).is_empty());
        // n = 7: only (1, 7) is far enough from the diagonal
        let seven = SymmetricMatrix::identity(7);
        assert!(build_omega(&seven, 0).is_empty());
        let eight = SymmetricMatrix::identity(8);
        // (1,7), (1,8), (2,8) qualify
        assert_eq!(build_omega(&eight, 0).len(), 1);
    }

    #[test]
    fn omega_predicates_hold() {
        let inv = gen_sparse_invcov(50, 0.1, 5);
        let omega = build_omega(&inv, 6);
        let candidates = (0..50).flat_map(|i| (i + 6..50).map(move |j| (i, j))).filter(|&(i, j)| inv.get(i, j) == 0.0).count();
        assert_eq!(omega.len(), candidates / 2);
        for &(i, j) in &omega {
            assert!(i < j && j - i > 5 && inv.get(i, j) == 0.0);
        }
        assert!(omega.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn lp_loglik_structure() {
        let p = gen_lp_loglik(&InstanceSpec::lp_loglik(10, vec![NormOrder::One], 1)).unwrap();
        assert_eq!(p.h(), 1);
        assert_eq!(p.regularizers()[0].len(), 45);
        assert!((p.regularizers()[0].lambda() - 0.001).abs() < 1e-18);

        let spec = InstanceSpec::lp_loglik(12, vec![NormOrder::One, NormOrder::Two], 4);
        let p = gen_lp_loglik(&spec).unwrap();
        let r = p.regularizers();
        assert_eq!(r[0].positions(), r[1].positions());
        assert_ne!(r[0].p(), r[1].p());
        assert!((r[1].lambda() - 0.001 * 12f64.sqrt()).abs() < 1e-15);
        assert_eq!(gen_lp_loglik(&spec).unwrap(), p);
    }

    #[test]
    fn lp_loglik_start_is_dual_feasible() {
        for seed in 0..20 {
            let p = gen_lp_loglik(&InstanceSpec::lp_loglik(12, vec![NormOrder::Infinity], seed)).unwrap();
            assert!(symmat::cholesky(p.c()).is_ok());
            let x = strictly_feasible_point(&p).unwrap();
            assert!(p.constraints().apply(&x).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn groups_are_near_equal_and_contiguous() {
        let g = contiguous_groups(10, 3);
        assert_eq!(g, vec![0..4, 4..7, 7..10]);
        assert_eq!(contiguous_groups(4, 4).len(), 4);
    }

    #[test]
    fn block_structure_small() {
        let p = gen_block(&InstanceSpec::block(4, 2, BlockVariant::MaxNorm, 0)).unwrap();
        let r = p.regularizers();
        assert_eq!(r.len(), 3);
        assert_eq!(r[0].positions(), &[(0, 0), (0, 1), (1, 1)]);
        assert!((r[0].lambda() - 0.004).abs() < 1e-18);
        assert!((r[1].lambda() - 0.008).abs() < 1e-18);
        let f = gen_block(&InstanceSpec::block(4, 2, BlockVariant::FrobeniusNorm, 0)).unwrap();
        assert!((f.regularizers()[0].lambda() - 0.002).abs() < 1e-18);
        assert_eq!(f.regularizers()[0].multiplicity(), &[1, 2, 1]);
    }

    #[test]
    fn block_terms_partition_all_entries() {
        for (n, k) in [(9, 4), (7, 1), (5, 5)] {
            let p = gen_block(&InstanceSpec::block(n, k, BlockVariant::FrobeniusNorm, 2)).unwrap();
            let mut seen = vec![0u32; n * n];
            for t in p.regularizers() {
                for &(i, j) in t.positions() {
                    seen[i * n + j] += 1;
                }
            }
            for i in 0..n {
                for j in i..n {
                    assert_eq!(seen[i * n + j], 1, "({i}, {j})");
                }
            }
            assert_eq!(p.h(), k * (k + 1) / 2);
        }
        assert!(gen_block(&InstanceSpec::block(3, 4, BlockVariant::MaxNorm, 0)).is_err());
    }

    #[test]
    fn multitask_structure() {
        let p = gen_multitask(&InstanceSpec::multitask(3, 2, 0)).unwrap();
        assert_eq!(p.dim(), 6);
        assert_eq!(p.m(), 9);
        assert_eq!(p.h(), 6);
        let ConstraintKind::EntryPinning(pins) = &p.constraints().kind else { unreachable!() };
        for t in p.regularizers() {
            assert_eq!(t.len(), 2);
            for pos in t.positions() {
                assert!(!pins.contains(pos));
            }
        }
        for &(i, j) in pins {
            assert_eq!(p.c().get(i, j), 0.0);
        }
        let single = gen_multitask(&InstanceSpec::multitask(4, 1, 0)).unwrap();
        assert_eq!(single.m(), 0);
        assert!(single.regularizers().iter().all(|t| t.len() == 1));
    }

    #[test]
    fn spec_json_round_trip_and_errors() {
        let spec: InstanceSpec = serde_json::from_str(r#"{"family": "LpLogLikelihood", "n": 10, "seed": 1}"#).unwrap();
        assert_eq!(spec, InstanceSpec::lp_loglik(10, vec![NormOrder::One], 1));
        let spec = InstanceSpec::block(20, 3, BlockVariant::FrobeniusNorm, 4);
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<InstanceSpec>(&text).unwrap(), spec);
        let err = serde_json::from_str::<InstanceSpec>(r#"{"n": 10}"#).unwrap_err();
        assert!(err.to_string().contains("family"), "{err}");
        let spec: InstanceSpec = serde_json::from_str(r#"{"family": "LpLogLikelihood", "n": 10, "p": [1, "inf", 1.5]}"#).unwrap();
        let Family::LpLogLikelihood { p, .. } = spec.family else { unreachable!() };
        assert_eq!(p, vec![NormOrder::One, NormOrder::Infinity, NormOrder::Finite(1.5)]);
    }
}

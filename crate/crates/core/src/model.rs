//! Primal/dual data model for log-det programs with ℓp regularizers.
//!
//! The primal problem is
//!
//! ```text
//! min  C•X − μ log det X + Σₕ λₕ ‖𝒬ₕ(X)‖_{pₕ}   s.t.  𝒜(X) = b,  X ≻ 0
//! ```
//!
//! and the solver works on its dual over the composite variable
//! `U = (y, S₁, …, S_H)` with `Sₕ = 𝒬ₕᵀ(zₕ)`, `‖zₕ‖_{pₕ*} ≤ λₕ`.
//!
//! Indices are 0-based in memory; the problem file uses 1-based indices.

use thiserror::Error;

use crate::symmat::{self, CholeskyFactor, LinalgError, SymmetricMatrix};

/// A symmetric entry position `(i, j)` with `i <= j`.
pub type Position = (usize, usize);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dual infeasible: C + B(U) is not positive definite ({0})")]
    DualInfeasible(LinalgError),
    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(LinalgError),
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid problem: {0}")]
    Invalid(String),
}

/// Norm order `p ∈ [1, ∞]`. The exact-formula cases are kept symbolic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormOrder {
    One,
    Two,
    Infinity,
    /// `p ∈ (1, ∞) \ {2}`
    Finite(f64),
}

impl NormOrder {
    const SNAP: f64 = 1e-9;

    pub fn new(p: f64) -> Result<Self, ModelError> {
        if p.is_nan() || p < 1.0 - Self::SNAP {
            return Err(ModelError::Invalid(format!("norm order must be >= 1, got {p}")));
        }
        Ok(if p.is_infinite() {
            NormOrder::Infinity
        } else if (p - 1.0).abs() <= Self::SNAP {
            NormOrder::One
        } else if (p - 2.0).abs() <= Self::SNAP {
            NormOrder::Two
        } else {
            NormOrder::Finite(p)
        })
    }

    pub fn value(self) -> f64 {
        match self {
            NormOrder::One => 1.0,
            NormOrder::Two => 2.0,
            NormOrder::Infinity => f64::INFINITY,
            NormOrder::Finite(p) => p,
        }
    }

    /// Conjugate exponent with `1/p + 1/p* = 1`.
    pub fn dual(self) -> Self {
        match self {
            NormOrder::One => NormOrder::Infinity,
            NormOrder::Infinity => NormOrder::One,
            NormOrder::Two => NormOrder::Two,
            NormOrder::Finite(p) => NormOrder::new(p / (p - 1.0)).expect("conjugate of p > 1"),
        }
    }

    pub fn norm(self, x: &[f64]) -> f64 {
        match self {
            NormOrder::One => x.iter().map(|v| v.abs()).sum(),
            NormOrder::Two => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormOrder::Infinity => x.iter().fold(0.0, |m, v| m.max(v.abs())),
            NormOrder::Finite(p) => {
                let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if scale == 0.0 {
                    return 0.0;
                }
                scale * x.iter().map(|v| (v.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
            }
        }
    }
}

/// Which linear equality constraints `𝒜(X) = b` the problem carries.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintKind {
    /// `X_ij = b_k` for each listed position. The constraint matrix of an
    /// off-diagonal pin carries 1/2 at both symmetric slots so that `A•X = X_ij`.
    EntryPinning(Vec<Position>),
    GeneralMatrices(Vec<SymmetricMatrix>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMap {
    pub kind: ConstraintKind,
    pub b: Vec<f64>,
}

impl ConstraintMap {
    pub fn none() -> Self {
        Self {
            kind: ConstraintKind::EntryPinning(Vec::new()),
            b: Vec::new(),
        }
    }

    pub fn pinning(positions: Vec<Position>, b: Vec<f64>) -> Result<Self, ModelError> {
        let positions: Vec<Position> = positions.into_iter().map(normalize).collect();
        check_distinct(&positions, "pinned positions")?;
        if b.len() != positions.len() {
            return Err(ModelError::DimensionMismatch {
                what: "pinning right-hand side",
                expected: positions.len(),
                got: b.len(),
            });
        }
        Ok(Self {
            kind: ConstraintKind::EntryPinning(positions),
            b,
        })
    }

    /// Zero-valued pins.
    pub fn pin_zero(positions: Vec<Position>) -> Result<Self, ModelError> {
        let m = positions.len();
        Self::pinning(positions, vec![0.0; m])
    }

    /// General constraint matrices. Linear independence of the `Aᵢ` is not checked.
    pub fn general(matrices: Vec<SymmetricMatrix>, b: Vec<f64>) -> Result<Self, ModelError> {
        if b.len() != matrices.len() {
            return Err(ModelError::DimensionMismatch {
                what: "constraint right-hand side",
                expected: matrices.len(),
                got: b.len(),
            });
        }
        for i in 0..matrices.len() {
            for j in 0..i {
                if matrices[i] == matrices[j] {
                    return Err(ModelError::Invalid(format!(
                        "constraint matrices {j} and {i} are identical"
                    )));
                }
            }
        }
        Ok(Self {
            kind: ConstraintKind::GeneralMatrices(matrices),
            b,
        })
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// `𝒜(X) = (A₁•X, …, A_m•X)`
    pub fn apply(&self, x: &SymmetricMatrix) -> Result<Vec<f64>, ModelError> {
        match &self.kind {
            ConstraintKind::EntryPinning(pos) => {
                for &(_, j) in pos {
                    check_index(j, x.dim())?;
                }
                Ok(pos.iter().map(|&(i, j)| x.get(i, j)).collect())
            }
            ConstraintKind::GeneralMatrices(mats) => mats
                .iter()
                .map(|a| {
                    check_dim(a.dim(), x.dim(), "constraint matrix")?;
                    Ok(a.dot(x))
                })
                .collect(),
        }
    }

    /// `𝒜ᵀ(y) = Σᵢ yᵢAᵢ` added into `out` with factor `alpha`.
    pub fn add_adjoint(&self, alpha: f64, y: &[f64], out: &mut SymmetricMatrix) -> Result<(), ModelError> {
        check_dim(y.len(), self.len(), "constraint multiplier")?;
        match &self.kind {
            ConstraintKind::EntryPinning(pos) => {
                for (&(i, j), &yk) in pos.iter().zip(y) {
                    check_index(j, out.dim())?;
                    if i == j {
                        out.add_at(i, i, alpha * yk);
                    } else {
                        out.add_at(i, j, 0.5 * alpha * yk);
                    }
                }
            }
            ConstraintKind::GeneralMatrices(mats) => {
                for (a, &yk) in mats.iter().zip(y) {
                    check_dim(a.dim(), out.dim(), "constraint matrix")?;
                    out.axpy(alpha * yk, a);
                }
            }
        }
        Ok(())
    }

    pub fn adjoint(&self, n: usize, y: &[f64]) -> Result<SymmetricMatrix, ModelError> {
        let mut out = SymmetricMatrix::zeros(n);
        self.add_adjoint(1.0, y, &mut out)?;
        Ok(out)
    }
}

/// One term `λ‖𝒬(X)‖_p` where `𝒬` reads symmetric entries.
///
/// Each position carries a multiplicity `m_k` (how many ordered pairs it
/// stands for). The term's value is `λ (Σ m_k |X_k|^p)^{1/p}`, which is
/// realized as the selector `𝒬(X)_k = m_k^{1/p} X_k` (the factor is 1 for
/// `p = ∞`). Plain upper-triangle selectors use `m_k = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizerTerm {
    positions: Vec<Position>,
    multiplicity: Vec<u32>,
    lambda: f64,
    p: NormOrder,
    p_dual: NormOrder,
    // 𝒬 coefficient per position
    scale: Vec<f64>,
    // Frobenius weight of each coefficient: ‖𝒬ᵀ(z)‖² = Σ w_k z_k²
    weights: Vec<f64>,
}

impl RegularizerTerm {
    /// Plain selector: every position counts once.
    pub fn selector(positions: Vec<Position>, lambda: f64, p: NormOrder) -> Result<Self, ModelError> {
        let m = vec![1; positions.len()];
        Self::with_multiplicity(positions, m, lambda, p)
    }

    /// Ordered-pair selector: off-diagonal positions count twice.
    pub fn ordered_pairs(positions: Vec<Position>, lambda: f64, p: NormOrder) -> Result<Self, ModelError> {
        let positions: Vec<Position> = positions.into_iter().map(normalize).collect();
        let m = positions.iter().map(|&(i, j)| if i == j { 1 } else { 2 }).collect();
        Self::with_multiplicity(positions, m, lambda, p)
    }

    pub fn with_multiplicity(
        positions: Vec<Position>,
        multiplicity: Vec<u32>,
        lambda: f64,
        p: NormOrder,
    ) -> Result<Self, ModelError> {
        let positions: Vec<Position> = positions.into_iter().map(normalize).collect();
        check_distinct(&positions, "regularizer positions")?;
        check_dim(multiplicity.len(), positions.len(), "regularizer multiplicity")?;
        if multiplicity.iter().any(|&m| m == 0) {
            return Err(ModelError::Invalid("multiplicity must be positive".into()));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(ModelError::Invalid(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        let scale: Vec<f64> = multiplicity
            .iter()
            .map(|&m| match p {
                NormOrder::Infinity => 1.0,
                NormOrder::One => m as f64,
                NormOrder::Two => (m as f64).sqrt(),
                NormOrder::Finite(pv) => (m as f64).powf(1.0 / pv),
            })
            .collect();
        let weights = positions
            .iter()
            .zip(&scale)
            .map(|(&(i, j), &c)| if i == j { c * c } else { 0.5 * c * c })
            .collect();
        Ok(Self {
            positions,
            multiplicity,
            lambda,
            p,
            p_dual: p.dual(),
            scale,
            weights,
        })
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn multiplicity(&self) -> &[u32] {
        &self.multiplicity
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> NormOrder {
        self.p
    }

    pub fn p_dual(&self) -> NormOrder {
        self.p_dual
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Weights `w_k` with `‖𝒬ᵀ(z)‖²_F = Σ w_k z_k²`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `𝒬(X)`
    pub fn apply(&self, x: &SymmetricMatrix) -> Vec<f64> {
        self.positions
            .iter()
            .zip(&self.scale)
            .map(|(&(i, j), &c)| c * x.get(i, j))
            .collect()
    }

    /// Adds `alpha·𝒬ᵀ(z)` into `out`. Diagonal slots get `c·z`, each
    /// off-diagonal slot gets `c·z/2`.
    pub fn add_adjoint(&self, alpha: f64, z: &[f64], out: &mut SymmetricMatrix) {
        assert_eq!(z.len(), self.len());
        for ((&(i, j), &c), &zk) in self.positions.iter().zip(&self.scale).zip(z) {
            if i == j {
                out.add_at(i, i, alpha * c * zk);
            } else {
                out.add_at(i, j, 0.5 * alpha * c * zk);
            }
        }
    }

    pub fn adjoint(&self, n: usize, z: &[f64]) -> SymmetricMatrix {
        let mut out = SymmetricMatrix::zeros(n);
        self.add_adjoint(1.0, z, &mut out);
        out
    }

    /// Coefficients `v` minimizing `‖𝒬ᵀ(v) − V‖_F`, i.e. `v_k = 𝒬(V)_k / w_k`.
    pub fn coefficients_of(&self, v: &SymmetricMatrix) -> Vec<f64> {
        self.apply(v)
            .into_iter()
            .zip(&self.weights)
            .map(|(q, w)| q / w)
            .collect()
    }

    /// `λ‖𝒬(X)‖_p`
    pub fn value(&self, x: &SymmetricMatrix) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        self.lambda * self.p.norm(&self.apply(x))
    }
}

/// Primal data `(C, μ, 𝒜, b, {𝒬ₕ, λₕ, pₕ})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    n: usize,
    c: SymmetricMatrix,
    mu: f64,
    constraints: ConstraintMap,
    regularizers: Vec<RegularizerTerm>,
}

impl Problem {
    pub fn new(
        c: SymmetricMatrix,
        mu: f64,
        constraints: ConstraintMap,
        regularizers: Vec<RegularizerTerm>,
    ) -> Result<Self, ModelError> {
        let n = c.dim();
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(ModelError::Invalid(format!("mu must be positive, got {mu}")));
        }
        if c.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Invalid("C has non-finite entries".into()));
        }
        match &constraints.kind {
            ConstraintKind::EntryPinning(pos) => {
                for &(_, j) in pos {
                    check_index(j, n)?;
                }
            }
            ConstraintKind::GeneralMatrices(mats) => {
                for a in mats {
                    check_dim(a.dim(), n, "constraint matrix")?;
                }
            }
        }
        for term in &regularizers {
            for &(_, j) in term.positions() {
                check_index(j, n)?;
            }
        }
        Ok(Self {
            n,
            c,
            mu,
            constraints,
            regularizers,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> &SymmetricMatrix {
        &self.c
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn constraints(&self) -> &ConstraintMap {
        &self.constraints
    }

    pub fn regularizers(&self) -> &[RegularizerTerm] {
        &self.regularizers
    }

    /// Number of equality constraints `m`.
    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    /// Number of regularizer terms `H`.
    pub fn h(&self) -> usize {
        self.regularizers.len()
    }

    /// Inner product on `ℝᵐ × 𝒮₁ × … × 𝒮_H` in coefficient coordinates;
    /// equals `yᵀy' + Σₕ Sₕ•S'ₕ`.
    pub fn inner(&self, a: &CompositeVar, b: &CompositeVar) -> f64 {
        let mut s: f64 = a.y.iter().zip(&b.y).map(|(x, y)| x * y).sum();
        for ((term, za), zb) in self.regularizers.iter().zip(&a.z).zip(&b.z) {
            s += term
                .weights()
                .iter()
                .zip(za)
                .zip(zb)
                .map(|((w, x), y)| w * x * y)
                .sum::<f64>();
        }
        s
    }

    pub fn norm(&self, u: &CompositeVar) -> f64 {
        self.inner(u, u).sqrt()
    }

    pub fn check_shape(&self, u: &CompositeVar) -> Result<(), ModelError> {
        check_dim(u.y.len(), self.m(), "composite y")?;
        check_dim(u.z.len(), self.h(), "composite S count")?;
        for (term, z) in self.regularizers.iter().zip(&u.z) {
            check_dim(z.len(), term.len(), "composite S coefficients")?;
        }
        Ok(())
    }
}

/// Dual variable `U = (y, S₁, …, S_H)`.
///
/// Each `Sₕ` lives in the range of `𝒬ₕᵀ` and is stored through its
/// coefficient vector: `Sₕ = 𝒬ₕᵀ(z[h])`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeVar {
    pub y: Vec<f64>,
    pub z: Vec<Vec<f64>>,
}

impl CompositeVar {
    pub fn zeros(problem: &Problem) -> Self {
        Self {
            y: vec![0.0; problem.m()],
            z: problem.regularizers().iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    /// `self + alpha * other`
    pub fn add_scaled(&self, alpha: f64, other: &CompositeVar) -> CompositeVar {
        let mut out = self.clone();
        out.axpy(alpha, other);
        out
    }

    pub fn axpy(&mut self, alpha: f64, other: &CompositeVar) {
        for (a, b) in self.y.iter_mut().zip(&other.y) {
            *a += alpha * b;
        }
        for (za, zb) in self.z.iter_mut().zip(&other.z) {
            for (a, b) in za.iter_mut().zip(zb) {
                *a += alpha * b;
            }
        }
    }

    pub fn sub(&self, other: &CompositeVar) -> CompositeVar {
        self.add_scaled(-1.0, other)
    }

    pub fn scaled(&self, alpha: f64) -> CompositeVar {
        CompositeVar {
            y: self.y.iter().map(|v| alpha * v).collect(),
            z: self.z.iter().map(|z| z.iter().map(|v| alpha * v).collect()).collect(),
        }
    }

    /// Componentwise linear combination `t·a + (1 − t)·b`.
    pub fn lerp(t: f64, a: &CompositeVar, b: &CompositeVar) -> CompositeVar {
        a.scaled(t).add_scaled(1.0 - t, b)
    }

    /// Dense `Sₕ`.
    pub fn s_matrix(&self, problem: &Problem, h: usize) -> SymmetricMatrix {
        problem.regularizers()[h].adjoint(problem.dim(), &self.z[h])
    }
}

/// `∇g(U) = (b − 𝒜(X(U)), X(U), …, X(U))`, with the H identical matrix
/// components stored once.
#[derive(Debug, Clone, PartialEq)]
pub struct DualGradient {
    pub y: Vec<f64>,
    pub x: SymmetricMatrix,
}

impl DualGradient {
    /// The gradient restricted to `ℝᵐ × range(𝒬₁ᵀ) × …` written in the
    /// coefficient coordinates of [`CompositeVar`]. Components of `X`
    /// orthogonal to every `range(𝒬ₕᵀ)` drop out of all inner products with
    /// composite variables, so this is exact for the solver's purposes.
    pub fn restricted(&self, problem: &Problem) -> CompositeVar {
        CompositeVar {
            y: self.y.clone(),
            z: problem
                .regularizers()
                .iter()
                .map(|t| t.coefficients_of(&self.x))
                .collect(),
        }
    }

    /// `⟨∇g, D⟩` computed through dense matrices: `yᵀD_y + Σₕ X•Sₕ(D)`.
    pub fn dot_dense(&self, problem: &Problem, d: &CompositeVar) -> f64 {
        let mut s: f64 = self.y.iter().zip(&d.y).map(|(a, b)| a * b).sum();
        for h in 0..problem.h() {
            s += self.x.dot(&d.s_matrix(problem, h));
        }
        s
    }
}

/// `𝒜(X)`
pub fn apply_a(cm: &ConstraintMap, x: &SymmetricMatrix) -> Result<Vec<f64>, ModelError> {
    cm.apply(x)
}

/// `𝒜ᵀ(y)`
pub fn apply_a_adjoint(cm: &ConstraintMap, n: usize, y: &[f64]) -> Result<SymmetricMatrix, ModelError> {
    cm.adjoint(n, y)
}

/// `𝒬(X)`
pub fn apply_q(term: &RegularizerTerm, x: &SymmetricMatrix) -> Vec<f64> {
    term.apply(x)
}

/// `𝒬ᵀ(z)`
pub fn apply_q_adjoint(term: &RegularizerTerm, n: usize, z: &[f64]) -> SymmetricMatrix {
    term.adjoint(n, z)
}

/// `ℬ(U) = −𝒜ᵀ(y) + Σₕ Sₕ`
pub fn apply_b(problem: &Problem, u: &CompositeVar) -> Result<SymmetricMatrix, ModelError> {
    let mut out = SymmetricMatrix::zeros(problem.dim());
    add_b(problem, 1.0, u, &mut out)?;
    Ok(out)
}

fn add_b(problem: &Problem, alpha: f64, u: &CompositeVar, out: &mut SymmetricMatrix) -> Result<(), ModelError> {
    problem.check_shape(u)?;
    problem.constraints().add_adjoint(-alpha, &u.y, out)?;
    for (term, z) in problem.regularizers().iter().zip(&u.z) {
        term.add_adjoint(alpha, z, out);
    }
    Ok(())
}

/// `C + ℬ(U)`
pub fn dual_slack(problem: &Problem, u: &CompositeVar) -> Result<SymmetricMatrix, ModelError> {
    let mut out = problem.c().clone();
    add_b(problem, 1.0, u, &mut out)?;
    Ok(out)
}

/// `g(U) = bᵀy + μ log det(C + ℬ(U)) + nμ − nμ log μ`, together with the
/// Cholesky factor of `C + ℬ(U)`.
pub fn eval_g(problem: &Problem, u: &CompositeVar) -> Result<(f64, CholeskyFactor), ModelError> {
    let slack = dual_slack(problem, u)?;
    let factor = symmat::cholesky(&slack).map_err(ModelError::DualInfeasible)?;
    Ok((dual_value_from_factor(problem, u, &factor), factor))
}

pub(crate) fn dual_value_from_factor(problem: &Problem, u: &CompositeVar, factor: &CholeskyFactor) -> f64 {
    let n = problem.dim() as f64;
    let mu = problem.mu();
    let by: f64 = problem.constraints().b.iter().zip(&u.y).map(|(b, y)| b * y).sum();
    by + mu * symmat::logdet_from_factor(factor) + n * mu - n * mu * mu.ln()
}

/// `X(U) = μ (C + ℬ(U))⁻¹` from the factor returned by [`eval_g`].
pub fn x_of_u(problem: &Problem, factor: &CholeskyFactor) -> SymmetricMatrix {
    symmat::spd_inverse(factor).scaled(problem.mu())
}

/// `∇g(U)` given `X = X(U)`.
pub fn grad_g(problem: &Problem, x: &SymmetricMatrix) -> Result<DualGradient, ModelError> {
    let ax = problem.constraints().apply(x)?;
    let y = problem.constraints().b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    Ok(DualGradient { y, x: x.clone() })
}

/// `f(X) = C•X − μ log det X + Σₕ λₕ‖𝒬ₕ(X)‖_{pₕ}`
pub fn eval_f(problem: &Problem, x: &SymmetricMatrix) -> Result<f64, ModelError> {
    check_dim(x.dim(), problem.dim(), "primal X")?;
    let factor = symmat::cholesky(x).map_err(ModelError::NotPositiveDefinite)?;
    let reg: f64 = problem.regularizers().iter().map(|t| t.value(x)).sum();
    Ok(problem.c().dot(x) - problem.mu() * symmat::logdet_from_factor(&factor) + reg)
}

/// `|P − D| / max{1, (|P| + |D|)/2}`
pub fn relative_gap(primal: f64, dual: f64) -> f64 {
    (primal - dual).abs() / f64::max(1.0, (primal.abs() + dual.abs()) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub kkt_gap: f64,
    pub pinf: f64,
    pub dinf: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.kkt_gap.max(self.pinf).max(self.dinf)
    }
}

/// KKT-style residuals at a dual-feasible `U` with `X = X(U)`.
/// `dinf` is zero because every iterate is dual feasible.
pub fn kkt_residuals(problem: &Problem, x: &SymmetricMatrix, primal: f64, dual: f64) -> Result<KktResiduals, ModelError> {
    let ax = problem.constraints().apply(x)?;
    let b = &problem.constraints().b;
    let r: f64 = ax.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(KktResiduals {
        kkt_gap: (primal - dual).abs() / (1.0 + primal.abs() + dual.abs()),
        pinf: r / (1.0 + bn),
        dinf: 0.0,
    })
}

fn normalize((i, j): Position) -> Position {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

fn check_distinct(positions: &[Position], what: &str) -> Result<(), ModelError> {
    let mut sorted = positions.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(ModelError::Invalid(format!("duplicate {what} entry {:?}", w[0])));
    }
    Ok(())
}

fn check_index(j: usize, n: usize) -> Result<(), ModelError> {
    if j >= n {
        return Err(ModelError::Invalid(format!("index {j} out of range for dimension {n}")));
    }
    Ok(())
}

fn check_dim(got: usize, expected: usize, what: &'static str) -> Result<(), ModelError> {
    if got != expected {
        return Err(ModelError::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

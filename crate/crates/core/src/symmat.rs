//! Dense symmetric-matrix kernels.
//!
//! Everything here works on full row-major `n × n` storage. Symmetry is kept
//! exact by construction: every mutating accessor writes both `(i, j)` and
//! `(j, i)`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row} is at or below {floor:e})")]
    NotPositiveDefinite { row: usize, pivot: f64, floor: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// A real symmetric matrix stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "symmetric matrix dimension must be positive");
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the lower triangle (`j <= i`).
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds from a row-major square array. The result is `(A + Aᵀ)/2`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if n == 0 {
            return Err(LinalgError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        let mut m = Self::zeros(n);
        for row in rows {
            if row.len() != n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
        }
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, 0.5 * (rows[i][j] + rows[j][i]));
            }
        }
        Ok(m)
    }

    /// Symmetrizes an arbitrary row-major square buffer.
    pub(crate) fn from_square_symmetrized(n: usize, buf: &[f64]) -> Self {
        debug_assert_eq!(buf.len(), n * n);
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, 0.5 * (buf[i * n + j] + buf[j * n + i]));
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    /// Adds `v` to entry `(i, j)` and its mirror (once when `i == j`).
    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
        if i != j {
            self.data[j * self.n + i] += v;
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &SymmetricMatrix) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scaled(&self, alpha: f64) -> SymmetricMatrix {
        SymmetricMatrix {
            n: self.n,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Frobenius inner product `A • B = Σᵢⱼ AᵢⱼBᵢⱼ`.
    pub fn dot(&self, other: &SymmetricMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Number of nonzero entries with `i <= j`.
    pub fn upper_nnz(&self) -> usize {
        let mut count = 0;
        for i in 0..self.n {
            for j in i..self.n {
                if self.get(i, j) != 0.0 {
                    count += 1;
                }
            }
        }
        count
    }

    /// Dense matrix product `self * other` as a row-major buffer (not symmetric in general).
    pub fn matmul(&self, other: &SymmetricMatrix) -> Vec<f64> {
        let n = self.n;
        assert_eq!(n, other.n);
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            let out_row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `xᵀ A x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| x[i] * self.row(i).iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    n: usize,
    // row-major; entries above the diagonal are zero
    l: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }

    /// Builds a factor from an explicit lower-triangular matrix with a positive diagonal.
    pub fn from_lower(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut l = vec![0.0; n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for j in 0..=i {
                l[i * n + j] = row[j];
            }
            if !(row[i] > 0.0) {
                return Err(LinalgError::NotPositiveDefinite {
                    row: i,
                    pivot: row[i],
                    floor: 0.0,
                });
            }
        }
        Ok(Self { n, l })
    }

    /// `L·Lᵀ` as a symmetric matrix.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        let n = self.n;
        SymmetricMatrix::from_lower_fn(n, |i, j| {
            let (ri, rj) = (&self.l[i * n..i * n + j + 1], &self.l[j * n..j * n + j + 1]);
            ri.iter().zip(rj).map(|(a, b)| a * b).sum()
        })
    }

    /// Solves `L·W = B` in place, where `b` holds `n` rows of width `width`.
    fn forward_solve_rows(&self, b: &mut [f64], width: usize) {
        let n = self.n;
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[i * n + k];
                if lik == 0.0 {
                    continue;
                }
                let (head, tail) = b.split_at_mut(i * width);
                let src = &head[k * width..(k + 1) * width];
                for (dst, s) in tail[..width].iter_mut().zip(src) {
                    *dst -= lik * s;
                }
            }
            let inv = 1.0 / self.l[i * n + i];
            for v in &mut b[i * width..(i + 1) * width] {
                *v *= inv;
            }
        }
    }

    /// Explicit `L⁻¹` (lower triangular, row-major).
    fn inverse_lower(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        for i in 0..n {
            inv[i * n + i] = 1.0 / self.l[i * n + i];
            for j in 0..i {
                let mut s = 0.0;
                for k in j..i {
                    s += self.l[i * n + k] * inv[k * n + j];
                }
                inv[i * n + j] = -s / self.l[i * n + i];
            }
        }
        inv
    }
}

/// Cholesky factorization. A pivot at or below `1e-13·max(1, maxᵢ Sᵢᵢ)`
/// is rejected as not positive definite.
pub fn cholesky(s: &SymmetricMatrix) -> Result<CholeskyFactor, LinalgError> {
    let n = s.dim();
    let max_diag = (0..n).map(|i| s.get(i, i)).fold(f64::NEG_INFINITY, f64::max);
    let floor = 1e-13 * max_diag.max(1.0);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
            let dot: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
            let v = s.get(i, j) - dot;
            if i == j {
                if !(v > floor) {
                    return Err(LinalgError::NotPositiveDefinite {
                        row: i,
                        pivot: v,
                        floor,
                    });
                }
                l[i * n + i] = v.sqrt();
            } else {
                l[i * n + j] = v / l[j * n + j];
            }
        }
    }
    Ok(CholeskyFactor { n, l })
}

/// `log det A = 2·Σᵢ ln Lᵢᵢ`.
pub fn logdet_from_factor(l: &CholeskyFactor) -> f64 {
    2.0 * (0..l.n).map(|i| l.get(i, i).ln()).sum::<f64>()
}

/// `A⁻¹ = L⁻ᵀ·L⁻¹`, symmetrized.
pub fn spd_inverse(l: &CholeskyFactor) -> SymmetricMatrix {
    let n = l.n;
    let linv = l.inverse_lower();
    // accumulate row outer products of L⁻¹ into the lower triangle
    let mut acc = vec![0.0; n * n];
    for k in 0..n {
        let row = &linv[k * n..k * n + k + 1];
        for i in 0..=k {
            let a = row[i];
            if a == 0.0 {
                continue;
            }
            let dst = &mut acc[i * n..i * n + i + 1];
            for (d, b) in dst.iter_mut().zip(&row[..=i]) {
                *d += a * b;
            }
        }
    }
    let mut m = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            m.set(i, j, acc[i * n + j]);
        }
    }
    m
}

/// Eigenvalues of a symmetric matrix in ascending order
/// (Householder tridiagonalization followed by implicit QL).
pub fn symmetric_eigenvalues(s: &SymmetricMatrix) -> Vec<f64> {
    let (mut d, mut e) = tridiagonalize(s);
    tridiagonal_ql(&mut d, &mut e);
    d.sort_by(|a, b| a.total_cmp(b));
    d
}

pub fn min_eigenvalue(s: &SymmetricMatrix) -> f64 {
    symmetric_eigenvalues(s)[0]
}

/// Ascending eigenvalues of `L⁻¹·B·L⁻ᵀ` together with the relative asymmetry
/// of the product before symmetrization.
pub fn congruence_eigenvalues(l: &CholeskyFactor, b: &SymmetricMatrix) -> (Vec<f64>, f64) {
    let n = l.n;
    assert_eq!(n, b.dim());
    // W = L⁻¹B, then L⁻¹Wᵀ = L⁻¹BL⁻ᵀ since B is symmetric
    let mut w = b.as_slice().to_vec();
    l.forward_solve_rows(&mut w, n);
    let mut wt = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            wt[j * n + i] = w[i * n + j];
        }
    }
    l.forward_solve_rows(&mut wt, n);
    let mut asym: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((wt[i * n + j] - wt[j * n + i]).abs());
            scale = scale.max(wt[i * n + j].abs());
        }
    }
    let rel = if scale > 0.0 { asym / scale } else { 0.0 };
    let m = SymmetricMatrix::from_square_symmetrized(n, &wt);
    (symmetric_eigenvalues(&m), rel)
}

/// Minimum eigenvalue of `L⁻¹·B·L⁻ᵀ` and the relative asymmetry of the product.
pub fn congruence_min_eig_with_asymmetry(l: &CholeskyFactor, b: &SymmetricMatrix) -> (f64, f64) {
    let (eigs, rel) = congruence_eigenvalues(l, b);
    (eigs[0], rel)
}

pub fn congruence_min_eig(l: &CholeskyFactor, b: &SymmetricMatrix) -> f64 {
    congruence_min_eig_with_asymmetry(l, b).0
}

/// Householder reduction to tridiagonal form. Returns `(diag, offdiag)` with
/// `offdiag[i]` coupling `i` and `i + 1`; the last entry of `offdiag` is zero.
fn tridiagonalize(s: &SymmetricMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = s.dim();
    let mut a = s.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        // column below the diagonal
        let m = n - k - 1;
        let x0 = a[(k + 1) * n + k];
        let mut sigma = 0.0;
        let mut xmax: f64 = 0.0;
        for i in k + 1..n {
            xmax = xmax.max(a[i * n + k].abs());
        }
        if xmax == 0.0 {
            e[k] = 0.0;
            continue;
        }
        for i in k + 1..n {
            let t = a[i * n + k] / xmax;
            sigma += t * t;
        }
        let norm = xmax * sigma.sqrt();
        let alpha = if x0 > 0.0 { -norm } else { norm };
        // v = x - alpha e1, beta = 2 / vᵀv
        let vv = &mut v[..m];
        for (idx, i) in (k + 1..n).enumerate() {
            vv[idx] = a[i * n + k];
        }
        vv[0] -= alpha;
        let vtv: f64 = vv.iter().map(|t| t * t).sum();
        e[k] = alpha;
        if vtv == 0.0 {
            continue;
        }
        let beta = 2.0 / vtv;
        // p = beta * A22 v
        let pp = &mut p[..m];
        for (ii, i) in (k + 1..n).enumerate() {
            let row = &a[i * n + k + 1..i * n + n];
            pp[ii] = beta * row.iter().zip(vv.iter()).map(|(x, y)| x * y).sum::<f64>();
        }
        let ptv: f64 = pp.iter().zip(vv.iter()).map(|(x, y)| x * y).sum();
        let half = 0.5 * beta * ptv;
        for (pi, vi) in pp.iter_mut().zip(vv.iter()) {
            *pi -= half * vi;
        }
        // A22 -= v wᵀ + w vᵀ
        for (ii, i) in (k + 1..n).enumerate() {
            let (vi, wi) = (vv[ii], pp[ii]);
            let row = &mut a[i * n + k + 1..i * n + n];
            for (jj, r) in row.iter_mut().enumerate() {
                *r -= vi * pp[jj] + wi * vv[jj];
            }
        }
    }
    for i in 0..n {
        d[i] = a[i * n + i];
    }
    if n >= 2 {
        e[n - 2] = a[(n - 1) * n + (n - 2)];
    }
    e[n - 1] = 0.0;
    (d, e)
}

/// Implicit QL iteration with Wilkinson-style shifts; eigenvalues only.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    if n <= 1 {
        return;
    }
    let max_iter = 60 + 30 * n;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > max_iter {
                log::warn!("tridiagonal QL did not converge for eigenvalue {l}");
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

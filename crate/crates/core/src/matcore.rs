//! Dense symmetric matrices and the handful of linear-algebra routines the
//! estimators and model constructions rely on: matrix norms, a cyclic Jacobi
//! eigensolver, extreme eigenvalues of the Householder tridiagonal form, and
//! Cholesky factorisation.
//!
//! Storage is full `p × p` row-major. Every constructor symmetrises its input
//! (average of the two mirrored entries, then copied) so that `(i, j)` and
//! `(j, i)` are bitwise identical for the lifetime of the value.

use crate::error::{Error, Result};

/// Largest dimension the Jacobi eigensolver accepts by default.
pub const DEFAULT_MAX_DIM: usize = 1024;
/// Relative off-diagonal tolerance of the Jacobi eigensolver.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_SWEEPS: usize = 64;
/// Absolute pivot floor below which Cholesky reports a non-PD matrix.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

/// Convergence controls for [`SymMatrix::eigen_sym_with`].
#[derive(Debug, Clone, Copy)]
pub struct EigenConfig {
    pub tol: f64,
    pub max_sweeps: usize,
    pub max_dim: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_EIGEN_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

/// Eigenvalues in ascending order together with the matching eigenvectors,
/// stored column-wise in a row-major `p × p` buffer.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    vectors: Vec<f64>,
    dim: usize,
}

impl EigenDecomposition {
    /// Component `row` of the eigenvector belonging to `values[col]`.
    pub fn vector_entry(&self, row: usize, col: usize) -> f64 {
        self.vectors[row * self.dim + col]
    }

    pub fn vector(&self, col: usize) -> Vec<f64> {
        (0..self.dim).map(|r| self.vector_entry(r, col)).collect()
    }

    /// `V · diag(f(λ)) · Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.dim;
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        SymMatrix::from_fn_unchecked(n, |i, j| {
            let vi = &self.vectors[i * n..(i + 1) * n];
            let vj = &self.vectors[j * n..(j + 1) * n];
            vi.iter()
                .zip(vj)
                .zip(&mapped)
                .map(|((a, b), l)| a * b * l)
                .sum()
        })
    }
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim]).expect("ones are finite")
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidDimension("empty diagonal".into()));
        }
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            if !d.is_finite() {
                return Err(Error::NonFinite { row: i, col: i });
            }
            m.data[i * m.dim + i] = d;
        }
        Ok(m)
    }

    /// Builds a matrix by evaluating `f(i, j)` on the upper triangle
    /// (`i <= j`) and mirroring.
    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let m = Self::from_fn_unchecked(dim, f);
        m.check_finite()?;
        Ok(m)
    }

    pub(crate) fn from_fn_unchecked(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Takes a square row-major buffer and symmetrises it.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::InvalidDimension(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        let mut m = Self { dim, data };
        m.check_finite()?;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (m.data[i * dim + j] + m.data[j * dim + i]);
                m.data[i * dim + j] = avg;
                m.data[j * dim + i] = avg;
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::InvalidDimension(format!(
                "row of length {} in a {dim}-row matrix",
                bad.len()
            )));
        }
        Self::from_row_major(dim, rows.concat())
    }

    fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(Error::NonFinite {
                row: k / self.dim,
                col: k % self.dim,
            }),
            None => Ok(()),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets `(i, j)` and `(j, i)` together.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Entrywise map over the upper triangle, mirrored.
    pub fn map(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> SymMatrix {
        Self::from_fn_unchecked(self.dim, |i, j| f(i, j, self.get(i, j)))
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// `self − other`.
    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(SymMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Simultaneous row/column permutation: result(i, j) = self(perm[i], perm[j]).
    pub fn permute(&self, perm: &[usize]) -> Result<SymMatrix> {
        if perm.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: perm.len(),
            });
        }
        Ok(Self::from_fn_unchecked(self.dim, |i, j| {
            self.get(perm[i], perm[j])
        }))
    }

    /// Principal submatrix on `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> Result<SymMatrix> {
        if idx.is_empty() || idx.iter().any(|&i| i >= self.dim) {
            return Err(Error::InvalidDimension("bad submatrix index set".into()));
        }
        Ok(Self::from_fn_unchecked(idx.len(), |i, j| {
            self.get(idx[i], idx[j])
        }))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn l1_norm(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Eigenvalues in ascending order (cyclic Jacobi, default tolerances).
    pub fn eigen_sym(&self) -> Result<Vec<f64>> {
        self.eigen_sym_with(&EigenConfig::default())
    }

    pub fn eigen_sym_with(&self, cfg: &EigenConfig) -> Result<Vec<f64>> {
        jacobi(self, cfg, false).map(|(values, _)| values)
    }

    /// Eigenvalues and eigenvectors (cyclic Jacobi).
    pub fn eigen_decompose(&self) -> Result<EigenDecomposition> {
        let (values, vectors) = jacobi(self, &EigenConfig::default(), true)?;
        Ok(EigenDecomposition {
            values,
            vectors: vectors.expect("vectors requested"),
            dim: self.dim,
        })
    }

    /// Largest absolute eigenvalue.
    ///
    /// Only the two extreme eigenvalues are needed, so this goes through the
    /// Householder tridiagonal form and Sturm bisection, which is several
    /// times cheaper than a full Jacobi diagonalisation for `p` in the
    /// hundreds.
    pub fn spectral_norm(&self) -> Result<f64> {
        if self.dim > DEFAULT_MAX_DIM * 4 {
            return Err(Error::InvalidDimension(format!(
                "dimension {} exceeds the eigensolver limit",
                self.dim
            )));
        }
        let (lo, hi) = self.extreme_eigenvalues();
        Ok(lo.abs().max(hi.abs()))
    }

    /// (λ_min, λ_max) via tridiagonalisation and bisection.
    pub fn extreme_eigenvalues(&self) -> (f64, f64) {
        let (d, e) = tridiagonalize(self);
        let n = d.len();
        (
            tridiagonal_eigenvalue(&d, &e, 0),
            tridiagonal_eigenvalue(&d, &e, n - 1),
        )
    }

    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        self.cholesky_with(DEFAULT_PIVOT_TOL)
    }

    pub fn cholesky_with(&self, pivot_tol: f64) -> Result<CholeskyFactor> {
        let n = self.dim;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let pivot = self.get(j, j) - l[j * n..j * n + j].iter().map(|v| v * v).sum::<f64>();
            if !(pivot > pivot_tol) {
                return Err(Error::NotPositiveDefinite { index: j, pivot });
            }
            let ljj = pivot.sqrt();
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let (head, tail) = l.split_at_mut(i * n);
                let row_j = &head[j * n..j * n + j];
                let row_i = &mut tail[..n];
                let dot: f64 = row_i[..j].iter().zip(row_j).map(|(a, b)| a * b).sum();
                row_i[j] = (self.get(i, j) - dot) / ljj;
            }
        }
        Ok(CholeskyFactor { dim: n, data: l })
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }

    /// Projects onto `{A : λ_min(A) ≥ floor}` by clipping eigenvalues.
    pub fn clip_eigenvalues(&self, floor: f64) -> Result<SymMatrix> {
        let eig = self.eigen_decompose()?;
        if eig.values[0] >= floor {
            return Ok(self.clone());
        }
        Ok(eig.reconstruct_with(|l| l.max(floor)))
    }
}

/// Lower-triangular Cholesky factor, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    data: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// `out = L · z`.
    pub fn mul_vec_into(&self, z: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            out[i] = self.data[i * n..i * n + i + 1]
                .iter()
                .zip(z)
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    /// `L · Lᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim;
        SymMatrix::from_fn_unchecked(n, |i, j| {
            let k = i.min(j) + 1;
            self.data[i * n..i * n + k]
                .iter()
                .zip(&self.data[j * n..j * n + k])
                .map(|(a, b)| a * b)
                .sum()
        })
    }
}

fn off_diagonal_norm(m: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            acc += m[i * n + j] * m[i * n + j];
        }
    }
    (2.0 * acc).sqrt()
}

fn jacobi(a: &SymMatrix, cfg: &EigenConfig, want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let n = a.dim;
    if n > cfg.max_dim {
        return Err(Error::InvalidDimension(format!(
            "dimension {n} exceeds eigensolver maximum {}",
            cfg.max_dim
        )));
    }
    let mut m = a.data.clone();
    let mut v = want_vectors.then(|| {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        id
    });
    let target = cfg.tol * a.frobenius_norm();

    let mut converged = false;
    for _sweep in 0..cfg.max_sweeps {
        if off_diagonal_norm(&m, n) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sgn / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = m[r * n + p];
                    let arq = m[r * n + q];
                    let nrp = c * arp - s * arq;
                    let nrq = s * arp + c * arq;
                    m[r * n + p] = nrp;
                    m[p * n + r] = nrp;
                    m[r * n + q] = nrq;
                    m[q * n + r] = nrq;
                }
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                if let Some(v) = v.as_mut() {
                    for r in 0..n {
                        let vrp = v[r * n + p];
                        let vrq = v[r * n + q];
                        v[r * n + p] = c * vrp - s * vrq;
                        v[r * n + q] = s * vrp + c * vrq;
                    }
                }
            }
        }
    }
    if !converged {
        let residual = off_diagonal_norm(&m, n);
        if residual > target {
            return Err(Error::NoConvergence {
                sweeps: cfg.max_sweeps,
                residual,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = v.map(|v| {
        let mut sorted = vec![0.0; n * n];
        for r in 0..n {
            for (c, &src) in order.iter().enumerate() {
                sorted[r * n + c] = v[r * n + src];
            }
        }
        sorted
    });
    Ok((values, vectors))
}

/// Householder reduction to tridiagonal form. Returns the diagonal and the
/// sub-diagonal.
fn tridiagonalize(a: &SymMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.dim;
    let mut m = a.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];

    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let base = k + 1;
        let norm = (base..n).map(|i| m[i * n + k] * m[i * n + k]).sum::<f64>().sqrt();
        d[k] = m[k * n + k];
        if norm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let x0 = m[base * n + k];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for (t, i) in (base..n).enumerate() {
            v[t] = m[i * n + k];
        }
        v[0] -= alpha;
        let vtv: f64 = v[..len].iter().map(|x| x * x).sum();
        e[k] = alpha;
        if vtv == 0.0 {
            continue;
        }
        // w = A22 v · 2/vᵀv ; q = w − (vᵀw / vᵀv) v ; A22 ← A22 − v qᵀ − q vᵀ
        let scale = 2.0 / vtv;
        for (t, i) in (base..n).enumerate() {
            let row = &m[i * n + base..i * n + n];
            w[t] = scale * row.iter().zip(&v[..len]).map(|(a, b)| a * b).sum::<f64>();
        }
        let k_coef = 0.5 * scale * v[..len].iter().zip(&w[..len]).map(|(a, b)| a * b).sum::<f64>();
        for t in 0..len {
            w[t] -= k_coef * v[t];
        }
        for (t, i) in (base..n).enumerate() {
            let (vt, wt) = (v[t], w[t]);
            let row = &mut m[i * n + base..i * n + n];
            for (s, x) in row.iter_mut().enumerate() {
                *x -= vt * w[s] + wt * v[s];
            }
        }
    }
    if n >= 2 {
        d[n - 2] = m[(n - 2) * n + (n - 2)];
        e[n - 2] = m[(n - 1) * n + (n - 2)];
    }
    d[n - 1] = m[(n - 1) * n + (n - 1)];
    (d, e)
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let denom = if q == 0.0 { f64::EPSILON * (e[i - 1].abs() + 1e-300) } else { q };
        q = d[i] - x - e[i - 1] * e[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest (0-based) eigenvalue by bisection.
fn tridiagonal_eigenvalue(d: &[f64], e: &[f64], k: usize) -> f64 {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    if lo == hi {
        return lo;
    }
    let span = lo.abs().max(hi.abs());
    lo -= span * 1e-12;
    hi += span * 1e-12;
    for _ in 0..256 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * span {
            break;
        }
        if sturm_count(d, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx_eq::close;
    use proptest::prelude::*;

    mod approx_eq {
        pub fn close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol
        }
    }

    fn m(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn random_sym(p: usize, rng: &mut RngStream) -> SymMatrix {
        SymMatrix::from_fn(p, |_, _| 2.0 * rng.next_f64() - 1.0).unwrap()
    }

    #[test]
    fn norms_on_small_matrices() {
        assert!(close(SymMatrix::identity(3).frobenius_norm(), 3f64.sqrt(), 1e-15));
        assert!(close(m(&[&[0., 1.], &[1., 0.]]).frobenius_norm(), 2f64.sqrt(), 1e-15));
        assert_eq!(m(&[&[2., 2.], &[2., 2.]]).frobenius_norm(), 4.0);

        assert_eq!(SymMatrix::identity(5).l1_norm(), 1.0);
        assert_eq!(m(&[&[1., -2.], &[-2., 1.]]).l1_norm(), 3.0);
        assert_eq!(SymMatrix::from_diag(&[4.0; 6]).unwrap().l1_norm(), 4.0);

        assert_eq!(SymMatrix::identity(2).max_norm(), 1.0);
        assert_eq!(m(&[&[0., -3.], &[-3., 0.]]).max_norm(), 3.0);
        assert_eq!(SymMatrix::zeros(4).max_norm(), 0.0);
    }

    #[test]
    fn one_by_one_matrices() {
        let a = m(&[&[-2.5]]);
        assert_eq!(a.frobenius_norm(), 2.5);
        assert_eq!(a.l1_norm(), 2.5);
        assert_eq!(a.max_norm(), 2.5);
        assert_eq!(a.spectral_norm().unwrap(), 2.5);
        assert_eq!(a.eigen_sym().unwrap(), vec![-2.5]);
        assert!(!a.is_positive_definite());
    }

    #[test]
    fn constructor_symmetrizes_and_rejects_nan() {
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![4.0, 1.0]]).unwrap();
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 0).to_bits(), a.get(0, 1).to_bits());
        assert!(matches!(
            SymMatrix::from_rows(&[vec![1.0, f64::NAN], vec![0.0, 1.0]]),
            Err(Error::NonFinite { .. })
        ));
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn eigen_small_examples() {
        assert_eq!(SymMatrix::from_diag(&[3., 1., 2.]).unwrap().eigen_sym().unwrap(), vec![1., 2., 3.]);
        let ev = m(&[&[2., 1.], &[1., 2.]]).eigen_sym().unwrap();
        assert!(close(ev[0], 1.0, 1e-14) && close(ev[1], 3.0, 1e-14));
    }

    // det(A − xI) by Gaussian elimination with partial pivoting.
    fn char_poly_at(a: &SymMatrix, x: f64) -> f64 {
        let n = a.dim();
        let mut b: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| a.get(i, j) - if i == j { x } else { 0.0 }).collect())
            .collect();
        let mut det = 1.0;
        for c in 0..n {
            let piv = (c..n).max_by(|&i, &j| b[i][c].abs().total_cmp(&b[j][c].abs())).unwrap();
            if b[piv][c] == 0.0 {
                return 0.0;
            }
            if piv != c {
                b.swap(piv, c);
                det = -det;
            }
            det *= b[c][c];
            for r in (c + 1)..n {
                let f = b[r][c] / b[c][c];
                for k in c..n {
                    b[r][k] -= f * b[c][k];
                }
            }
        }
        det
    }

    fn char_poly_roots(a: &SymMatrix) -> Vec<f64> {
        let bound = a.l1_norm() + 1.0;
        let steps = 20_000;
        let mut roots = Vec::new();
        let mut prev_x = -bound;
        let mut prev = char_poly_at(a, prev_x);
        for s in 1..=steps {
            let x = -bound + 2.0 * bound * s as f64 / steps as f64;
            let f = char_poly_at(a, x);
            if prev == 0.0 {
                roots.push(prev_x);
            } else if prev.signum() != f.signum() && f != 0.0 {
                let (mut lo, mut hi, mut flo) = (prev_x, x, prev);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = char_poly_at(a, mid);
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev_x = x;
            prev = f;
        }
        roots
    }

    #[test]
    fn jacobi_matches_characteristic_polynomial_roots() {
        let mut rng = RngStream::new(11, 0);
        for _ in 0..100 {
            let a = random_sym(4, &mut rng);
            let ev = a.eigen_sym().unwrap();
            let roots = char_poly_roots(&a);
            assert_eq!(roots.len(), 4, "{a:?}");
            for (x, y) in ev.iter().zip(&roots) {
                assert!(close(*x, *y, 1e-9), "{ev:?} vs {roots:?}");
            }
        }
    }

    #[test]
    fn eigenvectors_reconstruct_input() {
        let mut rng = RngStream::new(3, 1);
        let a = random_sym(12, &mut rng);
        let eig = a.eigen_decompose().unwrap();
        let back = eig.reconstruct_with(|l| l);
        assert!(back.sub(&a).unwrap().max_norm() < 1e-12);
        for w in eig.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn eigen_respects_max_dim_and_sweeps() {
        let a = SymMatrix::identity(5);
        let cfg = EigenConfig { max_dim: 4, ..EigenConfig::default() };
        assert!(matches!(a.eigen_sym_with(&cfg), Err(Error::InvalidDimension(_))));

        let mut rng = RngStream::new(5, 5);
        let b = random_sym(10, &mut rng);
        let cfg = EigenConfig { max_sweeps: 1, ..EigenConfig::default() };
        assert!(matches!(b.eigen_sym_with(&cfg), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn spectral_norm_examples() {
        assert!(close(SymMatrix::identity(7).spectral_norm().unwrap(), 1.0, 1e-14));
        assert!(close(m(&[&[0., 1.], &[1., 0.]]).spectral_norm().unwrap(), 1.0, 1e-14));
    }

    // Projected gradient ascent of ‖Ax‖² on the unit sphere.
    fn variational_spectral_norm(a: &SymMatrix) -> f64 {
        let n = a.dim();
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.37).sin()).collect();
        let apply = |v: &[f64]| -> Vec<f64> {
            (0..n).map(|i| (0..n).map(|j| a.get(i, j) * v[j]).sum()).collect()
        };
        let norm = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>().sqrt();
        let mut val = 0.0;
        for _ in 0..5_000 {
            let ax = apply(&x);
            let grad = apply(&ax);
            let step = 1.0;
            let y: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
            let ny = norm(&y);
            x = y.iter().map(|t| t / ny).collect();
            let new_val = norm(&apply(&x));
            if (new_val - val).abs() < 1e-15 {
                val = new_val;
                break;
            }
            val = new_val;
        }
        val
    }

    #[test]
    fn spectral_norm_matches_variational_oracle_on_model1() {
        let sigma = crate::models::model1_sigma(30).unwrap();
        let oracle = variational_spectral_norm(&sigma);
        assert!(close(sigma.spectral_norm().unwrap(), oracle, 1e-6));
    }

    #[test]
    fn spectral_norm_agrees_with_jacobi() {
        let mut rng = RngStream::new(8, 2);
        for p in [2, 3, 5, 17, 40] {
            let a = random_sym(p, &mut rng);
            let ev = a.eigen_sym().unwrap();
            let jac = ev[0].abs().max(ev[p - 1].abs());
            let (lo, hi) = a.extreme_eigenvalues();
            assert!(close(lo, ev[0], 1e-10) && close(hi, ev[p - 1], 1e-10));
            assert!(close(a.spectral_norm().unwrap(), jac, 1e-10));
        }
    }

    #[test]
    fn cholesky_examples() {
        let l = SymMatrix::identity(3).cholesky().unwrap();
        assert_eq!(l.reconstruct(), SymMatrix::identity(3));
        let l = m(&[&[4., 2.], &[2., 5.]]).cholesky().unwrap();
        assert_eq!((l.get(0, 0), l.get(1, 0), l.get(1, 1), l.get(0, 1)), (2., 1., 2., 0.));
        match m(&[&[1., 2.], &[2., 1.]]).cholesky() {
            Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(SymMatrix::identity(2).is_positive_definite());
        assert!(!m(&[&[1., 2.], &[2., 1.]]).is_positive_definite());
    }

    #[test]
    fn clipping_makes_matrix_positive_definite() {
        let a = m(&[&[1., 2.], &[2., 1.]]);
        let c = a.clip_eigenvalues(1e-8).unwrap();
        let ev = c.eigen_sym().unwrap();
        assert!(ev[0] >= 1e-8 * 0.99);
        let b = SymMatrix::identity(3);
        assert_eq!(b.clip_eigenvalues(1e-8).unwrap(), b);
    }

    fn sym_strategy() -> impl Strategy<Value = SymMatrix> {
        (1usize..9).prop_flat_map(|p| {
            prop::collection::vec(-5.0f64..5.0, p * p)
                .prop_map(move |v| SymMatrix::from_row_major(p, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn spectral_bounded_by_l1(a in sym_strategy()) {
            prop_assert!(a.spectral_norm().unwrap() <= a.l1_norm() * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn frobenius_equals_eigenvalue_energy(a in sym_strategy()) {
            let ev = a.eigen_sym().unwrap();
            let energy: f64 = ev.iter().map(|l| l * l).sum();
            let f2 = a.frobenius_norm().powi(2);
            prop_assert!((energy - f2).abs() <= 1e-8 * f2.max(1e-300));
        }

        #[test]
        fn diagonal_eigenvalues_are_sorted_input(d in prop::collection::vec(-10.0f64..10.0, 1..12)) {
            let ev = SymMatrix::from_diag(&d).unwrap().eigen_sym().unwrap();
            let mut sorted = d.clone();
            sorted.sort_by(f64::total_cmp);
            for (x, y) in ev.iter().zip(&sorted) {
                prop_assert!((x - y).abs() <= 1e-14);
            }
        }

        #[test]
        fn cholesky_round_trips(p in 1usize..8, raw in prop::collection::vec(-1.0f64..1.0, 64)) {
            let mut lower = vec![0.0; p * p];
            for i in 0..p {
                for j in 0..=i {
                    lower[i * p + j] = if i == j { 0.5 + raw[i * 8 + j].abs() } else { raw[i * 8 + j] };
                }
            }
            let a = SymMatrix::from_fn(p, |i, j| {
                (0..=i.min(j)).map(|k| lower[i * p + k] * lower[j * p + k]).sum()
            }).unwrap();
            let l = a.cholesky().unwrap();
            for i in 0..p {
                for j in 0..=i {
                    prop_assert!((l.get(i, j) - lower[i * p + j]).abs() < 1e-9);
                }
            }
            prop_assert!(l.reconstruct().sub(&a).unwrap().max_norm() <= 1e-10 * a.max_norm());
        }

        #[test]
        fn norms_permutation_invariant(a in sym_strategy(), seed in any::<u64>()) {
            let p = a.dim();
            let mut perm: Vec<usize> = (0..p).collect();
            let mut rng = RngStream::new(seed, 0);
            for i in (1..p).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                perm.swap(i, j);
            }
            let b = a.permute(&perm).unwrap();
            prop_assert!((a.frobenius_norm() - b.frobenius_norm()).abs() < 1e-12);
            prop_assert!((a.l1_norm() - b.l1_norm()).abs() <= 1e-12 * a.l1_norm().max(1.0));
            prop_assert_eq!(a.max_norm(), b.max_norm());
            prop_assert!((a.spectral_norm().unwrap() - b.spectral_norm().unwrap()).abs() < 1e-10);
        }
    }
}

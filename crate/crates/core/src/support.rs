//! Support masks and recovery rates.

use crate::error::{Error, Result};
use crate::matcore::SymMatrix;

/// Symmetric boolean `p × p` pattern of nonzero entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportMask {
    dim: usize,
    bits: Vec<bool>,
}

/// True/false positive rates. `None` marks an empty denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryRates {
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
}

impl SupportMask {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            bits: vec![false; dim * dim],
        }
    }

    /// Bit `(i, j)` is set iff `|a_ij| > tol`.
    pub fn of(a: &SymMatrix, tol: f64) -> Self {
        Self {
            dim: a.dim(),
            bits: a.as_slice().iter().map(|v| v.abs() > tol).collect(),
        }
    }

    /// Builds a mask from a predicate on the upper triangle, mirrored.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::empty(dim);
        for i in 0..dim {
            for j in i..dim {
                let b = f(i, j);
                m.bits[i * dim + j] = b;
                m.bits[j * dim + i] = b;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.bits[i * self.dim + j] = value;
        self.bits[j * self.dim + i] = value;
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (i + 1..self.dim).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Number of set bits, counting ordered pairs.
    pub fn count(&self, off_diagonal_only: bool) -> usize {
        self.pairs(off_diagonal_only).filter(|&(i, j)| self.get(i, j)).count()
    }

    /// Fraction of off-diagonal entries that are zero.
    pub fn off_diagonal_zero_fraction(&self) -> f64 {
        let total = self.dim * self.dim - self.dim;
        if total == 0 {
            return 0.0;
        }
        1.0 - self.count(true) as f64 / total as f64
    }

    fn pairs(&self, off_diagonal_only: bool) -> impl Iterator<Item = (usize, usize)> + '_ {
        let p = self.dim;
        (0..p)
            .flat_map(move |i| (0..p).map(move |j| (i, j)))
            .filter(move |&(i, j)| !off_diagonal_only || i != j)
    }

    /// Rows of `0`/`1` separated by commas.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.dim * self.dim * 2);
        for i in 0..self.dim {
            for j in 0..self.dim {
                if j > 0 {
                    out.push(',');
                }
                out.push(if self.get(i, j) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

/// Support of `a` at tolerance `tol`.
pub fn support_of(a: &SymMatrix, tol: f64) -> SupportMask {
    SupportMask::of(a, tol)
}

/// TPR = |est ∧ truth| / |truth|, FPR = |est ∧ ¬truth| / |¬truth|, over
/// ordered pairs (off-diagonal only when requested).
pub fn tpr_fpr(est: &SupportMask, truth: &SupportMask, off_diagonal_only: bool) -> Result<RecoveryRates> {
    if est.dim != truth.dim {
        return Err(Error::DimensionMismatch {
            expected: truth.dim,
            got: est.dim,
        });
    }
    let (mut tp, mut pos, mut fp, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for (i, j) in truth.pairs(off_diagonal_only) {
        let e = est.get(i, j);
        if truth.get(i, j) {
            pos += 1;
            tp += usize::from(e);
        } else {
            neg += 1;
            fp += usize::from(e);
        }
    }
    let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    Ok(RecoveryRates {
        tpr: ratio(tp, pos),
        fpr: ratio(fp, neg),
    })
}

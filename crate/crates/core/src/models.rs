//! Ground-truth covariance matrices for the simulation studies and a
//! Gaussian sampler.

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::matcore::SymMatrix;
use crate::rng::RngStream;

/// Which population covariance a simulation draws from.
#[derive(Debug, Clone, PartialEq)]
pub enum CovModel {
    /// Banded block `(1 − |i−j|/10)₊` next to `4·I`.
    Model1 { p: usize },
    /// Random sparse block (entries `unif(0.3, 0.8)·Ber(0.2)`) next to `4·I`.
    Model2 { p: usize },
    /// Small equicorrelated block plus high-variance independent coordinates,
    /// the configuration on which universal thresholding is provably slow.
    Theorem5 { p: usize, n: usize, s0: f64, q: f64 },
    Custom(SymMatrix),
}

impl CovModel {
    pub fn dim(&self) -> usize {
        match self {
            CovModel::Model1 { p } | CovModel::Model2 { p } | CovModel::Theorem5 { p, .. } => *p,
            CovModel::Custom(s) => s.dim(),
        }
    }

    /// Whether `sigma` consumes randomness (and so differs by stream).
    pub fn is_random(&self) -> bool {
        matches!(self, CovModel::Model2 { .. })
    }

    pub fn sigma(&self, rng: &mut RngStream) -> Result<SymMatrix> {
        match self {
            CovModel::Model1 { p } => model1_sigma(*p),
            CovModel::Model2 { p } => model2_sigma(*p, rng),
            CovModel::Theorem5 { p, n, s0, q } => theorem5_sigma(*p, *n, *s0, *q),
            CovModel::Custom(s) => Ok(s.clone()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CovModel::Model1 { .. } => "model1",
            CovModel::Model2 { .. } => "model2",
            CovModel::Theorem5 { .. } => "theorem5",
            CovModel::Custom(_) => "custom",
        }
    }
}

fn check_even(p: usize) -> Result<()> {
    if p < 2 || p % 2 != 0 {
        return Err(Error::InvalidDimension(format!(
            "two-block models need an even p >= 2, got {p}"
        )));
    }
    Ok(())
}

/// `diag(A₁, 4·I)` with `A₁(i, j) = (1 − |i − j|/10)₊`.
pub fn model1_sigma(p: usize) -> Result<SymMatrix> {
    check_even(p)?;
    let half = p / 2;
    SymMatrix::from_fn(p, |i, j| match (i < half, j < half) {
        (true, true) => (1.0 - i.abs_diff(j) as f64 / 10.0).max(0.0),
        (false, false) if i == j => 4.0,
        _ => 0.0,
    })
}

/// `diag(B + ε·I, 4·I)` where `B` is symmetric with zero diagonal and
/// independent upper-triangle entries `unif(0.3, 0.8)·Ber(0.2)`, and
/// `ε = max(−λ_min(B), 0) + 0.01`.
pub fn model2_sigma(p: usize, rng: &mut RngStream) -> Result<SymMatrix> {
    check_even(p)?;
    let half = p / 2;
    let mut b = SymMatrix::zeros(half);
    for i in 0..half {
        for j in (i + 1)..half {
            // Draw the uniform unconditionally so the stream layout does not
            // depend on the Bernoulli outcome.
            let keep = rng.bernoulli(0.2);
            let value = rng.uniform(0.3, 0.8);
            if keep {
                b.set(i, j, value);
            }
        }
    }
    let lambda_min = b.eigen_sym()?[0];
    let eps = (-lambda_min).max(0.0) + 0.01;
    SymMatrix::from_fn(p, |i, j| match (i < half, j < half) {
        (true, true) => b.get(i, j) + if i == j { eps } else { 0.0 },
        (false, false) if i == j => 4.0,
        _ => 0.0,
    })
}

/// Size of the correlated block in [`theorem5_sigma`].
pub fn theorem5_block_size(p: usize, n: usize, s0: f64, q: f64) -> usize {
    let log_ratio = (p as f64).ln() / n as f64;
    ((s0 - 1.0).powf(1.0 - q) * log_ratio.powf(-q / 2.0)).floor() as usize + 1
}

/// The first `s₁` coordinates have unit variance and common covariance
/// `s0·sqrt(ln p / n)/4`; the remaining ones are independent with variance
/// `s0`.
pub fn theorem5_sigma(p: usize, n: usize, s0: f64, q: f64) -> Result<SymMatrix> {
    if p < 2 || n < 1 {
        return Err(Error::Parameter(format!("need p >= 2 and n >= 1, got p={p}, n={n}")));
    }
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Parameter(format!("q must lie in [0, 1), got {q}")));
    }
    let log_p = (p as f64).ln();
    if !(s0 >= 1.0 && s0 < 4.0 * (n as f64 / log_p).sqrt()) {
        return Err(Error::Parameter(format!(
            "s0 = {s0} violates 1 <= s0 < 4*sqrt(n/ln p) = {}",
            4.0 * (n as f64 / log_p).sqrt()
        )));
    }
    let s1 = theorem5_block_size(p, n, s0, q);
    if s1 >= p {
        return Err(Error::Parameter(format!("block size {s1} must be smaller than p = {p}")));
    }
    let off = s0 * (log_p / n as f64).sqrt() / 4.0;
    let sigma = SymMatrix::from_fn(p, |i, j| {
        if i == j {
            if i < s1 { 1.0 } else { s0 }
        } else if i < s1 && j < s1 {
            off
        } else {
            0.0
        }
    })?;
    if !sigma.is_positive_definite() {
        return Err(Error::Parameter("constructed matrix is not positive definite".into()));
    }
    Ok(sigma)
}

/// `n` draws from `N(0, Σ)`: each row is `L·z` with `Σ = L·Lᵀ` and `z`
/// standard normal from `rng`.
pub fn mvn_sample(sigma: &SymMatrix, n: usize, rng: &mut RngStream) -> Result<DataMatrix> {
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let chol = sigma.cholesky()?;
    let p = sigma.dim();
    let mut values = vec![0.0; n * p];
    let mut z = vec![0.0; p];
    for row in values.chunks_exact_mut(p) {
        z.iter_mut().for_each(|v| *v = rng.next_normal());
        chol.mul_vec_into(&z, row);
    }
    DataMatrix::new(n, p, values)
}

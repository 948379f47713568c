//! Covariance estimators.
//!
//! The adaptive estimator thresholds each sample covariance entry `σ̂_ij` at
//! its own level `λ_ij = δ·sqrt(θ̂_ij·ln p / n)`, where `θ̂_ij` estimates the
//! variance of the centred product `(X_i − μ_i)(X_j − μ_j)`. The universal
//! estimator uses one level for every entry, and the correlation estimator
//! hard-thresholds sample correlations before rescaling back to covariances.

use std::fmt;
use std::str::FromStr;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::matcore::SymMatrix;
use crate::support::SupportMask;

/// Eigenvalue floor used when positive-definiteness clipping is requested.
pub const PD_CLIP_FLOOR: f64 = 1e-8;
pub const DEFAULT_ETA: f64 = 4.0;
pub const DEFAULT_SCAD_A: f64 = 3.7;

/// A thresholding function `s_λ(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// `z·1{|z| > λ}`
    Hard,
    /// `sgn(z)(|z| − λ)₊`
    Soft,
    /// `z(1 − |λ/z|^η)₊`, `η ≥ 1`
    AdaptiveLasso { eta: f64 },
    /// Three-piece SCAD rule with shape `a > 2`.
    Scad { a: f64 },
}

impl ThresholdRule {
    pub fn adaptive_lasso(eta: f64) -> Result<Self> {
        if !(eta >= 1.0) || !eta.is_finite() {
            return Err(Error::Parameter(format!("adaptive lasso needs eta >= 1, got {eta}")));
        }
        Ok(ThresholdRule::AdaptiveLasso { eta })
    }

    pub fn scad(a: f64) -> Result<Self> {
        if !(a > 2.0) || !a.is_finite() {
            return Err(Error::Parameter(format!("SCAD needs a > 2, got {a}")));
        }
        Ok(ThresholdRule::Scad { a })
    }

    #[inline]
    pub fn apply(&self, z: f64, lambda: f64) -> f64 {
        let az = z.abs();
        match *self {
            ThresholdRule::Hard => {
                if az > lambda {
                    z
                } else {
                    0.0
                }
            }
            ThresholdRule::Soft => soft(z, lambda),
            ThresholdRule::AdaptiveLasso { eta } => {
                if az <= lambda || z == 0.0 {
                    return 0.0;
                }
                let ratio = lambda / az;
                let shrink = if eta == 4.0 {
                    let r2 = ratio * ratio;
                    r2 * r2
                } else {
                    ratio.powf(eta)
                };
                z * (1.0 - shrink).max(0.0)
            }
            ThresholdRule::Scad { a } => {
                if az <= 2.0 * lambda {
                    soft(z, lambda)
                } else if az <= a * lambda {
                    ((a - 1.0) * z - z.signum() * a * lambda) / (a - 2.0)
                } else {
                    z
                }
            }
        }
    }

    /// Short name used in tables and on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            ThresholdRule::Hard => "hard",
            ThresholdRule::Soft => "soft",
            ThresholdRule::AdaptiveLasso { .. } => "al",
            ThresholdRule::Scad { .. } => "scad",
        }
    }
}

#[inline]
fn soft(z: f64, lambda: f64) -> f64 {
    let shrunk = z.abs() - lambda;
    if shrunk > 0.0 {
        z.signum() * shrunk
    } else {
        0.0
    }
}

/// `s_λ(z)` for `rule`.
pub fn apply_threshold(rule: ThresholdRule, z: f64, lambda: f64) -> f64 {
    rule.apply(z, lambda)
}

impl fmt::Display for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ThresholdRule {
    type Err = Error;

    /// `hard`, `soft`, `al` (η = 4) or `scad` (a = 3.7).
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hard" => Ok(ThresholdRule::Hard),
            "soft" => Ok(ThresholdRule::Soft),
            "al" | "adaptive-lasso" | "adaptive_lasso" => ThresholdRule::adaptive_lasso(DEFAULT_ETA),
            "scad" => ThresholdRule::scad(DEFAULT_SCAD_A),
            other => Err(Error::Parameter(format!("unknown threshold rule '{other}'"))),
        }
    }
}

/// Switches shared by every thresholding estimator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EstimateOptions {
    /// Leave the diagonal of the sample covariance untouched.
    pub keep_diagonal: bool,
    /// Clip eigenvalues of the estimate at [`PD_CLIP_FLOOR`].
    pub clip_pd: bool,
}

/// Sample mean, sample covariance (divisor `n − 1`) and `θ̂` (divisor `n`).
#[derive(Debug, Clone)]
pub struct Moments {
    pub n: usize,
    pub mean: Vec<f64>,
    pub cov: SymMatrix,
    pub theta: SymMatrix,
}

impl Moments {
    pub fn p(&self) -> usize {
        self.cov.dim()
    }
}

pub fn sample_mean(x: &DataMatrix) -> Vec<f64> {
    let (n, p) = (x.n(), x.p());
    let mut sum = vec![0.0; p];
    for k in 0..n {
        for (s, v) in sum.iter_mut().zip(x.row(k)) {
            *s += v;
        }
    }
    sum.iter().map(|s| s / n as f64).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn covariance_from_centered(xc: &[f64], n: usize, p: usize) -> SymMatrix {
    let denom = (n - 1) as f64;
    SymMatrix::from_fn_unchecked(p, |i, j| {
        dot(&xc[i * n..(i + 1) * n], &xc[j * n..(j + 1) * n]) / denom
    })
}

pub fn sample_cov(x: &DataMatrix) -> Result<SymMatrix> {
    if x.n() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: x.n() });
    }
    let mean = sample_mean(x);
    let xc = x.centered_columns(&mean);
    Ok(covariance_from_centered(&xc, x.n(), x.p()))
}

/// Mean, covariance and `θ̂` in one go, sharing the centred data.
pub fn moments(x: &DataMatrix) -> Result<Moments> {
    let (n, p) = (x.n(), x.p());
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mean = sample_mean(x);
    let xc = x.centered_columns(&mean);
    let cov = covariance_from_centered(&xc, n, p);
    let theta = SymMatrix::from_fn_unchecked(p, |i, j| {
        let s = cov.get(i, j);
        let (ci, cj) = (&xc[i * n..(i + 1) * n], &xc[j * n..(j + 1) * n]);
        ci.iter()
            .zip(cj)
            .map(|(a, b)| {
                let d = a * b - s;
                d * d
            })
            .sum::<f64>()
            / n as f64
    });
    Ok(Moments { n, mean, cov, theta })
}

/// `θ̂_ij = (1/n) Σ_k [(X_ki − X̄ⁱ)(X_kj − X̄ʲ) − σ̂_ij]²`.
pub fn theta_hat(x: &DataMatrix) -> Result<SymMatrix> {
    moments(x).map(|m| m.theta)
}

/// `λ_ij = δ·sqrt(θ_ij·ln p / n)`.
pub fn thresholds(theta: &SymMatrix, delta: f64, p: usize, n: usize) -> Result<SymMatrix> {
    if p < 2 {
        return Err(Error::InvalidDimension(format!("need p >= 2 for ln p > 0, got {p}")));
    }
    thresholds_with_log(theta, delta, (p as f64).ln(), n)
}

/// [`thresholds`] with `ln p` supplied directly.
pub fn thresholds_with_log(theta: &SymMatrix, delta: f64, log_p: f64, n: usize) -> Result<SymMatrix> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("delta must be finite and >= 0, got {delta}")));
    }
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if let Some(k) = theta.as_slice().iter().position(|&t| t < 0.0) {
        return Err(Error::Domain(format!(
            "negative variance estimate at ({}, {})",
            k / theta.dim(),
            k % theta.dim()
        )));
    }
    Ok(theta.map(|_, _, t| delta * (t * log_p / n as f64).sqrt()))
}

/// Per-entry noise scale `sqrt(θ̂_ij·ln p / n)`; multiplying by `δ` gives `λ_ij`.
pub(crate) fn noise_scale(m: &Moments) -> SymMatrix {
    let log_p = (m.p() as f64).ln();
    let n = m.n as f64;
    m.theta.map(|_, _, t| (t * log_p / n).sqrt())
}

/// Diagnostics returned alongside an adaptive estimate.
#[derive(Debug, Clone)]
pub struct EstimateDiagnostics {
    pub delta: f64,
    pub theta_hat: SymMatrix,
    pub lambda: SymMatrix,
    /// Entries of the estimate that are nonzero.
    pub kept: SupportMask,
}

fn threshold_entries(
    cov: &SymMatrix,
    lambda: impl Fn(usize, usize) -> f64,
    rule: ThresholdRule,
    keep_diagonal: bool,
) -> SymMatrix {
    cov.map(|i, j, z| {
        if keep_diagonal && i == j {
            z
        } else {
            rule.apply(z, lambda(i, j))
        }
    })
}

fn finish(est: SymMatrix, opts: &EstimateOptions) -> Result<SymMatrix> {
    if opts.clip_pd {
        est.clip_eigenvalues(PD_CLIP_FLOOR)
    } else {
        Ok(est)
    }
}

/// Adaptive thresholding on precomputed moments.
pub fn threshold_adaptive(
    m: &Moments,
    delta: f64,
    rule: ThresholdRule,
    opts: &EstimateOptions,
) -> Result<(SymMatrix, EstimateDiagnostics)> {
    let lambda = thresholds(&m.theta, delta, m.p(), m.n)?;
    let est = threshold_entries(&m.cov, |i, j| lambda.get(i, j), rule, opts.keep_diagonal);
    let est = finish(est, opts)?;
    let kept = SupportMask::of(&est, 0.0);
    Ok((
        est,
        EstimateDiagnostics {
            delta,
            theta_hat: m.theta.clone(),
            lambda,
            kept,
        },
    ))
}

/// `Σ̂*(δ)` with default options (every entry thresholded, no clipping).
pub fn adaptive_estimate(
    x: &DataMatrix,
    delta: f64,
    rule: ThresholdRule,
) -> Result<(SymMatrix, EstimateDiagnostics)> {
    adaptive_estimate_with(x, delta, rule, &EstimateOptions::default())
}

pub fn adaptive_estimate_with(
    x: &DataMatrix,
    delta: f64,
    rule: ThresholdRule,
    opts: &EstimateOptions,
) -> Result<(SymMatrix, EstimateDiagnostics)> {
    if x.p() < 2 {
        return Err(Error::InvalidDimension(format!("need p >= 2, got {}", x.p())));
    }
    threshold_adaptive(&moments(x)?, delta, rule, opts)
}

/// Universal thresholding of a given covariance matrix at a single level.
pub fn threshold_universal(
    cov: &SymMatrix,
    lambda: f64,
    rule: ThresholdRule,
    opts: &EstimateOptions,
) -> Result<SymMatrix> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("threshold must be >= 0, got {lambda}")));
    }
    finish(threshold_entries(cov, |_, _| lambda, rule, opts.keep_diagonal), opts)
}

/// `Σ̂_g`: every entry of the sample covariance thresholded at `lambda`.
pub fn universal_estimate(x: &DataMatrix, lambda: f64, rule: ThresholdRule) -> Result<SymMatrix> {
    universal_estimate_with(x, lambda, rule, &EstimateOptions::default())
}

pub fn universal_estimate_with(
    x: &DataMatrix,
    lambda: f64,
    rule: ThresholdRule,
    opts: &EstimateOptions,
) -> Result<SymMatrix> {
    threshold_universal(&sample_cov(x)?, lambda, rule, opts)
}

/// Hard-thresholds sample correlations `r̂_ij` (off-diagonal) at `lambda`
/// and maps back to the covariance scale, `D^{1/2} R̂ D^{1/2}`.
pub fn threshold_correlation(cov: &SymMatrix, lambda: f64) -> Result<SymMatrix> {
    if let Some(col) = (0..cov.dim()).find(|&i| !(cov.get(i, i) > 0.0)) {
        return Err(Error::DegenerateVariable { column: col });
    }
    Ok(cov.map(|i, j, s| {
        if i == j {
            return s;
        }
        let r = s / (cov.get(i, i) * cov.get(j, j)).sqrt();
        if r.abs() >= lambda {
            s
        } else {
            0.0
        }
    }))
}

pub fn correlation_estimate(x: &DataMatrix, lambda: f64) -> Result<SymMatrix> {
    threshold_correlation(&sample_cov(x)?, lambda)
}

/// `½·ln((1 + r)/(1 − r))`.
pub fn fisher_z(r: f64) -> Result<f64> {
    if !(r.abs() < 1.0) {
        return Err(Error::Domain(format!("Fisher z needs |r| < 1, got {r}")));
    }
    let a = r.abs();
    Ok((0.5 * (2.0 * a / (1.0 - a)).ln_1p()).copysign(r))
}

/// `max_i Σ_j (σ_ii σ_jj)^{(1−q)/2} |σ_ij|^q`, with `|σ|⁰ = 1{σ ≠ 0}`.
pub fn weighted_lq_radius(sigma: &SymMatrix, q: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Domain(format!("q must lie in [0, 1), got {q}")));
    }
    let p = sigma.dim();
    if let Some(i) = (0..p).find(|&i| !(sigma.get(i, i) > 0.0)) {
        return Err(Error::Domain(format!("diagonal entry {i} is not positive")));
    }
    let expo = (1.0 - q) / 2.0;
    let radius = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let s = sigma.get(i, j);
                    let mag = if q == 0.0 {
                        if s != 0.0 { 1.0 } else { 0.0 }
                    } else {
                        s.abs().powf(q)
                    };
                    (sigma.get(i, i) * sigma.get(j, j)).powf(expo) * mag
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    Ok(radius)
}

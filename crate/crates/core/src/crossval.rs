//! Cross-validated choice of the adaptive multiplier `δ` and of the
//! universal threshold `λ`.
//!
//! Each split `v` yields a fitting subsample, on which the thresholded
//! estimate is formed (with its own `θ̂` and its own size in the threshold
//! formula), and a validation subsample whose raw sample covariance is the
//! target. The risk of a grid value is the squared Frobenius distance
//! averaged over splits; the smallest grid index attaining the minimum wins.

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::estimator::{moments, noise_scale, sample_cov, EstimateOptions, Moments, ThresholdRule};
use crate::matcore::SymMatrix;
use crate::rng::RngStream;

/// Number of points in the default universal-threshold grid.
pub const LAMBDA_GRID_POINTS: usize = 81;

#[derive(Debug, Clone, PartialEq)]
pub enum SplitKind {
    /// `H` independent random splits into `n1` and `n − n1` observations
    /// (`n1 = ceil(n/2)` when unset).
    RandomHalves { n1: Option<usize> },
    /// `H`-fold partition; each fold in turn is the validation set. With
    /// class labels the folds are stratified.
    KFold { labels: Option<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    /// Number of splits or folds (`H`).
    pub folds: usize,
    /// Grid density `N`: `δ ∈ {0, 1/N, …, 4}`.
    pub grid_density: usize,
    pub rule: ThresholdRule,
    pub split: SplitKind,
    pub options: EstimateOptions,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            grid_density: 20,
            rule: ThresholdRule::Hard,
            split: SplitKind::KFold { labels: None },
            options: EstimateOptions::default(),
        }
    }
}

impl CvConfig {
    pub fn with_rule(rule: ThresholdRule) -> Self {
        Self { rule, ..Self::default() }
    }
}

/// One fitting/validation partition of the row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub fit: Vec<usize>,
    pub validate: Vec<usize>,
}

/// `(grid value, estimated risk)` pairs in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCurve {
    pub points: Vec<(f64, f64)>,
}

impl RiskCurve {
    /// Index of the minimum risk; ties go to the smallest index.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (k, &(_, r)) in self.points.iter().enumerate() {
            if r < self.points[best].1 {
                best = k;
            }
        }
        best
    }

    /// Two-column CSV with a `value,risk` header.
    pub fn to_csv(&self, value_name: &str) -> String {
        let mut out = format!("{value_name},risk\n");
        for (v, r) in &self.points {
            out.push_str(&format!("{v:.17e},{r:.17e}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvSelection {
    pub value: f64,
    pub index: usize,
    pub curve: RiskCurve,
}

/// `{j/N : 0 ≤ j ≤ 4N}`.
pub fn delta_grid(grid_density: usize) -> Vec<f64> {
    (0..=4 * grid_density).map(|j| j as f64 / grid_density as f64).collect()
}

/// `points` equispaced values from 0 to `max_norm(cov)`.
pub fn default_lambda_grid(cov: &SymMatrix, points: usize) -> Vec<f64> {
    let top = cov.max_norm();
    if points <= 1 {
        return vec![0.0];
    }
    (0..points).map(|j| top * j as f64 / (points - 1) as f64).collect()
}

/// Partitions `0..n` into `k` folds whose sizes differ by at most one.
///
/// With labels, members of each class are dealt round-robin (continuing
/// where the previous class stopped) so that per-class counts also differ by
/// at most one across folds.
pub fn make_folds(n: usize, k: usize, labels: Option<&[usize]>, rng: &mut RngStream) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Parameter(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::Parameter(format!("cannot split {n} observations into {k} folds")));
    }
    let order: Vec<usize> = match labels {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut idx);
            idx
        }
        Some(labels) => {
            if labels.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
            }
            let classes = labels.iter().max().map_or(0, |m| m + 1);
            let mut order = Vec::with_capacity(n);
            for c in 0..classes {
                let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
                rng.shuffle(&mut members);
                order.extend(members);
            }
            order
        }
    };
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (t, idx) in order.into_iter().enumerate() {
        folds[t % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// The `H` splits for a data set of `n` observations.
pub fn make_splits(n: usize, cfg: &CvConfig, rng: &RngStream) -> Result<Vec<Split>> {
    if cfg.folds < 1 {
        return Err(Error::Parameter("need at least one split".into()));
    }
    if n < 4 {
        return Err(Error::InsufficientData { needed: 4, got: n });
    }
    match &cfg.split {
        SplitKind::RandomHalves { n1 } => {
            let n1 = n1.unwrap_or(n.div_ceil(2));
            if n1 < 2 || n1 + 2 > n {
                return Err(Error::InsufficientData { needed: n1 + 2, got: n });
            }
            Ok((0..cfg.folds as u64)
                .map(|v| {
                    let mut idx: Vec<usize> = (0..n).collect();
                    rng.fork(v).shuffle(&mut idx);
                    let mut fit = idx[..n1].to_vec();
                    let mut validate = idx[n1..].to_vec();
                    fit.sort_unstable();
                    validate.sort_unstable();
                    Split { fit, validate }
                })
                .collect())
        }
        SplitKind::KFold { labels } => {
            if n < 2 * cfg.folds {
                return Err(Error::InsufficientData { needed: 2 * cfg.folds, got: n });
            }
            let folds = make_folds(n, cfg.folds, labels.as_deref(), &mut rng.fork(0))?;
            Ok((0..cfg.folds)
                .map(|v| Split {
                    fit: sorted((0..cfg.folds).filter(|&u| u != v).flat_map(|u| folds[u].iter().copied()).collect()),
                    validate: folds[v].clone(),
                })
                .collect())
        }
    }
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// `‖s(cov; λ) − target‖²_F` without materialising the thresholded matrix.
fn thresholded_distance_sq(
    cov: &SymMatrix,
    target: &SymMatrix,
    lambda: impl Fn(usize, usize) -> f64,
    rule: ThresholdRule,
    keep_diagonal: bool,
) -> f64 {
    let p = cov.dim();
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..p {
        let (crow, trow) = (cov.row(i), target.row(i));
        let d = if keep_diagonal { crow[i] } else { rule.apply(crow[i], lambda(i, i)) } - trow[i];
        diag += d * d;
        for j in (i + 1)..p {
            let d = rule.apply(crow[j], lambda(i, j)) - trow[j];
            off += d * d;
        }
    }
    diag + 2.0 * off
}

fn cross_validate(
    x: &DataMatrix,
    cfg: &CvConfig,
    grid: &[f64],
    rng: &RngStream,
    risk: impl Fn(&Moments, &SymMatrix, &SymMatrix, f64) -> f64,
) -> Result<CvSelection> {
    let splits = make_splits(x.n(), cfg, rng)?;
    let mut totals = vec![0.0; grid.len()];
    for split in &splits {
        let fit = moments(&x.select_rows(&split.fit)?)?;
        let scale = noise_scale(&fit);
        let target = sample_cov(&x.select_rows(&split.validate)?)?;
        for (t, &g) in totals.iter_mut().zip(grid) {
            *t += risk(&fit, &scale, &target, g);
        }
    }
    let h = splits.len() as f64;
    let curve = RiskCurve {
        points: grid.iter().zip(&totals).map(|(&g, &t)| (g, t / h)).collect(),
    };
    let index = curve.argmin();
    Ok(CvSelection {
        value: grid[index],
        index,
        curve,
    })
}

/// Chooses `δ̂ = ĵ/N` minimising the cross-validated Frobenius risk of the
/// adaptive estimator.
pub fn cv_select_delta(x: &DataMatrix, cfg: &CvConfig, rng: &RngStream) -> Result<CvSelection> {
    if cfg.grid_density < 1 {
        return Err(Error::Parameter("grid density must be at least 1".into()));
    }
    if x.p() < 2 {
        return Err(Error::InvalidDimension(format!("need p >= 2, got {}", x.p())));
    }
    let grid = delta_grid(cfg.grid_density);
    let (rule, keep) = (cfg.rule, cfg.options.keep_diagonal);
    cross_validate(x, cfg, &grid, rng, |fit, scale, target, delta| {
        thresholded_distance_sq(&fit.cov, target, |i, j| delta * scale.get(i, j), rule, keep)
    })
}

/// Chooses the universal threshold from `grid` (ascending) by the same
/// cross-validation scheme.
pub fn cv_select_lambda(x: &DataMatrix, cfg: &CvConfig, grid: &[f64], rng: &RngStream) -> Result<CvSelection> {
    if grid.is_empty() {
        return Err(Error::Parameter("empty threshold grid".into()));
    }
    if grid.windows(2).any(|w| !(w[0] <= w[1])) || grid.iter().any(|g| !(*g >= 0.0)) {
        return Err(Error::Parameter("threshold grid must be nonnegative and ascending".into()));
    }
    let (rule, keep) = (cfg.rule, cfg.options.keep_diagonal);
    cross_validate(x, cfg, grid, rng, |fit, _, target, lambda| {
        thresholded_distance_sq(&fit.cov, target, |_, _| lambda, rule, keep)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{adaptive_estimate_with, universal_estimate_with};
    use crate::models::{model1_sigma, mvn_sample};

    fn model1_data(p: usize, n: usize, seed: u64) -> DataMatrix {
        mvn_sample(&model1_sigma(p).unwrap(), n, &mut RngStream::new(seed, 0)).unwrap()
    }

    #[test]
    fn folds_have_balanced_sizes() {
        let folds = make_folds(10, 5, None, &mut RngStream::new(1, 0)).unwrap();
        assert!(folds.iter().all(|f| f.len() == 2));
        let mut all: Vec<usize> = folds.concat();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());

        let folds = make_folds(63, 5, None, &mut RngStream::new(1, 0)).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert!(make_folds(3, 5, None, &mut RngStream::new(1, 0)).is_err());
        assert!(make_folds(3, 1, None, &mut RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn stratified_folds_balance_each_class() {
        let sizes = [23usize, 8, 12, 20];
        let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &m)| vec![c; m]).collect();
        for seed in 0..20 {
            let folds = make_folds(63, 5, Some(&labels), &mut RngStream::new(seed, 3)).unwrap();
            for (c, &m) in sizes.iter().enumerate() {
                let counts: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == c).count()).collect();
                let (lo, hi) = (*counts.iter().min().unwrap(), *counts.iter().max().unwrap());
                assert!(hi - lo <= 1);
                assert_eq!(lo, m / 5);
            }
            let total: Vec<usize> = folds.iter().map(Vec::len).collect();
            assert!(total.iter().max().unwrap() - total.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn folds_are_deterministic() {
        let a = make_folds(40, 5, None, &mut RngStream::new(7, 2)).unwrap();
        let b = make_folds(40, 5, None, &mut RngStream::new(7, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn flat_risk_picks_smallest_grid_point() {
        let x = DataMatrix::new(20, 4, vec![0.0; 80]).unwrap();
        let cfg = CvConfig::default();
        let sel = cv_select_delta(&x, &cfg, &RngStream::new(0, 0)).unwrap();
        assert_eq!((sel.index, sel.value), (0, 0.0));
        assert!(sel.curve.points.iter().all(|&(_, r)| r == 0.0));

        let sel = cv_select_lambda(&x, &cfg, &[0.1, 0.2, 0.3], &RngStream::new(0, 0)).unwrap();
        assert_eq!(sel.value, 0.1);

        let curve = RiskCurve { points: vec![(0.0, 2.0), (0.5, 1.0), (1.0, 1.0), (1.5, 3.0)] };
        assert_eq!(curve.argmin(), 1);
    }

    #[test]
    fn singleton_lambda_grid() {
        let x = model1_data(10, 30, 1);
        let sel = cv_select_lambda(&x, &CvConfig::default(), &[0.0], &RngStream::new(0, 0)).unwrap();
        assert_eq!(sel.value, 0.0);
        assert!(cv_select_lambda(&x, &CvConfig::default(), &[], &RngStream::new(0, 0)).is_err());
        assert!(cv_select_lambda(&x, &CvConfig::default(), &[0.2, 0.1], &RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn delta_grid_contract_on_model1() {
        let x = model1_data(30, 100, 2);
        for split in [SplitKind::KFold { labels: None }, SplitKind::RandomHalves { n1: None }] {
            let cfg = CvConfig { split, ..CvConfig::default() };
            let sel = cv_select_delta(&x, &cfg, &RngStream::new(5, 0)).unwrap();
            assert_eq!(sel.curve.points.len(), 81);
            assert!((0.0..=4.0).contains(&sel.value));
            assert_eq!(sel.value, sel.index as f64 / 20.0);
            assert!(sel.curve.points.iter().all(|&(_, r)| r >= 0.0));
            let again = cv_select_delta(&x, &cfg, &RngStream::new(5, 0)).unwrap();
            assert_eq!(sel, again);
        }
    }

    // Risk computed the slow way: build each estimate explicitly.
    #[test]
    fn risk_curve_matches_explicit_estimates() {
        let x = model1_data(12, 40, 3);
        let rng = RngStream::new(9, 1);
        for keep_diagonal in [false, true] {
            let cfg = CvConfig {
                grid_density: 4,
                rule: ThresholdRule::AdaptiveLasso { eta: 4.0 },
                options: EstimateOptions { keep_diagonal, clip_pd: false },
                ..CvConfig::default()
            };
            let sel = cv_select_delta(&x, &cfg, &rng).unwrap();
            let splits = make_splits(x.n(), &cfg, &rng).unwrap();
            for &(delta, risk) in &sel.curve.points {
                let mut total = 0.0;
                for s in &splits {
                    let (est, _) = adaptive_estimate_with(&x.select_rows(&s.fit).unwrap(), delta, cfg.rule, &cfg.options).unwrap();
                    let target = sample_cov(&x.select_rows(&s.validate).unwrap()).unwrap();
                    total += est.sub(&target).unwrap().frobenius_norm().powi(2);
                }
                assert!((total / 5.0 - risk).abs() <= 1e-9 * risk.max(1.0));
            }

            let grid = default_lambda_grid(&sample_cov(&x).unwrap(), 9);
            let sel = cv_select_lambda(&x, &cfg, &grid, &rng).unwrap();
            for &(lambda, risk) in &sel.curve.points {
                let mut total = 0.0;
                for s in &splits {
                    let est = universal_estimate_with(&x.select_rows(&s.fit).unwrap(), lambda, cfg.rule, &cfg.options).unwrap();
                    let target = sample_cov(&x.select_rows(&s.validate).unwrap()).unwrap();
                    total += est.sub(&target).unwrap().frobenius_norm().powi(2);
                }
                assert!((total / 5.0 - risk).abs() <= 1e-9 * risk.max(1.0));
            }
        }
    }

    #[test]
    fn split_validation() {
        let cfg = CvConfig { split: SplitKind::RandomHalves { n1: Some(1) }, ..CvConfig::default() };
        assert!(make_splits(10, &cfg, &RngStream::new(0, 0)).is_err());
        assert!(make_splits(3, &CvConfig::default(), &RngStream::new(0, 0)).is_err());
        assert!(matches!(
            make_splits(8, &CvConfig::default(), &RngStream::new(0, 0)),
            Err(Error::InsufficientData { .. })
        ));
        let splits = make_splits(11, &CvConfig { split: SplitKind::RandomHalves { n1: None }, folds: 3, ..CvConfig::default() }, &RngStream::new(0, 0)).unwrap();
        assert_eq!(splits.len(), 3);
        assert!(splits.iter().all(|s| s.fit.len() == 6 && s.validate.len() == 5));
    }

    #[test]
    fn cv_delta_tracks_sqrt2_on_sparse_gaussian() {
        // Σ₀ = Model-1 banded pattern at p = 30 (in U₀); δ̂ ≥ √2 − 0.2 in at
        // least 90% of 50 seeds.
        let sigma = model1_sigma(30).unwrap();
        let mut hits = 0;
        for seed in 0..50 {
            let x = mvn_sample(&sigma, 100, &mut RngStream::new(1000 + seed, 0)).unwrap();
            let sel = cv_select_delta(&x, &CvConfig::default(), &RngStream::new(1000 + seed, 1)).unwrap();
            hits += usize::from(sel.value >= 2f64.sqrt() - 0.2);
        }
        assert!(hits >= 45, "{hits}/50");
    }

    #[test]
    fn risk_curve_csv() {
        let c = RiskCurve { points: vec![(0.0, 1.5), (0.25, 1.0)] };
        let csv = c.to_csv("delta");
        assert!(csv.starts_with("delta,risk\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}

//! Monte Carlo comparison of thresholding estimators.
//!
//! Replication `r` draws everything from `RngStream::new(seed, r)`, so
//! results do not depend on how replications are scheduled across workers.

use std::fmt;

use rayon::prelude::*;

use crate::crossval::{cv_select_delta, cv_select_lambda, default_lambda_grid, CvConfig, LAMBDA_GRID_POINTS};
use crate::error::{Error, Result};
use crate::estimator::{
    moments, threshold_adaptive, threshold_correlation, threshold_universal, EstimateOptions, Moments, ThresholdRule,
};
use crate::matcore::SymMatrix;
use crate::models::{mvn_sample, CovModel};
use crate::rng::RngStream;
use crate::support::{tpr_fpr, SupportMask};

const SIGMA_STREAM: u64 = 1;
const SAMPLE_STREAM: u64 = 2;
const CV_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaChoice {
    Fixed(f64),
    Cv,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaChoice {
    Fixed(f64),
    Cv,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorSpec {
    Adaptive(DeltaChoice),
    Universal(LambdaChoice),
    /// Hard thresholding of sample correlations at a fixed level.
    Correlation(f64),
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorSpec::Adaptive(DeltaChoice::Fixed(d)) => write!(f, "adaptive({d})"),
            EstimatorSpec::Adaptive(DeltaChoice::Cv) => write!(f, "adaptive(cv)"),
            EstimatorSpec::Universal(LambdaChoice::Fixed(l)) => write!(f, "universal({l})"),
            EstimatorSpec::Universal(LambdaChoice::Cv) => write!(f, "universal(cv)"),
            EstimatorSpec::Correlation(l) => write!(f, "correlation({l})"),
        }
    }
}

impl EstimatorSpec {
    fn uses_cv(&self) -> bool {
        matches!(
            self,
            EstimatorSpec::Adaptive(DeltaChoice::Cv) | EstimatorSpec::Universal(LambdaChoice::Cv)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: CovModel,
    pub n: usize,
    pub reps: usize,
    pub estimators: Vec<EstimatorSpec>,
    pub rules: Vec<ThresholdRule>,
    pub seed: u64,
    /// Split settings for the CV estimators; its `rule` and `options` are
    /// replaced by those of each fit.
    pub cv: CvConfig,
    pub options: EstimateOptions,
    /// Points in the universal threshold grid.
    pub lambda_grid_points: usize,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
    /// Retain every estimated support mask.
    pub keep_masks: bool,
}

impl SimConfig {
    /// Fixed `δ = 2`, CV-tuned adaptive and CV-tuned universal estimators
    /// with hard thresholding.
    pub fn new(model: CovModel, n: usize, reps: usize, seed: u64) -> Self {
        Self {
            model,
            n,
            reps,
            estimators: vec![
                EstimatorSpec::Adaptive(DeltaChoice::Fixed(2.0)),
                EstimatorSpec::Adaptive(DeltaChoice::Cv),
                EstimatorSpec::Universal(LambdaChoice::Cv),
            ],
            rules: vec![ThresholdRule::Hard],
            seed,
            cv: CvConfig::default(),
            options: EstimateOptions::default(),
            lambda_grid_points: LAMBDA_GRID_POINTS,
            workers: 0,
            keep_masks: false,
        }
    }

    pub fn p(&self) -> usize {
        self.model.dim()
    }

    /// `(estimator, rule)` pairs in result order. Correlation thresholding
    /// has no rule choice and appears once, as hard.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &estimator in &self.estimators {
            if let EstimatorSpec::Correlation(_) = estimator {
                cells.push(Cell {
                    estimator,
                    rule: ThresholdRule::Hard,
                });
                continue;
            }
            for &rule in &self.rules {
                cells.push(Cell { estimator, rule });
            }
        }
        cells
    }

    fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::Parameter("need at least one replication".into()));
        }
        if self.estimators.is_empty() || self.rules.is_empty() {
            return Err(Error::Parameter("need at least one estimator and one rule".into()));
        }
        if self.p() < 2 {
            return Err(Error::InvalidDimension(format!("need p >= 2, got {}", self.p())));
        }
        let needed = if self.estimators.iter().any(EstimatorSpec::uses_cv) { 4 } else { 2 };
        if self.n < needed {
            return Err(Error::InsufficientData {
                needed,
                got: self.n,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub estimator: EstimatorSpec,
    pub rule: ThresholdRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    Spectral,
    L1,
    Frobenius,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::Spectral, Norm::L1, Norm::Frobenius];

    pub fn name(&self) -> &'static str {
        match self {
            Norm::Spectral => "spectral",
            Norm::L1 => "l1",
            Norm::Frobenius => "frobenius",
        }
    }
}

/// Outcome of one estimator on one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub spectral: f64,
    pub l1: f64,
    pub frobenius: f64,
    /// Off-diagonal recovery rates against the true support.
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    /// The `δ` or `λ` used.
    pub tuning: f64,
    pub mask: Option<SupportMask>,
}

impl FitRecord {
    pub fn loss(&self, norm: Norm) -> f64 {
        match norm {
            Norm::Spectral => self.spectral,
            Norm::L1 => self.l1,
            Norm::Frobenius => self.frobenius,
        }
    }
}

/// One entry per cell, in [`SimConfig::cells`] order. Failures keep their
/// error message.
#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub rep: usize,
    pub fits: Vec<std::result::Result<FitRecord, String>>,
}

/// Mean and standard error of the mean over the successful replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let count = values.len();
        let mean = pairwise_sum(values) / count as f64;
        let se = if count > 1 {
            let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
            (pairwise_sum(&dev) / (count - 1) as f64).sqrt() / (count as f64).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, se, count })
    }
}

/// Pairwise (cascade) summation in index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell: Cell,
    pub spectral: Option<Stat>,
    pub l1: Option<Stat>,
    pub frobenius: Option<Stat>,
    pub tpr: Option<Stat>,
    pub fpr: Option<Stat>,
    pub tuning: Option<Stat>,
    pub failures: usize,
}

impl CellSummary {
    pub fn loss(&self, norm: Norm) -> Option<Stat> {
        match norm {
            Norm::Spectral => self.spectral,
            Norm::L1 => self.l1,
            Norm::Frobenius => self.frobenius,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub summaries: Vec<CellSummary>,
    pub reps: Vec<RepRecord>,
}

impl SimResult {
    /// Position of a cell in [`SimResult::summaries`].
    pub fn find(&self, estimator: EstimatorSpec, rule: ThresholdRule) -> Option<usize> {
        self.summaries
            .iter()
            .position(|s| s.cell.estimator == estimator && s.cell.rule == rule)
    }

    pub fn summary(&self, estimator: EstimatorSpec, rule: ThresholdRule) -> Option<&CellSummary> {
        self.find(estimator, rule).map(|k| &self.summaries[k])
    }

    /// Per-replication losses of a cell; `NaN` marks a failed fit.
    pub fn losses(&self, cell: usize, norm: Norm) -> Vec<f64> {
        self.reps
            .iter()
            .map(|r| r.fits[cell].as_ref().map_or(f64::NAN, |f| f.loss(norm)))
            .collect()
    }

    /// Retained support masks of a cell, over successful replications.
    pub fn masks(&self, cell: usize) -> Vec<SupportMask> {
        self.reps
            .iter()
            .filter_map(|r| r.fits[cell].as_ref().ok().and_then(|f| f.mask.clone()))
            .collect()
    }

    pub fn failures(&self) -> impl Iterator<Item = (usize, usize, &str)> {
        self.reps.iter().flat_map(|r| {
            r.fits
                .iter()
                .enumerate()
                .filter_map(move |(c, f)| f.as_ref().err().map(|e| (r.rep, c, e.as_str())))
        })
    }

    /// One row per cell and metric: losses in each norm, then TPR and FPR.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("estimator\trule\tmetric\tmean\tse\n");
        for s in &self.summaries {
            let rows = Norm::ALL
                .iter()
                .map(|n| (n.name(), s.loss(*n)))
                .chain([("tpr", s.tpr), ("fpr", s.fpr)]);
            for (metric, stat) in rows {
                let (mean, se) = match stat {
                    Some(st) => (format!("{:.4}", st.mean), format!("{:.4}", st.se)),
                    None => ("NA".into(), "NA".into()),
                };
                out.push_str(&format!("{}\t{}\t{metric}\t{mean}\t{se}\n", s.cell.estimator, s.cell.rule));
            }
        }
        out
    }
}

struct RepContext<'a> {
    cfg: &'a SimConfig,
    cells: &'a [Cell],
    fixed_sigma: Option<&'a SymMatrix>,
}

impl RepContext<'_> {
    fn run(&self, rep: usize) -> RepRecord {
        let stream = RngStream::new(self.cfg.seed, rep as u64);
        let fits = match self.prepare(&stream) {
            Ok((sigma, x, m)) => {
                let truth = SupportMask::of(&sigma, 0.0);
                self.cells
                    .iter()
                    .map(|cell| self.fit(cell, &sigma, &truth, &x, &m, &stream).map_err(|e| e.to_string()))
                    .collect()
            }
            Err(e) => vec![Err(e.to_string()); self.cells.len()],
        };
        RepRecord { rep, fits }
    }

    fn prepare(&self, stream: &RngStream) -> Result<(SymMatrix, crate::data::DataMatrix, Moments)> {
        let sigma = match self.fixed_sigma {
            Some(s) => s.clone(),
            None => self.cfg.model.sigma(&mut stream.fork(SIGMA_STREAM))?,
        };
        let x = mvn_sample(&sigma, self.cfg.n, &mut stream.fork(SAMPLE_STREAM))?;
        let m = moments(&x)?;
        Ok((sigma, x, m))
    }

    fn fit(
        &self,
        cell: &Cell,
        sigma: &SymMatrix,
        truth: &SupportMask,
        x: &crate::data::DataMatrix,
        m: &Moments,
        stream: &RngStream,
    ) -> Result<FitRecord> {
        let opts = &self.cfg.options;
        let cv = CvConfig {
            rule: cell.rule,
            options: *opts,
            ..self.cfg.cv.clone()
        };
        let cv_rng = stream.fork(CV_STREAM);
        let (est, tuning) = match cell.estimator {
            EstimatorSpec::Adaptive(choice) => {
                let delta = match choice {
                    DeltaChoice::Fixed(d) => d,
                    DeltaChoice::Cv => cv_select_delta(x, &cv, &cv_rng)?.value,
                };
                (threshold_adaptive(m, delta, cell.rule, opts)?.0, delta)
            }
            EstimatorSpec::Universal(choice) => {
                let lambda = match choice {
                    LambdaChoice::Fixed(l) => l,
                    LambdaChoice::Cv => {
                        let grid = default_lambda_grid(&m.cov, self.cfg.lambda_grid_points);
                        cv_select_lambda(x, &cv, &grid, &cv_rng)?.value
                    }
                };
                (threshold_universal(&m.cov, lambda, cell.rule, opts)?, lambda)
            }
            EstimatorSpec::Correlation(lambda) => (threshold_correlation(&m.cov, lambda)?, lambda),
        };
        let diff = est.sub(sigma)?;
        let mask = SupportMask::of(&est, 0.0);
        let rates = tpr_fpr(&mask, truth, true)?;
        Ok(FitRecord {
            spectral: diff.spectral_norm()?,
            l1: diff.l1_norm(),
            frobenius: diff.frobenius_norm(),
            tpr: rates.tpr,
            fpr: rates.fpr,
            tuning,
            mask: self.cfg.keep_masks.then_some(mask),
        })
    }
}

fn summarize(cell: Cell, index: usize, reps: &[RepRecord]) -> CellSummary {
    let ok: Vec<&FitRecord> = reps.iter().filter_map(|r| r.fits[index].as_ref().ok()).collect();
    let collect = |f: &dyn Fn(&FitRecord) -> Option<f64>| -> Option<Stat> {
        Stat::of(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
    };
    CellSummary {
        cell,
        spectral: collect(&|r| Some(r.spectral)),
        l1: collect(&|r| Some(r.l1)),
        frobenius: collect(&|r| Some(r.frobenius)),
        tpr: collect(&|r| r.tpr),
        fpr: collect(&|r| r.fpr),
        tuning: collect(&|r| Some(r.tuning)),
        failures: reps.len() - ok.len(),
    }
}

/// Runs every replication and aggregates in replication order.
///
/// Numerical failures inside a replication are recorded, not returned;
/// only configuration errors (and a failure to build a fixed `Σ₀`) abort.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let fixed = if cfg.model.is_random() {
        None
    } else {
        Some(cfg.model.sigma(&mut RngStream::new(cfg.seed, u64::MAX))?)
    };
    let cells = cfg.cells();
    let ctx = RepContext {
        cfg,
        cells: &cells,
        fixed_sigma: fixed.as_ref(),
    };
    let work = || (0..cfg.reps).into_par_iter().map(|r| ctx.run(r)).collect::<Vec<_>>();
    let reps = if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Parameter(format!("cannot start worker pool: {e}")))?
            .install(work)
    } else {
        work()
    };
    let summaries = cells
        .iter()
        .enumerate()
        .map(|(k, &cell)| summarize(cell, k, &reps))
        .collect();
    Ok(SimResult { summaries, reps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{adaptive_estimate, sample_cov};
    use crate::models::model1_sigma;

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn stat_definition() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(Stat::of(&[7.0]).unwrap().se, 0.0);
        assert!(Stat::of(&[]).is_none());
    }

    // One replication recomposed by hand from the same streams.
    #[test]
    fn single_replication_matches_manual_pipeline() {
        let mut cfg = SimConfig::new(CovModel::Model1 { p: 2 }, 20, 1, 99);
        cfg.estimators = vec![EstimatorSpec::Adaptive(DeltaChoice::Fixed(1.0))];
        let res = run_simulation(&cfg).unwrap();
        let sigma = model1_sigma(2).unwrap();
        let x = mvn_sample(&sigma, 20, &mut RngStream::new(99, 0).fork(SAMPLE_STREAM)).unwrap();
        let (est, _) = adaptive_estimate(&x, 1.0, ThresholdRule::Hard).unwrap();
        let diff = est.sub(&sigma).unwrap();
        let fit = res.reps[0].fits[0].as_ref().unwrap();
        assert_eq!(fit.spectral, diff.spectral_norm().unwrap());
        assert_eq!(fit.frobenius, diff.frobenius_norm());
        assert_eq!(fit.l1, diff.l1_norm());
        assert_eq!(fit.tpr, None);
        let s = sample_cov(&x).unwrap();
        let expected_fpr = if est.get(0, 1) != 0.0 { 1.0 } else { 0.0 };
        assert_eq!(fit.fpr, Some(expected_fpr));
        assert!(s.get(0, 1) == est.get(0, 1) || est.get(0, 1) == 0.0);
        assert_eq!(res.summaries[0].spectral.unwrap().mean, fit.spectral);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = SimConfig::new(CovModel::Model2 { p: 10 }, 30, 6, 5);
        cfg.rules = vec![ThresholdRule::Hard, ThresholdRule::adaptive_lasso(4.0).unwrap()];
        cfg.estimators.push(EstimatorSpec::Correlation(0.3));
        cfg.keep_masks = true;
        cfg.workers = 1;
        let a = run_simulation(&cfg).unwrap();
        cfg.workers = 3;
        let b = run_simulation(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.summaries.len(), 7);
        assert_eq!(a.masks(0).len(), 6);
    }

    #[test]
    fn failures_are_recorded_per_replication() {
        let mut cfg = SimConfig::new(CovModel::Model1 { p: 4 }, 10, 3, 1);
        cfg.estimators = vec![
            EstimatorSpec::Adaptive(DeltaChoice::Fixed(2.0)),
            EstimatorSpec::Universal(LambdaChoice::Fixed(-1.0)),
        ];
        let res = run_simulation(&cfg).unwrap();
        assert_eq!(res.failures().count(), 3);
        assert_eq!(res.summaries[1].failures, 3);
        assert!(res.summaries[1].spectral.is_none());
        assert!(res.summaries[0].spectral.is_some());
        assert!(res.losses(1, Norm::Spectral).iter().all(|v| v.is_nan()));
        assert!(res.to_tsv().contains("universal(-1)\thard\tspectral\tNA\tNA"));
    }

    #[test]
    fn config_errors_abort() {
        let mut cfg = SimConfig::new(CovModel::Model1 { p: 4 }, 3, 1, 1);
        assert!(matches!(run_simulation(&cfg), Err(Error::InsufficientData { .. })));
        cfg.n = 10;
        cfg.reps = 0;
        assert!(run_simulation(&cfg).is_err());
        let cfg = SimConfig::new(CovModel::Model1 { p: 5 }, 10, 1, 1);
        assert!(run_simulation(&cfg).is_err());
    }

    #[test]
    fn tsv_layout() {
        let mut cfg = SimConfig::new(CovModel::Model1 { p: 6 }, 20, 2, 3);
        cfg.estimators = vec![EstimatorSpec::Adaptive(DeltaChoice::Fixed(2.0))];
        let tsv = run_simulation(&cfg).unwrap().to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], "estimator\trule\tmetric\tmean\tse");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("adaptive(2)\thard\tspectral\t"));
        let mean = lines[1].split('\t').nth(3).unwrap();
        assert_eq!(mean.split('.').nth(1).unwrap().len(), 4);
    }
}

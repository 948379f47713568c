//! Sparse covariance estimation by entry-adaptive thresholding.
//!
//! The crate provides the adaptive estimator (thresholds scaled by the
//! estimated variance of each sample covariance entry), universal and
//! correlation thresholding baselines, cross-validated tuning, support
//! recovery scoring and a reproducible Monte Carlo harness.

pub mod crossval;
pub mod data;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod matcore;
pub mod models;
pub mod rng;
pub mod support;

pub use crossval::{cv_select_delta, cv_select_lambda, make_folds, CvConfig, CvSelection, RiskCurve, SplitKind};
pub use data::DataMatrix;
pub use error::{Error, Result};
pub use estimator::{
    adaptive_estimate, correlation_estimate, sample_cov, theta_hat, universal_estimate, EstimateDiagnostics,
    EstimateOptions, ThresholdRule,
};
pub use matcore::SymMatrix;
pub use models::CovModel;
pub use rng::RngStream;
pub use support::{support_of, tpr_fpr, RecoveryRates, SupportMask};

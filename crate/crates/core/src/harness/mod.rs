//! Experiment orchestration, the gene-ranking pipeline and file formats.

pub mod genes;
pub mod heatmap;
pub mod io;
pub mod sim;

pub use genes::{f_statistic, select_genes, LabeledData};
pub use heatmap::{heatmap_zero_freq, GrayImage};
pub use sim::{run_simulation, DeltaChoice, EstimatorSpec, LambdaChoice, SimConfig, SimResult};

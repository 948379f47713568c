use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sparsecov::crossval::{cv_select_delta, cv_select_lambda, default_lambda_grid, CvConfig, SplitKind, LAMBDA_GRID_POINTS};
use sparsecov::estimator::{
    moments, threshold_adaptive, threshold_correlation, threshold_universal, EstimateOptions, ThresholdRule,
    DEFAULT_SCAD_A,
};
use sparsecov::harness::heatmap::{heatmap_zero_freq, write_pgm};
use sparsecov::harness::io::{
    load_labeled_csv, load_matrix_csv_with, load_sym_matrix_csv, write_mask_csv, write_matrix_csv,
    write_result_tsv, write_risk_curve_csv, write_text, LabelColumn,
};
use sparsecov::harness::sim::{run_simulation, DeltaChoice, EstimatorSpec, LambdaChoice, SimConfig};
use sparsecov::harness::{f_statistic, select_genes};
use sparsecov::{CovModel, Error, Result, RngStream, SupportMask};

#[derive(Parser)]
#[command(name = "sparsecov", version, about = "Sparse covariance estimation by adaptive thresholding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo comparison on a synthetic covariance model.
    Simulate(SimulateArgs),
    /// Estimate a covariance matrix from a data file.
    Estimate(EstimateArgs),
    /// Compare an estimated support with the truth.
    Support(SupportArgs),
    /// Rank variables by their between-class F statistic.
    RankGenes(RankArgs),
    /// Write the cross-validated risk curve for a data file.
    CvCurve(CvCurveArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Theorem5,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum EstimatorKind {
    Adaptive,
    Universal,
    Correlation,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleKind {
    Hard,
    Soft,
    Al,
    Scad,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Kfold,
    Halves,
}

/// A real value or `cv`.
#[derive(Clone, Copy, Debug)]
enum Tuning {
    Value(f64),
    Cv,
}

fn parse_tuning(s: &str) -> std::result::Result<Tuning, String> {
    if s.eq_ignore_ascii_case("cv") {
        return Ok(Tuning::Cv);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(Tuning::Value(v)),
        _ => Err(format!("expected a nonnegative number or `cv`, got {s:?}")),
    }
}

#[derive(Args, Clone)]
struct EstimatorFlags {
    /// Thresholding rule.
    #[arg(long, value_enum, default_value = "hard")]
    rule: RuleKind,
    /// Adaptive multiplier δ, or `cv`.
    #[arg(long, value_parser = parse_tuning, default_value = "2")]
    delta: Tuning,
    /// Universal or correlation threshold, or `cv` (universal only).
    /// Correlation defaults to 2·sqrt(ln p / n).
    #[arg(long, value_parser = parse_tuning)]
    lambda: Option<Tuning>,
    /// Adaptive-lasso exponent.
    #[arg(long, default_value_t = 4.0)]
    eta: f64,
    /// SCAD shape parameter.
    #[arg(long, default_value_t = DEFAULT_SCAD_A)]
    scad_a: f64,
    /// Leave the diagonal of the sample covariance untouched.
    #[arg(long)]
    keep_diagonal: bool,
    /// Clip eigenvalues of each estimate to make it positive definite.
    #[arg(long)]
    clip_pd: bool,
    /// Number of cross-validation folds or splits.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Grid density N for δ ∈ {0, 1/N, …, 4}.
    #[arg(long, default_value_t = 20)]
    grid_density: usize,
    /// Cross-validation scheme.
    #[arg(long, value_enum, default_value = "kfold")]
    split: SplitArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl EstimatorFlags {
    fn rule(&self) -> Result<ThresholdRule> {
        match self.rule {
            RuleKind::Hard => Ok(ThresholdRule::Hard),
            RuleKind::Soft => Ok(ThresholdRule::Soft),
            RuleKind::Al => ThresholdRule::adaptive_lasso(self.eta),
            RuleKind::Scad => ThresholdRule::scad(self.scad_a),
        }
    }

    fn options(&self) -> EstimateOptions {
        EstimateOptions {
            keep_diagonal: self.keep_diagonal,
            clip_pd: self.clip_pd,
        }
    }

    fn cv(&self) -> Result<CvConfig> {
        Ok(CvConfig {
            folds: self.folds,
            grid_density: self.grid_density,
            rule: self.rule()?,
            split: match self.split {
                SplitArg::Kfold => SplitKind::KFold { labels: None },
                SplitArg::Halves => SplitKind::RandomHalves { n1: None },
            },
            options: self.options(),
        })
    }

    fn correlation_lambda(&self, p: usize, n: usize) -> Result<f64> {
        match self.lambda {
            None => Ok(2.0 * ((p as f64).ln() / n as f64).sqrt()),
            Some(Tuning::Value(v)) => Ok(v),
            Some(Tuning::Cv) => Err(Error::Parameter("correlation thresholding has no cross-validated level".into())),
        }
    }

    fn spec(&self, kind: EstimatorKind, p: usize, n: usize) -> Result<EstimatorSpec> {
        Ok(match kind {
            EstimatorKind::Adaptive => EstimatorSpec::Adaptive(match self.delta {
                Tuning::Value(d) => DeltaChoice::Fixed(d),
                Tuning::Cv => DeltaChoice::Cv,
            }),
            EstimatorKind::Universal => EstimatorSpec::Universal(match self.lambda.unwrap_or(Tuning::Cv) {
                Tuning::Value(l) => LambdaChoice::Fixed(l),
                Tuning::Cv => LambdaChoice::Cv,
            }),
            EstimatorKind::Correlation => EstimatorSpec::Correlation(self.correlation_lambda(p, n)?),
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Estimators to compare (comma separated).
    #[arg(long, value_enum, value_delimiter = ',', default_value = "adaptive")]
    estimator: Vec<EstimatorKind>,
    /// Block variance ratio for the theorem5 model.
    #[arg(long, default_value_t = 8.0)]
    s0: f64,
    /// Sparsity exponent for the theorem5 model.
    #[arg(long, default_value_t = 0.0)]
    q: f64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Results table (TSV); printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Zero-frequency heatmap (PGM) of the first estimator's supports.
    #[arg(long)]
    heatmap: Option<PathBuf>,
    #[command(flatten)]
    flags: EstimatorFlags,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "adaptive")]
    estimator: EstimatorKind,
    /// Read the file as variables × observations.
    #[arg(long)]
    transpose: bool,
    #[arg(long)]
    out: PathBuf,
    /// Directory for θ̂, thresholds, support and the chosen tuning value.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    #[command(flatten)]
    flags: EstimatorFlags,
}

#[derive(Args)]
struct SupportArgs {
    #[arg(long)]
    est: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Entries with |value| ≤ tol count as zero.
    #[arg(long, default_value_t = 0.0)]
    tol: f64,
    /// Also write the estimated support as a 0/1 CSV.
    #[arg(long)]
    mask_out: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Label column, by index or header name.
    #[arg(long, default_value = "0")]
    labels_col: LabelColumn,
    #[arg(long, default_value_t = 40)]
    top: usize,
    #[arg(long, default_value_t = 160)]
    bottom: usize,
    #[arg(long)]
    transpose: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CvCurveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Adaptive tunes δ; universal tunes λ.
    #[arg(long, value_enum, default_value = "adaptive")]
    estimator: EstimatorKind,
    #[arg(long)]
    transpose: bool,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flags: EstimatorFlags,
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let f = &args.flags;
    let model = match args.model {
        ModelKind::One => CovModel::Model1 { p: args.p },
        ModelKind::Two => CovModel::Model2 { p: args.p },
        ModelKind::Theorem5 => CovModel::Theorem5 {
            p: args.p,
            n: args.n,
            s0: args.s0,
            q: args.q,
        },
    };
    let mut cfg = SimConfig::new(model, args.n, args.reps, f.seed);
    cfg.estimators = args
        .estimator
        .iter()
        .map(|&k| f.spec(k, args.p, args.n))
        .collect::<Result<_>>()?;
    cfg.rules = vec![f.rule()?];
    cfg.cv = f.cv()?;
    cfg.options = f.options();
    cfg.workers = args.workers;
    cfg.keep_masks = args.heatmap.is_some();
    let result = run_simulation(&cfg)?;
    for (rep, cell, msg) in result.failures() {
        eprintln!("replication {rep}, estimator {}: {msg}", result.summaries[cell].cell.estimator);
    }
    match &args.out {
        Some(path) => write_result_tsv(path, &result)?,
        None => print!("{}", result.to_tsv()),
    }
    if let Some(path) = &args.heatmap {
        let masks = result.masks(0);
        if masks.is_empty() {
            return Err(Error::Domain("every replication failed; no heatmap to draw".into()));
        }
        write_pgm(path, &heatmap_zero_freq(&masks)?)?;
    }
    Ok(())
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let f = &args.flags;
    let x = load_matrix_csv_with(&args.input, args.transpose)?;
    let m = moments(&x)?;
    let (rule, opts) = (f.rule()?, f.options());
    let rng = RngStream::new(f.seed, 0);
    let mut curve = None;
    let mut diagnostics = None;
    let (est, tuning) = match f.spec(args.estimator, x.p(), x.n())? {
        EstimatorSpec::Adaptive(choice) => {
            let delta = match choice {
                DeltaChoice::Fixed(d) => d,
                DeltaChoice::Cv => {
                    let sel = cv_select_delta(&x, &f.cv()?, &rng)?;
                    curve = Some((sel.curve, "delta"));
                    sel.value
                }
            };
            let (est, diag) = threshold_adaptive(&m, delta, rule, &opts)?;
            diagnostics = Some(diag);
            (est, delta)
        }
        EstimatorSpec::Universal(choice) => {
            let lambda = match choice {
                LambdaChoice::Fixed(l) => l,
                LambdaChoice::Cv => {
                    let grid = default_lambda_grid(&m.cov, LAMBDA_GRID_POINTS);
                    let sel = cv_select_lambda(&x, &f.cv()?, &grid, &rng)?;
                    curve = Some((sel.curve, "lambda"));
                    sel.value
                }
            };
            (threshold_universal(&m.cov, lambda, rule, &opts)?, lambda)
        }
        EstimatorSpec::Correlation(lambda) => (threshold_correlation(&m.cov, lambda)?, lambda),
    };
    write_matrix_csv(&args.out, &est)?;
    if let Some(dir) = &args.diagnostics {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        write_text(&dir.join("tuning.txt"), &format!("{tuning:e}\n"))?;
        write_mask_csv(&dir.join("support.csv"), &SupportMask::of(&est, 0.0))?;
        if let Some(diag) = &diagnostics {
            write_matrix_csv(&dir.join("theta_hat.csv"), &diag.theta_hat)?;
            write_matrix_csv(&dir.join("lambda.csv"), &diag.lambda)?;
        }
        if let Some((curve, name)) = &curve {
            write_risk_curve_csv(&dir.join("risk_curve.csv"), curve, name)?;
        }
    }
    Ok(())
}

fn support(args: &SupportArgs) -> Result<()> {
    let est = load_sym_matrix_csv(&args.est)?;
    let truth = load_sym_matrix_csv(&args.truth)?;
    let (est_mask, truth_mask) = (SupportMask::of(&est, args.tol), SupportMask::of(&truth, args.tol));
    let rates = sparsecov::tpr_fpr(&est_mask, &truth_mask, true)?;
    let show = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.4}"));
    println!("tpr\t{}", show(rates.tpr));
    println!("fpr\t{}", show(rates.fpr));
    println!("exact\t{}", est_mask == truth_mask);
    if let Some(path) = &args.mask_out {
        write_mask_csv(path, &est_mask)?;
    }
    Ok(())
}

fn rank_genes(args: &RankArgs) -> Result<()> {
    let d = load_labeled_csv(&args.input, &args.labels_col, args.transpose)?;
    let f = f_statistic(&d)?;
    let chosen = select_genes(&f, args.top, args.bottom)?;
    let mut out = String::from("rank,index,name,f\n");
    for (rank, &i) in chosen.iter().enumerate() {
        let name = d.names.as_ref().map_or(String::new(), |n| n[i].clone());
        out.push_str(&format!("{},{i},{name},{:e}\n", rank + 1, f[i]));
    }
    write_text(&args.out, &out)
}

fn cv_curve(args: &CvCurveArgs) -> Result<()> {
    let f = &args.flags;
    let x = load_matrix_csv_with(&args.input, args.transpose)?;
    let rng = RngStream::new(f.seed, 0);
    let cfg = f.cv()?;
    let (sel, name) = match args.estimator {
        EstimatorKind::Adaptive => (cv_select_delta(&x, &cfg, &rng)?, "delta"),
        EstimatorKind::Universal => {
            let grid = default_lambda_grid(&moments(&x)?.cov, LAMBDA_GRID_POINTS);
            (cv_select_lambda(&x, &cfg, &grid, &rng)?, "lambda")
        }
        EstimatorKind::Correlation => {
            return Err(Error::Parameter("cv-curve supports the adaptive and universal estimators".into()))
        }
    };
    write_risk_curve_csv(&args.out, &sel.curve, name)?;
    println!("{name}\t{:e}", sel.value);
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Support(a) => support(a),
        Command::RankGenes(a) => rank_genes(a),
        Command::CvCurve(a) => cv_curve(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

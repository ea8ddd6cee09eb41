use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pulasso", version, about = "Group-lasso logistic regression for positive-unlabeled data")]
pub struct Cli {
    /// Seed for every random stream (folds, simulations).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for CV folds and simulation replicates.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the regularization path and write one record per lambda.
    Fit(FitArgs),
    /// K-fold cross-validation of the path.
    Cv(CvArgs),
    /// Score new samples with one lambda of a fitted path.
    Predict(PredictArgs),
    /// Synthetic experiments: estimation error scaling and classification.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Adjusted AUC, selection stability and classification metrics.
    #[command(subcommand)]
    Evaluate(EvaluateCommand),
    /// Convert or one-hot encode an input table.
    Ingest(IngestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum XFormat {
    /// `.mtx` means MatrixMarket, anything else dense CSV.
    Auto,
    Csv,
    Mtx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Sparse storage for MatrixMarket input, dense otherwise.
    Auto,
    Dense,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    QmEm,
    Em,
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    /// Feature matrix (dense CSV with header, or MatrixMarket).
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long, value_enum, default_value_t = XFormat::Auto)]
    pub format: XFormat,
    /// Column names, one per line (MatrixMarket input only).
    #[arg(long)]
    pub names: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Labels, one 0/1 per line (1 = labeled positive).
    #[arg(long)]
    pub z: PathBuf,
    /// Prevalence of positives among the unlabeled samples.
    #[arg(long, value_parser = parse_pi)]
    pub pi: f64,
    /// TSV of column_name, group_id, optional weight. Singletons if omitted.
    #[arg(long)]
    pub groups: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PathArgs {
    /// Explicit decreasing lambda list, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100)]
    pub n_lambda: usize,
    /// Defaults to 1e-4 when n > p, else 0.05.
    #[arg(long)]
    pub lambda_min_ratio: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = AlgorithmArg::QmEm)]
    pub algorithm: AlgorithmArg,
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    pub mode: Mode,
    #[arg(long, default_value_t = 1e-7)]
    pub inner_tol: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub outer_tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_outer_iters: usize,
    /// Disable strong-rule screening.
    #[arg(long)]
    pub no_strong_rules: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub path: PathArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Coefficient path CSV.
    #[arg(long, default_value = "path.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub path: PathArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    pub folds: u64,
    /// Per-lambda deviance table; a JSON summary is written beside it.
    #[arg(long, default_value = "cv.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Coefficient path written by `fit`.
    #[arg(long)]
    pub path: PathBuf,
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long)]
    pub lambda: f64,
    /// Fail instead of using the nearest lambda on the path.
    #[arg(long)]
    pub strict: bool,
    /// Sampling quantities for P(z=1|x); read from the path manifest when omitted.
    #[arg(long, value_parser = parse_pi)]
    pub pi: Option<f64>,
    #[arg(long)]
    pub n_labeled: Option<usize>,
    #[arg(long)]
    pub n_unlabeled: Option<usize>,
    #[arg(long, default_value = "scores.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Estimation error against sqrt(s log p / n) for Gaussian designs.
    Mse(MseArgs),
    /// PU lasso vs oracle vs naive classification on mixture data.
    Classify(ClassifyArgs),
}

#[derive(Debug, Args)]
pub struct MseArgs {
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub s: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Constant in lambda_n = c_s sqrt(log p / n), one per s. Calibrated when omitted.
    #[arg(long, value_delimiter = ',')]
    pub c_s: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.15,0.2,0.3,0.4,0.6")]
    pub cs_grid: Vec<f64>,
    /// Pilot sample size for calibration (default: the median of --n).
    #[arg(long)]
    pub pilot_n: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub pilot_reps: usize,
    /// Table CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Logistic,
    Misspecified,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    #[arg(long, default_value_t = 5)]
    pub s: usize,
    #[arg(long, value_delimiter = ',', default_value = "3.5")]
    pub d: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub rho: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    pub n_l: usize,
    #[arg(long, value_delimiter = ',', default_value = "500")]
    pub n_u: Vec<usize>,
    #[arg(long, value_enum, default_value_t = SchemeArg::Logistic)]
    pub scheme: SchemeArg,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_test: usize,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    pub folds: u64,
    #[arg(long, default_value_t = 100)]
    pub n_lambda: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvaluateCommand {
    /// Naive and prevalence-adjusted ROC/AUC of scores against z.
    Auc(AucArgs),
    /// Jaccard stability of selected sets.
    Stability(StabilityArgs),
    /// Misclassification rate and F1 against true labels.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// CSV of scores with a header row.
    #[arg(long)]
    pub scores: PathBuf,
    /// Score column (default: prob_y if present, else the first column).
    #[arg(long)]
    pub column: Option<String>,
}

#[derive(Debug, Args)]
pub struct AucArgs {
    #[command(flatten)]
    pub scores: ScoreArgs,
    #[arg(long)]
    pub z: PathBuf,
    /// 0 gives the naive curve.
    #[arg(long, value_parser = parse_pi_or_zero)]
    pub pi: f64,
    /// Write the ROC curve here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// One selected set per line, members separated by commas or spaces.
    #[arg(long, conflicts_with_all = ["x", "z", "pi", "groups"])]
    pub sets: Option<PathBuf>,
    #[arg(long, required_unless_present = "sets")]
    pub x: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = XFormat::Auto)]
    pub format: XFormat,
    #[arg(long)]
    pub names: Option<PathBuf>,
    #[arg(long, required_unless_present = "sets")]
    pub z: Option<PathBuf>,
    #[arg(long, value_parser = parse_pi, required_unless_present = "sets")]
    pub pi: Option<f64>,
    #[arg(long)]
    pub groups: Option<PathBuf>,
    #[command(flatten)]
    pub path: PathArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    pub folds: u64,
    /// Per-lambda table (data mode); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub scores: ScoreArgs,
    /// Scores above this are predicted positive.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// True 0/1 labels.
    #[arg(long)]
    pub truth: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IngestFormat {
    Csv,
    Mtx,
    Categorical,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: IngestFormat,
    /// Output format (default: csv for csv input, mtx otherwise).
    #[arg(long, value_enum)]
    pub to: Option<XFormat>,
    /// Reject MatrixMarket values other than 0 and 1.
    #[arg(long)]
    pub binary: bool,
    /// Row (0-based, after the header) holding the reference levels.
    #[arg(long, default_value_t = 0)]
    pub reference_row: usize,
    /// Merge levels seen fewer times than this (default: min(100, 1% of non-reference count)).
    #[arg(long)]
    pub min_count: Option<f64>,
    /// Column names for MatrixMarket input.
    #[arg(long)]
    pub names: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_pi(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("pi must lie strictly between 0 and 1, got {v}"))
    }
}

fn parse_pi_or_zero(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("pi must lie in [0, 1), got {v}"))
    }
}

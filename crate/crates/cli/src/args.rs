use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "winbow",
    version,
    about = "Match window point clouds against a library of CAD models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample every OBJ model in a directory, train the codebook and write a bundle.
    Train(TrainArgs),
    /// Match XYZ/PLY targets against a bundle; one JSON line per target.
    Match(MatchArgs),
    /// Confusion-matrix metrics for labelled targets or the synthetic noise experiment.
    Evaluate(EvaluateArgs),
    /// Report cluster occupancy for a sweep of codebook sizes.
    SuggestN(SuggestArgs),
}

/// Flags that override keys of the pipeline configuration.
#[derive(Debug, Args, Default, Clone)]
pub struct PipelineFlags {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed for all randomness.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// minkowski:P, jsd, kl, chi2 or chi2sym.
    #[arg(long, value_name = "KIND")]
    pub distance: Option<String>,
    /// orb or orb+hog.
    #[arg(long, value_name = "KIND")]
    pub features: Option<String>,
    /// Describe a dense grid instead of FAST keypoints.
    #[arg(long)]
    pub dense: bool,
    /// Grid spacing in pixels for --dense.
    #[arg(long, value_name = "N")]
    pub stride: Option<usize>,
    /// Image stage fed to feature extraction: projected, dilated, edges or simplified.
    #[arg(long, value_name = "S")]
    pub feature_stage: Option<String>,
    #[arg(long, value_name = "F")]
    pub hog_weight: Option<f64>,
    /// Codebook size.
    #[arg(long, value_name = "N")]
    pub clusters: Option<usize>,
    /// Clustering geometry: euclidean or hamming.
    #[arg(long, value_name = "M")]
    pub metric: Option<String>,
    /// Worker threads (default: number of processors).
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory containing OBJ models; the file stem becomes the model id.
    pub model_dir: PathBuf,
    /// Bundle file to write.
    #[arg(short, long, value_name = "PATH")]
    pub output: PathBuf,
    /// Write PNGs of every image stage per model.
    #[arg(long, value_name = "DIR")]
    pub dump_stages: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    /// XYZ or PLY target clouds.
    #[arg(required = true)]
    pub targets: Vec<PathBuf>,
    #[arg(short, long, value_name = "PATH")]
    pub bundle: PathBuf,
    /// JSON-lines output file (default: stdout).
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub dump_stages: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Targets to evaluate (default: every file named in --labels).
    pub targets: Vec<PathBuf>,
    #[arg(
        short,
        long,
        value_name = "PATH",
        required_unless_present = "synthetic"
    )]
    pub bundle: Option<PathBuf>,
    /// CSV of filename,label; filenames are relative to the CSV's directory.
    #[arg(long, value_name = "PATH", required_unless_present = "synthetic")]
    pub labels: Option<PathBuf>,
    /// Run the noise experiment on the built-in window models instead.
    #[arg(long, conflicts_with_all = ["bundle", "labels", "targets"])]
    pub synthetic: bool,
    /// Comma-separated noise levels as fractions of the bounding-box diagonal.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.001,0.002",
        requires = "synthetic"
    )]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = 5, requires = "synthetic")]
    pub trials: usize,
    /// Metrics CSV (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub report_csv: Option<PathBuf>,
    /// Full JSON report with confusion matrices.
    #[arg(long, value_name = "PATH")]
    pub report_json: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub dump_stages: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
}

#[derive(Debug, Args)]
pub struct SuggestArgs {
    pub model_dir: PathBuf,
    /// Candidate sizes (default 10,15,...,50).
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
}

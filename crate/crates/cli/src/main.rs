//! `mseeig`: data generation, training, scoring and the experiment suites.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "mseeig", version, about = "Autoencoder outlier detection with the MSE-eig loss")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct Common {
    /// Seed for data generation and network initialization.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for all written files.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// JSON file with configuration overrides; unknown keys are rejected.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Outlier ratios, `start..end:step` or a comma list.
    #[arg(long, global = true)]
    pub ratios: Option<String>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// `auto` or a positive value.
    #[arg(long, global = true)]
    pub beta: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub loss: Option<LossArg>,
    /// Hidden width, i.e. the number of controlled eigenvalues.
    #[arg(long, global = true)]
    pub intrinsic_dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Mse,
    MseEig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    /// 2D Gaussian, diagonal covariance.
    Dataset1,
    /// 2D Gaussian, correlated.
    Dataset2,
    /// 2D Gaussian, diagonal, with uniform box noise.
    Dataset3,
    /// 3D quadratic manifold; writes a train and a labeled test file.
    Manifold,
    /// Diagonal Gaussian with `--dim` columns.
    Highdim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Lowdim,
    Manifold,
    Highdim,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as CSV plus a generator manifest.
    GenData {
        #[arg(value_enum)]
        generator: Generator,
        /// Rows (training rows for the manifold).
        #[arg(long)]
        n: Option<usize>,
        /// Test rows for the manifold.
        #[arg(long)]
        n_test: Option<usize>,
        /// Columns for the high-dimensional generator.
        #[arg(long, default_value_t = 50)]
        dim: usize,
        /// Fraction of manifold test rows pushed off the manifold.
        #[arg(long, default_value_t = 0.05)]
        ip_ratio: f64,
    },
    /// Normalize a CSV, train an autoencoder and save the model.
    Train {
        /// Training CSV (raw values; a `label` column is ignored).
        #[arg(long)]
        data: PathBuf,
    },
    /// Reconstruction-error scores for every row of a CSV.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// AUC of a scores file against labels.
    Auc {
        /// `row_index,score[,label]` file.
        #[arg(long)]
        scores: PathBuf,
        /// Dataset providing labels, or the rows to HLP-label with `--ratios`.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run an experiment suite and write its report.
    Suite {
        #[arg(value_enum)]
        kind: SuiteArg,
        /// Re-run exactly what a previous `manifest.json` describes.
        #[arg(long, conflicts_with = "config")]
        manifest: Option<PathBuf>,
        #[arg(long)]
        train_csv: Option<PathBuf>,
        #[arg(long)]
        test_csv: Option<PathBuf>,
    },
    /// Reconstruction curves and scatter plots for a trained model.
    Plot {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

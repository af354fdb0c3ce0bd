use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{SuiteConfig, SuiteKind};
use super::svg::{scatter_svg, ScatterPlot};
use crate::data::format_float;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mse,
    MseEig,
    Mahalanobis,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mse => "mse",
            Method::MseEig => "mse_eig",
            Method::Mahalanobis => "mahalanobis",
        }
    }
}

/// Seed-averaged AUC for one (experiment, dataset, ratio, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AucEntry {
    pub experiment_id: String,
    pub dataset: String,
    pub ratio: f64,
    pub method: Method,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedAuc {
    pub experiment_id: String,
    pub dataset: String,
    pub ratio: f64,
    pub method: Method,
    pub seed: u64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaRecord {
    pub dataset: String,
    pub seed: u64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub name: String,
    pub n_train: usize,
    pub n_test: usize,
    pub dim: usize,
    pub intrinsic_dim: usize,
    pub epochs: usize,
    pub batch_rows: usize,
}

/// Everything needed to re-run a suite, plus what the run observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub experiment_id: String,
    pub suite: SuiteKind,
    pub config: SuiteConfig,
    pub datasets: Vec<DatasetRecord>,
    pub betas: Vec<BetaRecord>,
    pub version: String,
    pub wall_time_secs: f64,
}

impl RunManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("manifest: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub experiment_id: String,
    pub entries: Vec<AucEntry>,
    pub per_seed: Vec<SeedAuc>,
    pub manifest: RunManifest,
    pub plots: Vec<ScatterPlot>,
}

impl ExperimentReport {
    /// Seed-mean AUC of one cell.
    pub fn auc(&self, experiment_id: &str, dataset: &str, ratio: f64, method: Method) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| {
                e.experiment_id == experiment_id
                    && e.dataset == dataset
                    && e.ratio == ratio
                    && e.method == method
            })
            .map(|e| e.auc)
    }

    pub fn auc_csv(&self) -> String {
        let mut out = String::from("experiment_id,dataset,ratio,method,auc\n");
        for e in &self.entries {
            out += &format!(
                "{},{},{},{},{}\n",
                e.experiment_id,
                e.dataset,
                format_float(e.ratio),
                e.method.name(),
                format_float(e.auc)
            );
        }
        out
    }

    pub fn per_seed_csv(&self) -> String {
        let mut out = String::from("experiment_id,dataset,ratio,method,seed,auc\n");
        for e in &self.per_seed {
            out += &format!(
                "{},{},{},{},{},{}\n",
                e.experiment_id,
                e.dataset,
                format_float(e.ratio),
                e.method.name(),
                e.seed,
                format_float(e.auc)
            );
        }
        out
    }
}

/// Writes `auc.csv`, `auc_per_seed.csv`, `manifest.json` and one
/// `scatter_<id>.svg` per plot into `dir`, returning the written paths.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: String, body: &str| -> Result<()> {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(body.as_bytes()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    put("auc.csv".into(), &report.auc_csv())?;
    put("auc_per_seed.csv".into(), &report.per_seed_csv())?;
    let manifest = serde_json::to_string_pretty(&report.manifest)
        .map_err(|e| Error::Config(format!("manifest: {e}")))?;
    put("manifest.json".into(), &(manifest + "\n"))?;
    for plot in &report.plots {
        put(format!("scatter_{}.svg", plot.id), &scatter_svg(plot))?;
    }
    Ok(written)
}

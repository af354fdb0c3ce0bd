use std::path::Path;
use std::time::Instant;

use super::auc::auc;
use super::config::{BetaChoice, SuiteConfig, SuiteKind};
use super::report::{AucEntry, BetaRecord, DatasetRecord, ExperimentReport, Method, RunManifest, SeedAuc};
use super::svg::ScatterPlot;
use crate::data::{
    gen_highdim_gaussian, gen_manifold3d, gen_noisy_gaussian, label_hlp, load_csv, mahalanobis_column_scores,
    normalize_minmax, top_k_indices, Dataset,
};
use crate::detect::{
    default_epochs, flag_outliers, mahalanobis_scores, score, train, LossKind, TrainConfig, TrainedModel,
};
use crate::error::{Error, Result};
use crate::linalg::{covariance, pca_transform, sym_eigen, Matrix};
use crate::loss::{select_beta, top_l_eigenvalues, LossConfig};
use crate::network::AutoencoderConfig;

/// A two-dimensional Gaussian family of the low-dimensional suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowdimFamily {
    pub name: &'static str,
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
    /// Fraction of rows replaced by uniform box noise.
    pub noise_fraction: f64,
    /// Half-width of the noise box around the mean.
    pub noise_scale: f64,
}

pub const LOWDIM_FAMILIES: [LowdimFamily; 3] = [
    LowdimFamily {
        name: "dataset1_diag",
        mean: [0.0, 0.0],
        cov: [[1.0, 0.0], [0.0, 0.5]],
        noise_fraction: 0.0,
        noise_scale: 0.0,
    },
    LowdimFamily {
        name: "dataset2_offdiag",
        mean: [0.0, 0.0],
        cov: [[1.0, 0.6], [0.6, 0.8]],
        noise_fraction: 0.0,
        noise_scale: 0.0,
    },
    LowdimFamily {
        name: "dataset3_noisy",
        mean: [0.0, 0.0],
        cov: [[1.0, 0.0], [0.0, 0.5]],
        noise_fraction: 0.03,
        noise_scale: 4.0,
    },
];

impl LowdimFamily {
    pub fn by_name(name: &str) -> Option<Self> {
        LOWDIM_FAMILIES.iter().copied().find(|f| f.name == name || f.name.starts_with(&format!("{name}_")))
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        let cov = Matrix::from_rows(&self.cov)?;
        gen_noisy_gaussian(n, &self.mean, &cov, self.noise_fraction, self.noise_scale, seed)
    }
}

/// β for MSE-eig training on normalized data.
pub fn resolve_beta(train_norm: &Dataset, l: usize, choice: BetaChoice) -> Result<f64> {
    match choice {
        BetaChoice::Fixed(v) => Ok(v),
        BetaChoice::Auto => {
            let eig = sym_eigen(&covariance(&train_norm.samples)?)?;
            select_beta(&top_l_eigenvalues(&eig, l)?)
        }
    }
}

struct Pair {
    mse: TrainedModel,
    eig: TrainedModel,
    beta: f64,
}

fn train_config(cfg: &SuiteConfig, n: usize, loss: LossKind, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: cfg.epochs.unwrap_or_else(|| default_epochs(n, cfg.batch_size)),
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        ..TrainConfig::new(loss, seed)
    }
}

fn train_pair(train_norm: &Dataset, l: usize, seed: u64, cfg: &SuiteConfig) -> Result<Pair> {
    let net = AutoencoderConfig::new(train_norm.dim(), l, seed)?;
    let beta = resolve_beta(train_norm, l, cfg.beta)?;
    let loss = LossConfig {
        theta1: cfg.theta1,
        theta2: cfg.theta2,
        beta,
        intrinsic_dim: l,
    };
    let n = train_norm.len();
    let mse = train(train_norm, &net, &train_config(cfg, n, LossKind::MseOnly, seed))?;
    let eig = train(train_norm, &net, &train_config(cfg, n, LossKind::MseEig(loss), seed))?;
    Ok(Pair { mse, eig, beta })
}

fn dataset_record(name: &str, n_train: usize, n_test: usize, dim: usize, l: usize, cfg: &SuiteConfig) -> DatasetRecord {
    DatasetRecord {
        name: name.to_string(),
        n_train,
        n_test,
        dim,
        intrinsic_dim: l,
        epochs: cfg.epochs.unwrap_or_else(|| default_epochs(n_train, cfg.batch_size)),
        batch_rows: cfg.batch_size.resolve(n_train),
    }
}

/// Per-seed AUCs in run order; seed means keep the order of first
/// appearance.
#[derive(Default)]
struct Collector {
    per_seed: Vec<SeedAuc>,
}

impl Collector {
    fn push(&mut self, experiment: &str, dataset: &str, ratio: f64, method: Method, seed: u64, value: f64) {
        self.per_seed.push(SeedAuc {
            experiment_id: experiment.to_string(),
            dataset: dataset.to_string(),
            ratio,
            method,
            seed,
            auc: value,
        });
    }

    fn means(&self) -> Vec<AucEntry> {
        let mut cells: Vec<(AucEntry, usize)> = Vec::new();
        for s in &self.per_seed {
            let found = cells.iter_mut().find(|(e, _)| {
                e.experiment_id == s.experiment_id && e.dataset == s.dataset && e.ratio == s.ratio && e.method == s.method
            });
            match found {
                Some((e, count)) => {
                    e.auc += s.auc;
                    *count += 1;
                }
                None => cells.push((
                    AucEntry {
                        experiment_id: s.experiment_id.clone(),
                        dataset: s.dataset.clone(),
                        ratio: s.ratio,
                        method: s.method,
                        auc: s.auc,
                    },
                    1,
                )),
            }
        }
        cells
            .into_iter()
            .map(|(mut e, count)| {
                e.auc /= count as f64;
                e
            })
            .collect()
    }
}

/// 2D view of a dataset: the columns themselves for `m ≤ 3` (first two),
/// the first two principal coordinates beyond that.
pub fn plot_coordinates(ds: &Dataset) -> Result<(Vec<[f64; 2]>, String, String)> {
    if ds.dim() < 2 {
        return Err(Error::Config("scatter plots need at least 2 columns".into()));
    }
    if ds.dim() <= 3 {
        let pts = ds.samples.row_iter().map(|r| [r[0], r[1]]).collect();
        return Ok((pts, ds.column_names[0].clone(), ds.column_names[1].clone()));
    }
    let eig = sym_eigen(&covariance(&ds.samples)?)?;
    let y = pca_transform(&ds.samples, &eig)?;
    let pts = y.row_iter().map(|r| [r[0], r[1]]).collect();
    Ok((pts, "principal direction 1".into(), "principal direction 2".into()))
}

fn scatter(id: String, title: String, ds: &Dataset, scores: &[f64], ratio: f64) -> Result<ScatterPlot> {
    let (points, x_label, y_label) = plot_coordinates(ds)?;
    Ok(ScatterPlot {
        id,
        title,
        x_label,
        y_label,
        points,
        flags: flag_outliers(scores, ratio)?,
    })
}

fn labels_of(ds: &Dataset) -> &[u8] {
    ds.labels.as_deref().unwrap_or(&[])
}

fn finish(
    kind: SuiteKind,
    cfg: &SuiteConfig,
    collector: Collector,
    datasets: Vec<DatasetRecord>,
    betas: Vec<BetaRecord>,
    plots: Vec<ScatterPlot>,
    start: Instant,
) -> ExperimentReport {
    ExperimentReport {
        experiment_id: kind.name().to_string(),
        entries: collector.means(),
        per_seed: collector.per_seed,
        manifest: RunManifest {
            experiment_id: kind.name().to_string(),
            suite: kind,
            config: cfg.clone(),
            datasets,
            betas,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs: start.elapsed().as_secs_f64(),
        },
        plots,
    }
}

fn checked_l(requested: Option<usize>, natural: usize, m: usize) -> Result<usize> {
    let l = requested.unwrap_or(natural);
    if l == 0 || l > m {
        return Err(Error::Config(format!("intrinsic_dim must lie in 1..={m}, got {l}")));
    }
    Ok(l)
}

/// Three 2D Gaussian families; HLP labels from Mahalanobis distance; MSE vs
/// MSE-eig.
pub fn run_lowdim_suite(cfg: &SuiteConfig, progress: &mut dyn FnMut(&str)) -> Result<ExperimentReport> {
    let kind = SuiteKind::Lowdim;
    cfg.validate(kind)?;
    let start = Instant::now();
    let l = checked_l(cfg.intrinsic_dim, 2, 2)?;
    let (mut col, mut datasets, mut betas, mut plots) = (Collector::default(), vec![], vec![], vec![]);
    for fam in LOWDIM_FAMILIES {
        datasets.push(dataset_record(fam.name, cfg.n_train, 0, 2, l, cfg));
        for &seed in &cfg.seeds {
            let t = Instant::now();
            let norm = normalize_minmax(&fam.generate(cfg.n_train, seed)?)?;
            let pair = train_pair(&norm, l, seed, cfg)?;
            betas.push(BetaRecord { dataset: fam.name.into(), seed, beta: pair.beta });
            let s_mse = score(&pair.mse, &norm)?;
            let s_eig = score(&pair.eig, &norm)?;
            for &ratio in &cfg.ratios {
                let labeled = label_hlp(&norm, ratio, None)?;
                let y = labels_of(&labeled);
                col.push(kind.name(), fam.name, ratio, Method::Mse, seed, auc(&s_mse, y)?);
                col.push(kind.name(), fam.name, ratio, Method::MseEig, seed, auc(&s_eig, y)?);
            }
            if seed == cfg.seeds[0] {
                for (method, s) in [(Method::Mse, &s_mse), (Method::MseEig, &s_eig)] {
                    plots.push(scatter(
                        format!("lowdim_{}_{}", fam.name, method.name()),
                        format!("{} · {} · top {} flagged", fam.name, method.name(), cfg.plot_ratio),
                        &norm,
                        s,
                        cfg.plot_ratio,
                    )?);
                }
            }
            progress(&format!(
                "lowdim {} seed {seed}: beta {:.4}, {:.1}s",
                fam.name,
                pair.beta,
                t.elapsed().as_secs_f64()
            ));
        }
    }
    Ok(finish(kind, cfg, col, datasets, betas, plots, start))
}

pub const MANIFOLD_DATASET: &str = "manifold3d";
/// Parameter1 and Parameter3: the Gaussian coordinates of the manifold.
pub const MANIFOLD_HLP_COLUMNS: [usize; 2] = [0, 2];

/// Labels for the combined manifold experiment: the IP rows plus the top
/// `⌊δ·n⌋` non-IP rows by Parameter1/Parameter3 Mahalanobis distance.
pub fn combined_labels(test: &Dataset, ratio: f64) -> Result<Vec<u8>> {
    let ip = test
        .labels
        .as_ref()
        .ok_or_else(|| Error::Config("combined labels need IP labels on the test set".into()))?;
    let mut hlp = mahalanobis_column_scores(&test.samples, Some(&MANIFOLD_HLP_COLUMNS))?;
    for (s, &is_ip) in hlp.iter_mut().zip(ip) {
        if is_ip == 1 {
            *s = f64::NEG_INFINITY;
        }
    }
    let k = (ratio * test.len() as f64).floor() as usize;
    let mut labels = ip.clone();
    for i in top_k_indices(&hlp, k.min(test.len() - test.positives())) {
        labels[i] = 1;
    }
    Ok(labels)
}

/// Quadratic-manifold suite: IP only on the test set, HLP only on the
/// training set, and both combined on the test set.
pub fn run_manifold_suite(cfg: &SuiteConfig, progress: &mut dyn FnMut(&str)) -> Result<ExperimentReport> {
    let kind = SuiteKind::Manifold;
    cfg.validate(kind)?;
    let start = Instant::now();
    let l = checked_l(cfg.intrinsic_dim, 2, 3)?;
    let (mut col, mut betas, mut plots) = (Collector::default(), vec![], vec![]);
    let datasets = vec![dataset_record(MANIFOLD_DATASET, cfg.n_train, cfg.n_test, 3, l, cfg)];
    let (ip_id, hlp_id, both_id) = ("manifold_ip", "manifold_hlp", "manifold_combined");
    for &seed in &cfg.seeds {
        let t = Instant::now();
        // the training sample does not depend on the IP ratio
        let (train_raw, _) = gen_manifold3d(cfg.n_train, cfg.n_test, cfg.ratios[0], seed)?;
        let train_norm = normalize_minmax(&train_raw)?;
        let pair = train_pair(&train_norm, l, seed, cfg)?;
        betas.push(BetaRecord { dataset: MANIFOLD_DATASET.into(), seed, beta: pair.beta });

        let s_mse = score(&pair.mse, &train_norm)?;
        let s_eig = score(&pair.eig, &train_norm)?;
        let s_mah = mahalanobis_scores(&train_norm, None)?;
        for &ratio in &cfg.ratios {
            let labeled = label_hlp(&train_norm, ratio, Some(&MANIFOLD_HLP_COLUMNS))?;
            let y = labels_of(&labeled);
            col.push(hlp_id, MANIFOLD_DATASET, ratio, Method::Mse, seed, auc(&s_mse, y)?);
            col.push(hlp_id, MANIFOLD_DATASET, ratio, Method::MseEig, seed, auc(&s_eig, y)?);
            col.push(hlp_id, MANIFOLD_DATASET, ratio, Method::Mahalanobis, seed, auc(&s_mah, y)?);
        }

        for &ratio in &cfg.ratios {
            let (_, test_raw) = gen_manifold3d(cfg.n_train, cfg.n_test, ratio, seed)?;
            let test = test_raw.normalize_with(&train_norm.norm_params.clone().expect("normalized"))?;
            let t_mse = score(&pair.mse, &test)?;
            let t_eig = score(&pair.eig, &test)?;
            let t_mah = mahalanobis_scores(&test, None)?;
            let ip = labels_of(&test);
            col.push(ip_id, MANIFOLD_DATASET, ratio, Method::Mse, seed, auc(&t_mse, ip)?);
            col.push(ip_id, MANIFOLD_DATASET, ratio, Method::MseEig, seed, auc(&t_eig, ip)?);
            col.push(ip_id, MANIFOLD_DATASET, ratio, Method::Mahalanobis, seed, auc(&t_mah, ip)?);
            let both = combined_labels(&test, ratio)?;
            col.push(both_id, MANIFOLD_DATASET, ratio, Method::Mse, seed, auc(&t_mse, &both)?);
            col.push(both_id, MANIFOLD_DATASET, ratio, Method::MseEig, seed, auc(&t_eig, &both)?);
            col.push(both_id, MANIFOLD_DATASET, ratio, Method::Mahalanobis, seed, auc(&t_mah, &both)?);
        }

        if seed == cfg.seeds[0] {
            let (_, test_raw) = gen_manifold3d(cfg.n_train, cfg.n_test, cfg.plot_ratio.min(0.49), seed)?;
            let test = test_raw.normalize_with(&train_norm.norm_params.clone().expect("normalized"))?;
            let ratio = 2.0 * cfg.plot_ratio;
            for (method, s) in [
                (Method::Mse, score(&pair.mse, &test)?),
                (Method::MseEig, score(&pair.eig, &test)?),
                (Method::Mahalanobis, mahalanobis_scores(&test, None)?),
            ] {
                plots.push(scatter(
                    format!("{both_id}_{}", method.name()),
                    format!("manifold test set · {} · top {ratio} flagged", method.name()),
                    &test,
                    &s,
                    ratio.min(0.99),
                )?);
            }
        }
        progress(&format!(
            "manifold seed {seed}: beta {:.4}, {:.1}s",
            pair.beta,
            t.elapsed().as_secs_f64()
        ));
    }
    Ok(finish(kind, cfg, col, datasets, betas, plots, start))
}

/// Diagonal Gaussians with `m` columns each; HLP labels; MSE vs MSE-eig.
pub fn run_highdim_suite(cfg: &SuiteConfig, progress: &mut dyn FnMut(&str)) -> Result<ExperimentReport> {
    let kind = SuiteKind::Highdim;
    cfg.validate(kind)?;
    let start = Instant::now();
    let (mut col, mut datasets, mut betas, mut plots) = (Collector::default(), vec![], vec![], vec![]);
    for &m in &cfg.dims {
        let l = checked_l(cfg.intrinsic_dim, m, m)?;
        let name = format!("gaussian_m{m}");
        datasets.push(dataset_record(&name, cfg.n_train, 0, m, l, cfg));
        for &seed in &cfg.seeds {
            let t = Instant::now();
            let norm = normalize_minmax(&gen_highdim_gaussian(cfg.n_train, m, seed)?)?;
            let pair = train_pair(&norm, l, seed, cfg)?;
            betas.push(BetaRecord { dataset: name.clone(), seed, beta: pair.beta });
            let s_mse = score(&pair.mse, &norm)?;
            let s_eig = score(&pair.eig, &norm)?;
            for &ratio in &cfg.ratios {
                let labeled = label_hlp(&norm, ratio, None)?;
                let y = labels_of(&labeled);
                col.push(kind.name(), &name, ratio, Method::Mse, seed, auc(&s_mse, y)?);
                col.push(kind.name(), &name, ratio, Method::MseEig, seed, auc(&s_eig, y)?);
            }
            if seed == cfg.seeds[0] {
                for (method, s) in [(Method::Mse, &s_mse), (Method::MseEig, &s_eig)] {
                    plots.push(scatter(
                        format!("highdim_{name}_{}", method.name()),
                        format!("{name} · {} · top {} flagged", method.name(), cfg.plot_ratio),
                        &norm,
                        s,
                        cfg.plot_ratio,
                    )?);
                }
            }
            progress(&format!(
                "highdim {name} seed {seed}: beta {:.4}, {:.1}s",
                pair.beta,
                t.elapsed().as_secs_f64()
            ));
        }
    }
    Ok(finish(kind, cfg, col, datasets, betas, plots, start))
}

/// Trains on one CSV, scores another, and labels the test set's HLP by its
/// own Mahalanobis distance.
pub fn run_csv_suite(cfg: &SuiteConfig, progress: &mut dyn FnMut(&str)) -> Result<ExperimentReport> {
    let kind = SuiteKind::Csv;
    cfg.validate(kind)?;
    let start = Instant::now();
    let train_path = Path::new(cfg.train_csv.as_deref().unwrap_or_default());
    let test_path = Path::new(cfg.test_csv.as_deref().unwrap_or_default());
    let train_raw = load_csv(train_path)?;
    let test = load_csv(test_path)?;
    if test.dim() != train_raw.dim() {
        return Err(Error::DimensionMismatch {
            context: "csv suite test columns",
            expected: (test.len(), train_raw.dim()),
            got: (test.len(), test.dim()),
        });
    }
    let m = train_raw.dim();
    let l = checked_l(cfg.intrinsic_dim, m, m)?;
    let name = test_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "test".into());
    let train_norm = normalize_minmax(&train_raw)?;
    let test_norm = test.normalize_with(train_norm.norm_params.as_ref().expect("normalized"))?;
    let datasets = vec![dataset_record(&name, train_raw.len(), test.len(), m, l, cfg)];
    let (mut col, mut betas, mut plots) = (Collector::default(), vec![], vec![]);
    let labeled: Vec<Dataset> = cfg
        .ratios
        .iter()
        .map(|&r| label_hlp(&test_norm, r, None))
        .collect::<Result<_>>()?;
    for &seed in &cfg.seeds {
        let t = Instant::now();
        let pair = train_pair(&train_norm, l, seed, cfg)?;
        betas.push(BetaRecord { dataset: name.clone(), seed, beta: pair.beta });
        let s_mse = score(&pair.mse, &test_norm)?;
        let s_eig = score(&pair.eig, &test_norm)?;
        for (&ratio, ds) in cfg.ratios.iter().zip(&labeled) {
            let y = labels_of(ds);
            col.push(kind.name(), &name, ratio, Method::Mse, seed, auc(&s_mse, y)?);
            col.push(kind.name(), &name, ratio, Method::MseEig, seed, auc(&s_eig, y)?);
        }
        if seed == cfg.seeds[0] {
            for (method, s) in [(Method::Mse, &s_mse), (Method::MseEig, &s_eig)] {
                plots.push(scatter(
                    format!("csv_{name}_{}", method.name()),
                    format!("{name} · {} · top {} flagged", method.name(), cfg.plot_ratio),
                    &test_norm,
                    s,
                    cfg.plot_ratio,
                )?);
            }
        }
        progress(&format!("csv {name} seed {seed}: beta {:.4}, {:.1}s", pair.beta, t.elapsed().as_secs_f64()));
    }
    Ok(finish(kind, cfg, col, datasets, betas, plots, start))
}

pub fn run_suite(kind: SuiteKind, cfg: &SuiteConfig, progress: &mut dyn FnMut(&str)) -> Result<ExperimentReport> {
    match kind {
        SuiteKind::Lowdim => run_lowdim_suite(cfg, progress),
        SuiteKind::Manifold => run_manifold_suite(cfg, progress),
        SuiteKind::Highdim => run_highdim_suite(cfg, progress),
        SuiteKind::Csv => run_csv_suite(cfg, progress),
    }
}

/// Re-runs the suite a manifest describes.
pub fn rerun(manifest: &RunManifest, progress: &mut dyn FnMut(&str)) -> Result<ExperimentReport> {
    run_suite(manifest.suite, &manifest.config, progress)
}

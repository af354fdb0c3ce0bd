//! Training, scoring and the directional probe used to check how a trained
//! model reconstructs each principal direction.

use serde::{Deserialize, Serialize};

use crate::data::{mahalanobis_column_scores, top_k_indices, Dataset, NormParams};
use crate::error::{Error, Result};
use crate::linalg::{covariance, dot, pca_transform, rank_epsilon, sym_eigen, Matrix};
use crate::loss::{input_spectrum, mse_eig_loss_with_spectrum, mse_loss, LossConfig};
use crate::network::{
    adam_step, backward, forward, init_params, AdamState, AutoencoderConfig, ModelDocument,
    NetworkParams,
};
use crate::rng;

/// Full-batch training is used up to this many rows.
pub const FULL_BATCH_LIMIT: usize = 4096;
pub const DEFAULT_MINI_BATCH: usize = 512;
/// Optimizer steps a default run aims for.
pub const DEFAULT_STEPS: usize = 20_000;
/// Full-batch default: one step per epoch.
pub const DEFAULT_EPOCHS: usize = DEFAULT_STEPS;
pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;
/// Training aborts once the total loss exceeds this.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchSize {
    /// Full dataset when it has at most 4096 rows, else 512.
    Auto,
    Full,
    Rows(usize),
}

impl BatchSize {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            BatchSize::Auto if n <= FULL_BATCH_LIMIT => n,
            BatchSize::Auto => DEFAULT_MINI_BATCH.min(n),
            BatchSize::Full => n,
            BatchSize::Rows(r) => r.min(n),
        }
    }
}

/// Epochs needed to reach [`DEFAULT_STEPS`] optimizer steps on `n` rows.
pub fn default_epochs(n: usize, batch: BatchSize) -> usize {
    let b = batch.resolve(n).max(1);
    let per_epoch = (n / b).max(1);
    DEFAULT_STEPS.div_ceil(per_epoch)
}

/// Which objective to minimize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    MseOnly,
    MseEig(LossConfig),
}

impl LossKind {
    pub fn config(&self) -> Option<&LossConfig> {
        match self {
            LossKind::MseOnly => None,
            LossKind::MseEig(c) => Some(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: BatchSize,
    pub learning_rate: f64,
    pub loss: LossKind,
    pub seed: u64,
    pub record_every: usize,
}

impl TrainConfig {
    pub fn new(loss: LossKind, seed: u64) -> Self {
        TrainConfig {
            epochs: DEFAULT_EPOCHS,
            batch_size: BatchSize::Auto,
            learning_rate: DEFAULT_LEARNING_RATE,
            loss,
            seed,
            record_every: 10,
        }
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn validate(&self, n: usize, input_dim: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        if matches!(self.batch_size, BatchSize::Rows(0)) {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if let LossKind::MseEig(cfg) = &self.loss {
            cfg.validate(input_dim)?;
            let b = self.batch_size.resolve(n);
            if b <= input_dim {
                return Err(Error::BatchTooSmall {
                    rows: b,
                    dim: input_dim,
                });
            }
        }
        Ok(())
    }
}

/// One sampled point of the training curve (epoch is 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub total: f64,
    pub mse_part: f64,
    pub eig_part: f64,
}

/// Anything that maps normalized rows to reconstructions.
pub trait Reconstructor {
    fn reconstruct(&self, inputs: &Matrix) -> Result<Matrix>;

    /// Normalization to apply to raw datasets before reconstruction.
    fn norm_params(&self) -> Option<&NormParams> {
        None
    }

    /// Number of principal directions the model is meant to carry.
    fn intrinsic_dim(&self) -> Option<usize> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: NetworkParams,
    pub config: AutoencoderConfig,
    pub norm_params: NormParams,
    pub train_config: TrainConfig,
    pub loss_history: Vec<LossRecord>,
}

impl TrainedModel {
    pub fn final_loss(&self) -> &LossRecord {
        self.loss_history.last().expect("history is never empty")
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            input_dim: self.config.input_dim,
            hidden_dim: self.config.hidden_dim,
            w1: self.params.w1.clone(),
            b1: self.params.b1.clone(),
            w2: self.params.w2.clone(),
            b2: self.params.b2.clone(),
            normalization: self.norm_params.clone(),
            loss_config: self.train_config.loss.config().copied(),
        }
    }
}

impl Reconstructor for TrainedModel {
    fn reconstruct(&self, inputs: &Matrix) -> Result<Matrix> {
        Ok(forward(&self.params, inputs)?.0)
    }

    fn norm_params(&self) -> Option<&NormParams> {
        Some(&self.norm_params)
    }

    fn intrinsic_dim(&self) -> Option<usize> {
        Some(self.config.hidden_dim)
    }
}

impl Reconstructor for ModelDocument {
    fn reconstruct(&self, inputs: &Matrix) -> Result<Matrix> {
        Ok(forward(&self.params(), inputs)?.0)
    }

    fn norm_params(&self) -> Option<&NormParams> {
        Some(&self.normalization)
    }

    fn intrinsic_dim(&self) -> Option<usize> {
        Some(self.hidden_dim)
    }
}

fn batches(n: usize, batch: usize, order: &[usize]) -> Vec<&[usize]> {
    // a short tail is folded into the previous batch so every batch keeps
    // at least `batch` rows
    let full = (n / batch).max(1);
    (0..full)
        .map(|b| {
            let lo = b * batch;
            let hi = if b + 1 == full { n } else { lo + batch };
            &order[lo..hi]
        })
        .collect()
}

/// Shifts each hidden bias so the unit's pre-activation is non-negative on
/// every training row. With inputs in `[0, 1]` and zero biases, a unit whose
/// weights are all negative would otherwise never activate.
fn activate_hidden_units(params: &mut NetworkParams, samples: &Matrix) {
    for h in 0..params.hidden_dim() {
        let w = params.w1.row(h);
        let lowest = samples
            .row_iter()
            .map(|x| dot(w, x))
            .fold(f64::INFINITY, f64::min);
        if lowest.is_finite() {
            params.b1[h] = -lowest;
        }
    }
}

/// Trains an autoencoder on a normalized dataset.
///
/// Each epoch visits every batch once (reshuffled per epoch when
/// mini-batching). With the eigenvalue penalty enabled, the top-`l` input
/// eigenvalues are recomputed per batch; for full-batch training they are
/// computed once.
pub fn train(ds: &Dataset, net_cfg: &AutoencoderConfig, train_cfg: &TrainConfig) -> Result<TrainedModel> {
    let norm_params = ds
        .norm_params
        .clone()
        .ok_or_else(|| Error::Config("training data must be normalized".into()))?;
    net_cfg.validate()?;
    let (n, m) = ds.samples.shape();
    if net_cfg.input_dim != m {
        return Err(Error::Config(format!(
            "network input_dim {} does not match {m} data columns",
            net_cfg.input_dim
        )));
    }
    train_cfg.validate(n, m)?;
    if let LossKind::MseEig(cfg) = &train_cfg.loss {
        if cfg.intrinsic_dim != net_cfg.hidden_dim {
            return Err(Error::Config(format!(
                "loss intrinsic_dim {} differs from hidden_dim {}",
                cfg.intrinsic_dim, net_cfg.hidden_dim
            )));
        }
    }

    let batch = train_cfg.batch_size.resolve(n);
    let full_batch = batch >= n;
    let mut params = init_params(net_cfg);
    activate_hidden_units(&mut params, &ds.samples);
    let mut adam = AdamState::new(&params);
    let mut shuffle_rng = rng::substream(train_cfg.seed, 0x73687566);
    let identity: Vec<usize> = (0..n).collect();
    let cached_spectrum = match (&train_cfg.loss, full_batch) {
        (LossKind::MseEig(cfg), true) => Some(input_spectrum(&ds.samples, cfg.intrinsic_dim)?),
        _ => None,
    };

    let mut history = Vec::new();
    for epoch in 1..=train_cfg.epochs {
        let order = if full_batch {
            identity.clone()
        } else {
            rng::permutation(&mut shuffle_rng, n)
        };
        let mut sums = [0.0f64; 3];
        let groups = batches(n, batch, &order);
        for rows in &groups {
            let owned;
            let x = if full_batch {
                &ds.samples
            } else {
                owned = ds.samples.select_rows(rows);
                &owned
            };
            let (y, cache) = forward(&params, x)?;
            let (total, mse, eig, grad) = match &train_cfg.loss {
                LossKind::MseOnly => {
                    let (v, g) = mse_loss(x, &y)?;
                    (v, v, 0.0, g)
                }
                LossKind::MseEig(cfg) => {
                    let fresh;
                    let spectrum = match &cached_spectrum {
                        Some(s) => s,
                        None => {
                            fresh = input_spectrum(x, cfg.intrinsic_dim)?;
                            &fresh
                        }
                    };
                    let lv = mse_eig_loss_with_spectrum(x, &y, spectrum, cfg)?;
                    (lv.total, lv.mse_part, lv.eig_part, lv.grad_wrt_outputs)
                }
            };
            if !total.is_finite() || total > DIVERGENCE_LIMIT {
                return Err(Error::Diverged { epoch, loss: total });
            }
            let grads = backward(&params, &cache, &grad)?;
            adam_step(&mut params, &grads, &mut adam, train_cfg.learning_rate)?;
            sums[0] += total;
            sums[1] += mse;
            sums[2] += eig;
        }
        if epoch == 1 || epoch % train_cfg.record_every == 0 || epoch == train_cfg.epochs {
            let k = groups.len() as f64;
            history.push(LossRecord {
                epoch,
                total: sums[0] / k,
                mse_part: sums[1] / k,
                eig_part: sums[2] / k,
            });
        }
    }
    Ok(TrainedModel {
        params,
        config: *net_cfg,
        norm_params,
        train_config: train_cfg.clone(),
        loss_history: history,
    })
}

/// Normalizes `ds` the way the model expects and returns `(inputs, outputs)`.
pub fn reconstruct_dataset<R: Reconstructor + ?Sized>(model: &R, ds: &Dataset) -> Result<(Matrix, Matrix)> {
    let inputs = match (model.norm_params(), &ds.norm_params) {
        (Some(p), None) => p.apply(&ds.samples)?,
        _ => ds.samples.clone(),
    };
    let outputs = model.reconstruct(&inputs)?;
    if outputs.shape() != inputs.shape() {
        return Err(Error::DimensionMismatch {
            context: "reconstruction",
            expected: inputs.shape(),
            got: outputs.shape(),
        });
    }
    Ok((inputs, outputs))
}

/// Per-row squared reconstruction error.
pub fn score<R: Reconstructor + ?Sized>(model: &R, ds: &Dataset) -> Result<Vec<f64>> {
    if let Some(p) = model.norm_params() {
        if p.dim() != ds.dim() {
            return Err(Error::DimensionMismatch {
                context: "score",
                expected: (ds.len(), p.dim()),
                got: ds.samples.shape(),
            });
        }
    }
    let (x, y) = reconstruct_dataset(model, ds)?;
    Ok(x.row_iter()
        .zip(y.row_iter())
        .map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum())
        .collect())
}

/// Flags the top `⌊δ·n⌋` scores (ties to the lower row index).
pub fn flag_outliers(scores: &[f64], ratio: f64) -> Result<Vec<u8>> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("outlier ratio must lie in (0, 1), got {ratio}")));
    }
    let k = (ratio * scores.len() as f64).floor() as usize;
    let mut flags = vec![0u8; scores.len()];
    for i in top_k_indices(scores, k) {
        flags[i] = 1;
    }
    Ok(flags)
}

/// Squared Mahalanobis distance of each row against the dataset's own
/// mean and covariance.
pub fn mahalanobis_scores(ds: &Dataset, feature_subset: Option<&[usize]>) -> Result<Vec<f64>> {
    mahalanobis_column_scores(&ds.samples, feature_subset)
}

/// Reconstruction statistics along one principal direction of the input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionStats {
    pub nu: f64,
    pub nu_hat: f64,
    pub lambda: f64,
    pub lambda_hat: f64,
    /// Correlation of `Rₖ = Yₖ − νₖ` and `R̂ₖ = Ŷₖ − ν̂ₖ`.
    pub rho: f64,
    /// Least-squares slope of `R̂ₖ` on `Rₖ`.
    pub slope: f64,
}

impl DirectionStats {
    /// `√λₖ − √λ̂ₖ`.
    pub fn gap(&self) -> f64 {
        self.lambda.sqrt() - self.lambda_hat.max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionalStats {
    pub directions: Vec<DirectionStats>,
}

/// Inputs and reconstructions expressed in the input's principal axes.
#[derive(Debug, Clone)]
pub struct PrincipalView {
    pub coords: Matrix,
    pub recon_coords: Matrix,
    pub lambdas: Vec<f64>,
}

fn principal_view<R: Reconstructor + ?Sized>(model: &R, ds: &Dataset) -> Result<PrincipalView> {
    let (x, y) = reconstruct_dataset(model, ds)?;
    let (n, m) = x.shape();
    if n < 10 * m {
        return Err(Error::DegenerateInput(format!(
            "directional statistics need n ≥ 10·m ({} rows for {m} columns), got {n}",
            10 * m
        )));
    }
    let eig = sym_eigen(&covariance(&x)?)?;
    let l = model.intrinsic_dim().unwrap_or(m).min(m);
    let eps = rank_epsilon(&eig);
    if let Some((index, &value)) = eig.values[..l].iter().enumerate().find(|(_, &v)| v <= eps) {
        return Err(Error::SingularCovariance { index, value });
    }
    Ok(PrincipalView {
        coords: pca_transform(&x, &eig)?,
        recon_coords: pca_transform(&y, &eig)?,
        lambdas: eig.values.clone(),
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// ν, ν̂, λ, λ̂, ρ and slope for each of the model's `l` leading input
/// directions (all `m` when the model does not declare `l`).
pub fn directional_stats<R: Reconstructor + ?Sized>(model: &R, ds: &Dataset) -> Result<DirectionalStats> {
    let view = principal_view(model, ds)?;
    let m = view.coords.cols();
    let l = model.intrinsic_dim().unwrap_or(m).min(m);
    let directions = (0..l)
        .map(|k| {
            let y = view.coords.column(k);
            let yh = view.recon_coords.column(k);
            let (nu, nu_hat) = (mean(&y), mean(&yh));
            let n = y.len() as f64;
            let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
            for (a, b) in y.iter().zip(&yh) {
                let (r, rh) = (a - nu, b - nu_hat);
                sxx += r * r;
                syy += rh * rh;
                sxy += r * rh;
            }
            let rho = if sxx > 0.0 && syy > 0.0 {
                (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            DirectionStats {
                nu,
                nu_hat,
                lambda: sxx / n,
                lambda_hat: syy / n,
                rho,
                slope: if sxx > 0.0 { sxy / sxx } else { 0.0 },
            }
        })
        .collect();
    Ok(DirectionalStats { directions })
}

/// Least-squares line through the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OriginFit {
    pub slope: f64,
    pub r_squared: f64,
}

/// Fits `(Yₖ − Ŷₖ)² ≈ c·(Yₖ − νₖ)²` per leading direction.
pub fn error_profile_fit<R: Reconstructor + ?Sized>(model: &R, ds: &Dataset) -> Result<Vec<OriginFit>> {
    let view = principal_view(model, ds)?;
    let m = view.coords.cols();
    let l = model.intrinsic_dim().unwrap_or(m).min(m);
    Ok((0..l)
        .map(|k| {
            let y = view.coords.column(k);
            let yh = view.recon_coords.column(k);
            let nu = mean(&y);
            let xs: Vec<f64> = y.iter().map(|v| (v - nu).powi(2)).collect();
            let ys: Vec<f64> = y.iter().zip(&yh).map(|(a, b)| (a - b).powi(2)).collect();
            let sxx: f64 = xs.iter().map(|x| x * x).sum();
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
            let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
            let ybar = mean(&ys);
            let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x).powi(2)).sum();
            let ss_tot: f64 = ys.iter().map(|y| (y - ybar).powi(2)).sum();
            let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
            OriginFit { slope, r_squared }
        })
        .collect())
}

/// For the top-`δ` scored rows, the fraction whose largest standardized
/// principal coordinate `|Rₖ|/√λₖ` lies along each direction.
pub fn detection_direction_split<R: Reconstructor + ?Sized>(
    model: &R,
    ds: &Dataset,
    ratio: f64,
) -> Result<Vec<f64>> {
    let scores = score(model, ds)?;
    let flags = flag_outliers(&scores, ratio)?;
    let view = principal_view(model, ds)?;
    let m = view.coords.cols();
    let means = view.coords.column_means();
    let mut counts = vec![0usize; m];
    let mut total = 0usize;
    for (i, &f) in flags.iter().enumerate() {
        if f == 0 {
            continue;
        }
        let row = view.coords.row(i);
        let k = (0..m)
            .max_by(|&a, &b| {
                let za = (row[a] - means[a]).abs() / view.lambdas[a].sqrt();
                let zb = (row[b] - means[b]).abs() / view.lambdas[b].sqrt();
                za.total_cmp(&zb)
            })
            .unwrap_or(0);
        counts[k] += 1;
        total += 1;
    }
    Ok(counts
        .iter()
        .map(|&c| if total > 0 { c as f64 / total as f64 } else { 0.0 })
        .collect())
}

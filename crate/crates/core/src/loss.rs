//! Reconstruction losses.
//!
//! * [`mse_loss`]: mean squared reconstruction error per row.
//! * [`eig_penalty`]: `Σₖ (√λₖ − √λ̂ₖ − β)²` over the top-`l` eigenvalues of
//!   the input covariance `λₖ` and the output covariance `λ̂ₖ`, paired by rank.
//! * [`mse_eig_loss`]: `θ₁·mse + θ₂·eig`.
//!
//! The penalty gradient uses first-order eigenvalue perturbation,
//! `∂λ̂ₖ/∂ŷⱼ = (2/n)·(η̂ₖᵀ(ŷⱼ − μ̂))·η̂ₖ`. Input-side eigenvalues are data and
//! carry no gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{covariance, sym_eigen, Matrix, SymmetricEigen};

/// Weights of the two loss terms, the gap target and the number of
/// controlled eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub theta1: f64,
    pub theta2: f64,
    pub beta: f64,
    pub intrinsic_dim: usize,
}

impl LossConfig {
    pub const DEFAULT_THETA1: f64 = 0.008;
    pub const DEFAULT_THETA2: f64 = 1.0;

    /// Default weights (θ₁ = 0.008, θ₂ = 1) with the given gap target.
    pub fn with_beta(beta: f64, intrinsic_dim: usize) -> Self {
        LossConfig {
            theta1: Self::DEFAULT_THETA1,
            theta2: Self::DEFAULT_THETA2,
            beta,
            intrinsic_dim,
        }
    }

    pub fn validate(&self, input_dim: usize) -> Result<()> {
        for (name, v) in [
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("beta", self.beta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.intrinsic_dim == 0 || self.intrinsic_dim > input_dim {
            return Err(Error::Config(format!(
                "intrinsic_dim must lie in 1..={input_dim}, got {}",
                self.intrinsic_dim
            )));
        }
        Ok(())
    }
}

/// A combined loss evaluation with its gradient w.r.t. the outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub total: f64,
    pub mse_part: f64,
    pub eig_part: f64,
    pub grad_wrt_outputs: Matrix,
}

fn check_same_shape(inputs: &Matrix, outputs: &Matrix, context: &'static str) -> Result<()> {
    if inputs.shape() != outputs.shape() {
        return Err(Error::DimensionMismatch {
            context,
            expected: inputs.shape(),
            got: outputs.shape(),
        });
    }
    Ok(())
}

/// `(1/n) Σᵢ ‖xᵢ − x̂ᵢ‖²` and its gradient `(2/n)(x̂ − x)`.
pub fn mse_loss(inputs: &Matrix, outputs: &Matrix) -> Result<(f64, Matrix)> {
    check_same_shape(inputs, outputs, "mse_loss")?;
    let n = inputs.rows().max(1) as f64;
    let mut grad = Matrix::zeros(inputs.rows(), inputs.cols());
    let mut sum = 0.0;
    for ((g, x), y) in grad
        .as_mut_slice()
        .iter_mut()
        .zip(inputs.as_slice())
        .zip(outputs.as_slice())
    {
        let d = y - x;
        sum += d * d;
        *g = 2.0 * d / n;
    }
    Ok((sum / n, grad))
}

/// Floor substituted for tiny output eigenvalues in the `1/(2√λ̂)` factor.
pub const EIGEN_GRAD_FLOOR: f64 = 1e-12;

/// The `l` largest eigenvalues, descending.
pub fn top_l_eigenvalues(eig: &SymmetricEigen, l: usize) -> Result<Vec<f64>> {
    if l == 0 || l > eig.dim() {
        return Err(Error::Config(format!(
            "intrinsic dimension must lie in 1..={}, got {l}",
            eig.dim()
        )));
    }
    Ok(eig.values[..l].to_vec())
}

fn check_penalty_shape(outputs: &Matrix, l: usize) -> Result<()> {
    let (n, m) = outputs.shape();
    if l == 0 || l > m {
        return Err(Error::Config(format!(
            "intrinsic dimension must lie in 1..={m}, got {l}"
        )));
    }
    if n <= m {
        return Err(Error::BatchTooSmall { rows: n, dim: m });
    }
    Ok(())
}

/// Top-`l` input covariance eigenvalues of a batch.
pub fn input_spectrum(inputs: &Matrix, l: usize) -> Result<Vec<f64>> {
    check_penalty_shape(inputs, l)?;
    top_l_eigenvalues(&sym_eigen(&covariance(inputs)?)?, l)
}

/// Eigenvalue-gap penalty and its output gradient.
pub fn eig_penalty(inputs: &Matrix, outputs: &Matrix, beta: f64, l: usize) -> Result<(f64, Matrix)> {
    check_same_shape(inputs, outputs, "eig_penalty")?;
    check_penalty_shape(outputs, l)?;
    let spectrum = input_spectrum(inputs, l)?;
    eig_penalty_with_spectrum(&spectrum, outputs, beta)
}

/// [`eig_penalty`] with the input-side eigenvalues supplied by the caller,
/// e.g. cached across full-batch epochs.
pub fn eig_penalty_with_spectrum(
    input_top: &[f64],
    outputs: &Matrix,
    beta: f64,
) -> Result<(f64, Matrix)> {
    let l = input_top.len();
    check_penalty_shape(outputs, l)?;
    let (n, m) = outputs.shape();
    let out_eig = sym_eigen(&covariance(outputs)?)?;

    // dL/dλ̂ₖ = −gapₖ / √λ̂ₖ with gapₖ = √λₖ − √λ̂ₖ − β
    let mut value = 0.0;
    let mut coef = vec![0.0; l];
    for k in 0..l {
        let lam = input_top[k].max(0.0);
        let lam_hat = out_eig.values[k];
        let gap = lam.sqrt() - lam_hat.max(0.0).sqrt() - beta;
        value += gap * gap;
        coef[k] = -gap / lam_hat.max(EIGEN_GRAD_FLOOR).sqrt();
    }

    // grad row j = (2/n) · Mᵀ(ŷⱼ − μ̂), M = Σₖ coefₖ η̂ₖη̂ₖᵀ (symmetric)
    let mut mix = Matrix::zeros(m, m);
    for (k, &c) in coef.iter().enumerate() {
        for a in 0..m {
            let va = out_eig.vectors.get(a, k) * c;
            let row = mix.row_mut(a);
            for (b, r) in row.iter_mut().enumerate() {
                *r += va * out_eig.vectors.get(b, k);
            }
        }
    }
    let mean = outputs.column_means();
    let scale = 2.0 / n as f64;
    let mut grad = Matrix::zeros(n, m);
    let mut dev = vec![0.0; m];
    for i in 0..n {
        for ((d, y), mu) in dev.iter_mut().zip(outputs.row(i)).zip(&mean) {
            *d = y - mu;
        }
        let g = grad.row_mut(i);
        for (a, &da) in dev.iter().enumerate() {
            if da == 0.0 {
                continue;
            }
            for (gb, mb) in g.iter_mut().zip(mix.row(a)) {
                *gb += scale * da * mb;
            }
        }
    }
    Ok((value, grad))
}

/// `θ₁·mse + θ₂·eig` with summed gradients.
pub fn mse_eig_loss(inputs: &Matrix, outputs: &Matrix, config: &LossConfig) -> Result<LossValue> {
    config.validate(inputs.cols())?;
    check_same_shape(inputs, outputs, "mse_eig_loss")?;
    let spectrum = input_spectrum(inputs, config.intrinsic_dim)?;
    mse_eig_loss_with_spectrum(inputs, outputs, &spectrum, config)
}

/// [`mse_eig_loss`] with precomputed top-`l` input eigenvalues.
pub fn mse_eig_loss_with_spectrum(
    inputs: &Matrix,
    outputs: &Matrix,
    input_top: &[f64],
    config: &LossConfig,
) -> Result<LossValue> {
    if input_top.len() != config.intrinsic_dim {
        return Err(Error::Config(format!(
            "expected {} input eigenvalues, got {}",
            config.intrinsic_dim,
            input_top.len()
        )));
    }
    let (mse, mut grad) = mse_loss(inputs, outputs)?;
    let (eig, eig_grad) = eig_penalty_with_spectrum(input_top, outputs, config.beta)?;
    for (g, e) in grad.as_mut_slice().iter_mut().zip(eig_grad.as_slice()) {
        *g = config.theta1 * *g + config.theta2 * e;
    }
    Ok(LossValue {
        total: config.theta1 * mse + config.theta2 * eig,
        mse_part: mse,
        eig_part: eig,
        grad_wrt_outputs: grad,
    })
}

/// Gap target from the top-`l` input eigenvalues: `max 0.3√λ` when that does
/// not exceed `min √λ`, otherwise `min √λ`.
pub fn select_beta(eigvals: &[f64]) -> Result<f64> {
    if eigvals.is_empty() {
        return Err(Error::Config("select_beta needs at least one eigenvalue".into()));
    }
    if let Some(&bad) = eigvals.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Config(format!(
            "select_beta needs positive eigenvalues, got {bad}"
        )));
    }
    let roots = eigvals.iter().map(|v| v.sqrt());
    let a = roots.clone().fold(f64::NEG_INFINITY, |m, r| m.max(0.3 * r));
    let b = roots.fold(f64::INFINITY, f64::min);
    Ok(if a <= b { a } else { b })
}

/// One row of the covariance spectrum diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub eigenvalue: f64,
    pub fraction: f64,
    pub cumulative: f64,
}

/// Explained-variance table to help choose the intrinsic dimension.
pub fn spectrum_report(eig: &SymmetricEigen) -> Vec<SpectrumEntry> {
    let total: f64 = eig.values.iter().map(|v| v.max(0.0)).sum();
    let mut cumulative = 0.0;
    eig.values
        .iter()
        .map(|&v| {
            let fraction = if total > 0.0 { v.max(0.0) / total } else { 0.0 };
            cumulative += fraction;
            SpectrumEntry {
                eigenvalue: v,
                fraction,
                cumulative,
            }
        })
        .collect()
}

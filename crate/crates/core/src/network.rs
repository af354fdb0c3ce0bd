//! Single-hidden-layer autoencoder `x̂ = sigmoid(W₂ · relu(W₁x + b₁) + b₂)`
//! with hand-written forward and backward passes, plus an Adam optimizer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::NormParams;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::loss::LossConfig;
use crate::rng;

/// Shape and seed of an autoencoder. The hidden width is the intrinsic
/// dimension of the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoencoderConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub seed: u64,
}

impl AutoencoderConfig {
    pub fn new(input_dim: usize, hidden_dim: usize, seed: u64) -> Result<Self> {
        let cfg = AutoencoderConfig {
            input_dim,
            hidden_dim,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.hidden_dim > self.input_dim {
            return Err(Error::Config(format!(
                "hidden_dim must lie in 1..={}, got {}",
                self.input_dim, self.hidden_dim
            )));
        }
        Ok(())
    }
}

/// Weights and biases. `w1` is `l×m`, `w2` is `m×l`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

/// Gradients share the parameter layout.
pub type Gradients = NetworkParams;

impl NetworkParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        NetworkParams {
            w1: Matrix::zeros(hidden_dim, input_dim),
            b1: vec![0.0; hidden_dim],
            w2: Matrix::zeros(input_dim, hidden_dim),
            b2: vec![0.0; input_dim],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn zeros_like(&self) -> Self {
        NetworkParams::zeros(self.input_dim(), self.hidden_dim())
    }

    pub fn same_shape(&self, other: &NetworkParams) -> bool {
        self.w1.shape() == other.w1.shape()
            && self.w2.shape() == other.w2.shape()
            && self.b1.len() == other.b1.len()
            && self.b2.len() == other.b2.len()
    }

    /// Flat views in the fixed order `w1, b1, w2, b2`.
    pub fn tensors(&self) -> [&[f64]; 4] {
        [self.w1.as_slice(), &self.b1, self.w2.as_slice(), &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_mut_slice(),
            &mut self.b1,
            self.w2.as_mut_slice(),
            &mut self.b2,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Glorot-uniform weights drawn from the config seed, zero biases.
pub fn init_params(config: &AutoencoderConfig) -> NetworkParams {
    let (m, l) = (config.input_dim, config.hidden_dim);
    let mut rng = rng::seeded(config.seed);
    let bound = (6.0 / (m + l) as f64).sqrt();
    let mut p = NetworkParams::zeros(m, l);
    for w in p.w1.as_mut_slice() {
        *w = rng.random_range(-bound..bound);
    }
    for w in p.w2.as_mut_slice() {
        *w = rng.random_range(-bound..bound);
    }
    p
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Activations retained from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Matrix,
    hidden_pre: Matrix,
    hidden: Matrix,
    output: Matrix,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        &self.output
    }
}

/// Reconstructions for every row of `batch`.
pub fn forward(params: &NetworkParams, batch: &Matrix) -> Result<(Matrix, ForwardCache)> {
    let (n, m) = batch.shape();
    if m != params.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "forward",
            expected: (n, params.input_dim()),
            got: batch.shape(),
        });
    }
    let l = params.hidden_dim();
    let mut hidden_pre = Matrix::zeros(n, l);
    let mut hidden = Matrix::zeros(n, l);
    let mut output = Matrix::zeros(n, m);
    for i in 0..n {
        let x = batch.row(i);
        let zp = hidden_pre.row_mut(i);
        for (h, z) in zp.iter_mut().enumerate() {
            *z = dot(params.w1.row(h), x) + params.b1[h];
        }
        let hr = hidden.row_mut(i);
        for (a, &z) in hr.iter_mut().zip(hidden_pre.row(i)) {
            *a = z.max(0.0);
        }
        let hr = hidden.row(i);
        let out = output.row_mut(i);
        for (j, o) in out.iter_mut().enumerate() {
            *o = sigmoid(dot(params.w2.row(j), hr) + params.b2[j]);
        }
    }
    let cache = ForwardCache {
        input: batch.clone(),
        hidden_pre,
        hidden,
        output: output.clone(),
    };
    Ok((output, cache))
}

/// Parameter gradients of a scalar loss given `∂loss/∂outputs`.
///
/// The ReLU derivative at exactly zero is taken as 0.
pub fn backward(
    params: &NetworkParams,
    cache: &ForwardCache,
    grad_wrt_outputs: &Matrix,
) -> Result<Gradients> {
    let (n, m) = cache.output.shape();
    let l = params.hidden_dim();
    if params.input_dim() != m || cache.hidden.cols() != l {
        return Err(Error::ContractViolation(
            "forward cache does not match the network shape".into(),
        ));
    }
    if grad_wrt_outputs.shape() != (n, m) {
        return Err(Error::DimensionMismatch {
            context: "backward",
            expected: (n, m),
            got: grad_wrt_outputs.shape(),
        });
    }
    let mut g = params.zeros_like();
    let mut dz2 = vec![0.0; m];
    let mut dz1 = vec![0.0; l];
    for i in 0..n {
        let y = cache.output.row(i);
        let gy = grad_wrt_outputs.row(i);
        for ((d, &g), &yj) in dz2.iter_mut().zip(gy).zip(y) {
            *d = g * yj * (1.0 - yj);
        }
        let h = cache.hidden.row(i);
        for (j, &d) in dz2.iter().enumerate() {
            g.b2[j] += d;
            if d != 0.0 {
                for (gw, &hv) in g.w2.row_mut(j).iter_mut().zip(h) {
                    *gw += d * hv;
                }
            }
        }
        let zpre = cache.hidden_pre.row(i);
        for (k, (d, &z)) in dz1.iter_mut().zip(zpre).enumerate() {
            *d = if z > 0.0 {
                (0..m).map(|j| dz2[j] * params.w2.get(j, k)).sum()
            } else {
                0.0
            };
        }
        let x = cache.input.row(i);
        for (k, &d) in dz1.iter().enumerate() {
            g.b1[k] += d;
            if d != 0.0 {
                for (gw, &xv) in g.w1.row_mut(k).iter_mut().zip(x) {
                    *gw += d * xv;
                }
            }
        }
    }
    Ok(g)
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First/second moment accumulators for Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: NetworkParams,
    pub second: NetworkParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &NetworkParams) -> Self {
        AdamState {
            first: params.zeros_like(),
            second: params.zeros_like(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    params: &mut NetworkParams,
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
    }
    if !params.same_shape(grads) || !params.same_shape(&state.first) {
        return Err(Error::ContractViolation(
            "adam_step: parameter, gradient and moment shapes differ".into(),
        ));
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    let g = grads.tensors();
    let p = params.tensors_mut();
    let m1 = state.first.tensors_mut();
    let m2 = state.second.tensors_mut();
    for (((p, g), m1), m2) in p.into_iter().zip(g).zip(m1).zip(m2) {
        for i in 0..p.len() {
            m1[i] = ADAM_BETA1 * m1[i] + (1.0 - ADAM_BETA1) * g[i];
            m2[i] = ADAM_BETA2 * m2[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
            let mh = m1[i] / c1;
            let vh = m2[i] / c2;
            p[i] -= lr * mh / (vh.sqrt() + ADAM_EPS);
        }
    }
    Ok(())
}

/// On-disk JSON form of a trained autoencoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub normalization: NormParams,
    /// `None` for a model trained with plain MSE.
    pub loss_config: Option<LossConfig>,
}

impl ModelDocument {
    pub fn params(&self) -> NetworkParams {
        NetworkParams {
            w1: self.w1.clone(),
            b1: self.b1.clone(),
            w2: self.w2.clone(),
            b2: self.b2.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (m, l) = (self.input_dim, self.hidden_dim);
        if self.w1.shape() != (l, m)
            || self.w2.shape() != (m, l)
            || self.b1.len() != l
            || self.b2.len() != m
            || self.normalization.min.len() != m
            || self.normalization.max.len() != m
        {
            return Err(Error::Config("model document has inconsistent shapes".into()));
        }
        if !self.params().is_finite() {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        doc.validate()?;
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_net(w1: f64, b1: f64, w2: f64, b2: f64) -> NetworkParams {
        NetworkParams {
            w1: Matrix::from_vec(1, 1, vec![w1]).unwrap(),
            b1: vec![b1],
            w2: Matrix::from_vec(1, 1, vec![w2]).unwrap(),
            b2: vec![b2],
        }
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let cfg = AutoencoderConfig::new(5, 3, 42).unwrap();
        let a = init_params(&cfg);
        let b = init_params(&cfg);
        assert_eq!(a, b);
        assert!(a.b1.iter().chain(&a.b2).all(|&v| v == 0.0));
        let c = init_params(&AutoencoderConfig { seed: 43, ..cfg });
        assert_ne!(a, c);
    }

    #[test]
    fn init_respects_glorot_bound() {
        let bound = (6.0f64 / 7.0).sqrt();
        for seed in 0..1000 {
            let p = init_params(&AutoencoderConfig::new(4, 3, seed).unwrap());
            assert!(p.w1.as_slice().iter().all(|w| w.abs() <= bound));
            assert!(p.w2.as_slice().iter().all(|w| w.abs() <= bound));
        }
    }

    #[test]
    fn config_rejects_wide_hidden_layer() {
        assert!(AutoencoderConfig::new(2, 3, 0).is_err());
        assert!(AutoencoderConfig::new(2, 0, 0).is_err());
    }

    #[test]
    fn zero_network_outputs_half() {
        let p = NetworkParams::zeros(3, 2);
        let x = Matrix::from_rows(&[[0.1, 0.5, 0.9], [0.0, 1.0, 0.3]]).unwrap();
        let (y, _) = forward(&p, &x).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn hand_built_scalar_network() {
        let p = scalar_net(1.0, 0.0, 1.0, 0.0);
        let (y, _) = forward(&p, &Matrix::from_vec(1, 1, vec![0.5]).unwrap()).unwrap();
        // 1 / (1 + e^{-0.5})
        assert!((y.get(0, 0) - 0.622_459_331_201_854_6).abs() < 1e-15);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let p = NetworkParams::zeros(3, 2);
        assert!(forward(&p, &Matrix::zeros(4, 2)).is_err());
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_grads() {
        let p = init_params(&AutoencoderConfig::new(3, 2, 1).unwrap());
        let x = Matrix::from_rows(&[[0.2, 0.4, 0.6], [0.9, 0.1, 0.5]]).unwrap();
        let (_, cache) = forward(&p, &x).unwrap();
        let g = backward(&p, &cache, &Matrix::zeros(2, 3)).unwrap();
        assert!(g.tensors().iter().all(|t| t.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn backward_is_linear_in_upstream_gradient() {
        let p = init_params(&AutoencoderConfig::new(3, 2, 9).unwrap());
        let x = Matrix::from_rows(&[[0.2, 0.4, 0.6], [0.9, 0.1, 0.5]]).unwrap();
        let (_, cache) = forward(&p, &x).unwrap();
        let up = Matrix::from_rows(&[[0.3, -1.0, 0.25], [2.0, 0.5, -0.75]]).unwrap();
        let g1 = backward(&p, &cache, &up).unwrap();
        let g2 = backward(&p, &cache, &up.scale(2.0)).unwrap();
        for (a, b) in g1.tensors().iter().zip(g2.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert!((2.0 * x - y).abs() <= 1e-15 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn backward_rejects_mismatched_cache() {
        let p = init_params(&AutoencoderConfig::new(3, 2, 1).unwrap());
        let other = init_params(&AutoencoderConfig::new(3, 1, 1).unwrap());
        let (_, cache) = forward(&other, &Matrix::zeros(2, 3)).unwrap();
        assert!(backward(&p, &cache, &Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn adam_zero_grad_leaves_params() {
        let mut p = init_params(&AutoencoderConfig::new(3, 2, 1).unwrap());
        let before = p.clone();
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &before.zeros_like(), &mut st, 1e-3).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // m̂ = g, v̂ = g², so the step is lr·g/(|g| + ε)
        for g in [3.7, -0.02, 150.0] {
            let mut p = scalar_net(0.0, 0.0, 0.0, 0.0);
            let mut grads = p.zeros_like();
            grads.b2[0] = g;
            let mut st = AdamState::new(&p);
            adam_step(&mut p, &grads, &mut st, 1e-3).unwrap();
            assert!((p.b2[0].abs() - 1e-3).abs() < 1e-9);
            assert_eq!(p.b2[0].signum(), -g.signum());
        }
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut p = scalar_net(0.0, 0.0, 0.0, 0.0);
        let mut st = AdamState::new(&p);
        for _ in 0..200 {
            let mut g = p.zeros_like();
            g.b2[0] = 2.0 * (p.b2[0] - 3.0);
            adam_step(&mut p, &g, &mut st, 0.1).unwrap();
        }
        assert!((p.b2[0] - 3.0).abs() < 0.1, "w = {}", p.b2[0]);
    }

    #[test]
    fn adam_rejects_non_finite_gradient() {
        let mut p = scalar_net(0.0, 0.0, 0.0, 0.0);
        let mut g = p.zeros_like();
        g.w1.as_mut_slice()[0] = f64::INFINITY;
        let mut st = AdamState::new(&p);
        assert!(matches!(
            adam_step(&mut p, &g, &mut st, 1e-3),
            Err(Error::NonFinite(_))
        ));
        assert_eq!(st.t, 0);
    }
}

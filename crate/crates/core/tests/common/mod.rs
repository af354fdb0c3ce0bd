#![allow(dead_code)]

use mseeig::linalg::{covariance, sym_eigen, Matrix};
use mseeig::loss::{input_spectrum, mse_eig_loss, select_beta, LossConfig};
use mseeig::network::{backward, forward, NetworkParams};
use mseeig::rng::{self, BoxMuller};

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// A random network, batch and loss config for gradient checking.
pub struct GradCase {
    pub params: NetworkParams,
    pub inputs: Matrix,
    pub config: LossConfig,
}

/// Smallest distance of any hidden pre-activation from the ReLU kink.
fn kink_margin(p: &NetworkParams, x: &Matrix) -> f64 {
    let mut margin = f64::INFINITY;
    for i in 0..x.rows() {
        for h in 0..p.hidden_dim() {
            let z: f64 = p.w1.row(h).iter().zip(x.row(i)).map(|(a, b)| a * b).sum::<f64>() + p.b1[h];
            margin = margin.min(z.abs());
        }
    }
    margin
}

/// Smallest gap among the leading `l + 1` output eigenvalues, relative to
/// the trace.
fn output_separation(p: &NetworkParams, x: &Matrix, l: usize) -> f64 {
    let (y, _) = forward(p, x).unwrap();
    let eig = sym_eigen(&covariance(&y).unwrap()).unwrap();
    let trace: f64 = eig.values.iter().sum();
    let k = (l + 1).min(eig.dim());
    let mut sep = f64::INFINITY;
    for w in eig.values[..k].windows(2) {
        sep = sep.min((w[0] - w[1]) / trace);
    }
    if k == eig.dim() {
        sep = sep.min(eig.values[k - 1] / trace);
    }
    sep
}

/// Draws a case whose loss is differentiable in a neighbourhood of the
/// parameters: no pre-activation within 1e-3 of zero and leading output
/// eigenvalues separated by at least 1e-3 of the trace.
pub fn grad_case(seed: u64, m: usize, l: usize, n: usize) -> GradCase {
    for attempt in 0u64.. {
        let mut r = rng::substream(seed, attempt + 1);
        let mut bm = BoxMuller::new();
        let mut p = NetworkParams::zeros(m, l);
        for t in p.tensors_mut() {
            for v in t.iter_mut() {
                *v = 0.8 * bm.sample(&mut r);
            }
        }
        let data = (0..n * m).map(|_| rng::uniform(&mut r, 0.0, 1.0)).collect();
        let x = Matrix::from_vec(n, m, data).unwrap();
        if kink_margin(&p, &x) < 1e-3 || output_separation(&p, &x, l) < 1e-3 {
            continue;
        }
        let beta = select_beta(&input_spectrum(&x, l).unwrap()).unwrap();
        return GradCase {
            params: p,
            inputs: x,
            config: LossConfig::with_beta(beta, l),
        };
    }
    unreachable!()
}

fn total_loss(p: &NetworkParams, x: &Matrix, cfg: &LossConfig) -> f64 {
    let (y, _) = forward(p, x).unwrap();
    mse_eig_loss(x, &y, cfg).unwrap().total
}

/// Largest relative disagreement between backpropagated gradients of the
/// composite loss and central differences with step `h`, over entries whose
/// magnitude exceeds `1e-8`.
pub fn max_relative_grad_error(case: &GradCase, h: f64) -> f64 {
    let (y, cache) = forward(&case.params, &case.inputs).unwrap();
    let value = mse_eig_loss(&case.inputs, &y, &case.config).unwrap();
    let analytic = backward(&case.params, &cache, &value.grad_wrt_outputs).unwrap();
    let mut worst: f64 = 0.0;
    let mut p = case.params.clone();
    for (t, a) in analytic.tensors().iter().enumerate() {
        for i in 0..a.len() {
            let orig = p.tensors()[t][i];
            p.tensors_mut()[t][i] = orig + h;
            let up = total_loss(&p, &case.inputs, &case.config);
            p.tensors_mut()[t][i] = orig - h;
            let down = total_loss(&p, &case.inputs, &case.config);
            p.tensors_mut()[t][i] = orig;
            let fd = (up - down) / (2.0 * h);
            let scale = a[i].abs().max(fd.abs());
            if scale > 1e-8 {
                worst = worst.max((a[i] - fd).abs() / scale);
            }
        }
    }
    worst
}

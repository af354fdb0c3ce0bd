mod common;

use common::{grad_case, max_relative_grad_error};
use mseeig::linalg::Matrix;
use mseeig::loss::{eig_penalty, mse_loss};
use mseeig::network::{backward, forward, NetworkParams};
use mseeig::rng;

#[test]
fn backward_matches_finite_differences_on_3_2_3() {
    let case = grad_case(3, 3, 2, 8);
    assert!(max_relative_grad_error(&case, 1e-5) < 1e-4);
}

#[test]
fn composite_gradient_on_random_small_networks() {
    for seed in 0..30u64 {
        let mut r = rng::seeded(seed);
        let m = rand::Rng::random_range(&mut r, 2..=5usize);
        let l = rand::Rng::random_range(&mut r, 1..=m.min(3));
        let n = rand::Rng::random_range(&mut r, m + 1..=8);
        let case = grad_case(seed, m, l, n);
        let err = max_relative_grad_error(&case, 1e-5);
        assert!(err < 1e-4, "seed {seed} (m={m}, l={l}, n={n}): {err}");
    }
}

/// Central differences of a scalar function of a matrix.
fn numeric_grad(x: &Matrix, h: f64, f: impl Fn(&Matrix) -> f64) -> Matrix {
    let mut g = Matrix::zeros(x.rows(), x.cols());
    let mut xp = x.clone();
    for k in 0..x.as_slice().len() {
        let orig = xp.as_slice()[k];
        xp.as_mut_slice()[k] = orig + h;
        let up = f(&xp);
        xp.as_mut_slice()[k] = orig - h;
        let down = f(&xp);
        xp.as_mut_slice()[k] = orig;
        g.as_mut_slice()[k] = (up - down) / (2.0 * h);
    }
    g
}

fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
    a.max_abs_diff(b) / a.max_abs().max(b.max_abs())
}

#[test]
fn penalty_gradient_on_12x3_batch() {
    // rows with column scales 3, 1.5, 0.5 give well-separated spectra
    let mut r = rng::seeded(5);
    let scaled = |r: &mut rng::Xoshiro256PlusPlus| -> Matrix {
        let data = (0..36)
            .map(|k| [3.0, 1.5, 0.5][k % 3] * rng::uniform(r, -1.0, 1.0))
            .collect();
        Matrix::from_vec(12, 3, data).unwrap()
    };
    let inputs = scaled(&mut r);
    let outputs = scaled(&mut r);
    for l in 1..=3 {
        let (_, grad) = eig_penalty(&inputs, &outputs, 0.2, l).unwrap();
        let fd = numeric_grad(&outputs, 1e-5, |y| eig_penalty(&inputs, y, 0.2, l).unwrap().0);
        assert!(rel_err(&grad, &fd) < 1e-3, "l={l}");
    }
}

#[test]
fn mse_gradient_matches_finite_differences() {
    let mut r = rng::seeded(8);
    let x = Matrix::from_vec(6, 2, (0..12).map(|_| rng::uniform(&mut r, 0.0, 1.0)).collect()).unwrap();
    let y = Matrix::from_vec(6, 2, (0..12).map(|_| rng::uniform(&mut r, 0.0, 1.0)).collect()).unwrap();
    let (_, grad) = mse_loss(&x, &y).unwrap();
    let fd = numeric_grad(&y, 1e-5, |y| mse_loss(&x, y).unwrap().0);
    assert!(grad.max_abs_diff(&fd) < 1e-6);
}

#[test]
fn forward_is_pure_and_bounded() {
    let case = grad_case(21, 4, 2, 10);
    let (a, _) = forward(&case.params, &case.inputs).unwrap();
    let (b, _) = forward(&case.params, &case.inputs).unwrap();
    assert_eq!(a, b);
    let wild = Matrix::from_rows(&[[1e6, -1e6, 0.0, 3.0], [-50.0, 50.0, 1e-9, -7.0]]).unwrap();
    let (y, _) = forward(&case.params, &wild).unwrap();
    assert!(y.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
}

#[test]
fn backward_ignores_dead_units() {
    let mut p = NetworkParams::zeros(2, 1);
    p.w1 = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
    p.b1 = vec![-10.0];
    p.w2 = Matrix::from_rows(&[[1.0], [1.0]]).unwrap();
    let x = Matrix::from_rows(&[[0.5, 0.5]]).unwrap();
    let (_, cache) = forward(&p, &x).unwrap();
    let g = backward(&p, &cache, &Matrix::from_rows(&[[1.0, 1.0]]).unwrap()).unwrap();
    assert!(g.w1.as_slice().iter().all(|&v| v == 0.0));
    assert_eq!(g.b1, vec![0.0]);
    assert!(g.b2.iter().all(|&v| v != 0.0));
}

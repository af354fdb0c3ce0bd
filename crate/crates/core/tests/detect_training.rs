mod common;

use std::sync::OnceLock;

use common::pearson;
use mseeig::data::{gen_gaussian, normalize_minmax, Dataset};
use mseeig::detect::{
    detection_direction_split, directional_stats, error_profile_fit, mahalanobis_scores, score, train,
    LossKind, TrainConfig, TrainedModel,
};
use mseeig::eval::LowdimFamily;
use mseeig::linalg::{covariance, sym_eigen, Matrix};
use mseeig::loss::{select_beta, LossConfig};
use mseeig::network::AutoencoderConfig;

struct Fitted {
    ds: Dataset,
    beta: f64,
    mse: TrainedModel,
    eig: TrainedModel,
}

fn fit(ds: Dataset, seed: u64) -> Fitted {
    let eig = sym_eigen(&covariance(&ds.samples).unwrap()).unwrap();
    let beta = select_beta(&eig.values).unwrap();
    let net = AutoencoderConfig::new(2, 2, seed).unwrap();
    let mse = train(&ds, &net, &TrainConfig::new(LossKind::MseOnly, seed)).unwrap();
    let eig = train(&ds, &net, &TrainConfig::new(LossKind::MseEig(LossConfig::with_beta(beta, 2)), seed)).unwrap();
    Fitted { ds, beta, mse, eig }
}

fn gaussian() -> &'static Fitted {
    static CELL: OnceLock<Fitted> = OnceLock::new();
    CELL.get_or_init(|| {
        let raw = gen_gaussian(2000, &[0.0, 0.0], &Matrix::from_diag(&[1.0, 0.5]), 0).unwrap();
        fit(normalize_minmax(&raw).unwrap(), 0)
    })
}

fn noisy() -> &'static Fitted {
    static CELL: OnceLock<Fitted> = OnceLock::new();
    CELL.get_or_init(|| {
        let family = LowdimFamily::by_name("dataset3").unwrap();
        fit(normalize_minmax(&family.generate(2000, 0).unwrap()).unwrap(), 0)
    })
}

#[test]
fn short_runs_make_progress() {
    let raw = gen_gaussian(500, &[0.0, 0.0], &Matrix::from_diag(&[1.0, 0.5]), 2).unwrap();
    let ds = normalize_minmax(&raw).unwrap();
    let net = AutoencoderConfig::new(2, 2, 2).unwrap();
    let mse = train(&ds, &net, &TrainConfig::new(LossKind::MseOnly, 2).with_epochs(500)).unwrap();
    assert!(mse.final_loss().mse_part < mse.loss_history[0].mse_part);

    let beta = select_beta(&sym_eigen(&covariance(&ds.samples).unwrap()).unwrap().values).unwrap();
    let cfg = TrainConfig::new(LossKind::MseEig(LossConfig::with_beta(beta, 2)), 2).with_epochs(1000);
    let eig = train(&ds, &net, &cfg).unwrap();
    assert!(eig.final_loss().eig_part < 0.1 * eig.loss_history[0].eig_part);
    assert_eq!(eig.train_config.learning_rate, 1e-3);
    let lc = eig.train_config.loss.config().unwrap();
    assert_eq!((lc.theta1, lc.theta2), (0.008, 1.0));
}

#[test]
fn scores_track_mahalanobis_distance() {
    let f = gaussian();
    let maha = mahalanobis_scores(&f.ds, None).unwrap();
    let r_eig = pearson(&score(&f.eig, &f.ds).unwrap(), &maha);
    let r_mse = pearson(&score(&f.mse, &f.ds).unwrap(), &maha);
    assert!(r_eig >= 0.9, "{r_eig}");
    assert!(r_mse < r_eig, "{r_mse} vs {r_eig}");
}

#[test]
fn gaps_settle_at_beta() {
    let f = gaussian();
    let stats = directional_stats(&f.eig, &f.ds).unwrap();
    for d in &stats.directions {
        assert!((d.gap() - f.beta).abs() <= 0.25 * f.beta, "gap {} vs β {}", d.gap(), f.beta);
        let expected = (d.lambda_hat / d.lambda).sqrt();
        assert!((d.slope - expected).abs() <= 0.15 * expected, "slope {} vs {}", d.slope, expected);
    }
}

#[test]
fn squared_errors_grow_with_squared_deviation() {
    let f = gaussian();
    for fit in error_profile_fit(&f.eig, &f.ds).unwrap() {
        assert!(fit.r_squared >= 0.8, "{fit:?}");
        assert!(fit.slope > 0.0);
    }
}

#[test]
fn eig_detections_balance_directions() {
    let f = gaussian();
    let split = detection_direction_split(&f.eig, &f.ds, 0.05).unwrap();
    assert!((0.3..=0.7).contains(&split[0]), "{split:?}");
}

#[test]
fn mse_detections_concentrate_on_one_direction() {
    let f = noisy();
    let split = detection_direction_split(&f.mse, &f.ds, 0.05).unwrap();
    let top = split.iter().cloned().fold(0.0, f64::max);
    assert!(top > 0.8, "{split:?}");
}

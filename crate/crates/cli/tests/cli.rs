use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mseeig(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mseeig"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn generate_train_score_auc() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = mseeig(d, &["gen-data", "dataset1", "--n", "300", "--seed", "4", "--out-dir", "data"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("data/dataset1_diag.csv").exists());
    assert!(d.join("data/dataset1_diag.manifest.json").exists());

    let out = mseeig(d, &["train", "--data", "data/dataset1_diag.csv", "--epochs", "50", "--out-dir", "model"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let model = fs::read_to_string(d.join("model/model.json")).unwrap();
    assert!(model.contains("\"beta\""));
    assert!(d.join("model/loss_history.csv").exists());

    let out = mseeig(d, &["score", "--model", "model/model.json", "--data", "data/dataset1_diag.csv", "--out-dir", "s"]);
    assert_eq!(code(&out), 0);
    let scores = fs::read_to_string(d.join("s/scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 301);

    let out = mseeig(d, &["auc", "--scores", "s/scores.csv", "--data", "data/dataset1_diag.csv", "--ratios", "0.01..0.03:0.01"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "ratio,auc");
    assert_eq!(rows.len(), 4);
    for row in &rows[1..] {
        let a: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&a));
    }

    let out = mseeig(d, &["plot", "--model", "model/model.json", "--data", "data/dataset1_diag.csv", "--out-dir", "p"]);
    assert_eq!(code(&out), 0);
    assert!(d.join("p/reconstruction_curves.csv").exists());
    assert!(d.join("p/scatter_data.svg").exists());
}

#[test]
fn pure_mse_model_has_no_loss_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&mseeig(d, &["gen-data", "dataset2", "--n", "200"])), 0);
    let out = mseeig(d, &["train", "--data", "out/dataset2_offdiag.csv", "--loss", "mse", "--epochs", "20"]);
    assert_eq!(code(&out), 0);
    let model = fs::read_to_string(d.join("out/model.json")).unwrap();
    assert!(model.contains("\"loss_config\": null"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.json"), r#"{"epochs": 5, "learning_rat": 0.1}"#).unwrap();
    assert_eq!(code(&mseeig(d, &["gen-data", "dataset1", "--n", "100"])), 0);
    let out = mseeig(d, &["train", "--data", "out/dataset1_diag.csv", "--config", "bad.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rat"));

    let out = mseeig(d, &["suite", "lowdim", "--config", "bad.json"]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&mseeig(d, &["train", "--data", "out/dataset1_diag.csv", "--beta", "-1"])), 2);
    assert_eq!(code(&mseeig(d, &["suite", "lowdim", "--ratios", "0.7"])), 2);
    assert_eq!(code(&mseeig(d, &["suite", "lowdim", "--loss", "mse"])), 2);
    assert_eq!(code(&mseeig(d, &["frobnicate"])), 2);
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&mseeig(d, &["train", "--data", "missing.csv"])), 3);
    fs::write(d.join("ragged.csv"), "c1,c2\n0.1,0.2\n0.3\n").unwrap();
    let out = mseeig(d, &["train", "--data", "ragged.csv"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    fs::write(d.join("flat.csv"), "c1,c2\n1,0.2\n1,0.3\n1,0.5\n").unwrap();
    assert_eq!(code(&mseeig(d, &["train", "--data", "flat.csv"])), 3);
}

#[test]
fn suite_reruns_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("small.json"),
        r#"{"n_train": 200, "epochs": 40, "seeds": [3], "ratios": [0.05, 0.1]}"#,
    )
    .unwrap();
    let first = mseeig(d, &["suite", "lowdim", "--config", "small.json", "--out-dir", "a"]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    assert!(stdout(&first).starts_with("experiment_id,dataset,ratio,method,auc\n"));
    let again = mseeig(d, &["suite", "lowdim", "--manifest", "a/manifest.json", "--out-dir", "b"]);
    assert_eq!(code(&again), 0);
    for f in ["auc.csv", "auc_per_seed.csv"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap());
    }
    let wrong = mseeig(d, &["suite", "manifold", "--manifest", "a/manifest.json"]);
    assert_eq!(code(&wrong), 2);
}

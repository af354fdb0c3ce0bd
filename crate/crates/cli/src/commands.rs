use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::json;

use mseeig::data::{
    format_float, gen_highdim_gaussian, gen_manifold3d, label_hlp, load_csv, normalize_minmax, save_csv, Dataset,
    GeneratorManifest,
};
use mseeig::detect::{default_epochs, flag_outliers, score, train, BatchSize, LossKind, TrainConfig};
use mseeig::eval::suites::{plot_coordinates, resolve_beta};
use mseeig::eval::{
    auc, curves_csv, emit_report, parse_ratios, reconstruction_curves, reconstruction_scatter, run_suite,
    scatter_svg, BetaChoice, LowdimFamily, RunManifest, ScatterPlot, SuiteConfig, SuiteKind,
};
use mseeig::loss::LossConfig;
use mseeig::network::{AutoencoderConfig, ModelDocument};
use mseeig::{Error, Result};

use crate::{Cli, Command, Common, Generator, LossArg, SuiteArg};

pub fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    match &cli.command {
        Command::GenData {
            generator,
            n,
            n_test,
            dim,
            ip_ratio,
        } => gen_data(c, *generator, *n, *n_test, *dim, *ip_ratio),
        Command::Train { data } => train_cmd(c, data),
        Command::Score { model, data } => score_cmd(c, model, data),
        Command::Auc { scores, data } => auc_cmd(c, scores, data.as_deref()),
        Command::Suite {
            kind,
            manifest,
            train_csv,
            test_csv,
        } => suite_cmd(c, *kind, manifest.as_deref(), train_csv.as_deref(), test_csv.as_deref()),
        Command::Plot { model, data, bins } => plot_cmd(c, model, data, *bins),
    }
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn beta_choice(c: &Common) -> Result<Option<BetaChoice>> {
    c.beta.as_deref().map(str::parse).transpose()
}

fn gen_data(c: &Common, g: Generator, n: Option<usize>, n_test: Option<usize>, dim: usize, ip_ratio: f64) -> Result<()> {
    if c.config.is_some() {
        return Err(Error::Config("gen-data takes no --config".into()));
    }
    let seed = c.seed.unwrap_or(0);
    ensure_dir(&c.out_dir)?;
    let save = |ds: &Dataset, name: &str, generator: &str, params: serde_json::Value| -> Result<()> {
        let path = c.out_dir.join(format!("{name}.csv"));
        save_csv(ds, &path)?;
        GeneratorManifest {
            generator: generator.into(),
            params,
            seed,
        }
        .write_beside(&path)?;
        println!("{}", path.display());
        Ok(())
    };
    match g {
        Generator::Dataset1 | Generator::Dataset2 | Generator::Dataset3 => {
            let key = match g {
                Generator::Dataset1 => "dataset1",
                Generator::Dataset2 => "dataset2",
                _ => "dataset3",
            };
            let fam = LowdimFamily::by_name(key).expect("family exists");
            let n = n.unwrap_or(2000);
            let ds = fam.generate(n, seed)?;
            let params = json!({
                "n": n,
                "mean": fam.mean,
                "cov": fam.cov,
                "noise_fraction": fam.noise_fraction,
                "noise_scale": fam.noise_scale,
            });
            save(&ds, fam.name, "gen_noisy_gaussian", params)
        }
        Generator::Manifold => {
            let (n, n_test) = (n.unwrap_or(3000), n_test.unwrap_or(3000));
            let (train, test) = gen_manifold3d(n, n_test, ip_ratio, seed)?;
            let params = json!({"n_train": n, "n_test": n_test, "ip_ratio": ip_ratio});
            save(&train, "manifold3d_train", "gen_manifold3d", params.clone())?;
            save(&test, "manifold3d_test", "gen_manifold3d", params)
        }
        Generator::Highdim => {
            let n = n.unwrap_or(5000);
            let ds = gen_highdim_gaussian(n, dim, seed)?;
            save(&ds, &format!("gaussian_m{dim}"), "gen_highdim_gaussian", json!({"n": n, "m": dim}))
        }
    }
}

/// `train --config` keys; command-line flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainOverrides {
    epochs: Option<usize>,
    batch_size: Option<BatchSize>,
    learning_rate: Option<f64>,
    record_every: Option<usize>,
    loss: Option<String>,
    theta1: Option<f64>,
    theta2: Option<f64>,
    beta: Option<BetaChoice>,
    intrinsic_dim: Option<usize>,
    seed: Option<u64>,
}

fn train_cmd(c: &Common, data: &Path) -> Result<()> {
    if c.ratios.is_some() {
        return Err(Error::Config("train takes no --ratios".into()));
    }
    let o: TrainOverrides = match &c.config {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        None => TrainOverrides::default(),
    };
    let mut raw = load_csv(data)?;
    raw.labels = None;
    let norm = normalize_minmax(&raw)?;
    let (n, m) = (norm.len(), norm.dim());
    let l = c.intrinsic_dim.or(o.intrinsic_dim).unwrap_or(m);
    let seed = c.seed.or(o.seed).unwrap_or(0);
    let loss_arg = match (c.loss, o.loss.as_deref()) {
        (Some(l), _) => l,
        (None, None | Some("mse_eig") | Some("mse-eig")) => LossArg::MseEig,
        (None, Some("mse")) => LossArg::Mse,
        (None, Some(other)) => return Err(Error::Config(format!("unknown loss `{other}`"))),
    };
    let net = AutoencoderConfig::new(m, l, seed)?;
    let loss = match loss_arg {
        LossArg::Mse => LossKind::MseOnly,
        LossArg::MseEig => {
            let choice = beta_choice(c)?.or(o.beta).unwrap_or(BetaChoice::Auto);
            LossKind::MseEig(LossConfig {
                theta1: o.theta1.unwrap_or(LossConfig::DEFAULT_THETA1),
                theta2: o.theta2.unwrap_or(LossConfig::DEFAULT_THETA2),
                beta: resolve_beta(&norm, l, choice)?,
                intrinsic_dim: l,
            })
        }
    };
    let mut cfg = TrainConfig::new(loss, seed);
    if let Some(b) = o.batch_size {
        cfg.batch_size = b;
    }
    if let Some(lr) = o.learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(r) = o.record_every {
        cfg.record_every = r;
    }
    cfg.epochs = c.epochs.or(o.epochs).unwrap_or_else(|| default_epochs(n, cfg.batch_size));

    let model = train(&norm, &net, &cfg)?;
    ensure_dir(&c.out_dir)?;
    write(&c.out_dir.join("model.json"), &(model.to_document().to_json() + "\n"))?;
    let mut hist = String::from("epoch,total,mse_part,eig_part\n");
    for r in &model.loss_history {
        hist += &format!(
            "{},{},{},{}\n",
            r.epoch,
            format_float(r.total),
            format_float(r.mse_part),
            format_float(r.eig_part)
        );
    }
    write(&c.out_dir.join("loss_history.csv"), &hist)?;
    let last = model.final_loss();
    let beta = cfg.loss.config().map(|l| format!(", beta {:.6}", l.beta)).unwrap_or_default();
    println!(
        "trained {m}-{l}-{m} for {} epochs{beta}: total {:.6e}, mse {:.6e}, eig {:.6e}",
        cfg.epochs, last.total, last.mse_part, last.eig_part
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<ModelDocument> {
    ModelDocument::from_json(&read(path)?)
}

fn score_cmd(c: &Common, model: &Path, data: &Path) -> Result<()> {
    let doc = load_model(model)?;
    let ds = load_csv(data)?;
    let scores = score(&doc, &ds)?;
    let mut out = String::from(if ds.labels.is_some() { "row_index,score,label\n" } else { "row_index,score\n" });
    for (i, s) in scores.iter().enumerate() {
        match &ds.labels {
            Some(l) => out += &format!("{i},{},{}\n", format_float(*s), l[i]),
            None => out += &format!("{i},{}\n", format_float(*s)),
        }
    }
    let path = c.out_dir.join("scores.csv");
    write(&path, &out)?;
    println!("{}", path.display());
    Ok(())
}

fn auc_cmd(c: &Common, scores_path: &Path, data: Option<&Path>) -> Result<()> {
    let scored = load_csv(scores_path)?;
    let col = scored
        .column_names
        .iter()
        .position(|n| n == "score")
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "scores file has no `score` column".into(),
        })?;
    let scores = scored.samples.column(col);
    let data = data.map(load_csv).transpose()?;
    if let Some(d) = &data {
        if d.len() != scores.len() {
            return Err(Error::DimensionMismatch {
                context: "auc rows",
                expected: (scores.len(), 1),
                got: (d.len(), 1),
            });
        }
    }
    match &c.ratios {
        Some(text) => {
            let d = data.ok_or_else(|| Error::Config("--ratios needs --data to label high leverage points".into()))?;
            println!("ratio,auc");
            for r in parse_ratios(text)? {
                let labeled = label_hlp(&d, r, None)?;
                let a = auc(&scores, labeled.labels.as_deref().unwrap_or_default())?;
                println!("{},{}", format_float(r), format_float(a));
            }
        }
        None => {
            let labels = scored
                .labels
                .or_else(|| data.and_then(|d| d.labels))
                .ok_or_else(|| Error::Config("no labels: the scores file and --data have no label column".into()))?;
            println!("{}", format_float(auc(&scores, &labels)?));
        }
    }
    Ok(())
}

fn suite_cmd(
    c: &Common,
    kind: SuiteArg,
    manifest: Option<&Path>,
    train_csv: Option<&Path>,
    test_csv: Option<&Path>,
) -> Result<()> {
    let kind = match kind {
        SuiteArg::Lowdim => SuiteKind::Lowdim,
        SuiteArg::Manifold => SuiteKind::Manifold,
        SuiteArg::Highdim => SuiteKind::Highdim,
        SuiteArg::Csv => SuiteKind::Csv,
    };
    if c.loss.is_some() {
        return Err(Error::Config("suites train both losses; --loss does not apply".into()));
    }
    let cfg = match manifest {
        Some(p) => {
            let overrides = c.seed.is_some()
                || c.ratios.is_some()
                || c.epochs.is_some()
                || c.beta.is_some()
                || c.intrinsic_dim.is_some()
                || train_csv.is_some()
                || test_csv.is_some();
            if overrides {
                return Err(Error::Config("--manifest cannot be combined with other suite settings".into()));
            }
            let m = RunManifest::load(p)?;
            if m.suite != kind {
                return Err(Error::Config(format!(
                    "manifest describes the {} suite, not {}",
                    m.suite.name(),
                    kind.name()
                )));
            }
            m.config
        }
        None => {
            let mut cfg = match &c.config {
                Some(p) => SuiteConfig::from_json_overrides(kind, &read(p)?)?,
                None => SuiteConfig::defaults(kind),
            };
            if let Some(s) = c.seed {
                cfg.seeds = vec![s];
            }
            if let Some(r) = &c.ratios {
                cfg.ratios = parse_ratios(r)?;
            }
            if let Some(e) = c.epochs {
                cfg.epochs = Some(e);
            }
            if let Some(b) = beta_choice(c)? {
                cfg.beta = b;
            }
            if let Some(l) = c.intrinsic_dim {
                cfg.intrinsic_dim = Some(l);
            }
            let path_string = |p: &Path| p.to_string_lossy().into_owned();
            if let Some(p) = train_csv {
                cfg.train_csv = Some(path_string(p));
            }
            if let Some(p) = test_csv {
                cfg.test_csv = Some(path_string(p));
            }
            cfg
        }
    };
    let report = run_suite(kind, &cfg, &mut |msg| eprintln!("{msg}"))?;
    emit_report(&report, &c.out_dir)?;
    print!("{}", report.auc_csv());
    eprintln!(
        "wrote {} ({:.1}s)",
        c.out_dir.display(),
        report.manifest.wall_time_secs
    );
    Ok(())
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|ch| if ch.is_ascii_alphanumeric() || ch == '-' || ch == '_' { ch } else { '_' })
        .collect()
}

fn plot_cmd(c: &Common, model: &Path, data: &Path, bins: usize) -> Result<()> {
    let doc = load_model(model)?;
    let ds = load_csv(data)?;
    ensure_dir(&c.out_dir)?;
    let curves = reconstruction_curves(&doc, &ds, bins)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let path = c.out_dir.join("reconstruction_curves.csv");
    write(&path, &curves_csv(&curves))?;
    written.push(path);
    for d in 0..ds.dim() {
        let mut plot = reconstruction_scatter(&doc, &ds, d)?;
        plot.id = file_safe(&plot.id);
        let path = c.out_dir.join(format!("scatter_{}.svg", plot.id));
        write(&path, &scatter_svg(&plot))?;
        written.push(path);
    }
    if ds.dim() >= 2 {
        let ratio = match &c.ratios {
            Some(r) => parse_ratios(r)?[0],
            None => 0.05,
        };
        let norm = match ds.norm_params {
            Some(_) => ds.clone(),
            None => ds.normalize_with(&doc.normalization)?,
        };
        let (points, x_label, y_label) = plot_coordinates(&norm)?;
        let plot = ScatterPlot {
            id: "data".into(),
            title: format!("top {ratio} flagged by reconstruction error"),
            x_label,
            y_label,
            points,
            flags: flag_outliers(&score(&doc, &ds)?, ratio)?,
        };
        let path = c.out_dir.join("scatter_data.svg");
        write(&path, &scatter_svg(&plot))?;
        written.push(path);
    }
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

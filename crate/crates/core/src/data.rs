//! Datasets: seeded synthetic generators, min-max normalization,
//! Mahalanobis-based HLP labeling and CSV ingestion/emission.

use std::io::Write;
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, covariance, mahalanobis_sq, sym_eigen, Matrix};
use crate::rng::{self, BoxMuller};

/// Per-column `(min, max)` used by min-max normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormParams {
    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Maps raw rows into normalized coordinates (no clamping, so unseen
    /// data may fall outside `[0, 1]`).
    pub fn apply(&self, raw: &Matrix) -> Result<Matrix> {
        self.check(raw)?;
        let mut out = raw.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.min[j]) / (self.max[j] - self.min[j]);
            }
        }
        Ok(out)
    }

    pub fn invert(&self, normalized: &Matrix) -> Result<Matrix> {
        self.check(normalized)?;
        let mut out = normalized.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = self.min[j] + *v * (self.max[j] - self.min[j]);
            }
        }
        Ok(out)
    }

    fn check(&self, m: &Matrix) -> Result<()> {
        if m.cols() != self.dim() || self.max.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "normalization",
                expected: (m.rows(), self.dim()),
                got: m.shape(),
            });
        }
        Ok(())
    }
}

/// A sample matrix with optional binary labels (1 = positive/outlier).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Matrix,
    pub labels: Option<Vec<u8>>,
    pub column_names: Vec<String>,
    pub norm_params: Option<NormParams>,
}

impl Dataset {
    pub fn new(samples: Matrix) -> Self {
        let column_names = default_names(samples.cols());
        Dataset {
            samples,
            labels: None,
            column_names,
            norm_params: None,
        }
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::Config(format!(
                "{} column names for {} columns",
                names.len(),
                self.dim()
            )));
        }
        self.column_names = names;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::Config(format!(
                "{} labels for {} rows",
                labels.len(),
                self.len()
            )));
        }
        if labels.iter().any(|&v| v > 1) {
            return Err(Error::Config("labels must be 0 or 1".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.samples.cols()
    }

    pub fn is_normalized(&self) -> bool {
        self.norm_params.is_some()
    }

    pub fn positives(&self) -> usize {
        self.labels
            .as_ref()
            .map_or(0, |l| l.iter().filter(|&&v| v == 1).count())
    }

    /// Restores raw units for a normalized dataset; raw datasets are
    /// returned unchanged.
    pub fn denormalize(&self) -> Result<Dataset> {
        match &self.norm_params {
            None => Ok(self.clone()),
            Some(p) => Ok(Dataset {
                samples: p.invert(&self.samples)?,
                norm_params: None,
                ..self.clone()
            }),
        }
    }

    /// Normalizes with externally supplied parameters (e.g. a model's).
    pub fn normalize_with(&self, params: &NormParams) -> Result<Dataset> {
        let raw = self.denormalize()?;
        Ok(Dataset {
            samples: params.apply(&raw.samples)?,
            norm_params: Some(params.clone()),
            ..raw
        })
    }
}

fn default_names(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("c{j}")).collect()
}

fn gaussian_rows(n: usize, mean: &[f64], cov: &Matrix, rng: &mut rng::Xoshiro256PlusPlus) -> Result<Matrix> {
    let m = mean.len();
    if cov.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            context: "gaussian generator",
            expected: (m, m),
            got: cov.shape(),
        });
    }
    let l = cholesky(cov)?;
    let mut bm = BoxMuller::new();
    let mut z = vec![0.0; m];
    let mut out = Matrix::zeros(n, m);
    for i in 0..n {
        z.iter_mut().for_each(|v| *v = bm.sample(rng));
        let row = out.row_mut(i);
        for a in 0..m {
            let mut s = mean[a];
            for (b, zb) in z.iter().enumerate().take(a + 1) {
                s += l.get(a, b) * zb;
            }
            row[a] = s;
        }
    }
    Ok(out)
}

/// `n` draws of `mean + L·z`, `L = chol(cov)`, `z` standard normal.
pub fn gen_gaussian(n: usize, mean: &[f64], cov: &Matrix, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config("gen_gaussian needs n ≥ 1".into()));
    }
    let samples = gaussian_rows(n, mean, cov, &mut rng::seeded(seed))?;
    Ok(Dataset::new(samples))
}

/// Gaussian sample with `⌊fraction·n⌋` rows replaced by
/// `mean + scale·u`, `u ~ U[−1, 1]^m`.
pub fn gen_noisy_gaussian(
    n: usize,
    mean: &[f64],
    cov: &Matrix,
    noise_fraction: f64,
    noise_scale: f64,
    seed: u64,
) -> Result<Dataset> {
    if !(0.0..=0.2).contains(&noise_fraction) {
        return Err(Error::Config(format!(
            "noise_fraction must lie in [0, 0.2], got {noise_fraction}"
        )));
    }
    let mut ds = gen_gaussian(n, mean, cov, seed)?;
    let k = (noise_fraction * n as f64).floor() as usize;
    if k == 0 {
        return Ok(ds);
    }
    let mut rng = rng::substream(seed, 0x6e6f697365);
    let rows = index::sample(&mut rng, n, k).into_vec();
    for i in rows {
        for (v, mu) in ds.samples.row_mut(i).iter_mut().zip(mean) {
            *v = mu + noise_scale * rng::uniform(&mut rng, -1.0, 1.0);
        }
    }
    Ok(ds)
}

/// Quadratic-manifold train/test pair: `(p1, p3)` Gaussian with near-zero
/// correlation and `p2 = p1²`. The test set is a fresh sample in which
/// `⌊δ₁·n_test⌋` rows have `p2` pushed off the manifold by a uniform offset
/// of magnitude `[3σ, 6σ]` (`σ` = std of `p2` in the training sample) and
/// are labeled 1.
///
/// The training sample and the clean test sample do not depend on `δ₁`.
pub fn gen_manifold3d(n_train: usize, n_test: usize, ip_ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(ip_ratio > 0.0 && ip_ratio < 0.5) {
        return Err(Error::Config(format!(
            "ip_ratio must lie in (0, 0.5), got {ip_ratio}"
        )));
    }
    if n_train < 2 || n_test == 0 {
        return Err(Error::Config("manifold generator needs n_train ≥ 2 and n_test ≥ 1".into()));
    }
    let names: Vec<String> = ["parameter1", "parameter2", "parameter3"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let base_cov = Matrix::identity(2);
    let lift = |plane: &Matrix| -> Matrix {
        let mut out = Matrix::zeros(plane.rows(), 3);
        for i in 0..plane.rows() {
            let (p1, p3) = (plane.get(i, 0), plane.get(i, 1));
            out.row_mut(i).copy_from_slice(&[p1, p1 * p1, p3]);
        }
        out
    };
    let train_plane = gaussian_rows(n_train, &[0.0, 0.0], &base_cov, &mut rng::substream(seed, 1))?;
    let train = lift(&train_plane);
    let p2 = train.column(1);
    let mu = p2.iter().sum::<f64>() / n_train as f64;
    let sigma = (p2.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n_train as f64).sqrt();

    let test_plane = gaussian_rows(n_test, &[0.0, 0.0], &base_cov, &mut rng::substream(seed, 2))?;
    let mut test = lift(&test_plane);
    let k = (ip_ratio * n_test as f64).floor() as usize;
    let mut rng = rng::substream(seed, 3);
    let mut labels = vec![0u8; n_test];
    for i in index::sample(&mut rng, n_test, k).into_vec() {
        let magnitude = rng::uniform(&mut rng, 3.0 * sigma, 6.0 * sigma);
        let sign = if rand::Rng::random::<bool>(&mut rng) { 1.0 } else { -1.0 };
        let row = test.row_mut(i);
        row[1] += sign * magnitude;
        labels[i] = 1;
    }
    let train = Dataset::new(train).with_names(names.clone())?;
    let test = Dataset::new(test).with_names(names)?.with_labels(labels)?;
    Ok((train, test))
}

/// Zero-mean Gaussian with a diagonal covariance whose variances are drawn
/// log-uniformly from `[0.25, 4]`.
pub fn gen_highdim_gaussian(n: usize, m: usize, seed: u64) -> Result<Dataset> {
    if m < 2 {
        return Err(Error::Config(format!("high-dimensional generator needs m ≥ 2, got {m}")));
    }
    let mut rng = rng::substream(seed, 0x7661726961);
    let variances: Vec<f64> = (0..m)
        .map(|_| rng::uniform(&mut rng, 0.25f64.ln(), 4.0f64.ln()).exp())
        .collect();
    gen_gaussian(n, &vec![0.0; m], &Matrix::from_diag(&variances), seed)
}

/// Column-wise `(x − min)/(max − min)`.
pub fn normalize_minmax(ds: &Dataset) -> Result<Dataset> {
    let raw = ds.denormalize()?;
    let m = raw.dim();
    let mut min = vec![f64::INFINITY; m];
    let mut max = vec![f64::NEG_INFINITY; m];
    for r in raw.samples.row_iter() {
        for j in 0..m {
            min[j] = min[j].min(r[j]);
            max[j] = max[j].max(r[j]);
        }
    }
    for j in 0..m {
        // also rejects NaN bounds
        if max[j].partial_cmp(&min[j]) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::DegenerateColumn {
                index: j,
                name: raw.column_names[j].clone(),
            });
        }
    }
    raw.normalize_with(&NormParams { min, max })
}

/// Indices of the `k` largest scores; ties go to the lower row index.
pub fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Squared Mahalanobis distance of every row against the rows' own mean
/// and covariance, optionally restricted to a subset of columns.
pub fn mahalanobis_column_scores(samples: &Matrix, feature_subset: Option<&[usize]>) -> Result<Vec<f64>> {
    let sub = match feature_subset {
        Some(idx) => samples.select_columns(idx)?,
        None => samples.clone(),
    };
    let eig = sym_eigen(&covariance(&sub)?)?;
    let mean = sub.column_means();
    sub.row_iter().map(|r| mahalanobis_sq(r, &mean, &eig)).collect()
}

/// Labels the top `⌊δ₂·n⌋` rows by Mahalanobis distance (computed on the
/// chosen columns) as positive.
pub fn label_hlp(ds: &Dataset, ratio: f64, feature_subset: Option<&[usize]>) -> Result<Dataset> {
    if !(ratio > 0.0 && ratio < 0.5) {
        return Err(Error::Config(format!("HLP ratio must lie in (0, 0.5), got {ratio}")));
    }
    let scores = mahalanobis_column_scores(&ds.samples, feature_subset)?;
    let k = (ratio * ds.len() as f64).floor() as usize;
    let mut labels = vec![0u8; ds.len()];
    for i in top_k_indices(&scores, k) {
        labels[i] = 1;
    }
    ds.clone().with_labels(labels)
}

/// Writes `c1,…,cm[,label]` with round-trip-exact float formatting.
pub fn save_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(ds, &mut w).map_err(|e| Error::io(path, e))
}

pub fn write_csv<W: Write>(ds: &Dataset, w: &mut W) -> std::io::Result<()> {
    let mut header = ds.column_names.join(",");
    if ds.labels.is_some() {
        header.push_str(",label");
    }
    writeln!(w, "{header}")?;
    let mut line = String::new();
    for i in 0..ds.len() {
        line.clear();
        for (j, v) in ds.samples.row(i).iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format_float(*v));
        }
        if let Some(labels) = &ds.labels {
            line.push(',');
            line.push_str(if labels[i] == 1 { "1" } else { "0" });
        }
        writeln!(w, "{line}")?;
    }
    w.flush()
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

/// Reads a dataset CSV. A final column named `label` becomes the labels.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h.map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
    };
    let mut names: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
    for name in &names {
        if name.is_empty() || name.parse::<f64>().is_ok() {
            return Err(Error::Parse {
                line: 1,
                message: format!("unknown header field {name:?}"),
            });
        }
    }
    let has_label = names.last().map(String::as_str) == Some("label");
    if has_label {
        names.pop();
    }
    if names.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no feature columns".into(),
        });
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str()) || n.as_str() == "label") {
        return Err(Error::Parse {
            line: 1,
            message: format!("duplicate or misplaced header field {dup:?}"),
        });
    }
    let m = names.len();
    let width = m + usize::from(has_label);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec.get(0).is_some_and(|s| s.trim().is_empty()) {
            continue;
        }
        if rec.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        for (j, cell) in rec.iter().take(m).enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("non-numeric value {cell:?} in column {}", names[j]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            data.push(v);
        }
        if has_label {
            let cell = rec.get(m).unwrap_or("").trim();
            let v = match cell {
                "0" => 0u8,
                "1" => 1u8,
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("label must be 0 or 1, found {cell:?}"),
                    })
                }
            };
            labels.push(v);
        }
    }
    let n = data.len() / m;
    let ds = Dataset::new(Matrix::from_vec(n, m, data)?).with_names(names)?;
    if has_label {
        ds.with_labels(labels)
    } else {
        Ok(ds)
    }
}

/// Provenance record written beside every generated CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorManifest {
    pub generator: String,
    pub params: serde_json::Value,
    pub seed: u64,
}

impl GeneratorManifest {
    /// Writes `<csv stem>.manifest.json` next to `csv_path`.
    pub fn write_beside(&self, csv_path: &Path) -> Result<std::path::PathBuf> {
        let path = csv_path.with_extension("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(values: &[f64]) -> Dataset {
        Dataset::new(Matrix::from_vec(values.len(), 1, values.to_vec()).unwrap())
    }

    #[test]
    fn normalize_simple_column() {
        let ds = normalize_minmax(&col(&[2.0, 4.0, 6.0])).unwrap();
        assert_eq!(ds.samples.as_slice(), &[0.0, 0.5, 1.0]);
        assert!(ds.is_normalized());
        let back = ds.denormalize().unwrap();
        assert_eq!(back.samples.as_slice(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn normalize_is_idempotent_on_unit_columns() {
        let once = normalize_minmax(&col(&[0.0, 0.3, 1.0])).unwrap();
        let raw = Dataset {
            norm_params: None,
            ..once.clone()
        };
        let twice = normalize_minmax(&raw).unwrap();
        assert_eq!(once.samples, twice.samples);
    }

    #[test]
    fn normalize_rejects_constant_column() {
        let ds = Dataset::new(Matrix::from_rows(&[[1.0, 3.0], [2.0, 3.0]]).unwrap());
        match normalize_minmax(&ds) {
            Err(Error::DegenerateColumn { index, name }) => {
                assert_eq!(index, 1);
                assert_eq!(name, "c2");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn labels_validated() {
        assert!(col(&[1.0, 2.0]).with_labels(vec![0, 2]).is_err());
        assert!(col(&[1.0, 2.0]).with_labels(vec![0]).is_err());
    }

    #[test]
    fn noisy_generator_replaces_floor_fraction() {
        let cov = Matrix::identity(2);
        let clean = gen_gaussian(1000, &[0.0, 0.0], &cov, 5).unwrap();
        let noisy = gen_noisy_gaussian(1000, &[0.0, 0.0], &cov, 0.03, 10.0, 5).unwrap();
        let changed = (0..1000)
            .filter(|&i| clean.samples.row(i) != noisy.samples.row(i))
            .count();
        assert_eq!(changed, 30);
        let none = gen_noisy_gaussian(1000, &[0.0, 0.0], &cov, 0.0, 10.0, 5).unwrap();
        assert_eq!(none, clean);
        assert!(gen_noisy_gaussian(10, &[0.0, 0.0], &cov, 0.3, 1.0, 5).is_err());
    }

    #[test]
    fn generator_rejects_indefinite_covariance() {
        let cov = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(
            gen_gaussian(10, &[0.0, 0.0], &cov, 1),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn manifold_construction() {
        let (train, test) = gen_manifold3d(500, 400, 0.05, 11).unwrap();
        for r in train.samples.row_iter() {
            assert_eq!(r[1], r[0] * r[0]);
        }
        let labels = test.labels.as_ref().unwrap();
        assert_eq!(test.positives(), 20);
        let p2 = train.samples.column(1);
        let mu = p2.iter().sum::<f64>() / 500.0;
        let sigma = (p2.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 500.0).sqrt();
        for (i, r) in test.samples.row_iter().enumerate() {
            let resid = (r[1] - r[0] * r[0]).abs();
            if labels[i] == 0 {
                assert_eq!(resid, 0.0);
            } else {
                assert!(resid >= 3.0 * sigma * (1.0 - 1e-12));
                assert!(resid <= 6.0 * sigma * (1.0 + 1e-12));
            }
        }
        assert!(gen_manifold3d(10, 10, 0.5, 1).is_err());
    }

    #[test]
    fn manifold_train_independent_of_ratio() {
        let (a, ta) = gen_manifold3d(100, 100, 0.02, 3).unwrap();
        let (b, tb) = gen_manifold3d(100, 100, 0.08, 3).unwrap();
        assert_eq!(a, b);
        // clean rows coincide
        let (la, lb) = (ta.labels.unwrap(), tb.labels.unwrap());
        for i in 0..100 {
            if la[i] == 0 && lb[i] == 0 {
                assert_eq!(ta.samples.row(i), tb.samples.row(i));
            }
        }
    }

    #[test]
    fn highdim_shape() {
        let ds = gen_highdim_gaussian(200, 50, 4).unwrap();
        assert_eq!(ds.dim(), 50);
        assert_eq!(ds, gen_highdim_gaussian(200, 50, 4).unwrap());
        assert!(gen_highdim_gaussian(10, 1, 4).is_err());
    }

    #[test]
    fn label_hlp_counts() {
        let ds = gen_gaussian(100, &[0.0, 0.0], &Matrix::identity(2), 8).unwrap();
        let labeled = label_hlp(&ds, 0.05, None).unwrap();
        assert_eq!(labeled.positives(), 5);
        assert!(label_hlp(&ds, 0.5, None).is_err());
    }

    #[test]
    fn top_k_ties_by_index() {
        assert_eq!(top_k_indices(&[1.0, 3.0, 3.0, 2.0], 2), vec![1, 2]);
        assert_eq!(top_k_indices(&[0.0; 5], 3), vec![0, 1, 2]);
    }

    #[test]
    fn csv_round_trip_with_labels() {
        let ds = Dataset::new(
            Matrix::from_rows(&[[0.1, 1e-300], [std::f64::consts::PI, -2.5e17]]).unwrap(),
        )
        .with_labels(vec![1, 0])
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("c1,c2,label\n"));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        match parse_csv("a,b\n1,2\n3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_csv("a,b\n1,2\n3,x\n") {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("non-numeric"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_csv("1.0,2.0\n3,4\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_csv("a,b,label\n1,2,7\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_csv(""), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn csv_custom_names() {
        let ds = parse_csv("calcium,total_protein\n2.3,55\n2.1,51\n").unwrap();
        assert_eq!(ds.column_names, vec!["calcium", "total_protein"]);
        assert!(ds.labels.is_none());
        assert_eq!(ds.len(), 2);
    }
}

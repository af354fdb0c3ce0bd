use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::detect::{BatchSize, DEFAULT_LEARNING_RATE};
use crate::error::{Error, Result};
use crate::loss::LossConfig;

/// How β is chosen for MSE-eig runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaChoice {
    /// `select_beta` on the top-`l` eigenvalues of the normalized training data.
    Auto,
    Fixed(f64),
}

impl FromStr for BetaChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(BetaChoice::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(BetaChoice::Fixed(v)),
            _ => Err(Error::Config(format!(
                "beta must be `auto` or a positive number, got `{s}`"
            ))),
        }
    }
}

impl fmt::Display for BetaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaChoice::Auto => f.write_str("auto"),
            BetaChoice::Fixed(v) => write!(f, "{v:?}"),
        }
    }
}

impl Serialize for BetaChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BetaChoice::Auto => s.serialize_str("auto"),
            BetaChoice::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for BetaChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse(),
            Raw::Number(v) => format!("{v:?}").parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Lowdim,
    Manifold,
    Highdim,
    Csv,
}

impl SuiteKind {
    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Lowdim => "lowdim",
            SuiteKind::Manifold => "manifold",
            SuiteKind::Highdim => "highdim",
            SuiteKind::Csv => "csv",
        }
    }
}

impl FromStr for SuiteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowdim" => Ok(SuiteKind::Lowdim),
            "manifold" => Ok(SuiteKind::Manifold),
            "highdim" => Ok(SuiteKind::Highdim),
            "csv" => Ok(SuiteKind::Csv),
            other => Err(Error::Config(format!("unknown suite `{other}`"))),
        }
    }
}

/// Fully resolved suite parameters. A run is a deterministic function of
/// its kind and this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub ratios: Vec<f64>,
    pub seeds: Vec<u64>,
    pub n_train: usize,
    /// Test rows (manifold only).
    pub n_test: usize,
    /// `None` trains for the default optimizer-step budget.
    pub epochs: Option<usize>,
    pub batch_size: BatchSize,
    pub learning_rate: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub beta: BetaChoice,
    /// Column counts for the high-dimensional suite.
    pub dims: Vec<usize>,
    /// Hidden width; `None` uses the suite's natural value.
    pub intrinsic_dim: Option<usize>,
    pub train_csv: Option<String>,
    pub test_csv: Option<String>,
    /// Outlier ratio used for the scatter plots.
    pub plot_ratio: f64,
}

pub fn default_ratios() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 100.0).collect()
}

impl SuiteConfig {
    pub fn defaults(kind: SuiteKind) -> Self {
        let base = SuiteConfig {
            ratios: default_ratios(),
            seeds: (0..5).collect(),
            n_train: 2000,
            n_test: 0,
            epochs: None,
            batch_size: BatchSize::Auto,
            learning_rate: DEFAULT_LEARNING_RATE,
            theta1: LossConfig::DEFAULT_THETA1,
            theta2: LossConfig::DEFAULT_THETA2,
            beta: BetaChoice::Auto,
            dims: Vec::new(),
            intrinsic_dim: None,
            train_csv: None,
            test_csv: None,
            plot_ratio: 0.05,
        };
        match kind {
            SuiteKind::Lowdim | SuiteKind::Csv => base,
            SuiteKind::Manifold => SuiteConfig {
                n_train: 3000,
                n_test: 3000,
                ..base
            },
            SuiteKind::Highdim => SuiteConfig {
                n_train: 5000,
                epochs: Some(200),
                dims: vec![50, 100],
                ..base
            },
        }
    }

    /// Defaults for `kind` overlaid with a JSON object; unknown keys are
    /// rejected.
    pub fn from_json_overrides(kind: SuiteKind, text: &str) -> Result<Self> {
        let o: SuiteOverrides =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("suite config: {e}")))?;
        let mut c = SuiteConfig::defaults(kind);
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = o.$f { c.$f = v; } )* };
        }
        take!(ratios, seeds, n_train, n_test, batch_size, learning_rate, theta1, theta2, beta, dims, plot_ratio);
        if let Some(e) = o.epochs {
            c.epochs = e;
        }
        if let Some(l) = o.intrinsic_dim {
            c.intrinsic_dim = l;
        }
        if let Some(p) = o.train_csv {
            c.train_csv = p;
        }
        if let Some(p) = o.test_csv {
            c.test_csv = p;
        }
        Ok(c)
    }

    pub fn validate(&self, kind: SuiteKind) -> Result<()> {
        if self.ratios.is_empty() {
            return Err(Error::Config("at least one ratio is required".into()));
        }
        if let Some(r) = self.ratios.iter().find(|r| !(**r > 0.0 && **r < 0.5)) {
            return Err(Error::Config(format!("ratios must lie in (0, 0.5), got {r}")));
        }
        if !(self.plot_ratio > 0.0 && self.plot_ratio < 1.0) {
            return Err(Error::Config(format!(
                "plot_ratio must lie in (0, 1), got {}",
                self.plot_ratio
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.epochs == Some(0) {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.intrinsic_dim == Some(0) {
            return Err(Error::Config("intrinsic_dim must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.theta1 >= 0.0 && self.theta2 >= 0.0) {
            return Err(Error::Config("theta1 and theta2 must be non-negative".into()));
        }
        match kind {
            SuiteKind::Lowdim if self.n_train < 20 => {
                Err(Error::Config("lowdim suite needs n_train ≥ 20".into()))
            }
            SuiteKind::Manifold if self.n_train < 30 || self.n_test < 30 => {
                Err(Error::Config("manifold suite needs n_train, n_test ≥ 30".into()))
            }
            SuiteKind::Highdim if self.dims.is_empty() || self.dims.iter().any(|&m| m < 2) => {
                Err(Error::Config("highdim suite needs dims, each ≥ 2".into()))
            }
            SuiteKind::Csv if self.train_csv.is_none() || self.test_csv.is_none() => {
                Err(Error::Config("csv suite needs train_csv and test_csv".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteOverrides {
    ratios: Option<Vec<f64>>,
    seeds: Option<Vec<u64>>,
    n_train: Option<usize>,
    n_test: Option<usize>,
    #[serde(default, deserialize_with = "some")]
    epochs: Option<Option<usize>>,
    batch_size: Option<BatchSize>,
    learning_rate: Option<f64>,
    theta1: Option<f64>,
    theta2: Option<f64>,
    beta: Option<BetaChoice>,
    dims: Option<Vec<usize>>,
    #[serde(default, deserialize_with = "some")]
    intrinsic_dim: Option<Option<usize>>,
    #[serde(default, deserialize_with = "some")]
    train_csv: Option<Option<String>>,
    #[serde(default, deserialize_with = "some")]
    test_csv: Option<Option<String>>,
    plot_ratio: Option<f64>,
}

// distinguishes an explicit `null` from an absent key
fn some<'de, D, T>(d: D) -> std::result::Result<Option<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    T::deserialize(d).map(Some)
}

/// Parses `start..end:step` (inclusive) or a comma-separated list.
pub fn parse_ratios(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse ratios `{text}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let ratios = if let Some((range, step)) = text.split_once(':') {
        let (start, end) = range.split_once("..").ok_or_else(bad)?;
        let (start, end, step) = (num(start)?, num(end)?, num(step)?);
        if !(step > 0.0 && end >= start) {
            return Err(bad());
        }
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        // rounding keeps 0.01·k printable as written
        (0..count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if ratios.is_empty() || ratios.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(bad());
    }
    Ok(ratios)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_range_matches_default() {
        let r = parse_ratios("0.01..0.10:0.01").unwrap();
        assert_eq!(r, default_ratios());
        assert_eq!(format!("{:?}", r[5]), "0.06");
    }

    #[test]
    fn ratio_list_and_errors() {
        assert_eq!(parse_ratios("0.05, 0.1").unwrap(), vec![0.05, 0.1]);
        assert!(parse_ratios("0.1..0.01:0.01").is_err());
        assert!(parse_ratios("a..b:c").is_err());
        assert!(parse_ratios("1.5").is_err());
    }

    #[test]
    fn beta_parses_both_forms() {
        assert_eq!("auto".parse::<BetaChoice>().unwrap(), BetaChoice::Auto);
        assert_eq!("0.05".parse::<BetaChoice>().unwrap(), BetaChoice::Fixed(0.05));
        assert!("-1".parse::<BetaChoice>().is_err());
        let v: BetaChoice = serde_json::from_str("0.04").unwrap();
        assert_eq!(v, BetaChoice::Fixed(0.04));
        assert_eq!(serde_json::to_string(&BetaChoice::Auto).unwrap(), "\"auto\"");
    }

    #[test]
    fn overrides_apply_and_reject_unknown_keys() {
        let c = SuiteConfig::from_json_overrides(
            SuiteKind::Highdim,
            r#"{"seeds": [7], "epochs": 3, "beta": "auto"}"#,
        )
        .unwrap();
        assert_eq!(c.seeds, vec![7]);
        assert_eq!(c.epochs, Some(3));
        assert_eq!(c.dims, vec![50, 100]);
        let c = SuiteConfig::from_json_overrides(SuiteKind::Highdim, r#"{"epochs": null}"#).unwrap();
        assert_eq!(c.epochs, None);
        let err = SuiteConfig::from_json_overrides(SuiteKind::Lowdim, r#"{"epoch": 3}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn full_config_round_trips_as_overrides() {
        let c = SuiteConfig::defaults(SuiteKind::Manifold);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(SuiteConfig::from_json_overrides(SuiteKind::Manifold, &text).unwrap(), c);
    }
}

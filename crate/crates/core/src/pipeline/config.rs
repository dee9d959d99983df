use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::StudyWindow;

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_test_days() -> usize {
    14
}
fn default_k_range() -> (usize, usize) {
    (5, 50)
}
fn default_min_terms() -> usize {
    10
}
fn default_bigram_min_freq() -> usize {
    500
}
fn default_one() -> usize {
    1
}
fn default_max_lag() -> usize {
    14
}
fn default_min_count() -> usize {
    10
}
fn default_alpha() -> f64 {
    0.05
}
fn default_max_d() -> usize {
    2
}
fn default_significances() -> Vec<f64> {
    vec![0.05, 0.01]
}

/// Number of topics: a fixed J or `"auto"` for coherence-based selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TopicCount {
    Fixed(usize),
    Auto(String),
}

impl Default for TopicCount {
    fn default() -> Self {
        TopicCount::Auto("auto".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizerKind {
    #[default]
    Identity,
    Suffix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentKind {
    #[default]
    Passthrough,
    Lexicon,
    Sidecar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdaSettings {
    /// `None` means 50 / k.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub per_k_seeds: usize,
    pub top_n: usize,
    pub coherence_window: usize,
}

impl Default for LdaSettings {
    fn default() -> Self {
        LdaSettings {
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            per_k_seeds: 1,
            top_n: 20,
            coherence_window: 110,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSettings {
    pub p: (usize, usize),
    pub q: (usize, usize),
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings { p: (0, 7), q: (0, 7) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VarSettings {
    pub p_max: usize,
    pub horizon: usize,
    /// Difference every variable to the response's order before fitting.
    pub difference: bool,
}

impl Default for VarSettings {
    fn default() -> Self {
        VarSettings {
            p_max: 20,
            horizon: 7,
            difference: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub tweets: PathBuf,
    pub cases: PathBuf,
    #[serde(default)]
    pub sentiment_labels: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub window: StudyWindow,
    /// Last training day; defaults to `test_days` before the window end.
    #[serde(default)]
    pub split: Option<NaiveDate>,
    #[serde(default = "default_test_days")]
    pub test_days: usize,
    #[serde(default)]
    pub topics: TopicCount,
    #[serde(default = "default_k_range")]
    pub k_range: (usize, usize),
    #[serde(default)]
    pub lda: LdaSettings,
    #[serde(default = "default_min_terms")]
    pub min_terms: usize,
    #[serde(default = "default_bigram_min_freq")]
    pub bigram_min_freq: usize,
    #[serde(default = "default_one")]
    pub vocab_min_freq: usize,
    #[serde(default)]
    pub normalizer: NormalizerKind,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    #[serde(default)]
    pub sentiment: SentimentKind,
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    #[serde(default = "default_min_count")]
    pub min_count: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_max_d")]
    pub max_d: usize,
    #[serde(default)]
    pub grid: GridSettings,
    #[serde(default = "default_significances")]
    pub significances: Vec<f64>,
    /// Lags of each selected component fed to ARIMAX; all of 0..=max_lag
    /// when absent.
    #[serde(default)]
    pub arimax_lags: Option<Vec<usize>>,
    #[serde(default)]
    pub var: VarSettings,
    /// Five extra jittered simplex runs per ARIMA fit.
    #[serde(default)]
    pub restarts: bool,
    pub seed: u64,
}

impl PipelineConfig {
    /// Read a JSON config; relative paths are taken relative to the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with(path, None)
    }

    /// Like [`load`](Self::load), with a seed that takes precedence over
    /// (or stands in for) the one in the file.
    pub fn load_with(path: &Path, seed: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut value: serde_json::Value = serde_json::from_str(&text)?;
        if let (Some(seed), Some(obj)) = (seed, value.as_object_mut()) {
            obj.insert("seed".into(), seed.into());
        }
        let mut cfg: PipelineConfig = serde_json::from_value(value)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.tweets);
        resolve(&mut cfg.cases);
        resolve(&mut cfg.output_dir);
        for p in [&mut cfg.sentiment_labels, &mut cfg.stopwords, &mut cfg.lexicon].into_iter().flatten() {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if let TopicCount::Auto(s) = &self.topics {
            if s != "auto" {
                return bad(format!("topics must be a number or \"auto\", got `{s}`"));
            }
        }
        if let TopicCount::Fixed(j) = self.topics {
            if j < 2 {
                return bad("at least two topics are needed".into());
            }
        }
        if self.k_range.0 < 2 || self.k_range.0 > self.k_range.1 {
            return bad(format!("bad k_range {:?}", self.k_range));
        }
        if self.max_lag == 0 || self.min_terms == 0 || self.bigram_min_freq == 0 || self.vocab_min_freq == 0 {
            return bad("max_lag, min_terms and frequency thresholds must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) || self.significances.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
            return bad("significance levels must lie in (0, 1)".into());
        }
        if self.grid.p.0 > self.grid.p.1 || self.grid.q.0 > self.grid.q.1 {
            return bad("empty ARIMA order range".into());
        }
        if self.var.horizon == 0 {
            return bad("VAR horizon must be positive".into());
        }
        if let Some(lags) = &self.arimax_lags {
            if lags.is_empty() || lags.iter().any(|l| *l > self.max_lag) {
                return bad(format!("arimax_lags must be a non-empty subset of 0..={}", self.max_lag));
            }
        }
        if self.sentiment == SentimentKind::Sidecar && self.sentiment_labels.is_none() {
            return bad("sidecar sentiment needs `sentiment_labels`".into());
        }
        let split = self.split_date();
        if split < self.window.start || split >= self.window.end {
            return bad(format!("split {split} must fall inside the window and before its end"));
        }
        Ok(())
    }

    pub fn split_date(&self) -> NaiveDate {
        self.split
            .unwrap_or_else(|| self.window.end - chrono::Duration::days(self.test_days as i64))
    }
}

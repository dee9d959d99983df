//! Three-class sentiment labels (0 negative, 1 neutral, 2 positive) from a
//! pluggable provider.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TweetRecord;

const DEFAULT_LEXICON: &str = include_str!("../data/lexicon_en.tsv");

pub const NEGATIVE: u8 = 0;
pub const NEUTRAL: u8 = 1;
pub const POSITIVE: u8 = 2;

pub fn label_name(label: u8) -> &'static str {
    match label {
        NEGATIVE => "negative",
        NEUTRAL => "neutral",
        _ => "positive",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentLabel {
    pub label: u8,
    pub probabilities: [f64; 3],
}

impl SentimentLabel {
    /// Label from a probability vector; ties go to the lowest class.
    pub fn from_probabilities(probabilities: [f64; 3]) -> Self {
        let mut label = 0;
        for k in 1..3 {
            if probabilities[k] > probabilities[label] {
                label = k;
            }
        }
        SentimentLabel {
            label: label as u8,
            probabilities,
        }
    }

    pub fn certain(label: u8) -> Self {
        let mut probabilities = [0.0; 3];
        probabilities[label as usize] = 1.0;
        SentimentLabel { label, probabilities }
    }
}

pub trait SentimentProvider: Send + Sync {
    fn classify(&self, record: &TweetRecord) -> Result<SentimentLabel>;
}

pub fn classify(record: &TweetRecord, provider: &dyn SentimentProvider) -> Result<SentimentLabel> {
    provider.classify(record)
}

/// Uses the label already present in the corpus.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassThrough;

impl SentimentProvider for PassThrough {
    fn classify(&self, record: &TweetRecord) -> Result<SentimentLabel> {
        record
            .precomputed_sentiment
            .map(SentimentLabel::certain)
            .ok_or_else(|| Error::MissingLabel(record.id.clone()))
    }
}

/// Signed word counts. With s = #positive − #negative hits the class
/// probabilities are softmax(−s, 0, s); s = 0 (including no hits) is
/// neutral.
#[derive(Debug, Clone)]
pub struct Lexicon {
    weights: HashMap<String, i32>,
}

impl Lexicon {
    pub fn new(weights: HashMap<String, i32>) -> Self {
        Lexicon { weights }
    }

    pub fn english() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon parses")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// `term<TAB>weight` per line.
    fn parse(text: &str) -> Result<Self> {
        let mut weights = HashMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (term, w) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| Error::InvalidInput(format!("bad lexicon line `{line}`")))?;
            let w: i32 = w
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad lexicon weight in `{line}`")))?;
            weights.insert(term.to_lowercase(), w.signum());
        }
        Ok(Lexicon { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn score(&self, text: &str) -> i64 {
        text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
            .filter(|w| !w.is_empty())
            .map(|w| *self.weights.get(&w.to_lowercase()).unwrap_or(&0) as i64)
            .sum()
    }

    pub fn classify_text(&self, text: &str) -> SentimentLabel {
        let s = self.score(text) as f64;
        let logits = [-s, 0.0, s];
        let max = s.abs();
        let exps = logits.map(|l| (l - max).exp());
        let z: f64 = exps.iter().sum();
        let probabilities = exps.map(|e| e / z);
        if s == 0.0 {
            SentimentLabel {
                label: NEUTRAL,
                probabilities,
            }
        } else {
            SentimentLabel::from_probabilities(probabilities)
        }
    }
}

impl SentimentProvider for Lexicon {
    fn classify(&self, record: &TweetRecord) -> Result<SentimentLabel> {
        Ok(self.classify_text(&record.text))
    }
}

/// Labels produced elsewhere, keyed by record id (CSV `id,label`).
#[derive(Debug, Clone, Default)]
pub struct Sidecar {
    labels: HashMap<String, u8>,
}

impl Sidecar {
    pub fn new(labels: HashMap<String, u8>) -> Self {
        Sidecar { labels }
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        let id_col = headers
            .iter()
            .position(|h| h == "id")
            .ok_or_else(|| Error::MissingColumn("id".into()))?;
        let label_col = headers
            .iter()
            .position(|h| h == "label")
            .ok_or_else(|| Error::MissingColumn("label".into()))?;
        let mut labels = HashMap::new();
        for row in rdr.records() {
            let row = row?;
            let label: u8 = row[label_col]
                .trim()
                .parse()
                .ok()
                .filter(|l| *l <= 2)
                .ok_or_else(|| Error::InvalidInput(format!("bad label `{}` for id `{}`", &row[label_col], &row[id_col])))?;
            labels.insert(row[id_col].trim().to_string(), label);
        }
        Ok(Sidecar { labels })
    }
}

impl SentimentProvider for Sidecar {
    fn classify(&self, record: &TweetRecord) -> Result<SentimentLabel> {
        self.labels
            .get(&record.id)
            .map(|&l| SentimentLabel::certain(l))
            .ok_or_else(|| Error::MissingLabel(record.id.clone()))
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coherence::{coherence_cv, DEFAULT_TOP_N, DEFAULT_WINDOW};
use super::lda::{fit_lda, LdaConfig, LdaModel};
use super::vocab::{BowCorpus, Vocabulary};
use crate::error::{Error, Result};
use crate::ingest::CleanDoc;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub per_k_seeds: usize,
    /// `None` means 50 / k for every candidate.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    pub top_n: usize,
    pub window: usize,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            k_min: 5,
            k_max: 50,
            per_k_seeds: 1,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            seed: 0,
            top_n: DEFAULT_TOP_N,
            window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub mean: f64,
    pub per_seed: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct KSelection {
    pub best: LdaModel,
    pub table: Vec<KScore>,
}

/// Fit every k in `k_min..=k_max` with `per_k_seeds` seeds, score each model
/// by c_v coherence and keep the k with the highest mean (smaller k on
/// ties). The returned model is the best-scoring seed at that k.
pub fn select_k(vocab: &Vocabulary, corpus: &BowCorpus, docs: &[CleanDoc], config: &SelectConfig) -> Result<KSelection> {
    if config.k_min > config.k_max || config.per_k_seeds == 0 {
        return Err(Error::InvalidInput(format!(
            "empty k range {}..={} with {} seeds",
            config.k_min, config.k_max, config.per_k_seeds
        )));
    }
    let top_n = config.top_n.min(vocab.len());
    let jobs: Vec<(usize, usize)> = (config.k_min..=config.k_max)
        .flat_map(|k| (0..config.per_k_seeds).map(move |s| (k, s)))
        .collect();
    let fits: Vec<Result<(usize, LdaModel, f64)>> = jobs
        .par_iter()
        .map(|&(k, s)| {
            let cfg = LdaConfig {
                k,
                alpha: config.alpha,
                beta: config.beta,
                iterations: config.iterations,
                seed: config.seed.wrapping_add(s as u64),
            };
            let model = fit_lda(vocab, corpus, &cfg)?;
            let score = coherence_cv(&model, docs, top_n, config.window)?;
            Ok((k, model, score.value))
        })
        .collect();

    let mut table: Vec<KScore> = Vec::new();
    let mut models: Vec<(usize, LdaModel, f64)> = Vec::new();
    for r in fits {
        let (k, model, score) = r?;
        match table.last_mut() {
            Some(row) if row.k == k => row.per_seed.push(score),
            _ => table.push(KScore {
                k,
                mean: 0.0,
                per_seed: vec![score],
            }),
        }
        models.push((k, model, score));
    }
    for row in &mut table {
        row.mean = row.per_seed.iter().sum::<f64>() / row.per_seed.len() as f64;
    }
    let mut best_k = table[0].k;
    let mut best_mean = table[0].mean;
    for row in &table[1..] {
        if row.mean > best_mean {
            best_k = row.k;
            best_mean = row.mean;
        }
    }
    let best = models
        .into_iter()
        .filter(|(k, _, _)| *k == best_k)
        .fold(None::<(LdaModel, f64)>, |acc, (_, m, s)| match acc {
            Some((bm, bs)) if bs >= s => Some((bm, bs)),
            _ => Some((m, s)),
        })
        .map(|(m, _)| m)
        .expect("at least one fit per k");
    Ok(KSelection { best, table })
}

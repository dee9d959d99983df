use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{BowCorpus, Vocabulary};
use crate::error::{Error, Result};
use crate::ingest::CleanDoc;

const FOLD_IN_SWEEPS: usize = 50;
const FOLD_IN_AVERAGED: usize = 10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means 50 / k.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        LdaConfig {
            k,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            seed,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }
}

/// State of a collapsed Gibbs sampler after its final sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdaModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    pub vocab: Vocabulary,
    /// Row-major `V × k`: entry `w * k + t` counts tokens of term w in topic t.
    pub word_topic: Vec<u32>,
    pub topic_totals: Vec<u64>,
    /// Row-major `D × k`.
    pub doc_topic: Vec<u32>,
    pub token_assignments: Vec<Vec<u16>>,
}

impl LdaModel {
    pub fn num_docs(&self) -> usize {
        self.token_assignments.len()
    }

    pub fn topic_word_count(&self, topic: usize, term: usize) -> u32 {
        self.word_topic[term * self.k + topic]
    }

    pub fn doc_topic_count(&self, doc: usize, topic: usize) -> u32 {
        self.doc_topic[doc * self.k + topic]
    }

    /// Smoothed term distribution of one topic.
    pub fn topic_word_distribution(&self, topic: usize) -> Vec<f64> {
        let v = self.vocab.len();
        let denom = self.topic_totals[topic] as f64 + v as f64 * self.beta;
        (0..v)
            .map(|w| (self.topic_word_count(topic, w) as f64 + self.beta) / denom)
            .collect()
    }

    /// Term ids of a topic by descending count, ties by lower id.
    pub fn top_terms(&self, topic: usize, n: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.vocab.len()).collect();
        ids.sort_by(|&a, &b| {
            self.topic_word_count(topic, b)
                .cmp(&self.topic_word_count(topic, a))
                .then(a.cmp(&b))
        });
        ids.truncate(n);
        ids
    }

    pub fn top_words(&self, topic: usize, n: usize) -> Vec<String> {
        self.top_terms(topic, n).into_iter().map(|w| self.vocab.term(w).to_string()).collect()
    }

    /// True when word-topic, topic-total and doc-topic counts all agree
    /// with the stored assignments.
    pub fn counts_consistent(&self) -> bool {
        let total: usize = self.token_assignments.iter().map(Vec::len).sum();
        let wt: u64 = self.word_topic.iter().map(|&c| c as u64).sum();
        let dt: u64 = self.doc_topic.iter().map(|&c| c as u64).sum();
        let tt: u64 = self.topic_totals.iter().sum();
        if wt != total as u64 || dt != total as u64 || tt != total as u64 {
            return false;
        }
        for t in 0..self.k {
            let col: u64 = (0..self.vocab.len()).map(|w| self.topic_word_count(t, w) as u64).sum();
            if col != self.topic_totals[t] {
                return false;
            }
        }
        self.token_assignments.iter().enumerate().all(|(d, z)| {
            (0..self.k).all(|t| z.iter().filter(|&&zt| zt as usize == t).count() as u32 == self.doc_topic_count(d, t))
        })
    }
}

fn expand(doc: &[(usize, usize)]) -> Vec<usize> {
    doc.iter().flat_map(|&(w, c)| std::iter::repeat_n(w, c)).collect()
}

/// Collapsed Gibbs sampling over documents and tokens in corpus order.
pub fn fit_lda(vocab: &Vocabulary, corpus: &BowCorpus, config: &LdaConfig) -> Result<LdaModel> {
    let k = config.k;
    let alpha = config.alpha();
    let beta = config.beta;
    if k < 2 {
        return Err(Error::InvalidInput(format!("k must be at least 2, got {k}")));
    }
    if k > u16::MAX as usize {
        return Err(Error::InvalidInput(format!("k = {k} is too large")));
    }
    if config.iterations == 0 {
        return Err(Error::InvalidInput("iterations must be at least 1".into()));
    }
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::InvalidInput("alpha and beta must be positive".into()));
    }
    if corpus.docs.is_empty() || corpus.total_tokens() == 0 {
        return Err(Error::EmptyCorpus);
    }
    if k > corpus.docs.len() {
        log::warn!("k = {k} exceeds the number of documents ({})", corpus.docs.len());
    }
    let v = vocab.len();
    if let Some(&(w, _)) = corpus.docs.iter().flatten().find(|&&(w, _)| w >= v) {
        return Err(Error::InvalidInput(format!("term id {w} outside vocabulary of size {v}")));
    }

    let tokens: Vec<Vec<usize>> = corpus.docs.iter().map(|d| expand(d)).collect();
    let d_count = tokens.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut word_topic = vec![0u32; v * k];
    let mut topic_totals = vec![0u64; k];
    let mut doc_topic = vec![0u32; d_count * k];
    let mut z: Vec<Vec<u16>> = Vec::with_capacity(d_count);

    for (d, doc) in tokens.iter().enumerate() {
        let mut zd = Vec::with_capacity(doc.len());
        for &w in doc {
            let t = rng.gen_range(0..k);
            zd.push(t as u16);
            word_topic[w * k + t] += 1;
            topic_totals[t] += 1;
            doc_topic[d * k + t] += 1;
        }
        z.push(zd);
    }

    let vbeta = v as f64 * beta;
    let mut weights = vec![0.0f64; k];
    for _ in 0..config.iterations {
        for (d, doc) in tokens.iter().enumerate() {
            let dt = &mut doc_topic[d * k..(d + 1) * k];
            for (i, &w) in doc.iter().enumerate() {
                let old = z[d][i] as usize;
                let wt = &mut word_topic[w * k..(w + 1) * k];
                wt[old] -= 1;
                topic_totals[old] -= 1;
                dt[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += (dt[t] as f64 + alpha) * (wt[t] as f64 + beta) / (topic_totals[t] as f64 + vbeta);
                    weights[t] = total;
                }
                let u = rng.gen::<f64>() * total;
                let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                wt[new] += 1;
                topic_totals[new] += 1;
                dt[new] += 1;
                z[d][i] = new as u16;
            }
        }
    }

    Ok(LdaModel {
        k,
        alpha,
        beta,
        iterations: config.iterations,
        seed: config.seed,
        vocab: vocab.clone(),
        word_topic,
        topic_totals,
        doc_topic,
        token_assignments: z,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub topic: usize,
    pub probabilities: Vec<f64>,
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn fnv1a(words: &[usize]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &w in words {
        for b in (w as u64).to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Topic posterior of an unseen document by Gibbs fold-in against the
/// frozen topic-word counts. Unknown terms are skipped.
pub fn assign_topic(model: &LdaModel, doc: &CleanDoc) -> Result<TopicAssignment> {
    if doc.tokens.is_empty() {
        return Err(Error::EmptyDocument(doc.tweet_id.clone()));
    }
    let words: Vec<usize> = doc.tokens.iter().filter_map(|t| model.vocab.id(t)).collect();
    if words.is_empty() {
        return Err(Error::NoKnownTokens);
    }
    let k = model.k;
    let vbeta = model.vocab.len() as f64 * model.beta;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed ^ fnv1a(&words));
    let mut counts = vec![0u32; k];
    let mut z: Vec<usize> = words
        .iter()
        .map(|_| {
            let t = rng.gen_range(0..k);
            counts[t] += 1;
            t
        })
        .collect();

    let mut weights = vec![0.0; k];
    let mut accum = vec![0.0; k];
    for sweep in 0..FOLD_IN_SWEEPS {
        for (i, &w) in words.iter().enumerate() {
            counts[z[i]] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                let nw = model.topic_word_count(t, w) as f64;
                total += (counts[t] as f64 + model.alpha) * (nw + model.beta) / (model.topic_totals[t] as f64 + vbeta);
                weights[t] = total;
            }
            let u = rng.gen::<f64>() * total;
            let t = weights.iter().position(|&c| u < c).unwrap_or(k - 1);
            z[i] = t;
            counts[t] += 1;
        }
        if sweep >= FOLD_IN_SWEEPS - FOLD_IN_AVERAGED {
            for t in 0..k {
                accum[t] += counts[t] as f64;
            }
        }
    }
    let n = words.len() as f64;
    let denom = n + k as f64 * model.alpha;
    let probabilities: Vec<f64> = accum
        .iter()
        .map(|&c| (c / FOLD_IN_AVERAGED as f64 + model.alpha) / denom)
        .collect();
    Ok(TopicAssignment {
        topic: argmax(&probabilities),
        probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topics::build_vocabulary;
    use chrono::NaiveDate;

    fn doc(tokens: Vec<String>) -> CleanDoc {
        CleanDoc {
            tweet_id: "d".into(),
            date: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
            tokens,
        }
    }

    fn planted(n_docs: usize, seed: u64) -> Vec<CleanDoc> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n_docs)
            .map(|i| {
                let group = if i % 2 == 0 { "a" } else { "b" };
                doc((0..12).map(|_| format!("{group}{}", rng.gen_range(0..8))).collect())
            })
            .collect()
    }

    fn small_config(k: usize, seed: u64) -> LdaConfig {
        LdaConfig {
            k,
            alpha: Some(0.1),
            beta: 0.01,
            iterations: 200,
            seed,
        }
    }

    #[test]
    fn disjoint_vocabularies_separate() {
        let docs = planted(100, 3);
        let b = build_vocabulary(&docs, 1).unwrap();
        let m = fit_lda(&b.vocab, &b.corpus, &small_config(2, 11)).unwrap();
        for t in 0..2 {
            let top = m.top_words(t, 8);
            let first = &top[0][..1];
            assert!(top.iter().all(|w| w.starts_with(first)), "mixed topic {top:?}");
        }
        assert_ne!(&m.top_words(0, 1)[0][..1], &m.top_words(1, 1)[0][..1]);
        assert!(m.counts_consistent());
    }

    #[test]
    fn single_token_doc() {
        let b = build_vocabulary(&[doc(vec!["x".into()])], 1).unwrap();
        let m = fit_lda(&b.vocab, &b.corpus, &small_config(2, 1)).unwrap();
        assert_eq!(m.topic_totals.iter().sum::<u64>(), 1);
        assert!(m.counts_consistent());
        for t in 0..2 {
            let s: f64 = m.topic_word_distribution(t).iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn seed_determinism() {
        let docs = planted(40, 5);
        let b = build_vocabulary(&docs, 1).unwrap();
        let m1 = fit_lda(&b.vocab, &b.corpus, &small_config(3, 99)).unwrap();
        let m2 = fit_lda(&b.vocab, &b.corpus, &small_config(3, 99)).unwrap();
        assert_eq!(m1.token_assignments, m2.token_assignments);
        assert_eq!(m1.word_topic, m2.word_topic);
    }

    #[test]
    fn conservation_after_each_sweep() {
        let docs = planted(30, 8);
        let b = build_vocabulary(&docs, 1).unwrap();
        for iterations in 1..=5 {
            let mut cfg = small_config(4, 2);
            cfg.iterations = iterations;
            let m = fit_lda(&b.vocab, &b.corpus, &cfg).unwrap();
            assert!(m.counts_consistent());
            assert_eq!(m.topic_totals.iter().sum::<u64>() as usize, b.corpus.total_tokens());
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let b = build_vocabulary(&[doc(vec!["x".into()])], 1).unwrap();
        assert!(fit_lda(&b.vocab, &b.corpus, &small_config(1, 0)).is_err());
        let mut cfg = small_config(2, 0);
        cfg.iterations = 0;
        assert!(fit_lda(&b.vocab, &b.corpus, &cfg).is_err());
        assert!(matches!(
            fit_lda(&b.vocab, &BowCorpus::default(), &small_config(2, 0)),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn fold_in_prefers_planted_topic() {
        let docs = planted(100, 3);
        let b = build_vocabulary(&docs, 1).unwrap();
        let m = fit_lda(&b.vocab, &b.corpus, &small_config(2, 11)).unwrap();
        let a_topic = if m.top_words(0, 1)[0].starts_with('a') { 0 } else { 1 };
        let a = assign_topic(&m, &doc(vec!["a1".into(), "a2".into(), "a3".into(), "unknown".into()])).unwrap();
        assert_eq!(a.topic, a_topic);
        assert!(a.probabilities[a_topic] > 0.5);
        assert!((a.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fold_in_on_uniform_model() {
        let k = 3;
        let vocab = Vocabulary::from_terms(vec!["x".into(), "y".into()], vec![1, 1]);
        let m = LdaModel {
            k,
            alpha: 1.0,
            beta: 0.01,
            iterations: 1,
            seed: 4,
            vocab,
            word_topic: vec![10; 2 * k],
            topic_totals: vec![20; k],
            doc_topic: vec![],
            token_assignments: vec![],
        };
        let tokens: Vec<String> = (0..200).map(|i| if i % 2 == 0 { "x" } else { "y" }.to_string()).collect();
        let a = assign_topic(&m, &doc(tokens)).unwrap();
        for p in &a.probabilities {
            assert!((p - 1.0 / 3.0).abs() < 0.1, "{:?}", a.probabilities);
        }
    }

    #[test]
    fn fold_in_errors() {
        let b = build_vocabulary(&[doc(vec!["x".into()])], 1).unwrap();
        let m = fit_lda(&b.vocab, &b.corpus, &small_config(2, 1)).unwrap();
        assert!(matches!(assign_topic(&m, &doc(vec!["nope".into()])), Err(Error::NoKnownTokens)));
        assert!(matches!(assign_topic(&m, &doc(vec![])), Err(Error::EmptyDocument(_))));
    }

    #[test]
    fn argmax_ties_low() {
        assert_eq!(argmax(&[0.25, 0.25, 0.25, 0.25]), 0);
        assert_eq!(argmax(&[0.1, 0.3, 0.3]), 1);
    }
}

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::lda::LdaModel;
use crate::error::{Error, Result};
use crate::ingest::CleanDoc;

pub const DEFAULT_TOP_N: usize = 20;
pub const DEFAULT_WINDOW: usize = 110;
const EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceScore {
    pub value: f64,
    pub per_topic: Vec<f64>,
}

/// c_v coherence of a fitted model's top `top_n` words per topic.
pub fn coherence_cv(model: &LdaModel, docs: &[CleanDoc], top_n: usize, window: usize) -> Result<CoherenceScore> {
    if top_n == 0 || top_n > model.vocab.len() {
        return Err(Error::InvalidInput(format!(
            "top_n = {top_n} must be in 1..={}",
            model.vocab.len()
        )));
    }
    let topics: Vec<Vec<String>> = (0..model.k).map(|t| model.top_words(t, top_n)).collect();
    coherence_cv_for_topics(&topics, docs, window)
}

/// Boolean sliding windows over `docs` (a document shorter than the window
/// is one window), NPMI context vectors over each topic's word set, and the
/// mean cosine between each word's vector and the topic's summed vector.
pub fn coherence_cv_for_topics(topics: &[Vec<String>], docs: &[CleanDoc], window: usize) -> Result<CoherenceScore> {
    if window == 0 {
        return Err(Error::InvalidInput("window must be at least 1".into()));
    }
    if topics.is_empty() {
        return Err(Error::InvalidInput("no topics to score".into()));
    }
    let mut index: HashMap<&str, usize> = HashMap::new();
    for w in topics.iter().flatten() {
        let n = index.len();
        index.entry(w.as_str()).or_insert(n);
    }
    let m = index.len();
    let (single, pair, n_windows) = window_counts(docs, &index, window);
    if n_windows == 0 {
        return Err(Error::EmptyCorpus);
    }
    let nw = n_windows as f64;
    let prob = |i: usize| single[i] as f64 / nw;
    let joint = |i: usize, j: usize| {
        if i == j {
            single[i] as f64 / nw
        } else {
            pair[i.min(j) * m + i.max(j)] as f64 / nw
        }
    };
    let npmi = |i: usize, j: usize| {
        let pij = joint(i, j);
        let num = ((pij + EPSILON) / (prob(i) * prob(j)).max(EPSILON)).ln();
        num / -(pij + EPSILON).ln()
    };

    let per_topic: Vec<f64> = topics
        .iter()
        .map(|words| {
            let ids: Vec<usize> = words.iter().map(|w| index[w.as_str()]).collect();
            let vectors: Vec<Vec<f64>> = ids.iter().map(|&i| ids.iter().map(|&j| npmi(i, j)).collect()).collect();
            let mut total = vec![0.0; ids.len()];
            for v in &vectors {
                for (t, x) in total.iter_mut().zip(v) {
                    *t += x;
                }
            }
            let sims: f64 = vectors.iter().map(|v| cosine(v, &total)).sum();
            sims / ids.len() as f64
        })
        .collect();
    let value = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(CoherenceScore { value, per_topic })
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Per-word and upper-triangular pair window counts plus the window total.
fn window_counts(docs: &[CleanDoc], index: &HashMap<&str, usize>, window: usize) -> (Vec<u64>, Vec<u64>, u64) {
    let m = index.len();
    let mut single = vec![0u64; m];
    let mut pair = vec![0u64; m * m];
    let mut n_windows = 0u64;
    let mut present: Vec<usize> = Vec::new();

    for d in docs {
        let ids: Vec<Option<usize>> = d.tokens.iter().map(|t| index.get(t.as_str()).copied()).collect();
        if ids.is_empty() {
            continue;
        }
        let w = window.min(ids.len());
        for slice in ids.windows(w) {
            present.clear();
            present.extend(slice.iter().flatten().copied());
            present.sort_unstable();
            present.dedup();
            for (a, &i) in present.iter().enumerate() {
                single[i] += 1;
                for &j in &present[a + 1..] {
                    pair[i * m + j] += 1;
                }
            }
            n_windows += 1;
        }
    }
    (single, pair, n_windows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn doc(tokens: &[&str]) -> CleanDoc {
        CleanDoc {
            tweet_id: "d".into(),
            date: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn words(w: &[&str]) -> Vec<String> {
        w.iter().map(|s| s.to_string()).collect()
    }

    /// Independent NPMI/cosine evaluation from explicitly enumerated windows.
    fn brute_cv(topic: &[&str], docs: &[Vec<&str>], window: usize) -> f64 {
        let mut windows: Vec<Vec<&str>> = Vec::new();
        for d in docs {
            if d.len() <= window {
                windows.push(d.clone());
            } else {
                for s in 0..=d.len() - window {
                    windows.push(d[s..s + window].to_vec());
                }
            }
        }
        let n = windows.len() as f64;
        let p = |a: &str| windows.iter().filter(|w| w.contains(&a)).count() as f64 / n;
        let p2 = |a: &str, b: &str| windows.iter().filter(|w| w.contains(&a) && w.contains(&b)).count() as f64 / n;
        let npmi = |a: &str, b: &str| {
            let pab = p2(a, b);
            ((pab + 1e-12) / (p(a) * p(b)).max(1e-12)).ln() / -(pab + 1e-12).ln()
        };
        let vecs: Vec<Vec<f64>> = topic.iter().map(|a| topic.iter().map(|b| npmi(a, b)).collect()).collect();
        let sum: Vec<f64> = (0..topic.len()).map(|j| vecs.iter().map(|v| v[j]).sum()).collect();
        vecs.iter().map(|v| cosine(v, &sum)).sum::<f64>() / topic.len() as f64
    }

    #[test]
    fn hand_computed_toy() {
        // Windows of size 2: {a,b}, {b,c}, {a,b}, {c,d}; N = 4.
        // P(a)=1/2, P(b)=3/4, P(a,b)=1/2 so NPMI(a,b) = ln(4/3)/ln 2 = x and
        // NPMI(a,a) = NPMI(b,b) = 1. Each word's cosine with the sum is
        // (1+x) / (sqrt(2) sqrt(1+x^2)) = 0.924148...
        let docs = [doc(&["a", "b", "c"]), doc(&["a", "b"]), doc(&["c", "d"])];
        let s = coherence_cv_for_topics(&[words(&["a", "b"])], &docs, 2).unwrap();
        let x = (4.0f64 / 3.0).ln() / 2f64.ln();
        let expected = (1.0 + x) / (2f64.sqrt() * (1.0 + x * x).sqrt());
        assert!((expected - 0.924148).abs() < 1e-6);
        assert!((s.value - expected).abs() < 1e-9, "{} vs {expected}", s.value);
        let brute = brute_cv(&["a", "b"], &[vec!["a", "b", "c"], vec!["a", "b"], vec!["c", "d"]], 2);
        assert!((s.value - brute).abs() < 1e-12);
    }

    #[test]
    fn perfect_association_scores_one() {
        let docs: Vec<CleanDoc> = (0..10).map(|_| doc(&["x", "y", "z"])).collect();
        let s = coherence_cv_for_topics(&[words(&["x", "y", "z"])], &docs, 110).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn independent_words_score_low() {
        // Every pair co-occurs exactly as often as independence predicts, so
        // each context vector is a unit basis vector and the cosine is 1/sqrt(n).
        let mut docs = Vec::new();
        for mask in 0u32..16 {
            let toks: Vec<&str> = ["p", "q", "r", "s"]
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, w)| *w)
                .collect();
            docs.push(doc(if toks.is_empty() { &["filler"] } else { &toks }));
        }
        let s = coherence_cv_for_topics(&[words(&["p", "q", "r", "s"])], &docs, 110).unwrap();
        assert!((s.value - 0.5).abs() < 1e-9, "{}", s.value);
    }

    #[test]
    fn never_cooccurring_pair_scores_near_zero() {
        let docs = [doc(&["u"]), doc(&["v"]), doc(&["w"])];
        let s = coherence_cv_for_topics(&[words(&["u", "v"])], &docs, 110).unwrap();
        let brute = brute_cv(&["u", "v"], &[vec!["u"], vec!["v"], vec!["w"]], 110);
        assert!((s.value - brute).abs() < 1e-12);
        assert!(s.value < 0.05, "{}", s.value);
    }

    #[test]
    fn unseen_word_is_finite() {
        let docs = [doc(&["a", "b"])];
        let s = coherence_cv_for_topics(&[words(&["a", "ghost"])], &docs, 110).unwrap();
        assert!(s.value.is_finite());
    }

    #[test]
    fn long_docs_slide() {
        let raw: Vec<Vec<&str>> = vec![
            vec!["a", "x", "b", "y", "a", "c", "b", "z", "c", "a"],
            vec!["b", "c"],
            vec!["z", "a", "y", "y", "b"],
        ];
        let docs: Vec<CleanDoc> = raw.iter().map(|d| doc(d)).collect();
        for window in 1..6 {
            let s = coherence_cv_for_topics(&[words(&["a", "b", "c"]), words(&["x", "y", "z"])], &docs, window).unwrap();
            let b0 = brute_cv(&["a", "b", "c"], &raw, window);
            let b1 = brute_cv(&["x", "y", "z"], &raw, window);
            assert!((s.per_topic[0] - b0).abs() < 1e-12);
            assert!((s.per_topic[1] - b1).abs() < 1e-12);
            assert!((s.value - (b0 + b1) / 2.0).abs() < 1e-12);
        }
    }
}

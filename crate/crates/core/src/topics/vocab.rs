use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::CleanDoc;

/// Dense term ids in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    id_to_term: Vec<String>,
    doc_freq: Vec<usize>,
    #[serde(skip)]
    term_to_id: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_terms(terms: Vec<String>, doc_freq: Vec<usize>) -> Self {
        let term_to_id = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            id_to_term: terms,
            doc_freq,
            term_to_id,
        }
    }

    /// Rebuild the reverse map after deserialization.
    pub fn reindex(&mut self) {
        self.term_to_id = self.id_to_term.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.term_to_id.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.id_to_term[id]
    }

    pub fn terms(&self) -> &[String] {
        &self.id_to_term
    }

    pub fn doc_freq(&self, id: usize) -> usize {
        self.doc_freq[id]
    }

    pub fn len(&self) -> usize {
        self.id_to_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_term.is_empty()
    }
}

/// Each document is a list of `(term_id, count)` with unique ids in
/// ascending order of first occurrence in the document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BowCorpus {
    pub docs: Vec<Vec<(usize, usize)>>,
}

impl BowCorpus {
    pub fn total_tokens(&self) -> usize {
        self.docs.iter().flatten().map(|&(_, c)| c).sum()
    }
}

#[derive(Debug, Clone)]
pub struct VocabularyBuild {
    pub vocab: Vocabulary,
    pub corpus: BowCorpus,
    /// For every corpus document, the index of its source document.
    pub source_index: Vec<usize>,
    /// Source documents left empty after pruning.
    pub dropped: Vec<usize>,
}

/// Keep terms whose corpus frequency is at least `min_freq` and convert the
/// documents to bag-of-words form.
pub fn build_vocabulary(docs: &[CleanDoc], min_freq: usize) -> Result<VocabularyBuild> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut order: Vec<&str> = Vec::new();
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for d in docs {
        for t in &d.tokens {
            let e = freq.entry(t.as_str()).or_insert(0);
            if *e == 0 {
                order.push(t.as_str());
            }
            *e += 1;
        }
    }
    let kept: Vec<&str> = order.into_iter().filter(|t| freq[t] >= min_freq).collect();
    let ids: HashMap<&str, usize> = kept.iter().enumerate().map(|(i, t)| (*t, i)).collect();

    let mut doc_freq = vec![0usize; kept.len()];
    let mut corpus = BowCorpus::default();
    let mut source_index = Vec::new();
    let mut dropped = Vec::new();
    for (di, d) in docs.iter().enumerate() {
        let mut bow: Vec<(usize, usize)> = Vec::new();
        let mut pos: HashMap<usize, usize> = HashMap::new();
        for t in &d.tokens {
            if let Some(&id) = ids.get(t.as_str()) {
                match pos.get(&id) {
                    Some(&p) => bow[p].1 += 1,
                    None => {
                        pos.insert(id, bow.len());
                        bow.push((id, 1));
                    }
                }
            }
        }
        if bow.is_empty() {
            dropped.push(di);
            continue;
        }
        for &(id, _) in &bow {
            doc_freq[id] += 1;
        }
        corpus.docs.push(bow);
        source_index.push(di);
    }
    if corpus.docs.is_empty() {
        return Err(Error::InvalidInput(format!(
            "every document is empty after pruning terms rarer than {min_freq}"
        )));
    }
    Ok(VocabularyBuild {
        vocab: Vocabulary::from_terms(kept.into_iter().map(str::to_string).collect(), doc_freq),
        corpus,
        source_index,
        dropped,
    })
}

//! Frozen bag-of-words vocabularies and sparse feature vectors.
//!
//! Vocabularies are fit on training records only. Terms are indexed in
//! lexicographic order so fitting is independent of record order.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap, HashSet};

use crate::corpus::LabeledCorpus;
use crate::error::{Error, Result};
use crate::text::TokenizedSentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    Counts,
    Tfidf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabConfig {
    /// Keep terms appearing in at least this many documents.
    #[serde(default = "default_min_df")]
    pub min_df: usize,
    /// Cap the vocabulary at the top terms by (df, then term) if set.
    #[serde(default)]
    pub max_features: Option<usize>,
    #[serde(default = "default_scheme")]
    pub scheme: WeightScheme,
    /// Lowercase terms before counting. On by default to curb sparsity.
    #[serde(default = "default_true")]
    pub lowercase: bool,
    /// Also emit adjacent-pair terms.
    #[serde(default)]
    pub bigrams: bool,
}

fn default_min_df() -> usize {
    1
}

fn default_scheme() -> WeightScheme {
    WeightScheme::Counts
}

fn default_true() -> bool {
    true
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            min_df: 1,
            max_features: None,
            scheme: WeightScheme::Counts,
            lowercase: true,
            bigrams: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub term: String,
    pub index: usize,
    pub df: usize,
}

/// Term-to-index map with document frequencies, frozen after fit.
///
/// Entries are sorted by term; `index` equals the entry's position, so
/// lookups are binary searches and no side table is needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub entries: Vec<VocabEntry>,
    pub n_docs: usize,
    pub config: VocabConfig,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.entries
            .binary_search_by(|e| e.term.as_str().cmp(term))
            .ok()
    }

    /// SHA-256 of the serialized vocabulary, used to pair models with the
    /// vocabulary they were trained on.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("vocabulary serializes");
        let digest = Sha256::digest(&bytes);
        hex_string(&digest)
    }

    fn terms_of(&self, sentence: &TokenizedSentence) -> Vec<String> {
        extract_terms(sentence, self.config.lowercase, self.config.bigrams)
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        use std::fmt::Write;
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn extract_terms(sentence: &TokenizedSentence, lowercase: bool, bigrams: bool) -> Vec<String> {
    let unigrams: Vec<String> = sentence
        .tokens
        .iter()
        .map(|t| if lowercase { t.to_lowercase() } else { t.clone() })
        .collect();
    let mut terms = unigrams.clone();
    if bigrams {
        terms.extend(unigrams.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    }
    terms
}

/// Fit a vocabulary on the training corpus.
pub fn fit_vocabulary(train: &LabeledCorpus, config: &VocabConfig) -> Result<Vocabulary> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training corpus"));
    }
    let mut dfs: HashMap<String, usize> = HashMap::new();
    for record in &train.records {
        let distinct: HashSet<String> =
            extract_terms(&record.sentence, config.lowercase, config.bigrams)
                .into_iter()
                .collect();
        for term in distinct {
            *dfs.entry(term).or_default() += 1;
        }
    }

    let mut kept: Vec<(String, usize)> = dfs
        .into_iter()
        .filter(|(_, df)| *df >= config.min_df)
        .collect();
    if let Some(cap) = config.max_features {
        // Highest df first, term as the deterministic tie-break.
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        kept.truncate(cap);
    }
    kept.sort_by(|a, b| a.0.cmp(&b.0));
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    let entries = kept
        .into_iter()
        .enumerate()
        .map(|(index, (term, df))| VocabEntry { term, index, df })
        .collect();
    Ok(Vocabulary {
        entries,
        n_docs: train.len(),
        config: config.clone(),
    })
}

/// Sorted sparse vector of dimension `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }
}

/// Map a sentence to a sparse vector over the frozen vocabulary.
/// Out-of-vocabulary tokens are ignored; tf-idf weights use
/// `idf = ln((1 + N) / (1 + df)) + 1` and the vector is L2-normalized.
pub fn vectorize(sentence: &TokenizedSentence, vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for term in vocab.terms_of(sentence) {
        if let Some(idx) = vocab.index_of(&term) {
            *counts.entry(idx).or_default() += 1.0;
        }
    }
    let mut entries: Vec<(usize, f64)> = counts.into_iter().collect();

    if vocab.config.scheme == WeightScheme::Tfidf {
        for (idx, weight) in entries.iter_mut() {
            let df = vocab.entries[*idx].df;
            let idf = ((1 + vocab.n_docs) as f64 / (1 + df) as f64).ln() + 1.0;
            *weight *= idf;
        }
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in entries.iter_mut() {
                *w /= norm;
            }
        }
    }
    SparseVector {
        dim: vocab.len(),
        entries,
    }
}

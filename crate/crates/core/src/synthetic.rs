//! Synthetic imbalanced corpora with a matching synonym lexicon, for
//! experiments and benchmarks.
//!
//! Each class draws tokens from its own word pool plus a pool shared by all
//! classes. Every class-specific word gets a same-class alias in the
//! generated lexicon, and the shared words double as the stopword list.

use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledCorpus, Record};
use crate::eda::RngStream;
use crate::error::{Error, Result};
use crate::lexicon::{StopwordSet, SynonymLexicon};
use crate::text::TokenizedSentence;

/// Stream tag separating generator draws from augmentation draws.
const SYNTH_STREAM: u64 = 0x5359_4e54_4845;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    /// Label and record count per class.
    pub class_counts: Vec<(String, usize)>,
    /// Words in each class's pool, shared words included.
    pub words_per_class: usize,
    /// Fraction of each pool that is the shared (cross-class) vocabulary.
    pub shared_fraction: f64,
    /// Probability that a token is drawn from the shared pool rather than
    /// the class-specific one. Higher values make classes harder to tell
    /// apart.
    pub shared_mass: f64,
    /// Inclusive token-count range per sentence.
    pub len_range: (usize, usize),
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            class_counts: vec![
                ("major".to_string(), 900),
                ("minor1".to_string(), 60),
                ("minor2".to_string(), 40),
            ],
            words_per_class: 50,
            shared_fraction: 0.3,
            shared_mass: 0.65,
            len_range: (8, 20),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub corpus: LabeledCorpus,
    pub synonyms: SynonymLexicon,
    pub stopwords: StopwordSet,
}

/// Generate a corpus, a synonym lexicon pairing every class-specific word
/// with an alias, and a stopword set holding the shared words.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticData> {
    if config.class_counts.is_empty() {
        return Err(Error::EmptyInput("class counts"));
    }
    if !(0.0..=1.0).contains(&config.shared_fraction) || !(0.0..=1.0).contains(&config.shared_mass)
    {
        return Err(Error::Config(
            "shared_fraction and shared_mass must lie in [0, 1]".to_string(),
        ));
    }
    let (min_len, max_len) = config.len_range;
    if min_len == 0 || max_len < min_len {
        return Err(Error::Config("invalid sentence length range".to_string()));
    }

    let n_shared =
        ((config.words_per_class as f64 * config.shared_fraction).round() as usize).max(1);
    let n_own = config
        .words_per_class
        .checked_sub(n_shared)
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config("shared pool leaves no class-specific words".to_string()))?;

    let shared: Vec<String> = (0..n_shared).map(|i| format!("sw{i:02}")).collect();
    let class_words: Vec<Vec<String>> = (0..config.class_counts.len())
        .map(|c| (0..n_own).map(|i| format!("c{c}w{i:02}")).collect())
        .collect();

    let mut groups = Vec::new();
    for words in &class_words {
        for w in words {
            groups.push(vec![w.clone(), format!("{w}x")]);
        }
    }

    let mut records = Vec::new();
    let mut global_idx = 0u64;
    for (class_idx, (label, count)) in config.class_counts.iter().enumerate() {
        let own = &class_words[class_idx];
        for _ in 0..*count {
            let mut rng = RngStream::derive(config.seed, global_idx, SYNTH_STREAM);
            let len = min_len + rng.index(max_len - min_len + 1);
            let tokens: Vec<String> = (0..len)
                .map(|_| {
                    if rng.fraction() < config.shared_mass {
                        shared[rng.index(shared.len())].clone()
                    } else {
                        own[rng.index(own.len())].clone()
                    }
                })
                .collect();
            records.push(Record {
                id: format!("synth:{global_idx}"),
                sentence: TokenizedSentence::from_tokens(tokens),
                label: label.clone(),
            });
            global_idx += 1;
        }
    }

    Ok(SyntheticData {
        corpus: LabeledCorpus::new(records)?,
        synonyms: SynonymLexicon::from_groups(groups),
        stopwords: StopwordSet::from_words(shared.iter()),
    })
}

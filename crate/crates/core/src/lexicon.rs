//! Synonym groups and stopword lists loaded from flat files.
//!
//! Synonym file: one group per line, words separated by tabs, `#` starts a
//! comment line. Stopword file: one word per line, `#` comments. Both are
//! UTF-8 and are NFC-normalized on load so lookups agree with tokenizer
//! output.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Synonym-set lookup over groups of mutually substitutable words.
///
/// Words may contain internal spaces ("nhụt chí"); they count as a single
/// replacement token when substituted into a sentence.
#[derive(Debug, Clone, Default)]
pub struct SynonymLexicon {
    groups: Vec<Vec<String>>,
    index: HashMap<String, Vec<usize>>,
    dropped_groups: usize,
}

impl SynonymLexicon {
    /// Load a lexicon from a tab-separated group file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let content = std::str::from_utf8(&bytes).map_err(|e| Error::InvalidUtf8 {
            offset: e.valid_up_to(),
        })?;

        let mut groups = Vec::new();
        for (i, line) in content.lines().enumerate() {
            if line.is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let words: Vec<String> = line
                .split('\t')
                .map(|w| w.trim().nfc().collect::<String>())
                .filter(|w| !w.is_empty())
                .collect();
            if words.is_empty() {
                return Err(Error::ParseLine {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: "synonym group contains no words".to_string(),
                });
            }
            groups.push(words);
        }
        Ok(Self::from_groups(groups))
    }

    /// Build a lexicon from in-memory groups, applying the same dedup and
    /// minimum-size rules as [`SynonymLexicon::load`].
    pub fn from_groups(raw_groups: Vec<Vec<String>>) -> Self {
        let mut groups = Vec::new();
        let mut index: HashMap<String, Vec<usize>> = HashMap::new();
        let mut dropped = 0usize;

        for raw in raw_groups {
            let mut seen = HashSet::new();
            let group: Vec<String> = raw
                .into_iter()
                .map(|w| w.nfc().collect::<String>())
                .filter(|w| !w.is_empty() && seen.insert(w.clone()))
                .collect();
            if group.len() < 2 {
                dropped += 1;
                continue;
            }
            let gid = groups.len();
            for word in &group {
                index.entry(word.clone()).or_default().push(gid);
            }
            groups.push(group);
        }
        if dropped > 0 {
            log::warn!("dropped {dropped} synonym group(s) smaller than 2 after dedup");
        }
        Self {
            groups,
            index,
            dropped_groups: dropped,
        }
    }

    /// All synonyms of `word` across every group it belongs to, in file
    /// order, deduplicated, never including `word` itself.
    pub fn synonyms_of(&self, word: &str) -> Vec<&str> {
        let Some(gids) = self.index.get(word) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for &gid in gids {
            for member in &self.groups[gid] {
                if member != word && seen.insert(member.as_str()) {
                    out.push(member.as_str());
                }
            }
        }
        out
    }

    pub fn has_synonyms(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn groups(&self) -> &[Vec<String>] {
        &self.groups
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    /// Number of undersized groups discarded at load time.
    pub fn dropped_groups(&self) -> usize {
        self.dropped_groups
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Exact-membership stopword set.
#[derive(Debug, Clone, Default)]
pub struct StopwordSet {
    words: HashSet<String>,
}

impl StopwordSet {
    /// Load one word per line; blank lines and `#` comments are ignored.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let content = std::str::from_utf8(&bytes).map_err(|e| Error::InvalidUtf8 {
            offset: e.valid_up_to(),
        })?;
        Ok(Self::from_words(
            content
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        ))
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            words: words
                .into_iter()
                .map(|w| w.as_ref().nfc().collect())
                .collect(),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

//! Whitespace tokenization over NFC-normalized text, and the inverse.
//!
//! Tokenization is an injection point: anything that produces a
//! [`TokenizedSentence`] can stand in for the default whitespace splitter
//! (e.g. a dictionary-based word segmenter).

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Controls applied by [`tokenize`] before splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NormalizationConfig {
    /// Case-fold tokens after NFC normalization. Off by default so that
    /// augmentation preserves surface forms; feature extraction turns it on.
    #[serde(default)]
    pub lowercase: bool,
}

impl NormalizationConfig {
    pub fn lowercased() -> Self {
        Self { lowercase: true }
    }
}

/// An ordered token sequence plus the string it came from.
///
/// Tokens produced by [`tokenize`] are non-empty and contain no whitespace.
/// Sentences assembled from lexicon entries may carry multi-word tokens
/// (e.g. a two-word synonym); [`detokenize`] renders their internal space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedSentence {
    pub tokens: Vec<String>,
    pub raw: String,
}

impl TokenizedSentence {
    /// Build a sentence directly from tokens; `raw` becomes their joined form.
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let raw = tokens.join(" ");
        Self { tokens, raw }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Split `text` into maximal runs of non-whitespace after NFC normalization.
pub fn tokenize(text: &str, config: NormalizationConfig) -> TokenizedSentence {
    let normalized: String = text.nfc().collect();
    let normalized = if config.lowercase {
        normalized.to_lowercase()
    } else {
        normalized
    };
    let tokens = normalized.split_whitespace().map(str::to_string).collect();
    TokenizedSentence {
        tokens,
        raw: text.to_string(),
    }
}

/// Like [`tokenize`], for raw bytes. Fails on invalid UTF-8, reporting the
/// offset of the first bad byte.
pub fn tokenize_bytes(bytes: &[u8], config: NormalizationConfig) -> Result<TokenizedSentence> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    Ok(tokenize(text, config))
}

/// Join tokens with single spaces.
pub fn detokenize(sentence: &TokenizedSentence) -> String {
    sentence.tokens.join(" ")
}

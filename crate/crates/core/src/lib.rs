//! Toolkit for detecting class imbalance in labeled text corpora, generating
//! minority-class variants with lexical augmentation (synonym replacement,
//! random insertion, random swap, random deletion), and measuring the effect
//! with a built-in maximum-entropy classifier and F1-based evaluation.

pub mod balance;
pub mod corpus;
pub mod eda;
pub mod error;
pub mod features;
pub mod lexicon;
pub mod maxent;
pub mod metrics;
pub mod pipeline;
pub mod synthetic;
pub mod text;

pub use error::{Error, Result};

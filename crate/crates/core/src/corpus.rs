//! Corpus ingestion, persistence, per-class statistics, and fold splits.
//!
//! Supported formats: CSV/TSV (RFC 4180 quoting, header row required) and
//! JSONL (one object per line). JSONL additionally persists the token list,
//! so corpora containing multi-word tokens round-trip token-exactly; CSV/TSV
//! round-trip at the surface-text level.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::eda::RngStream;
use crate::error::{Error, Result};
use crate::text::{tokenize, NormalizationConfig, TokenizedSentence};

/// Stream tag separating fold shuffles from augmentation draws.
const KFOLD_STREAM: u64 = 0x6b66_6f6c_6421;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Csv,
    Tsv,
    Jsonl,
}

impl CorpusFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            CorpusFormat::Csv => "csv",
            CorpusFormat::Tsv => "tsv",
            CorpusFormat::Jsonl => "jsonl",
        }
    }

    /// Guess a format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => CorpusFormat::Tsv,
            Some("jsonl") | Some("ndjson") => CorpusFormat::Jsonl,
            _ => CorpusFormat::Csv,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(CorpusFormat::Csv),
            "tsv" => Ok(CorpusFormat::Tsv),
            "jsonl" | "ndjson" => Ok(CorpusFormat::Jsonl),
            other => Err(Error::Config(format!("unknown corpus format `{other}`"))),
        }
    }
}

/// Which fields of the source file hold the text, label, and optional id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub text: String,
    pub label: String,
    #[serde(default)]
    pub id: Option<String>,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self {
            text: "text".to_string(),
            label: "label".to_string(),
            id: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub sentence: TokenizedSentence,
    pub label: String,
}

impl Record {
    /// Records with no tokens are kept in the corpus but skipped by
    /// augmentation.
    pub fn is_augmentable(&self) -> bool {
        !self.sentence.is_empty()
    }
}

/// A list of labeled records plus the label inventory in first-appearance
/// order. Ids are unique; every record label is in the inventory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCorpus {
    pub records: Vec<Record>,
    pub labels: Vec<String>,
}

impl LabeledCorpus {
    /// Build a corpus, deriving the inventory from the records.
    pub fn new(records: Vec<Record>) -> Result<Self> {
        let mut labels = Vec::new();
        for r in &records {
            if !labels.contains(&r.label) {
                labels.push(r.label.clone());
            }
        }
        Self::with_inventory(records, labels)
    }

    /// Build a corpus with an explicit inventory (e.g. a fold that must keep
    /// its parent corpus's label set).
    pub fn with_inventory(records: Vec<Record>, labels: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId { id: r.id.clone() });
            }
            if !labels.contains(&r.label) {
                return Err(Error::UnknownLabel {
                    label: r.label.clone(),
                });
            }
        }
        Ok(Self { records, labels })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Per-label record counts in inventory order.
    pub fn label_counts(&self) -> Vec<(String, usize)> {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for r in &self.records {
            *counts.entry(r.label.as_str()).or_default() += 1;
        }
        self.labels
            .iter()
            .map(|l| (l.clone(), counts.get(l.as_str()).copied().unwrap_or(0)))
            .collect()
    }

    /// Records whose ids are in `ids`, in corpus order, keeping the parent
    /// inventory.
    pub fn subset(&self, ids: &HashSet<String>) -> Self {
        let records = self
            .records
            .iter()
            .filter(|r| ids.contains(&r.id))
            .cloned()
            .collect();
        Self {
            records,
            labels: self.labels.clone(),
        }
    }
}

/// Load a corpus from `path`. Ids default to `<basename>:<row>` (1-based data
/// rows) when no id field is given; the label inventory is first-appearance
/// order.
pub fn load_corpus(
    path: impl AsRef<Path>,
    format: CorpusFormat,
    fields: &FieldSpec,
    normalization: NormalizationConfig,
) -> Result<LabeledCorpus> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let content = std::str::from_utf8(&bytes).map_err(|e| Error::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    let basename = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("corpus");

    let records = match format {
        CorpusFormat::Csv => parse_delimited(content, b',', fields, normalization, basename)?,
        CorpusFormat::Tsv => parse_delimited(content, b'\t', fields, normalization, basename)?,
        CorpusFormat::Jsonl => parse_jsonl(content, fields, normalization, basename)?,
    };
    LabeledCorpus::new(records)
}

fn parse_delimited(
    content: &str,
    delimiter: u8,
    fields: &FieldSpec,
    normalization: NormalizationConfig,
    basename: &str,
) -> Result<Vec<Record>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .from_reader(content.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| Error::Config(format!("cannot read header row: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let text_col = col(&fields.text).ok_or_else(|| Error::MissingField {
        row: 0,
        field: fields.text.clone(),
    })?;
    let label_col = col(&fields.label).ok_or_else(|| Error::MissingField {
        row: 0,
        field: fields.label.clone(),
    })?;
    let id_col = match &fields.id {
        Some(name) => Some(col(name).ok_or_else(|| Error::MissingField {
            row: 0,
            field: name.clone(),
        })?),
        None => None,
    };

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::Config(format!("row {row_no}: {e}")))?;
        let text = row.get(text_col).ok_or_else(|| Error::MissingField {
            row: row_no,
            field: fields.text.clone(),
        })?;
        let label = row.get(label_col).ok_or_else(|| Error::MissingField {
            row: row_no,
            field: fields.label.clone(),
        })?;
        let id = match id_col {
            Some(c) => row
                .get(c)
                .ok_or_else(|| Error::MissingField {
                    row: row_no,
                    field: fields.id.clone().unwrap_or_default(),
                })?
                .to_string(),
            None => format!("{basename}:{row_no}"),
        };
        records.push(Record {
            id,
            sentence: tokenize(text, normalization),
            label: label.to_string(),
        });
    }
    Ok(records)
}

fn parse_jsonl(
    content: &str,
    fields: &FieldSpec,
    normalization: NormalizationConfig,
    basename: &str,
) -> Result<Vec<Record>> {
    let mut records = Vec::new();
    let mut row_no = 0usize;
    for line in content.lines() {
        if line.trim().is_empty() {
            continue;
        }
        row_no += 1;
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| Error::Config(format!("line {row_no}: invalid json: {e}")))?;
        let text = value
            .get(&fields.text)
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::MissingField {
                row: row_no,
                field: fields.text.clone(),
            })?;
        let label = value
            .get(&fields.label)
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::MissingField {
                row: row_no,
                field: fields.label.clone(),
            })?;
        let id = match &fields.id {
            Some(name) => value
                .get(name)
                .and_then(|v| v.as_str())
                .map(str::to_string)
                .ok_or_else(|| Error::MissingField {
                    row: row_no,
                    field: name.clone(),
                })?,
            None => match value.get("id").and_then(|v| v.as_str()) {
                Some(id) => id.to_string(),
                None => format!("{basename}:{row_no}"),
            },
        };
        // An explicit token array wins over re-tokenizing the text; this is
        // what preserves multi-word tokens across save/load.
        let sentence = match value.get("tokens").and_then(|v| v.as_array()) {
            Some(tokens) => {
                let tokens: Option<Vec<String>> = tokens
                    .iter()
                    .map(|t| t.as_str().map(str::to_string))
                    .collect();
                match tokens {
                    Some(tokens) => TokenizedSentence {
                        tokens,
                        raw: text.to_string(),
                    },
                    None => {
                        return Err(Error::Config(format!(
                            "line {row_no}: `tokens` must be an array of strings"
                        )))
                    }
                }
            }
            None => tokenize(text, normalization),
        };
        records.push(Record {
            id,
            sentence,
            label: label.to_string(),
        });
    }
    Ok(records)
}

/// Write a corpus to `path`. CSV/TSV store `id,text,label`; JSONL stores the
/// token list as well.
pub fn save_corpus(corpus: &LabeledCorpus, path: impl AsRef<Path>, format: CorpusFormat) -> Result<()> {
    let path = path.as_ref();
    let mut out: Vec<u8> = Vec::new();
    match format {
        CorpusFormat::Csv | CorpusFormat::Tsv => {
            let delimiter = if format == CorpusFormat::Csv { b',' } else { b'\t' };
            let mut writer = csv::WriterBuilder::new()
                .delimiter(delimiter)
                .from_writer(&mut out);
            let csv_err = |e: csv::Error| Error::Config(format!("csv write failed: {e}"));
            writer.write_record(["id", "text", "label"]).map_err(csv_err)?;
            for r in &corpus.records {
                writer
                    .write_record([r.id.as_str(), r.sentence.raw.as_str(), r.label.as_str()])
                    .map_err(csv_err)?;
            }
            writer.flush().map_err(|e| Error::io(path, e))?;
        }
        CorpusFormat::Jsonl => {
            for r in &corpus.records {
                let line = json!({
                    "id": r.id,
                    "text": r.sentence.raw,
                    "tokens": r.sentence.tokens,
                    "label": r.label,
                });
                out.extend_from_slice(line.to_string().as_bytes());
                out.push(b'\n');
            }
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Per-class summary: record count, mean token length, token total, and
/// distinct-token count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub label: String,
    pub count: usize,
    pub avg_len: f64,
    pub total_tokens: usize,
    pub unique_vocab: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub per_label: Vec<ClassStats>,
    pub overall: ClassStats,
}

impl CorpusStats {
    pub fn count_for(&self, label: &str) -> Option<usize> {
        self.per_label
            .iter()
            .find(|s| s.label == label)
            .map(|s| s.count)
    }
}

fn stats_for<'a>(label: &str, sentences: impl Iterator<Item = &'a TokenizedSentence>) -> ClassStats {
    let mut count = 0usize;
    let mut total_tokens = 0usize;
    let mut vocab: HashSet<&str> = HashSet::new();
    for s in sentences {
        count += 1;
        total_tokens += s.len();
        vocab.extend(s.tokens.iter().map(String::as_str));
    }
    let avg_len = if count == 0 {
        0.0
    } else {
        total_tokens as f64 / count as f64
    };
    ClassStats {
        label: label.to_string(),
        count,
        avg_len,
        total_tokens,
        unique_vocab: vocab.len(),
    }
}

/// Compute per-label statistics plus an overall row labeled `Total`.
pub fn class_stats(corpus: &LabeledCorpus) -> CorpusStats {
    let per_label = corpus
        .labels
        .iter()
        .map(|label| {
            stats_for(
                label,
                corpus
                    .records
                    .iter()
                    .filter(|r| &r.label == label)
                    .map(|r| &r.sentence),
            )
        })
        .collect();
    let overall = stats_for("Total", corpus.records.iter().map(|r| &r.sentence));
    CorpusStats { per_label, overall }
}

/// Render statistics as an aligned plain-text table (mean lengths to two
/// decimals).
pub fn render_stats_table(stats: &CorpusStats) -> String {
    let headers = ["Label", "Records", "Avg. tokens", "Total tokens", "Unique tokens"];
    let mut rows: Vec<[String; 5]> = Vec::new();
    for s in stats.per_label.iter().chain(std::iter::once(&stats.overall)) {
        rows.push([
            s.label.clone(),
            s.count.to_string(),
            format!("{:.2}", s.avg_len),
            s.total_tokens.to_string(),
            s.unique_vocab.to_string(),
        ]);
    }
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let render_row = |out: &mut String, cells: &[String]| {
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            if i == 0 {
                let _ = write!(out, "{cell:<w$}");
            } else {
                let _ = write!(out, "{cell:>w$}");
            }
        }
        out.push('\n');
    };
    let header_cells: Vec<String> = headers.iter().map(|h| h.to_string()).collect();
    render_row(&mut out, &header_cells);
    for (i, row) in rows.iter().enumerate() {
        if i + 1 == rows.len() {
            // separator before the Total row
            let total_width: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total_width));
            out.push('\n');
        }
        render_row(&mut out, row);
    }
    out
}

/// One cross-validation fold: train ids and held-out test ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

/// Stratified k-fold assignment: within each label, records are shuffled by
/// `seed` and dealt round-robin, so per-label fold sizes differ by at most
/// one. Every id lands in exactly one test fold.
pub fn kfold_splits(corpus: &LabeledCorpus, k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if k < 2 || k > corpus.len() {
        return Err(Error::InvalidFolds {
            k,
            records: corpus.len(),
        });
    }
    let mut test_fold_of = vec![0usize; corpus.len()];
    for (label_idx, label) in corpus.labels.iter().enumerate() {
        let mut indices: Vec<usize> = corpus
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| &r.label == label)
            .map(|(i, _)| i)
            .collect();
        if indices.len() < k {
            log::warn!(
                "label `{label}` has {} record(s), fewer than k={k}; it will be absent from some test folds",
                indices.len()
            );
        }
        let mut rng = RngStream::derive(seed, label_idx as u64, KFOLD_STREAM);
        rng.shuffle(&mut indices);
        for (deal, record_idx) in indices.into_iter().enumerate() {
            test_fold_of[record_idx] = deal % k;
        }
    }

    let folds = (0..k)
        .map(|fold| {
            let mut train_ids = Vec::new();
            let mut test_ids = Vec::new();
            for (i, r) in corpus.records.iter().enumerate() {
                if test_fold_of[i] == fold {
                    test_ids.push(r.id.clone());
                } else {
                    train_ids.push(r.id.clone());
                }
            }
            FoldSplit { train_ids, test_ids }
        })
        .collect();
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus_from(rows: &[(&str, &str)]) -> LabeledCorpus {
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, (text, label))| Record {
                id: format!("r{i}"),
                sentence: tokenize(text, NormalizationConfig::default()),
                label: label.to_string(),
            })
            .collect();
        LabeledCorpus::new(records).unwrap()
    }

    #[test]
    fn loads_csv_with_header() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), "text,label\na b,X\nc,Y\nd e f,X\n").unwrap();
        let corpus = load_corpus(
            f.path(),
            CorpusFormat::Csv,
            &FieldSpec::default(),
            NormalizationConfig::default(),
        )
        .unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.labels, vec!["X", "Y"]);
        assert_eq!(corpus.records[0].sentence.tokens, vec!["a", "b"]);
        assert!(corpus.records[0].id.ends_with(":1"));
    }

    #[test]
    fn loads_jsonl_line() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), "{\"text\":\"Đcm nản vl\",\"label\":\"HATE\"}\n").unwrap();
        let corpus = load_corpus(
            f.path(),
            CorpusFormat::Jsonl,
            &FieldSpec::default(),
            NormalizationConfig::default(),
        )
        .unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.records[0].sentence.len(), 3);
        assert_eq!(corpus.records[0].label, "HATE");
    }

    #[test]
    fn extra_columns_are_ignored() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), "text,label,extra\na,X,junk\n").unwrap();
        let corpus = load_corpus(
            f.path(),
            CorpusFormat::Csv,
            &FieldSpec::default(),
            NormalizationConfig::default(),
        )
        .unwrap();
        assert_eq!(corpus.len(), 1);
    }

    #[test]
    fn missing_field_names_the_field() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), "body,label\na,X\n").unwrap();
        match load_corpus(
            f.path(),
            CorpusFormat::Csv,
            &FieldSpec::default(),
            NormalizationConfig::default(),
        ) {
            Err(Error::MissingField { field, .. }) => assert_eq!(field, "text"),
            other => panic!("expected missing field, got {other:?}"),
        }
    }

    #[test]
    fn missing_jsonl_field_reports_row() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(
            f.path(),
            "{\"text\":\"a\",\"label\":\"X\"}\n{\"text\":\"b\"}\n",
        )
        .unwrap();
        match load_corpus(
            f.path(),
            CorpusFormat::Jsonl,
            &FieldSpec::default(),
            NormalizationConfig::default(),
        ) {
            Err(Error::MissingField { row, field }) => {
                assert_eq!(row, 2);
                assert_eq!(field, "label");
            }
            other => panic!("expected missing field, got {other:?}"),
        }
    }

    #[test]
    fn empty_text_is_kept_but_not_augmentable() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), "text,label\n,X\na,X\n").unwrap();
        let corpus = load_corpus(
            f.path(),
            CorpusFormat::Csv,
            &FieldSpec::default(),
            NormalizationConfig::default(),
        )
        .unwrap();
        assert_eq!(corpus.len(), 2);
        assert!(!corpus.records[0].is_augmentable());
        assert!(corpus.records[1].is_augmentable());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let records = vec![
            Record {
                id: "same".into(),
                sentence: TokenizedSentence::from_tokens(vec!["a".into()]),
                label: "X".into(),
            },
            Record {
                id: "same".into(),
                sentence: TokenizedSentence::from_tokens(vec!["b".into()]),
                label: "X".into(),
            },
        ];
        assert!(matches!(
            LabeledCorpus::new(records),
            Err(Error::DuplicateId { .. })
        ));
    }

    #[test]
    fn csv_round_trip_preserves_records() {
        let corpus = corpus_from(&[("a b", "X"), ("c,with comma", "Y"), ("d", "X")]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        save_corpus(&corpus, &path, CorpusFormat::Csv).unwrap();
        let fields = FieldSpec {
            id: Some("id".into()),
            ..FieldSpec::default()
        };
        let back = load_corpus(&path, CorpusFormat::Csv, &fields, NormalizationConfig::default())
            .unwrap();
        assert_eq!(back.len(), corpus.len());
        for (a, b) in corpus.records.iter().zip(&back.records) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.label, b.label);
            assert_eq!(a.sentence.tokens, b.sentence.tokens);
        }
    }

    #[test]
    fn jsonl_round_trip_is_token_exact_with_multiword_tokens() {
        let records = vec![Record {
            id: "r0".into(),
            sentence: TokenizedSentence::from_tokens(vec![
                "Đcm".into(),
                "nhụt chí".into(),
                "vl".into(),
            ]),
            label: "HATE".into(),
        }];
        let corpus = LabeledCorpus::new(records).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        save_corpus(&corpus, &path, CorpusFormat::Jsonl).unwrap();
        let fields = FieldSpec {
            id: Some("id".into()),
            ..FieldSpec::default()
        };
        let back = load_corpus(&path, CorpusFormat::Jsonl, &fields, NormalizationConfig::default())
            .unwrap();
        assert_eq!(back.records[0].sentence.tokens, corpus.records[0].sentence.tokens);
    }

    #[test]
    fn stats_single_record() {
        let corpus = corpus_from(&[("a b c d", "X")]);
        let stats = class_stats(&corpus);
        assert_eq!(stats.per_label[0].count, 1);
        assert_eq!(stats.per_label[0].avg_len, 4.0);
        assert_eq!(stats.per_label[0].total_tokens, 4);
    }

    #[test]
    fn stats_unique_vocab_counts_distinct_tokens() {
        let corpus = corpus_from(&[("a b", "X"), ("b c", "X")]);
        let stats = class_stats(&corpus);
        assert_eq!(stats.per_label[0].unique_vocab, 3);
        assert_eq!(stats.per_label[0].total_tokens, 4);
        assert_eq!(stats.overall.total_tokens, 4);
    }

    #[test]
    fn stats_identity_holds_within_rounding() {
        let corpus = corpus_from(&[("a b c", "X"), ("d e", "X"), ("f", "Y")]);
        let stats = class_stats(&corpus);
        for s in stats.per_label.iter().chain([&stats.overall]) {
            assert!((s.avg_len * s.count as f64 - s.total_tokens as f64).abs() < 1.0);
        }
    }

    #[test]
    fn stats_table_renders_total_row() {
        let corpus = corpus_from(&[("a b", "X"), ("c", "Y")]);
        let table = render_stats_table(&class_stats(&corpus));
        assert!(table.contains("Total"));
        assert!(table.contains("1.50"));
    }

    #[test]
    fn kfold_partitions_all_ids() {
        let rows: Vec<(String, &str)> = (0..10).map(|i| (format!("tok{i}"), "X")).collect();
        let rows: Vec<(&str, &str)> = rows.iter().map(|(t, l)| (t.as_str(), *l)).collect();
        let corpus = corpus_from(&rows);
        let folds = kfold_splits(&corpus, 5, 7).unwrap();
        assert_eq!(folds.len(), 5);
        let mut seen = HashSet::new();
        for f in &folds {
            assert_eq!(f.test_ids.len(), 2);
            for id in &f.test_ids {
                assert!(seen.insert(id.clone()), "id {id} in two test folds");
            }
            assert_eq!(f.train_ids.len() + f.test_ids.len(), corpus.len());
        }
        assert_eq!(seen.len(), corpus.len());
    }

    #[test]
    fn kfold_stratifies_labels() {
        let mut rows = Vec::new();
        for i in 0..8 {
            rows.push((format!("a{i}"), "MAJ"));
        }
        for i in 0..2 {
            rows.push((format!("b{i}"), "MIN"));
        }
        let rows: Vec<(&str, &str)> = rows.iter().map(|(t, l)| (t.as_str(), *l)).collect();
        let corpus = corpus_from(&rows);
        let folds = kfold_splits(&corpus, 2, 3).unwrap();
        for f in &folds {
            let maj = f.test_ids.iter().filter(|id| {
                corpus.records.iter().any(|r| &r.id == *id && r.label == "MAJ")
            });
            let min = f.test_ids.iter().filter(|id| {
                corpus.records.iter().any(|r| &r.id == *id && r.label == "MIN")
            });
            assert_eq!(maj.count(), 4);
            assert_eq!(min.count(), 1);
        }
    }

    #[test]
    fn kfold_tolerates_labels_smaller_than_k() {
        // A single-record label ends up in exactly one test fold and is
        // simply absent from the others.
        let corpus = corpus_from(&[("a", "X"), ("b", "X"), ("c", "X"), ("d", "RARE")]);
        let folds = kfold_splits(&corpus, 2, 5).unwrap();
        let rare_test_folds = folds
            .iter()
            .filter(|f| f.test_ids.contains(&"r3".to_string()))
            .count();
        assert_eq!(rare_test_folds, 1);
    }

    #[test]
    fn kfold_rejects_bad_k() {
        let corpus = corpus_from(&[("a", "X"), ("b", "X")]);
        assert!(matches!(
            kfold_splits(&corpus, 1, 0),
            Err(Error::InvalidFolds { .. })
        ));
        assert!(matches!(
            kfold_splits(&corpus, 3, 0),
            Err(Error::InvalidFolds { .. })
        ));
    }

    #[test]
    fn kfold_is_deterministic_per_seed() {
        let rows: Vec<(String, &str)> = (0..20).map(|i| (format!("t{i}"), "X")).collect();
        let rows: Vec<(&str, &str)> = rows.iter().map(|(t, l)| (t.as_str(), *l)).collect();
        let corpus = corpus_from(&rows);
        assert_eq!(
            kfold_splits(&corpus, 4, 11).unwrap(),
            kfold_splits(&corpus, 4, 11).unwrap()
        );
        assert_ne!(
            kfold_splits(&corpus, 4, 11).unwrap(),
            kfold_splits(&corpus, 4, 12).unwrap()
        );
    }
}

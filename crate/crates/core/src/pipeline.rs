//! Experiment orchestration: k-fold cross-validation and fixed-split
//! evaluation with train-only augmentation, comparing a baseline model
//! against a model trained on the augmented split.
//!
//! Both arms share the fold partition and the base seed, so the only
//! difference between them is the augmentation. Evaluation splits are never
//! augmented; the report carries an audit block proving it.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::balance::{execute_plan, plan_balance, BalancePolicy};
use crate::corpus::{
    class_stats, kfold_splits, load_corpus, save_corpus, CorpusFormat, FieldSpec, LabeledCorpus,
};
use crate::eda::{EdaOp, EdaParams, RngStream};
use crate::error::{Error, Result};
use crate::features::{fit_vocabulary, vectorize, SparseVector, VocabConfig};
use crate::lexicon::{StopwordSet, SynonymLexicon};
use crate::maxent::{train_with_dev, TrainConfig};
use crate::metrics::{evaluate, ConfusionMatrix, EvalReport};
use crate::text::NormalizationConfig;

/// Stream tag for deriving per-fold augmentation seeds.
const FOLD_SEED_STREAM: u64 = 0x464f_4c44;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    /// Corpus file; optional because holdout mode names its own files.
    #[serde(default)]
    pub path: Option<PathBuf>,
    pub format: CorpusFormat,
    #[serde(default)]
    pub fields: FieldSpec,
    #[serde(default)]
    pub normalization: NormalizationConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LexiconSpec {
    #[serde(default)]
    pub synonyms: Option<PathBuf>,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaSpec {
    pub alpha: f64,
    #[serde(default = "all_ops")]
    pub ops: Vec<EdaOp>,
}

fn all_ops() -> Vec<EdaOp> {
    EdaOp::ALL.to_vec()
}

impl EdaSpec {
    pub fn to_params(&self) -> Result<EdaParams> {
        EdaParams::new(self.alpha, self.ops.clone(), 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceSpec {
    pub policy: BalancePolicy,
    #[serde(default)]
    pub dedup: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Crossval {
        k: usize,
    },
    Holdout {
        train: PathBuf,
        #[serde(default)]
        dev: Option<PathBuf>,
        test: PathBuf,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    #[serde(default)]
    pub vocab: VocabConfig,
    #[serde(default)]
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub lexicon: LexiconSpec,
    pub eda: EdaSpec,
    pub balance: BalanceSpec,
    pub mode: Mode,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub outdir: Option<PathBuf>,
}

fn default_seed() -> u64 {
    42
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let config: ExperimentConfig =
            serde_json::from_slice(&bytes).map_err(|e| Error::Json {
                path: path.to_path_buf(),
                source: e,
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.mode {
            Mode::Crossval { k } => {
                if *k < 2 {
                    return Err(Error::Config(format!("crossval requires k >= 2, got {k}")));
                }
                if self.dataset.path.is_none() {
                    return Err(Error::Config(
                        "crossval mode requires dataset.path".to_string(),
                    ));
                }
            }
            Mode::Holdout { .. } => {}
        }
        self.eda.to_params().map(|_| ())
    }
}

/// Everything a run needs besides the data itself.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub eda: EdaParams,
    pub policy: BalancePolicy,
    pub dedup: bool,
    pub vocab: VocabConfig,
    pub train: TrainConfig,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub vocab_hash: String,
    pub model_hash: String,
    pub eval: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub augmented_train_size: usize,
    /// Evaluation-split ids carrying the augmentation suffix; always 0.
    pub eval_augmented_id_count: usize,
    pub baseline: ArmResult,
    pub augmented: ArmResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub mean: f64,
    pub std: f64,
}

impl SummaryStat {
    fn over(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub f1_macro: SummaryStat,
    pub f1_micro: SummaryStat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    /// Total `#aug` ids seen in evaluation splits across folds; must be 0.
    pub eval_augmented_ids: usize,
    pub baseline_vocab_hashes_distinct: bool,
    pub augmented_vocab_hashes_distinct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub mode: String,
    pub base_seed: u64,
    pub labels: Vec<String>,
    pub folds: Vec<FoldResult>,
    pub baseline: ArmSummary,
    pub augmented: ArmSummary,
    pub pooled_confusion_baseline: ConfusionMatrix,
    pub pooled_confusion_augmented: ConfusionMatrix,
    pub audit: AuditSummary,
}

/// A finished run: the report plus each fold's augmented training corpus
/// (for persistence).
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ComparisonReport,
    pub augmented_corpora: Vec<LabeledCorpus>,
}

fn label_indices(corpus: &LabeledCorpus, inventory: &[String]) -> Result<Vec<usize>> {
    let lookup: HashMap<&str, usize> = inventory
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    corpus
        .records
        .iter()
        .map(|r| {
            lookup.get(r.label.as_str()).copied().ok_or_else(|| Error::UnknownLabel {
                label: r.label.clone(),
            })
        })
        .collect()
}

fn vectorize_corpus(corpus: &LabeledCorpus, vocab: &crate::features::Vocabulary) -> Vec<SparseVector> {
    corpus
        .records
        .iter()
        .map(|r| vectorize(&r.sentence, vocab))
        .collect()
}

struct Arm {
    result: ArmResult,
}

fn run_arm(
    train: &LabeledCorpus,
    test: &LabeledCorpus,
    dev: Option<&LabeledCorpus>,
    inventory: &[String],
    settings: &RunSettings,
) -> Result<Arm> {
    let vocab = fit_vocabulary(train, &settings.vocab)?;
    let x = vectorize_corpus(train, &vocab);
    let y = label_indices(train, inventory)?;

    let dev_data = match dev {
        Some(dev_corpus) => Some((vectorize_corpus(dev_corpus, &vocab), label_indices(dev_corpus, inventory)?)),
        None => None,
    };
    let mut model = train_with_dev(
        &x,
        &y,
        inventory,
        &settings.train,
        dev_data.as_ref().map(|(dx, dy)| (dx.as_slice(), dy.as_slice())),
    )?;
    model.vocab_hash = vocab.content_hash();

    let test_x = vectorize_corpus(test, &vocab);
    let pred: Result<Vec<usize>> = test_x.iter().map(|v| model.predict(v)).collect();
    let pred = pred?;
    let gold: Vec<&str> = test.records.iter().map(|r| r.label.as_str()).collect();
    let pred: Vec<&str> = pred.iter().map(|&i| inventory[i].as_str()).collect();
    let eval = evaluate(&gold, &pred, inventory)?;

    Ok(Arm {
        result: ArmResult {
            vocab_hash: vocab.content_hash(),
            model_hash: model.weight_hash(),
            eval,
        },
    })
}

fn run_fold(
    fold_index: usize,
    train: &LabeledCorpus,
    test: &LabeledCorpus,
    dev: Option<&LabeledCorpus>,
    lexicon: &SynonymLexicon,
    stopwords: &StopwordSet,
    settings: &RunSettings,
) -> Result<(FoldResult, LabeledCorpus)> {
    let inventory = train.labels.clone();
    for (label, count) in train.label_counts() {
        if count == 0 {
            return Err(Error::Config(format!(
                "fold {fold_index}: training split lacks class `{label}`"
            )));
        }
    }

    let baseline = run_arm(train, test, dev, &inventory, settings)?;

    let plan = plan_balance(&class_stats(train), settings.policy.clone(), settings.eda.clone())?;
    let fold_seed = RngStream::derive(settings.base_seed, fold_index as u64, FOLD_SEED_STREAM)
        .next_u64();
    let augmented_train = execute_plan(train, &plan, lexicon, stopwords, fold_seed, settings.dedup)?;
    let augmented = run_arm(&augmented_train, test, dev, &inventory, settings)?;

    let eval_augmented_id_count = test
        .records
        .iter()
        .filter(|r| r.id.contains("#aug"))
        .count();

    Ok((
        FoldResult {
            fold: fold_index,
            train_size: train.len(),
            test_size: test.len(),
            augmented_train_size: augmented_train.len(),
            eval_augmented_id_count,
            baseline: baseline.result,
            augmented: augmented.result,
        },
        augmented_train,
    ))
}

fn assemble_report(
    mode: &str,
    base_seed: u64,
    labels: Vec<String>,
    folds: Vec<FoldResult>,
) -> Result<ComparisonReport> {
    let mut pooled_baseline = ConfusionMatrix::zeros(labels.clone());
    let mut pooled_augmented = ConfusionMatrix::zeros(labels.clone());
    for f in &folds {
        pooled_baseline.merge(&f.baseline.eval.confusion)?;
        pooled_augmented.merge(&f.augmented.eval.confusion)?;
    }

    let collect = |f: &dyn Fn(&FoldResult) -> f64| -> Vec<f64> { folds.iter().map(f).collect() };
    let baseline = ArmSummary {
        f1_macro: SummaryStat::over(&collect(&|f| f.baseline.eval.f1_macro)),
        f1_micro: SummaryStat::over(&collect(&|f| f.baseline.eval.f1_micro)),
    };
    let augmented = ArmSummary {
        f1_macro: SummaryStat::over(&collect(&|f| f.augmented.eval.f1_macro)),
        f1_micro: SummaryStat::over(&collect(&|f| f.augmented.eval.f1_micro)),
    };

    let distinct = |hashes: Vec<&str>| -> bool {
        let n = hashes.len();
        hashes.into_iter().collect::<HashSet<_>>().len() == n
    };
    let audit = AuditSummary {
        eval_augmented_ids: folds.iter().map(|f| f.eval_augmented_id_count).sum(),
        baseline_vocab_hashes_distinct: distinct(
            folds.iter().map(|f| f.baseline.vocab_hash.as_str()).collect(),
        ),
        augmented_vocab_hashes_distinct: distinct(
            folds.iter().map(|f| f.augmented.vocab_hash.as_str()).collect(),
        ),
    };

    Ok(ComparisonReport {
        mode: mode.to_string(),
        base_seed,
        labels,
        folds,
        baseline,
        augmented,
        pooled_confusion_baseline: pooled_baseline,
        pooled_confusion_augmented: pooled_augmented,
        audit,
    })
}

/// Stratified k-fold comparison on an in-memory corpus.
pub fn run_crossval_corpus(
    corpus: &LabeledCorpus,
    lexicon: &SynonymLexicon,
    stopwords: &StopwordSet,
    k: usize,
    settings: &RunSettings,
) -> Result<ExperimentOutput> {
    let splits = kfold_splits(corpus, k, settings.base_seed)?;
    let mut folds = Vec::new();
    let mut augmented_corpora = Vec::new();
    for (i, split) in splits.iter().enumerate() {
        let train_ids: HashSet<String> = split.train_ids.iter().cloned().collect();
        let test_ids: HashSet<String> = split.test_ids.iter().cloned().collect();
        let train = corpus.subset(&train_ids);
        let test = corpus.subset(&test_ids);
        let (fold, augmented) = run_fold(i, &train, &test, None, lexicon, stopwords, settings)?;
        folds.push(fold);
        augmented_corpora.push(augmented);
    }
    Ok(ExperimentOutput {
        report: assemble_report("crossval", settings.base_seed, corpus.labels.clone(), folds)?,
        augmented_corpora,
    })
}

/// Fixed train/test comparison; `dev`, when given, only drives epoch
/// selection.
pub fn run_holdout_corpus(
    train: &LabeledCorpus,
    dev: Option<&LabeledCorpus>,
    test: &LabeledCorpus,
    lexicon: &SynonymLexicon,
    stopwords: &StopwordSet,
    settings: &RunSettings,
) -> Result<ExperimentOutput> {
    for r in &test.records {
        if !train.labels.contains(&r.label) {
            return Err(Error::Config(format!(
                "label `{}` appears in the test set but not in the training set",
                r.label
            )));
        }
    }
    // Re-key test records onto the training inventory so both arms agree.
    let test = LabeledCorpus::with_inventory(test.records.clone(), train.labels.clone())?;
    let dev = match dev {
        Some(d) => Some(LabeledCorpus::with_inventory(
            d.records.clone(),
            train.labels.clone(),
        )?),
        None => None,
    };
    let (fold, augmented) = run_fold(0, train, &test, dev.as_ref(), lexicon, stopwords, settings)?;
    Ok(ExperimentOutput {
        report: assemble_report("holdout", settings.base_seed, train.labels.clone(), vec![fold])?,
        augmented_corpora: vec![augmented],
    })
}

fn load_lexicons(spec: &LexiconSpec) -> Result<(SynonymLexicon, StopwordSet)> {
    let synonyms = match &spec.synonyms {
        Some(path) => SynonymLexicon::load(path)?,
        None => {
            log::warn!("no synonym lexicon given; SR/RI will be degenerate");
            SynonymLexicon::default()
        }
    };
    let stopwords = match &spec.stopwords {
        Some(path) => StopwordSet::load(path)?,
        None => StopwordSet::empty(),
    };
    Ok((synonyms, stopwords))
}

impl ExperimentConfig {
    fn settings(&self) -> Result<RunSettings> {
        Ok(RunSettings {
            eda: self.eda.to_params()?,
            policy: self.balance.policy.clone(),
            dedup: self.balance.dedup,
            vocab: self.classifier.vocab.clone(),
            train: self.classifier.train.clone(),
            base_seed: self.base_seed,
        })
    }

    fn load_split(&self, path: &Path) -> Result<LabeledCorpus> {
        load_corpus(
            path,
            self.dataset.format,
            &self.dataset.fields,
            self.dataset.normalization,
        )
    }
}

/// Run the experiment described by `config` (either mode).
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let (lexicon, stopwords) = load_lexicons(&config.lexicon)?;
    let settings = config.settings()?;
    match &config.mode {
        Mode::Crossval { k } => {
            let path = config.dataset.path.as_ref().expect("validated");
            let corpus = config.load_split(path)?;
            run_crossval_corpus(&corpus, &lexicon, &stopwords, *k, &settings)
        }
        Mode::Holdout { train, dev, test } => {
            let train_corpus = config.load_split(train)?;
            let dev_corpus = match dev {
                Some(d) => Some(config.load_split(d)?),
                None => None,
            };
            let test_corpus = config.load_split(test)?;
            run_holdout_corpus(
                &train_corpus,
                dev_corpus.as_ref(),
                &test_corpus,
                &lexicon,
                &stopwords,
                &settings,
            )
        }
    }
}

/// Write `report.json`, the pooled confusion CSVs, and each fold's augmented
/// training corpus under `outdir`.
pub fn write_outputs(
    output: &ExperimentOutput,
    outdir: impl AsRef<Path>,
    format: CorpusFormat,
) -> Result<()> {
    let outdir = outdir.as_ref();
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;

    let report_path = outdir.join("report.json");
    let mut json = serde_json::to_string_pretty(&output.report).expect("report serializes");
    json.push('\n');
    std::fs::write(&report_path, json).map_err(|e| Error::io(&report_path, e))?;

    let base_csv = outdir.join("confusion_baseline.csv");
    std::fs::write(&base_csv, output.report.pooled_confusion_baseline.to_csv())
        .map_err(|e| Error::io(&base_csv, e))?;
    let aug_csv = outdir.join("confusion_augmented.csv");
    std::fs::write(&aug_csv, output.report.pooled_confusion_augmented.to_csv())
        .map_err(|e| Error::io(&aug_csv, e))?;

    for (i, corpus) in output.augmented_corpora.iter().enumerate() {
        let path = outdir.join(format!("fold{i}_train_aug.{}", format.extension()));
        save_corpus(corpus, &path, format)?;
    }
    Ok(())
}

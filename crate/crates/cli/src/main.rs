//! `rebalance` — inspect class balance in labeled text corpora, augment
//! minority classes, and compare classifier quality before and after.
//!
//! Exit codes: 0 success, 1 validation/usage error, 2 I/O error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use rebalance_core::balance::{execute_plan, plan_balance, AugmentationPlan, BalancePolicy};
use rebalance_core::corpus::{
    class_stats, load_corpus, render_stats_table, save_corpus, CorpusFormat, FieldSpec,
    LabeledCorpus,
};
use rebalance_core::eda::{EdaOp, EdaParams};
use rebalance_core::error::Error;
use rebalance_core::features::{fit_vocabulary, vectorize, VocabConfig, Vocabulary, WeightScheme};
use rebalance_core::lexicon::{StopwordSet, SynonymLexicon};
use rebalance_core::maxent::{train, MaxEntModel, TrainConfig};
use rebalance_core::metrics::{evaluate, render_report};
use rebalance_core::pipeline::{run_experiment, write_outputs, ExperimentConfig};
use rebalance_core::text::NormalizationConfig;

#[derive(Parser)]
#[command(
    name = "rebalance",
    version,
    about = "Detect class imbalance, augment minority classes, and measure the effect"
)]
struct Cli {
    /// Base seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fix the reduction order in training. This implementation is
    /// single-threaded and already deterministic; the flag is accepted for
    /// interface stability.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Corpus format (csv, tsv, jsonl); inferred from file extensions when
    /// omitted.
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<CorpusFormat>,
    #[command(subcommand)]
    command: Command,
}

fn parse_format(s: &str) -> Result<CorpusFormat, String> {
    CorpusFormat::from_str(s).map_err(|e| e.to_string())
}

fn parse_op(s: &str) -> Result<EdaOp, String> {
    EdaOp::from_str(s).map_err(|e| e.to_string())
}

#[derive(Args)]
struct FieldArgs {
    /// Column/field holding the text.
    #[arg(long, default_value = "text")]
    text_field: String,
    /// Column/field holding the label.
    #[arg(long, default_value = "label")]
    label_field: String,
    /// Column/field holding a stable id (generated when omitted).
    #[arg(long)]
    id_field: Option<String>,
    /// Lowercase text while tokenizing.
    #[arg(long)]
    lowercase: bool,
}

impl FieldArgs {
    fn spec(&self) -> FieldSpec {
        FieldSpec {
            text: self.text_field.clone(),
            label: self.label_field.clone(),
            id: self.id_field.clone(),
        }
    }

    fn normalization(&self) -> NormalizationConfig {
        NormalizationConfig {
            lowercase: self.lowercase,
        }
    }
}

#[derive(Args)]
struct PolicyArgs {
    /// Raise every class to the majority class count.
    #[arg(long)]
    match_majority: bool,
    /// Explicit target count, repeatable: --target LABEL=COUNT.
    #[arg(long, value_name = "LABEL=COUNT")]
    target: Vec<String>,
    /// Fixed number of variants per record for every class.
    #[arg(long)]
    naug: Option<usize>,
}

impl PolicyArgs {
    fn to_policy(&self) -> Result<BalancePolicy, Error> {
        let picked = usize::from(self.match_majority)
            + usize::from(!self.target.is_empty())
            + usize::from(self.naug.is_some());
        if picked != 1 {
            return Err(Error::Config(
                "choose exactly one of --match-majority, --target, --naug".to_string(),
            ));
        }
        if self.match_majority {
            Ok(BalancePolicy::MatchMajority)
        } else if let Some(n) = self.naug {
            Ok(BalancePolicy::FixedNaug(n))
        } else {
            let mut counts = BTreeMap::new();
            for spec in &self.target {
                let (label, count) = spec
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("--target `{spec}` is not LABEL=COUNT")))?;
                let count: usize = count.parse().map_err(|_| {
                    Error::Config(format!("--target `{spec}` has a non-numeric count"))
                })?;
                counts.insert(label.to_string(), count);
            }
            Ok(BalancePolicy::TargetCounts(counts))
        }
    }
}

#[derive(Args)]
struct EdaArgs {
    /// Fraction of tokens to perturb; also the per-token deletion
    /// probability.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Operations to cycle through (SR, RI, RS, RD).
    #[arg(long, value_delimiter = ',', value_parser = parse_op)]
    ops: Option<Vec<EdaOp>>,
}

impl EdaArgs {
    fn params(&self) -> Result<EdaParams, Error> {
        let ops = self.ops.clone().unwrap_or_else(|| EdaOp::ALL.to_vec());
        EdaParams::new(self.alpha, ops, 1)
    }
}

#[derive(Args)]
struct VocabArgs {
    /// Keep terms with at least this document frequency.
    #[arg(long, default_value_t = 1)]
    min_df: usize,
    /// Cap the vocabulary size.
    #[arg(long)]
    max_features: Option<usize>,
    /// Feature weighting: counts or tfidf.
    #[arg(long, default_value = "counts")]
    scheme: String,
    /// Keep the original case of feature terms.
    #[arg(long)]
    no_lowercase: bool,
    /// Add adjacent-pair terms.
    #[arg(long)]
    bigrams: bool,
}

impl VocabArgs {
    fn config(&self) -> Result<VocabConfig, Error> {
        let scheme = match self.scheme.to_ascii_lowercase().as_str() {
            "counts" => WeightScheme::Counts,
            "tfidf" => WeightScheme::Tfidf,
            other => {
                return Err(Error::Config(format!(
                    "unknown scheme `{other}` (expected counts or tfidf)"
                )))
            }
        };
        Ok(VocabConfig {
            min_df: self.min_df,
            max_features: self.max_features,
            scheme,
            lowercase: !self.no_lowercase,
            bigrams: self.bigrams,
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

impl TrainArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            l2: self.l2,
            max_epochs: self.epochs,
            tol: self.tol,
            seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print per-class statistics for a corpus.
    Stats {
        corpus: PathBuf,
        #[command(flatten)]
        fields: FieldArgs,
        /// Also write the statistics as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute an augmentation plan and write it as JSON.
    Plan {
        corpus: PathBuf,
        #[command(flatten)]
        fields: FieldArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        eda: EdaArgs,
        /// Plan destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Augment a corpus and write the result.
    Augment {
        corpus: PathBuf,
        #[command(flatten)]
        fields: FieldArgs,
        /// Execute a previously saved plan instead of computing one.
        #[arg(long, conflicts_with_all = ["match_majority", "target", "naug"])]
        plan: Option<PathBuf>,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        eda: EdaArgs,
        /// Synonym lexicon (tab-separated groups).
        #[arg(long)]
        synonyms: Option<PathBuf>,
        /// Stopword list (one per line).
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Drop variants identical to their source and top the counts back
        /// up.
        #[arg(long)]
        dedup: bool,
        /// Output corpus path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a maximum-entropy classifier on a corpus.
    Train {
        corpus: PathBuf,
        #[command(flatten)]
        fields: FieldArgs,
        #[command(flatten)]
        vocab: VocabArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// Model destination (JSON).
        #[arg(long)]
        model_out: PathBuf,
        /// Vocabulary destination (JSON).
        #[arg(long)]
        vocab_out: PathBuf,
    },
    /// Evaluate a trained model on a labeled corpus.
    Eval {
        corpus: PathBuf,
        #[command(flatten)]
        fields: FieldArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Also write the evaluation report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full before/after experiment from a JSON config.
    Experiment {
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        outdir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful outcomes, bad flags are not.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}

fn resolved_format(cli_format: Option<CorpusFormat>, path: &Path) -> CorpusFormat {
    cli_format.unwrap_or_else(|| CorpusFormat::from_path(path))
}

fn load(
    path: &Path,
    cli_format: Option<CorpusFormat>,
    fields: &FieldArgs,
) -> Result<LabeledCorpus, Error> {
    load_corpus(
        path,
        resolved_format(cli_format, path),
        &fields.spec(),
        fields.normalization(),
    )
}

fn load_lexicons(
    synonyms: &Option<PathBuf>,
    stopwords: &Option<PathBuf>,
) -> Result<(SynonymLexicon, StopwordSet), Error> {
    let lex = match synonyms {
        Some(p) => SynonymLexicon::load(p)?,
        None => {
            log::warn!("no --synonyms given; SR/RI will leave sentences unchanged");
            SynonymLexicon::default()
        }
    };
    let stop = match stopwords {
        Some(p) => StopwordSet::load(p)?,
        None => StopwordSet::empty(),
    };
    Ok((lex, stop))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Error> {
    let mut json = serde_json::to_string_pretty(value).expect("value serializes");
    json.push('\n');
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

fn run(cli: Cli) -> Result<(), Error> {
    let seed = cli.seed.unwrap_or(42);
    match cli.command {
        Command::Stats { corpus, fields, out } => {
            let corpus = load(&corpus, cli.format, &fields)?;
            let stats = class_stats(&corpus);
            print!("{}", render_stats_table(&stats));
            if let Some(path) = out {
                write_json(&path, &stats)?;
            }
            Ok(())
        }
        Command::Plan {
            corpus,
            fields,
            policy,
            eda,
            out,
        } => {
            let corpus = load(&corpus, cli.format, &fields)?;
            let plan = plan_balance(&class_stats(&corpus), policy.to_policy()?, eda.params()?)?;
            match out {
                Some(path) => write_json(&path, &plan)?,
                None => println!(
                    "{}",
                    serde_json::to_string_pretty(&plan).expect("plan serializes")
                ),
            }
            Ok(())
        }
        Command::Augment {
            corpus,
            fields,
            plan,
            policy,
            eda,
            synonyms,
            stopwords,
            dedup,
            out,
        } => {
            let corpus = load(&corpus, cli.format, &fields)?;
            let plan = match plan {
                Some(path) => {
                    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
                    serde_json::from_slice::<AugmentationPlan>(&bytes).map_err(|e| Error::Json {
                        path: path.clone(),
                        source: e,
                    })?
                }
                None => plan_balance(&class_stats(&corpus), policy.to_policy()?, eda.params()?)?,
            };
            let (lex, stop) = load_lexicons(&synonyms, &stopwords)?;
            let augmented = execute_plan(&corpus, &plan, &lex, &stop, seed, dedup)?;
            save_corpus(&augmented, &out, resolved_format(cli.format, &out))?;
            print!("{}", render_stats_table(&class_stats(&augmented)));
            Ok(())
        }
        Command::Train {
            corpus,
            fields,
            vocab,
            train: train_args,
            model_out,
            vocab_out,
        } => {
            let corpus = load(&corpus, cli.format, &fields)?;
            let vocabulary = fit_vocabulary(&corpus, &vocab.config()?)?;
            let x: Vec<_> = corpus
                .records
                .iter()
                .map(|r| vectorize(&r.sentence, &vocabulary))
                .collect();
            let y: Vec<usize> = corpus
                .records
                .iter()
                .map(|r| corpus.labels.iter().position(|l| l == &r.label).unwrap())
                .collect();
            let mut model = train(&x, &y, &corpus.labels, &train_args.config(seed))?;
            model.vocab_hash = vocabulary.content_hash();

            let correct = x
                .iter()
                .zip(&y)
                .filter(|(xi, yi)| model.predict(xi).map(|p| p == **yi).unwrap_or(false))
                .count();
            eprintln!(
                "trained {} classes on {} records: {} epochs, final loss {:.6}, train accuracy {:.4}",
                corpus.labels.len(),
                corpus.len(),
                model.meta.epochs_run,
                model.meta.final_loss,
                correct as f64 / x.len() as f64
            );
            write_json(&vocab_out, &vocabulary)?;
            model.save(&model_out)?;
            Ok(())
        }
        Command::Eval {
            corpus,
            fields,
            model,
            vocab,
            out,
        } => {
            let corpus = load(&corpus, cli.format, &fields)?;
            let bytes = std::fs::read(&vocab).map_err(|e| Error::io(&vocab, e))?;
            let vocabulary: Vocabulary =
                serde_json::from_slice(&bytes).map_err(|e| Error::Json {
                    path: vocab.clone(),
                    source: e,
                })?;
            let model = MaxEntModel::load(&model)?;
            if model.vocab_hash != vocabulary.content_hash() {
                return Err(Error::VocabHashMismatch {
                    expected: model.vocab_hash.clone(),
                    got: vocabulary.content_hash(),
                });
            }
            let pred: Result<Vec<&str>, Error> = corpus
                .records
                .iter()
                .map(|r| model.predict_label(&vectorize(&r.sentence, &vocabulary)))
                .collect();
            let pred = pred?;
            let gold: Vec<&str> = corpus.records.iter().map(|r| r.label.as_str()).collect();
            let report = evaluate(&gold, &pred, &model.labels)?;
            print!("{}", render_report(&report));
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            Ok(())
        }
        Command::Experiment { config, outdir } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(seed) = cli.seed {
                config.base_seed = seed;
            }
            if let Some(dir) = outdir {
                config.outdir = Some(dir);
            }
            let output = run_experiment(&config)?;
            let report = &output.report;
            println!(
                "baseline : f1_macro {:.4} ± {:.4}  f1_micro {:.4} ± {:.4}",
                report.baseline.f1_macro.mean,
                report.baseline.f1_macro.std,
                report.baseline.f1_micro.mean,
                report.baseline.f1_micro.std
            );
            println!(
                "augmented: f1_macro {:.4} ± {:.4}  f1_micro {:.4} ± {:.4}",
                report.augmented.f1_macro.mean,
                report.augmented.f1_macro.std,
                report.augmented.f1_micro.mean,
                report.augmented.f1_micro.std
            );
            match &config.outdir {
                Some(dir) => {
                    write_outputs(&output, dir, config.dataset.format)?;
                    println!("outputs written to {}", dir.display());
                }
                None => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(report).expect("report serializes")
                    );
                }
            }
            Ok(())
        }
    }
}

//! Decide how many variants each minority-class record gets, and execute
//! that plan on a training split.
//!
//! Targets are hit exactly by giving every augmentable record a base number
//! of variants plus one extra for the first `remainder` records in corpus
//! order. Plans serialize to JSON for audit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusStats, LabeledCorpus, Record};
use crate::eda::{augment_variant, EdaParams};
use crate::error::{Error, Result};
use crate::lexicon::{StopwordSet, SynonymLexicon};

/// How target counts are chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalancePolicy {
    /// Raise every class to the majority class count.
    MatchMajority,
    /// Raise listed classes to explicit counts.
    TargetCounts(BTreeMap<String, usize>),
    /// Give every record of every class a fixed number of variants.
    FixedNaug(usize),
}

/// Allocation for one label: reach `target` from `current` by generating
/// `base_naug` variants per record plus one extra for the first `remainder`
/// records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelPlan {
    pub label: String,
    pub current: usize,
    pub target: usize,
    pub base_naug: usize,
    pub remainder: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPlan {
    pub policy: BalancePolicy,
    pub per_label: Vec<LabelPlan>,
    /// Operation/alpha template; `n_aug` is set per record during execution.
    pub eda: EdaParams,
}

impl AugmentationPlan {
    pub fn is_empty(&self) -> bool {
        self.per_label.is_empty()
    }

    pub fn label_plan(&self, label: &str) -> Option<&LabelPlan> {
        self.per_label.iter().find(|p| p.label == label)
    }
}

fn label_plan(label: &str, current: usize, target: usize) -> Result<Option<LabelPlan>> {
    if target < current {
        return Err(Error::PlanTargetBelowCount {
            label: label.to_string(),
            target,
            count: current,
        });
    }
    if target == current {
        return Ok(None);
    }
    if current == 0 {
        return Err(Error::NoEligibleRecords {
            label: label.to_string(),
        });
    }
    let needed = target - current;
    Ok(Some(LabelPlan {
        label: label.to_string(),
        current,
        target,
        base_naug: needed / current,
        remainder: needed % current,
    }))
}

/// Turn per-class counts and a policy into an executable plan.
pub fn plan_balance(
    stats: &CorpusStats,
    policy: BalancePolicy,
    eda: EdaParams,
) -> Result<AugmentationPlan> {
    if stats.per_label.is_empty() {
        return Err(Error::EmptyInput("class statistics"));
    }
    let mut per_label = Vec::new();
    match &policy {
        BalancePolicy::MatchMajority => {
            let target = stats.per_label.iter().map(|s| s.count).max().unwrap_or(0);
            for s in &stats.per_label {
                if let Some(plan) = label_plan(&s.label, s.count, target)? {
                    per_label.push(plan);
                }
            }
        }
        BalancePolicy::TargetCounts(targets) => {
            for (label, &target) in targets {
                let current = stats
                    .count_for(label)
                    .ok_or_else(|| Error::UnknownLabel {
                        label: label.clone(),
                    })?;
                if let Some(plan) = label_plan(label, current, target)? {
                    per_label.push(plan);
                }
            }
        }
        BalancePolicy::FixedNaug(n) => {
            for s in &stats.per_label {
                if *n == 0 || s.count == 0 {
                    continue;
                }
                if let Some(plan) = label_plan(&s.label, s.count, s.count * (n + 1))? {
                    per_label.push(plan);
                }
            }
        }
    }
    Ok(AugmentationPlan {
        policy,
        per_label,
        eda,
    })
}

/// Retry budget per missing variant when duplicate dropping is on.
const DEDUP_RETRIES: usize = 3;

/// Apply `plan` to `train`: originals stay untouched and in order, generated
/// variants follow, sorted by `(source id, variant index)`. Variant ids are
/// `<source-id>#aug<i>`.
///
/// With `dedup` set, variants whose token list equals their source's are
/// dropped and regenerated under fresh variant indices, up to three extra
/// attempts per shortfall; remaining shortfalls are logged.
pub fn execute_plan(
    train: &LabeledCorpus,
    plan: &AugmentationPlan,
    lexicon: &SynonymLexicon,
    stopwords: &StopwordSet,
    base_seed: u64,
    dedup: bool,
) -> Result<LabeledCorpus> {
    for lp in &plan.per_label {
        if !train.labels.contains(&lp.label) {
            return Err(Error::PlanLabelMissing {
                label: lp.label.clone(),
            });
        }
    }

    let mut generated: Vec<(String, u64, Record)> = Vec::new();
    for lp in &plan.per_label {
        // (corpus position, record) pairs that can actually be augmented
        let eligible: Vec<(usize, &Record)> = train
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label == lp.label && r.is_augmentable())
            .collect();
        if eligible.is_empty() {
            return Err(Error::NoEligibleRecords {
                label: lp.label.clone(),
            });
        }

        let current = train
            .records
            .iter()
            .filter(|r| r.label == lp.label)
            .count();
        if lp.target < current {
            return Err(Error::PlanTargetBelowCount {
                label: lp.label.clone(),
                target: lp.target,
                count: current,
            });
        }
        // Re-spread the shortfall over augmentable records only; when every
        // record is augmentable this reproduces the plan's own allocation.
        let needed = lp.target - current;
        let base = needed / eligible.len();
        let remainder = needed % eligible.len();

        for (slot, (record_index, record)) in eligible.iter().enumerate() {
            let quota = base + usize::from(slot < remainder);
            if quota == 0 {
                continue;
            }
            let params = plan.eda.with_n_aug(quota);
            let mut kept = 0usize;
            let mut variant_index = 0u64;
            let attempt_cap = quota + DEDUP_RETRIES * quota;
            while kept < quota && (variant_index as usize) < attempt_cap {
                let variant = augment_variant(
                    &record.sentence,
                    &params,
                    lexicon,
                    stopwords,
                    base_seed,
                    *record_index as u64,
                    variant_index,
                );
                let is_duplicate = variant.sentence.tokens == record.sentence.tokens;
                if !dedup || !is_duplicate {
                    generated.push((
                        record.id.clone(),
                        variant_index,
                        Record {
                            id: format!("{}#aug{}", record.id, variant_index),
                            sentence: variant.sentence,
                            label: record.label.clone(),
                        },
                    ));
                    kept += 1;
                }
                variant_index += 1;
            }
            if kept < quota {
                log::warn!(
                    "dedup left record `{}` {} variant(s) short of its quota",
                    record.id,
                    quota - kept
                );
            }
        }
    }

    generated.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut records = train.records.clone();
    records.extend(generated.into_iter().map(|(_, _, r)| r));
    LabeledCorpus::with_inventory(records, train.labels.clone())
}

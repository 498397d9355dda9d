//! Multinomial logistic regression ("maximum entropy") trained by full-batch
//! gradient descent.
//!
//! The objective is mean cross-entropy plus an L2 penalty on the weights
//! (biases excluded):
//!
//! ```text
//! L(W, b) = -(1/N) Σ ln softmax(W x_i + b)[y_i] + (l2 / 2) ||W||²
//! ```
//!
//! Parameters start at zero (the objective is convex, so no random init is
//! needed) and every accepted step must not increase the loss; a step that
//! would is retried at half the learning rate, up to ten halvings.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{hex_string, SparseVector};
use crate::metrics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_l2")]
    pub l2: f64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Reserved for optional sample shuffling; full-batch descent never
    /// consumes it.
    #[serde(default)]
    pub seed: u64,
}

fn default_learning_rate() -> f64 {
    0.1
}

fn default_l2() -> f64 {
    1e-4
}

fn default_max_epochs() -> usize {
    200
}

fn default_tol() -> f64 {
    1e-6
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: default_learning_rate(),
            l2: default_l2(),
            max_epochs: default_max_epochs(),
            tol: default_tol(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub epochs_run: usize,
    pub final_loss: f64,
    /// Loss after each accepted epoch, preceded by the initial loss.
    pub loss_history: Vec<f64>,
    pub rate_halvings: usize,
    pub converged: bool,
    pub config: TrainConfig,
    /// Epoch whose parameters were kept when a dev set drove selection.
    pub dev_best_epoch: Option<usize>,
}

impl Default for TrainMeta {
    fn default() -> Self {
        Self {
            epochs_run: 0,
            final_loss: f64::NAN,
            loss_history: Vec::new(),
            rate_halvings: 0,
            converged: false,
            config: TrainConfig::default(),
            dev_best_epoch: None,
        }
    }
}

/// Weight matrix and bias per class over a frozen feature vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxEntModel {
    pub labels: Vec<String>,
    /// Hash of the vocabulary the model was trained against.
    pub vocab_hash: String,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    pub meta: TrainMeta,
}

impl MaxEntModel {
    /// Assemble a model from raw parameters (useful for diagnostics and
    /// numerical checks).
    pub fn from_parts(labels: Vec<String>, weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        let k = labels.len();
        if k < 2 {
            return Err(Error::SingleClass);
        }
        if weights.len() != k || bias.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: weights.len().min(bias.len()),
            });
        }
        let dim = weights[0].len();
        if weights.iter().any(|row| row.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: 0,
            });
        }
        if weights.iter().flatten().chain(bias.iter()).any(|w| !w.is_finite()) {
            return Err(Error::Config("model parameters must be finite".to_string()));
        }
        Ok(Self {
            labels,
            vocab_hash: String::new(),
            weights,
            bias,
            meta: TrainMeta::default(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map(Vec::len).unwrap_or(0)
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// SHA-256 over the serialized parameters; equal hashes mean equal
    /// models.
    pub fn weight_hash(&self) -> String {
        let bytes =
            serde_json::to_vec(&(&self.weights, &self.bias)).expect("parameters serialize");
        hex_string(&Sha256::digest(&bytes))
    }

    fn logits(&self, x: &SparseVector) -> Result<Vec<f64>> {
        if x.dim != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim,
            });
        }
        let mut logits = self.bias.clone();
        for (k, row) in self.weights.iter().enumerate() {
            for &(j, v) in &x.entries {
                logits[k] += row[j] * v;
            }
        }
        Ok(logits)
    }

    /// Class probabilities `softmax(Wx + b)`, computed with max-subtraction.
    pub fn predict_proba(&self, x: &SparseVector) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Index of the most probable class; ties break to the lowest index.
    pub fn predict(&self, x: &SparseVector) -> Result<usize> {
        let probs = self.predict_proba(x)?;
        Ok(argmax(&probs))
    }

    pub fn predict_label(&self, x: &SparseVector) -> Result<&str> {
        Ok(&self.labels[self.predict(x)?])
    }

    /// Objective value at the current parameters.
    pub fn loss(&self, x: &[SparseVector], y: &[usize], l2: f64) -> Result<f64> {
        let (loss, _, _) = self.loss_and_grad(x, y, l2, false)?;
        Ok(loss)
    }

    /// Analytic gradient `(dW, db)` of the objective.
    pub fn gradient(&self, x: &[SparseVector], y: &[usize], l2: f64) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let (_, gw, gb) = self.loss_and_grad(x, y, l2, true)?;
        Ok((gw, gb))
    }

    fn loss_and_grad(
        &self,
        x: &[SparseVector],
        y: &[usize],
        l2: f64,
        want_grad: bool,
    ) -> Result<(f64, Vec<Vec<f64>>, Vec<f64>)> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::EmptyInput("training samples"));
        }
        let k = self.n_classes();
        let dim = self.dim();
        let n = x.len() as f64;

        let mut loss = 0.0;
        let mut gw = if want_grad {
            vec![vec![0.0; dim]; k]
        } else {
            Vec::new()
        };
        let mut gb = if want_grad { vec![0.0; k] } else { Vec::new() };

        for (xi, &yi) in x.iter().zip(y) {
            let logits = self.logits(xi)?;
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            loss -= logits[yi] - max - z.ln();
            if want_grad {
                for c in 0..k {
                    let d = exps[c] / z - f64::from(c == yi);
                    gb[c] += d;
                    for &(j, v) in &xi.entries {
                        gw[c][j] += d * v;
                    }
                }
            }
        }
        loss /= n;
        let penalty: f64 = self.weights.iter().flatten().map(|w| w * w).sum();
        loss += l2 / 2.0 * penalty;
        if want_grad {
            for (grow, wrow) in gw.iter_mut().zip(&self.weights) {
                for (g, w) in grow.iter_mut().zip(wrow) {
                    *g = *g / n + l2 * w;
                }
            }
            for g in gb.iter_mut() {
                *g /= n;
            }
        }
        Ok((loss, gw, gb))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).expect("model serializes");
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

const MAX_HALVINGS: usize = 10;

/// Train on `(x, y)` where `y` holds indices into `labels`.
pub fn train(
    x: &[SparseVector],
    y: &[usize],
    labels: &[String],
    config: &TrainConfig,
) -> Result<MaxEntModel> {
    train_with_dev(x, y, labels, config, None)
}

/// Like [`train`]; when a dev set is given, the parameters from the epoch
/// with the best dev macro-F1 are kept instead of the final ones.
pub fn train_with_dev(
    x: &[SparseVector],
    y: &[usize],
    labels: &[String],
    config: &TrainConfig,
    dev: Option<(&[SparseVector], &[usize])>,
) -> Result<MaxEntModel> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::EmptyInput("training samples"));
    }
    let k = labels.len();
    if k < 2 {
        return Err(Error::SingleClass);
    }
    {
        let mut present = vec![false; k];
        for &yi in y {
            if yi >= k {
                return Err(Error::UnknownLabel {
                    label: format!("class index {yi}"),
                });
            }
            present[yi] = true;
        }
        if present.iter().filter(|p| **p).count() < 2 {
            return Err(Error::SingleClass);
        }
    }
    let dim = x[0].dim;
    if let Some(bad) = x.iter().find(|v| v.dim != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.dim,
        });
    }

    let mut model = MaxEntModel {
        labels: labels.to_vec(),
        vocab_hash: String::new(),
        weights: vec![vec![0.0; dim]; k],
        bias: vec![0.0; k],
        meta: TrainMeta::default(),
    };

    let (mut loss, mut gw, mut gb) = model.loss_and_grad(x, y, config.l2, true)?;
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { epoch: 0 });
    }
    let mut history = vec![loss];
    let mut lr = config.learning_rate;
    let mut halvings = 0usize;
    let mut converged = false;
    let mut epoch = 0usize;

    let mut dev_best: Option<(f64, usize, Vec<Vec<f64>>, Vec<f64>)> = None;
    let eval_dev = |model: &MaxEntModel, epoch: usize,
                        best: &mut Option<(f64, usize, Vec<Vec<f64>>, Vec<f64>)>|
     -> Result<()> {
        if let Some((dx, dy)) = dev {
            let pred: Result<Vec<usize>> = dx.iter().map(|v| model.predict(v)).collect();
            let pred = pred?;
            let gold: Vec<&str> = dy.iter().map(|&i| model.labels[i].as_str()).collect();
            let pred: Vec<&str> = pred.iter().map(|&i| model.labels[i].as_str()).collect();
            let cm = metrics::confusion_matrix(&gold, &pred, &model.labels)?;
            let score = metrics::f1_macro(&cm);
            let better = best.as_ref().map_or(true, |(s, ..)| score > *s);
            if better {
                *best = Some((score, epoch, model.weights.clone(), model.bias.clone()));
            }
        }
        Ok(())
    };
    eval_dev(&model, 0, &mut dev_best)?;

    while epoch < config.max_epochs {
        let candidate_weights: Vec<Vec<f64>> = model
            .weights
            .iter()
            .zip(&gw)
            .map(|(wrow, grow)| wrow.iter().zip(grow).map(|(w, g)| w - lr * g).collect())
            .collect();
        let candidate_bias: Vec<f64> = model.bias.iter().zip(&gb).map(|(b, g)| b - lr * g).collect();

        let candidate = MaxEntModel {
            weights: candidate_weights,
            bias: candidate_bias,
            ..model.clone()
        };
        let (new_loss, new_gw, new_gb) = candidate.loss_and_grad(x, y, config.l2, true)?;
        if !new_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch: epoch + 1 });
        }
        if new_loss > loss {
            halvings += 1;
            if halvings > MAX_HALVINGS {
                log::warn!("stopping after {MAX_HALVINGS} learning-rate halvings at epoch {epoch}");
                break;
            }
            lr *= 0.5;
            continue; // retry the same epoch with the smaller step
        }

        model.weights = candidate.weights;
        model.bias = candidate.bias;
        let improvement = (loss - new_loss) / loss.max(f64::MIN_POSITIVE);
        loss = new_loss;
        gw = new_gw;
        gb = new_gb;
        epoch += 1;
        history.push(loss);
        eval_dev(&model, epoch, &mut dev_best)?;

        if improvement < config.tol {
            converged = true;
            break;
        }
    }

    let mut dev_best_epoch = None;
    if let Some((_, best_epoch, w, b)) = dev_best {
        model.weights = w;
        model.bias = b;
        dev_best_epoch = Some(best_epoch);
    }

    model.meta = TrainMeta {
        epochs_run: epoch,
        final_loss: loss,
        loss_history: history,
        rate_halvings: halvings,
        converged,
        config: config.clone(),
        dev_best_epoch,
    };
    Ok(model)
}

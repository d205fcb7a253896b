//! Optimization loops: per-epoch mini-batch training with Adam on
//! cross-entropy, the two-stage transfer schedule across rating criteria,
//! curve logging, and best-dev checkpoint selection.

pub mod artifacts;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{Criterion, Label, RatedPair};
use crate::error::{Error, Result};
use crate::features::{encode_pair, EncodedPair, WordPieceTokenizer};
use crate::models::NeuralNet;
use crate::nn::{derive_rng, Adam, ParamStore, Tape};

/// Inference batch size for dev evaluation.
const EVAL_BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Steps of linear learning-rate warmup; 0 disables.
    pub warmup_steps: usize,
    /// L2 penalty added to the gradients; 0 disables.
    pub weight_decay: f64,
    /// Global-norm gradient clipping threshold; 0 disables.
    pub grad_clip: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            batch_size: 256,
            epochs: 25,
            learning_rate: 5e-3,
            seed: 42,
            warmup_steps: 0,
            weight_decay: 0.0,
            grad_clip: 0.0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config(
                "batch_size and epochs must be at least 1".into(),
            ));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.weight_decay < 0.0 || self.grad_clip < 0.0 {
            return Err(Error::Config(
                "weight_decay and grad_clip must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Learning rate at a 1-based global step under linear warmup.
    pub fn learning_rate_at(&self, step: u64) -> f64 {
        if self.warmup_steps == 0 || step >= self.warmup_steps as u64 {
            self.learning_rate
        } else {
            self.learning_rate * step as f64 / self.warmup_steps as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub dev_accuracy: f64,
    pub train_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub records: Vec<EpochRecord>,
}

impl TrainingCurve {
    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let mut file = File::create(path)?;
        for record in &self.records {
            serde_json::to_writer(&mut file, record)?;
            file.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let mut records = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line)?);
        }
        Ok(TrainingCurve { records })
    }
}

/// Source lineage of a transfer run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lineage {
    pub source: Criterion,
    pub stage1_epoch: usize,
    pub stage1_dev_accuracy: f64,
}

/// Everything needed to re-launch the run that produced a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub hyperparams: HyperParams,
    pub target: Criterion,
    pub split_checksum: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lineage: Option<Lineage>,
}

/// Weight snapshot at the selected epoch.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub params: ParamStore,
    pub epoch: usize,
    pub dev_accuracy: f64,
    pub provenance: Provenance,
}

/// Encoded inputs with the full per-criterion label maps, so one encoding
/// serves any training target.
#[derive(Debug, Clone, Default)]
pub struct EncodedView {
    pub inputs: Vec<EncodedPair>,
    pub labels: Vec<BTreeMap<Criterion, Label>>,
}

impl EncodedView {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn label_indices(&self, target: Criterion) -> Vec<usize> {
        self.labels.iter().map(|m| m[&target].index()).collect()
    }

    pub fn label_values(&self, target: Criterion) -> Vec<Label> {
        self.labels.iter().map(|m| m[&target]).collect()
    }
}

/// Encode every pair of a split portion at a fixed length.
pub fn encode_view(
    pairs: &[RatedPair],
    tokenizer: &WordPieceTokenizer,
    max_len: usize,
) -> Result<EncodedView> {
    let mut view = EncodedView::default();
    for pair in pairs {
        view.inputs
            .push(encode_pair(&pair.sys_ref, &pair.orig_ref, tokenizer, max_len)?);
        view.labels.push(pair.labels.clone());
    }
    Ok(view)
}

/// Train and dev views for one run.
#[derive(Debug, Clone)]
pub struct TrainData {
    pub train: EncodedView,
    pub dev: EncodedView,
}

/// Accuracy of argmax predictions against the target labels.
pub fn evaluate_accuracy(model: &NeuralNet, view: &EncodedView, target: Criterion) -> Result<f64> {
    if view.is_empty() {
        return Err(Error::Validation("cannot evaluate on an empty set".into()));
    }
    let golds = view.label_values(target);
    let mut correct = 0usize;
    for (chunk_inputs, chunk_golds) in view
        .inputs
        .chunks(EVAL_BATCH)
        .zip(golds.chunks(EVAL_BATCH))
    {
        let preds = model.predict(chunk_inputs)?;
        correct += preds
            .iter()
            .zip(chunk_golds)
            .filter(|(p, g)| p == g)
            .count();
    }
    Ok(correct as f64 / view.len() as f64)
}

/// Mean cross-entropy of the current model on a view, computed without
/// touching the optimizer. Matches the training loss definition.
pub fn mean_cross_entropy(
    model: &NeuralNet,
    view: &EncodedView,
    target: Criterion,
) -> Result<f64> {
    if view.is_empty() {
        return Err(Error::Validation("cannot evaluate on an empty set".into()));
    }
    let indices = view.label_indices(target);
    let mut total = 0.0;
    for (chunk_inputs, chunk_labels) in view
        .inputs
        .chunks(EVAL_BATCH)
        .zip(indices.chunks(EVAL_BATCH))
    {
        let mut tape = Tape::new();
        let vars = model.params().bind(&mut tape);
        let logits = model.forward(&mut tape, &vars, chunk_inputs)?;
        let loss = tape.cross_entropy(logits, chunk_labels);
        total += tape.scalar(loss) * chunk_inputs.len() as f64;
    }
    Ok(total / view.len() as f64)
}

/// Mini-batch gradient descent with Adam on cross-entropy against the
/// target labels; every parameter is trainable. Dev accuracy is evaluated
/// after each epoch; the returned checkpoint is the best-dev epoch (ties
/// toward the earlier one) and the curve covers every epoch.
pub fn train_classifier(
    model: &mut NeuralNet,
    data: &TrainData,
    target: Criterion,
    hp: &HyperParams,
    split_checksum: &str,
) -> Result<(Checkpoint, TrainingCurve)> {
    hp.validate()?;
    if data.train.is_empty() {
        return Err(Error::Validation("train split is empty".into()));
    }
    if data.dev.is_empty() {
        return Err(Error::Validation(
            "dev split is empty; cannot select a checkpoint".into(),
        ));
    }

    let train_labels = data.train.label_indices(target);
    let mut optimizer = Adam::new(hp.learning_rate);
    let mut curve = TrainingCurve::default();
    let mut best: Option<(ParamStore, usize, f64)> = None;
    let mut global_step: u64 = 0;

    for epoch in 1..=hp.epochs {
        let mut order: Vec<usize> = (0..data.train.len()).collect();
        // per-epoch derived seed; the final short batch is kept
        order.shuffle(&mut derive_rng(hp.seed, epoch as u64));

        let mut loss_sum = 0.0;
        for (step, batch_indices) in order.chunks(hp.batch_size).enumerate() {
            let batch: Vec<EncodedPair> = batch_indices
                .iter()
                .map(|&i| data.train.inputs[i].clone())
                .collect();
            let labels: Vec<usize> = batch_indices.iter().map(|&i| train_labels[i]).collect();

            let mut tape = Tape::new();
            let vars = model.params().bind(&mut tape);
            let logits = model.forward(&mut tape, &vars, &batch)?;
            let loss = tape.cross_entropy(logits, &labels);
            let loss_value = tape.scalar(loss);
            if !loss_value.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss {loss_value} at epoch {epoch} step {step}"
                )));
            }
            loss_sum += loss_value * batch.len() as f64;

            let grads = tape.backward(loss);
            let mut grad_map = std::collections::HashMap::new();
            for (name, var) in &vars {
                if let Some(g) = grads.get(*var) {
                    grad_map.insert(name.clone(), g.clone());
                }
            }
            if hp.weight_decay > 0.0 {
                for (name, grad) in grad_map.iter_mut() {
                    if let Some(param) = model.params().get(name) {
                        grad.zip_mut_with(param, |g, &p| *g += hp.weight_decay * p);
                    }
                }
            }
            if hp.grad_clip > 0.0 {
                let norm: f64 = grad_map
                    .values()
                    .map(|g| g.iter().map(|v| v * v).sum::<f64>())
                    .sum::<f64>()
                    .sqrt();
                if norm > hp.grad_clip {
                    let scale = hp.grad_clip / norm;
                    for grad in grad_map.values_mut() {
                        grad.mapv_inplace(|v| v * scale);
                    }
                }
            }
            global_step += 1;
            optimizer.learning_rate = hp.learning_rate_at(global_step);
            optimizer.step(model.params_mut(), &grad_map);
        }

        let train_loss = loss_sum / data.train.len() as f64;
        let dev_accuracy = evaluate_accuracy(model, &data.dev, target)?;
        curve.records.push(EpochRecord {
            epoch,
            dev_accuracy,
            train_loss,
        });
        let improved = match &best {
            Some((_, _, best_acc)) => dev_accuracy > *best_acc,
            None => true,
        };
        if improved {
            best = Some((model.params().clone(), epoch, dev_accuracy));
        }
    }

    let (params, epoch, dev_accuracy) = best.unwrap();
    let checkpoint = Checkpoint {
        params,
        epoch,
        dev_accuracy,
        provenance: Provenance {
            hyperparams: *hp,
            target,
            split_checksum: split_checksum.to_string(),
            lineage: None,
        },
    };
    Ok((checkpoint, curve))
}

/// Both stages of a transfer run.
#[derive(Debug, Clone)]
pub struct TransferOutcome {
    pub stage1: (Checkpoint, TrainingCurve),
    pub stage2: (Checkpoint, TrainingCurve),
}

/// Two-stage schedule: fine-tune on the source criterion, then continue on
/// naturalness from the stage-1 encoder weights with a freshly initialized
/// head. The stage-2 checkpoint carries the lineage.
pub fn transfer_train(
    model: &mut NeuralNet,
    data: &TrainData,
    source: Criterion,
    hp_stage1: &HyperParams,
    hp_stage2: &HyperParams,
    split_checksum: &str,
) -> Result<TransferOutcome> {
    if source == Criterion::Naturalness {
        return Err(Error::Config(
            "transfer source must be quality or informativeness".into(),
        ));
    }
    let stage1 = train_classifier(model, data, source, hp_stage1, split_checksum)?;

    model.params_mut().assign_from(&stage1.0.params)?;
    model.reinit_head(hp_stage2.seed);

    let (mut checkpoint, curve) =
        train_classifier(model, data, Criterion::Naturalness, hp_stage2, split_checksum)?;
    checkpoint.provenance.lineage = Some(Lineage {
        source,
        stage1_epoch: stage1.0.epoch,
        stage1_dev_accuracy: stage1.0.dev_accuracy,
    });
    Ok(TransferOutcome {
        stage1,
        stage2: (checkpoint, curve),
    })
}

/// Index into `records` of the best epoch: maximal dev accuracy, ties
/// toward the earlier epoch.
pub fn best_epoch(curve: &TrainingCurve) -> Result<usize> {
    if curve.records.is_empty() {
        return Err(Error::Validation("empty training curve".into()));
    }
    let mut best = 0;
    for (i, record) in curve.records.iter().enumerate() {
        if record.dev_accuracy > curve.records[best].dev_accuracy {
            best = i;
        }
    }
    Ok(curve.records[best].epoch)
}

/// Pick the snapshot whose epoch the curve marks as best.
pub fn select_best<'a>(
    curve: &TrainingCurve,
    checkpoints: &'a [Checkpoint],
) -> Result<&'a Checkpoint> {
    let epoch = best_epoch(curve)?;
    checkpoints
        .iter()
        .find(|c| c.epoch == epoch)
        .ok_or_else(|| Error::Validation(format!("no snapshot for epoch {epoch}")))
}

//! Training runs: dispatches to the majority/SVM fit paths or the neural
//! training loop (optionally the two-stage transfer schedule), and writes
//! the run directory: checkpoint, curve, resolved config, lineage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nateval_core::dataset::{load_split, manifest_checksum, DatasetSplit};
use nateval_core::features::{bow_features, BowVocab, WordPieceTokenizer};
use nateval_core::models::{
    BiLstmClassifier, BiLstmConfig, EncoderClassifier, EncoderConfig, MajorityModel, NeuralNet,
    SvmOptions,
};
use nateval_core::nn::ParamStore;
use nateval_core::training::artifacts::{
    self, ModelKind, ENCODER_WEIGHTS_FILE, WORDPIECE_VOCAB_FILE,
};
use nateval_core::training::{
    encode_view, train_classifier, transfer_train, Checkpoint, EpochRecord, Provenance, TrainData,
    TrainingCurve,
};
use nateval_core::{Criterion, Error, Label, Result};

use crate::config::{DimPreset, RunConfig};

pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const CURVE_FILE: &str = "curve.jsonl";
pub const LINEAGE_FILE: &str = "lineage.json";
pub const RESOLVED_CONFIG_FILE: &str = "config.toml";
pub const STAGE1_DIR: &str = "stage1";

/// Written next to a transfer run's artifacts, naming the stage-1 run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageFile {
    pub source: Criterion,
    pub stage1_dir: String,
    pub stage1_epoch: usize,
    pub stage1_dev_accuracy: f64,
}

/// Train per the resolved config; returns the run directory.
pub fn cmd_train(config: &RunConfig) -> Result<PathBuf> {
    let prepared = config.data.prepared_dir.as_deref().ok_or_else(|| {
        Error::Config("no prepared data directory configured (data.prepared_dir or --data)".into())
    })?;
    let out_dir = config.output.dir.clone().ok_or_else(|| {
        Error::Config("no output directory configured (output.dir or --out)".into())
    })?;
    let kind = config
        .model
        .kind
        .ok_or_else(|| Error::Config("no model kind configured (model.kind or --model)".into()))?;

    if config.training.transfer_source.is_some() && !kind.is_encoder_family() {
        return Err(Error::Config(format!(
            "transfer_source requires an encoder-family model, not {kind}"
        )));
    }

    let (split, _) = load_split(prepared)?;
    let split_checksum = manifest_checksum(prepared)?;
    std::fs::create_dir_all(&out_dir)?;

    let target = Criterion::Naturalness;
    let provenance = Provenance {
        hyperparams: config.training.hyperparams(),
        target,
        split_checksum: split_checksum.clone(),
        lineage: None,
    };

    match kind {
        ModelKind::Majority => {
            train_majority(config, &split, target, &out_dir, provenance)?;
        }
        ModelKind::Svm => {
            train_svm(config, &split, target, &out_dir, provenance)?;
        }
        _ => {
            train_neural(config, kind, &split, &out_dir, &split_checksum)?;
        }
    }

    config.save(&out_dir.join(RESOLVED_CONFIG_FILE))?;
    println!("run artifacts written to {}", out_dir.display());
    Ok(out_dir)
}

fn accuracy(preds: &[Label], golds: &[Label]) -> f64 {
    let correct = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    correct as f64 / golds.len().max(1) as f64
}

/// Single-record curve for the fit-style models; their training loss is the
/// zero-one loss on the training split.
fn single_record_curve(dev_accuracy: f64, train_zero_one: f64) -> TrainingCurve {
    TrainingCurve {
        records: vec![EpochRecord {
            epoch: 1,
            dev_accuracy,
            train_loss: train_zero_one,
        }],
    }
}

fn train_majority(
    _config: &RunConfig,
    split: &DatasetSplit,
    target: Criterion,
    out_dir: &Path,
    provenance: Provenance,
) -> Result<()> {
    let train_labels: Vec<Label> = split.train.iter().map(|p| p.label(target)).collect();
    let model = MajorityModel::fit(&train_labels)?;
    let dev_golds: Vec<Label> = split.dev.iter().map(|p| p.label(target)).collect();
    let dev_accuracy = accuracy(&model.predict_n(dev_golds.len()), &dev_golds);
    let train_accuracy = accuracy(&model.predict_n(train_labels.len()), &train_labels);

    artifacts::save_majority(&out_dir.join(CHECKPOINT_DIR), &model, Some(provenance))?;
    single_record_curve(dev_accuracy, 1.0 - train_accuracy)
        .save_jsonl(&out_dir.join(CURVE_FILE))?;
    println!("majority model: label {} / dev accuracy {dev_accuracy:.4}", model.label);
    Ok(())
}

fn train_svm(
    config: &RunConfig,
    split: &DatasetSplit,
    target: Criterion,
    out_dir: &Path,
    provenance: Provenance,
) -> Result<()> {
    // vocabulary from the training split only
    let train_texts: Vec<&str> = split
        .train
        .iter()
        .flat_map(|p| [p.sys_ref.as_str(), p.orig_ref.as_str()])
        .collect();
    let vocab = BowVocab::build(&train_texts)?;
    let options = SvmOptions {
        c: config.model.c,
        gamma: config.model.gamma.clone(),
        ..SvmOptions::default()
    };

    let featurize =
        |pairs: &[nateval_core::dataset::RatedPair]| -> Vec<nateval_core::features::FeatureVector> {
            pairs.iter().map(|p| bow_features(p, &vocab)).collect()
        };
    let train_features = featurize(&split.train);
    let train_labels: Vec<Label> = split.train.iter().map(|p| p.label(target)).collect();
    let model = nateval_core::models::svm_train_with(&train_features, &train_labels, &options)?;

    let dev_features = featurize(&split.dev);
    let dev_golds: Vec<Label> = split.dev.iter().map(|p| p.label(target)).collect();
    let dev_accuracy = accuracy(&model.predict_all(&dev_features)?, &dev_golds);
    let train_accuracy = accuracy(&model.predict_all(&train_features)?, &train_labels);

    artifacts::save_svm(
        &out_dir.join(CHECKPOINT_DIR),
        &model,
        &vocab,
        &options,
        Some(provenance),
    )?;
    single_record_curve(dev_accuracy, 1.0 - train_accuracy)
        .save_jsonl(&out_dir.join(CURVE_FILE))?;
    println!(
        "svm: {} features / dev accuracy {dev_accuracy:.4}",
        2 * vocab.size()
    );
    Ok(())
}

/// Saved pre-trained encoder directories carry config.json plus encoder
/// weights plus vocab.txt.
fn load_pretrained_encoder(
    dir: &Path,
    seed: u64,
) -> Result<(EncoderClassifier, WordPieceTokenizer)> {
    let stored = artifacts::ArtifactConfig::load(dir)?;
    let cfg: EncoderConfig = stored.encoder.ok_or_else(|| {
        Error::ArtifactMismatch(format!(
            "{} has no encoder configuration in config.json",
            dir.display()
        ))
    })?;
    let tokenizer = WordPieceTokenizer::from_vocab_file(&dir.join(WORDPIECE_VOCAB_FILE), true)?;
    if tokenizer.vocab_size() != cfg.vocab_size {
        return Err(Error::ArtifactMismatch(format!(
            "checkpoint vocabulary has {} tokens but its config declares {}",
            tokenizer.vocab_size(),
            cfg.vocab_size
        )));
    }
    let weights = ParamStore::load(&dir.join(ENCODER_WEIGHTS_FILE))?;
    let model = EncoderClassifier::from_pretrained(cfg, &weights, seed)?;
    Ok((model, tokenizer))
}

fn fresh_model(
    kind: ModelKind,
    preset: Option<DimPreset>,
    vocab_size: usize,
    seed: u64,
) -> Result<NeuralNet> {
    Ok(match kind {
        ModelKind::Bilstm => {
            let cfg = match preset.unwrap_or(DimPreset::Base) {
                DimPreset::Base => BiLstmConfig::base(vocab_size),
                DimPreset::Tiny | DimPreset::Stub => BiLstmConfig::tiny(vocab_size),
            };
            NeuralNet::BiLstm(BiLstmClassifier::init(cfg, seed))
        }
        ModelKind::Encoder | ModelKind::BleurtTiny => {
            let default = if kind == ModelKind::BleurtTiny {
                DimPreset::Tiny
            } else {
                DimPreset::Base
            };
            let cfg = match preset.unwrap_or(default) {
                DimPreset::Base => EncoderConfig::base(vocab_size),
                DimPreset::Tiny => EncoderConfig::tiny_checkpoint(vocab_size),
                DimPreset::Stub => EncoderConfig::stub(vocab_size),
            };
            NeuralNet::Encoder(EncoderClassifier::init(cfg, seed)?)
        }
        _ => unreachable!("fit-style kinds handled by the caller"),
    })
}

fn save_neural_checkpoint(
    dir: &Path,
    kind: ModelKind,
    template: &NeuralNet,
    checkpoint: &Checkpoint,
    tokenizer: &WordPieceTokenizer,
    max_len: usize,
) -> Result<()> {
    let mut model = template.clone();
    model.params_mut().assign_from(&checkpoint.params)?;
    artifacts::save_neural(
        dir,
        kind,
        &model,
        tokenizer,
        max_len,
        checkpoint.epoch,
        checkpoint.dev_accuracy,
        Some(checkpoint.provenance.clone()),
    )
}

fn train_neural(
    config: &RunConfig,
    kind: ModelKind,
    split: &DatasetSplit,
    out_dir: &Path,
    split_checksum: &str,
) -> Result<()> {
    let hp = config.training.hyperparams();
    hp.validate()?;

    let (mut model, tokenizer) = match config.model.resolved_checkpoint() {
        Some(checkpoint_dir) if kind.is_encoder_family() => {
            let (encoder, tokenizer) = load_pretrained_encoder(&checkpoint_dir, hp.seed)?;
            (NeuralNet::Encoder(encoder), tokenizer)
        }
        _ => {
            let vocab_path = config.model.vocab.as_deref().ok_or_else(|| {
                Error::Config(
                    "neural models need model.vocab (or an encoder checkpoint with vocab.txt)"
                        .into(),
                )
            })?;
            let tokenizer = WordPieceTokenizer::from_vocab_file(vocab_path, true)?;
            let model = fresh_model(kind, config.model.preset, tokenizer.vocab_size(), hp.seed)?;
            (model, tokenizer)
        }
    };

    let max_len = config.model.max_len;
    let data = TrainData {
        train: encode_view(&split.train, &tokenizer, max_len)?,
        dev: encode_view(&split.dev, &tokenizer, max_len)?,
    };

    match config.training.transfer_source {
        Some(source) => {
            let outcome = transfer_train(
                &mut model,
                &data,
                source,
                &config.training.stage1_hyperparams(),
                &hp,
                split_checksum,
            )?;
            let stage1_dir = out_dir.join(STAGE1_DIR);
            std::fs::create_dir_all(&stage1_dir)?;
            save_neural_checkpoint(
                &stage1_dir.join(CHECKPOINT_DIR),
                kind,
                &model,
                &outcome.stage1.0,
                &tokenizer,
                max_len,
            )?;
            outcome.stage1.1.save_jsonl(&stage1_dir.join(CURVE_FILE))?;

            save_neural_checkpoint(
                &out_dir.join(CHECKPOINT_DIR),
                kind,
                &model,
                &outcome.stage2.0,
                &tokenizer,
                max_len,
            )?;
            outcome.stage2.1.save_jsonl(&out_dir.join(CURVE_FILE))?;
            let lineage = LineageFile {
                source,
                stage1_dir: STAGE1_DIR.to_string(),
                stage1_epoch: outcome.stage1.0.epoch,
                stage1_dev_accuracy: outcome.stage1.0.dev_accuracy,
            };
            let file = std::fs::File::create(out_dir.join(LINEAGE_FILE))?;
            serde_json::to_writer_pretty(file, &lineage)?;
            println!(
                "transfer run ({source} -> naturalness): stage-2 best epoch {} / dev accuracy {:.4}",
                outcome.stage2.0.epoch, outcome.stage2.0.dev_accuracy
            );
        }
        None => {
            let (checkpoint, curve) =
                train_classifier(&mut model, &data, Criterion::Naturalness, &hp, split_checksum)?;
            save_neural_checkpoint(
                &out_dir.join(CHECKPOINT_DIR),
                kind,
                &model,
                &checkpoint,
                &tokenizer,
                max_len,
            )?;
            curve.save_jsonl(&out_dir.join(CURVE_FILE))?;
            println!(
                "{kind} run: best epoch {} / dev accuracy {:.4}",
                checkpoint.epoch, checkpoint.dev_accuracy
            );
        }
    }
    Ok(())
}

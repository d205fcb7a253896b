//! Trained-model persistence. Every artifact is a directory holding
//! `config.json`, the weight tensors, and the vocabulary the model was
//! trained with, so evaluation can reconstruct the full inference path.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, RatedPair};
use crate::error::{Error, Result};
use crate::features::{BowVocab, WordPieceTokenizer};
use crate::models::{
    bow_predict, BiLstmClassifier, BiLstmConfig, EncoderClassifier, EncoderConfig, LinearSvm,
    MajorityModel, NeuralNet, SvmOptions,
};
use crate::nn::ParamStore;
use crate::training::Provenance;

pub const CONFIG_FILE: &str = "config.json";
pub const ENCODER_WEIGHTS_FILE: &str = "encoder.safetensors";
pub const HEAD_WEIGHTS_FILE: &str = "head.safetensors";
pub const SVM_WEIGHTS_FILE: &str = "weights.safetensors";
pub const WORDPIECE_VOCAB_FILE: &str = "vocab.txt";
pub const BOW_VOCAB_FILE: &str = "vocab.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Majority,
    Svm,
    Bilstm,
    Encoder,
    BleurtTiny,
}

impl ModelKind {
    pub fn is_neural(self) -> bool {
        matches!(self, ModelKind::Bilstm | ModelKind::Encoder | ModelKind::BleurtTiny)
    }

    /// Kinds whose weights can seed a transfer run.
    pub fn is_encoder_family(self) -> bool {
        matches!(self, ModelKind::Encoder | ModelKind::BleurtTiny)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Majority => "majority",
            ModelKind::Svm => "svm",
            ModelKind::Bilstm => "bilstm",
            ModelKind::Encoder => "encoder",
            ModelKind::BleurtTiny => "bleurt-tiny",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority" => Ok(ModelKind::Majority),
            "svm" => Ok(ModelKind::Svm),
            "bilstm" => Ok(ModelKind::Bilstm),
            "encoder" => Ok(ModelKind::Encoder),
            "bleurt-tiny" => Ok(ModelKind::BleurtTiny),
            other => Err(Error::Config(format!(
                "unknown model kind `{other}` (expected majority, svm, bilstm, encoder, or bleurt-tiny)"
            ))),
        }
    }
}

/// The `config.json` written next to the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactConfig {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<EncoderConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bilstm: Option<BiLstmConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svm: Option<SvmOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub majority_label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dev_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl ArtifactConfig {
    fn bare(kind: ModelKind) -> Self {
        ArtifactConfig {
            kind,
            max_len: None,
            encoder: None,
            bilstm: None,
            svm: None,
            majority_label: None,
            epoch: None,
            dev_accuracy: None,
            provenance: None,
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut file = File::create(dir.join(CONFIG_FILE))?;
        serde_json::to_writer_pretty(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(File::open(dir.join(CONFIG_FILE))?)?)
    }
}

/// A loadable trained model with everything inference needs.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Majority(MajorityModel),
    Svm {
        model: LinearSvm,
        vocab: BowVocab,
    },
    Neural {
        net: NeuralNet,
        tokenizer: WordPieceTokenizer,
        max_len: usize,
    },
}

impl TrainedModel {
    /// Predict labels for rated pairs through the model's own featurizer.
    pub fn predict_pairs(&self, pairs: &[RatedPair]) -> Result<Vec<Label>> {
        match self {
            TrainedModel::Majority(m) => Ok(m.predict_n(pairs.len())),
            TrainedModel::Svm { model, vocab } => bow_predict(model, vocab, pairs),
            TrainedModel::Neural { net, tokenizer, max_len } => {
                let view = crate::training::encode_view(pairs, tokenizer, *max_len)?;
                let mut preds = Vec::with_capacity(pairs.len());
                for chunk in view.inputs.chunks(64) {
                    preds.extend(net.predict(chunk)?);
                }
                Ok(preds)
            }
        }
    }
}

pub fn save_majority(
    dir: &Path,
    model: &MajorityModel,
    provenance: Option<Provenance>,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let config = ArtifactConfig {
        majority_label: Some(model.label),
        provenance,
        ..ArtifactConfig::bare(ModelKind::Majority)
    };
    config.save(dir)
}

pub fn save_svm(
    dir: &Path,
    model: &LinearSvm,
    vocab: &BowVocab,
    options: &SvmOptions,
    provenance: Option<Provenance>,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut weights = ParamStore::new();
    weights.insert("svm.weight", model.weight.clone().into_dyn());
    weights.insert("svm.bias", model.bias.clone().into_dyn());
    weights.save(&dir.join(SVM_WEIGHTS_FILE))?;
    vocab.save(&dir.join(BOW_VOCAB_FILE))?;
    let config = ArtifactConfig {
        svm: Some(options.clone()),
        provenance,
        ..ArtifactConfig::bare(ModelKind::Svm)
    };
    config.save(dir)
}

#[allow(clippy::too_many_arguments)]
pub fn save_neural(
    dir: &Path,
    kind: ModelKind,
    net: &NeuralNet,
    tokenizer: &WordPieceTokenizer,
    max_len: usize,
    epoch: usize,
    dev_accuracy: f64,
    provenance: Option<Provenance>,
) -> Result<()> {
    if !kind.is_neural() {
        return Err(Error::Config(format!("{kind} is not a neural model kind")));
    }
    std::fs::create_dir_all(dir)?;
    let encoder = net.params().subset(|n| !n.starts_with("head."));
    let head = net.params().subset(|n| n.starts_with("head."));
    encoder.save(&dir.join(ENCODER_WEIGHTS_FILE))?;
    head.save(&dir.join(HEAD_WEIGHTS_FILE))?;
    tokenizer.save_vocab(&dir.join(WORDPIECE_VOCAB_FILE))?;
    let config = ArtifactConfig {
        max_len: Some(max_len),
        encoder: match net {
            NeuralNet::Encoder(m) => Some(m.cfg),
            NeuralNet::BiLstm(_) => None,
        },
        bilstm: match net {
            NeuralNet::BiLstm(m) => Some(m.cfg),
            NeuralNet::Encoder(_) => None,
        },
        epoch: Some(epoch),
        dev_accuracy: Some(dev_accuracy),
        provenance,
        ..ArtifactConfig::bare(kind)
    };
    config.save(dir)
}

/// Load any artifact directory back into a runnable model.
pub fn load_model(dir: &Path) -> Result<(TrainedModel, ArtifactConfig)> {
    let config = ArtifactConfig::load(dir)?;
    let model = match config.kind {
        ModelKind::Majority => {
            let label = config.majority_label.ok_or_else(|| {
                Error::ArtifactMismatch("majority artifact lacks a label".into())
            })?;
            TrainedModel::Majority(MajorityModel { label })
        }
        ModelKind::Svm => {
            let weights = ParamStore::load(&dir.join(SVM_WEIGHTS_FILE))?;
            let vocab = BowVocab::load(&dir.join(BOW_VOCAB_FILE))?;
            let weight = weights
                .get("svm.weight")
                .ok_or_else(|| Error::ArtifactMismatch("missing svm.weight".into()))?
                .view()
                .into_dimensionality::<ndarray::Ix2>()
                .map_err(|e| Error::ArtifactMismatch(e.to_string()))?
                .to_owned();
            let bias = weights
                .get("svm.bias")
                .ok_or_else(|| Error::ArtifactMismatch("missing svm.bias".into()))?
                .view()
                .into_dimensionality::<ndarray::Ix1>()
                .map_err(|e| Error::ArtifactMismatch(e.to_string()))?
                .to_owned();
            if weight.ncols() != 2 * vocab.size() {
                return Err(Error::ArtifactMismatch(format!(
                    "svm weights cover {} features but the vocabulary implies {}",
                    weight.ncols(),
                    2 * vocab.size()
                )));
            }
            let dim = weight.ncols();
            TrainedModel::Svm {
                model: LinearSvm { weight, bias, dim },
                vocab,
            }
        }
        kind => {
            let tokenizer =
                WordPieceTokenizer::from_vocab_file(&dir.join(WORDPIECE_VOCAB_FILE), true)?;
            let max_len = config.max_len.ok_or_else(|| {
                Error::ArtifactMismatch("neural artifact lacks max_len".into())
            })?;
            let mut params = ParamStore::load(&dir.join(ENCODER_WEIGHTS_FILE))?;
            let head = ParamStore::load(&dir.join(HEAD_WEIGHTS_FILE))?;
            for (name, tensor) in head.iter() {
                params.insert(name.clone(), tensor.clone());
            }
            let net = match kind {
                ModelKind::Bilstm => {
                    let cfg = config.bilstm.ok_or_else(|| {
                        Error::ArtifactMismatch("bilstm artifact lacks its config".into())
                    })?;
                    check_vocab(cfg.vocab_size, tokenizer.vocab_size())?;
                    let mut model = BiLstmClassifier::init(cfg, 0);
                    replace_params(&mut model.params, params)?;
                    NeuralNet::BiLstm(model)
                }
                _ => {
                    let cfg = config.encoder.ok_or_else(|| {
                        Error::ArtifactMismatch("encoder artifact lacks its config".into())
                    })?;
                    check_vocab(cfg.vocab_size, tokenizer.vocab_size())?;
                    let mut model = EncoderClassifier::init(cfg, 0)?;
                    replace_params(&mut model.params, params)?;
                    NeuralNet::Encoder(model)
                }
            };
            TrainedModel::Neural { net, tokenizer, max_len }
        }
    };
    Ok((model, config))
}

fn check_vocab(model_vocab: usize, tokenizer_vocab: usize) -> Result<()> {
    if model_vocab != tokenizer_vocab {
        return Err(Error::ArtifactMismatch(format!(
            "model embeds {model_vocab} tokens but the stored vocabulary has {tokenizer_vocab}"
        )));
    }
    Ok(())
}

/// Swap freshly initialized parameters for stored ones, shape-checked.
fn replace_params(target: &mut ParamStore, source: ParamStore) -> Result<()> {
    if target.len() != source.len() {
        return Err(Error::ArtifactMismatch(format!(
            "artifact holds {} tensors, model expects {}",
            source.len(),
            target.len()
        )));
    }
    target.assign_from(&source)
}

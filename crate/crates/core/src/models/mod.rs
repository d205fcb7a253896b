//! The classifier ladder: majority baseline, linear SVM over bag-of-words
//! features, single-layer Bi-LSTM, and pre-trained-encoder classifiers, all
//! emitting 6-class outputs.

mod bilstm;
mod encoder;
mod head;
mod majority;
mod svm;

pub use bilstm::{BiLstmClassifier, BiLstmConfig};
pub use encoder::{EncoderClassifier, EncoderConfig};
pub use head::ClassifierHead;
pub use majority::{majority_fit_predict, MajorityModel};
pub use svm::{bow_predict, svm_train, svm_train_with, LinearSvm, SvmOptions};

use ndarray::Array2;

use crate::dataset::{Label, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::features::EncodedPair;
use crate::nn::{ParamStore, Tape, Var};

/// Per-class scores, one row of 6 per input.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits(Array2<f64>);

impl Logits {
    pub fn new(scores: Array2<f64>) -> Result<Self> {
        if scores.ncols() != NUM_CLASSES {
            return Err(Error::Validation(format!(
                "logits have {} columns, expected {NUM_CLASSES}",
                scores.ncols()
            )));
        }
        Ok(Logits(scores))
    }

    pub fn scores(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn batch_size(&self) -> usize {
        self.0.nrows()
    }

    /// Softmax of one row; sums to 1 and is strictly positive.
    pub fn probabilities(&self, row: usize) -> Vec<f64> {
        let r = self.0.row(row);
        let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = r.iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        exps.into_iter().map(|v| v / sum).collect()
    }
}

/// Label from 6 finite scores: 1 + argmax, ties toward the smaller index.
pub fn predict_scores(scores: &[f64]) -> Result<Label> {
    if scores.len() != NUM_CLASSES {
        return Err(Error::Validation(format!(
            "{} scores, expected {NUM_CLASSES}",
            scores.len()
        )));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite score in prediction".into()));
    }
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate() {
        if v > scores[best] {
            best = i;
        }
    }
    Label::from_index(best)
}

/// Argmax labels for every row.
pub fn predict(logits: &Logits) -> Result<Vec<Label>> {
    logits
        .scores()
        .rows()
        .into_iter()
        .map(|row| predict_scores(&row.to_vec()))
        .collect()
}

/// A trainable neural classifier (Bi-LSTM or encoder) behind one dispatch
/// point for the training loop.
#[derive(Debug, Clone)]
pub enum NeuralNet {
    BiLstm(BiLstmClassifier),
    Encoder(EncoderClassifier),
}

impl NeuralNet {
    pub fn params(&self) -> &ParamStore {
        match self {
            NeuralNet::BiLstm(m) => &m.params,
            NeuralNet::Encoder(m) => &m.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        match self {
            NeuralNet::BiLstm(m) => &mut m.params,
            NeuralNet::Encoder(m) => &mut m.params,
        }
    }

    /// Forward pass on an existing tape with bound parameter vars.
    pub fn forward(
        &self,
        tape: &mut Tape,
        vars: &indexmap::IndexMap<String, Var>,
        batch: &[EncodedPair],
    ) -> Result<Var> {
        match self {
            NeuralNet::BiLstm(m) => m.forward(tape, vars, batch),
            NeuralNet::Encoder(m) => m.forward(tape, vars, batch),
        }
    }

    /// Inference-only logits.
    pub fn logits(&self, batch: &[EncodedPair]) -> Result<Logits> {
        let mut tape = Tape::new();
        let vars = self.params().bind(&mut tape);
        let out = self.forward(&mut tape, &vars, batch)?;
        let scores = tape
            .value(out)
            .view()
            .into_dimensionality::<ndarray::Ix2>()
            .map_err(|e| Error::Numeric(e.to_string()))?
            .to_owned();
        Logits::new(scores)
    }

    /// Argmax predictions for a batch.
    pub fn predict(&self, batch: &[EncodedPair]) -> Result<Vec<Label>> {
        predict(&self.logits(batch)?)
    }

    /// Fresh head parameters (used by stage 2 of transfer training).
    pub fn reinit_head(&mut self, seed: u64) {
        match self {
            NeuralNet::BiLstm(m) => m.reinit_head(seed),
            NeuralNet::Encoder(m) => m.reinit_head(seed),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NeuralNet::BiLstm(_) => "bilstm",
            NeuralNet::Encoder(_) => "encoder",
        }
    }
}

pub(crate) fn validate_batch(batch: &[EncodedPair], vocab_size: usize) -> Result<(usize, usize)> {
    if batch.is_empty() {
        return Err(Error::Validation("empty batch".into()));
    }
    let max_len = batch[0].max_len;
    for pair in batch {
        if pair.max_len != max_len {
            return Err(Error::Validation(
                "batch mixes different max_len values".into(),
            ));
        }
        if let Some(&id) = pair.token_ids.iter().find(|&&id| id as usize >= vocab_size) {
            return Err(Error::Validation(format!(
                "token id {id} outside embedding table of size {vocab_size}"
            )));
        }
    }
    Ok((batch.len(), max_len))
}

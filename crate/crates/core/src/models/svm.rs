//! One-vs-rest linear SVM trained by dual coordinate descent.
//!
//! Solves the L2-regularized hinge-loss problem per class; the bias enters
//! as an augmented constant feature. Deterministic: the per-epoch
//! permutation comes from a fixed internal seed.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::nn::derive_rng;

use super::predict_scores;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmOptions {
    pub c: f64,
    /// Recorded for config fidelity; inert for a linear kernel.
    pub gamma: String,
    pub tolerance: f64,
    pub max_epochs: usize,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions {
            c: 1.0,
            gamma: "auto".into(),
            tolerance: 1e-3,
            max_epochs: 1000,
        }
    }
}

/// Multiclass linear max-margin classifier; prediction is the argmax of the
/// per-class decision values.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    /// One weight row per class over the feature dimension.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub dim: usize,
}

impl LinearSvm {
    pub fn decision_values(&self, features: &FeatureVector) -> Result<Vec<f64>> {
        if features.dim() != self.dim {
            return Err(Error::Validation(format!(
                "feature dimension {} does not match model dimension {}",
                features.dim(),
                self.dim
            )));
        }
        let mut values = Vec::with_capacity(NUM_CLASSES);
        for k in 0..NUM_CLASSES {
            let row = self.weight.row(k);
            let mut score = self.bias[k];
            for &(i, c) in features.nonzero() {
                score += row[i as usize] * c as f64;
            }
            values.push(score);
        }
        Ok(values)
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<Label> {
        predict_scores(&self.decision_values(features)?)
    }

    pub fn predict_all(&self, features: &[FeatureVector]) -> Result<Vec<Label>> {
        features.iter().map(|f| self.predict(f)).collect()
    }
}

/// Featurize rated pairs with the stored vocabulary and predict.
pub fn bow_predict(
    model: &LinearSvm,
    vocab: &crate::features::BowVocab,
    pairs: &[crate::dataset::RatedPair],
) -> Result<Vec<Label>> {
    pairs
        .iter()
        .map(|p| model.predict(&crate::features::bow_features(p, vocab)))
        .collect()
}

/// Train with the standard hyper-parameters (`C`, gamma recorded but inert).
pub fn svm_train(features: &[FeatureVector], labels: &[Label], c: f64) -> Result<LinearSvm> {
    svm_train_with(
        features,
        labels,
        &SvmOptions {
            c,
            ..SvmOptions::default()
        },
    )
}

pub fn svm_train_with(
    features: &[FeatureVector],
    labels: &[Label],
    options: &SvmOptions,
) -> Result<LinearSvm> {
    if features.is_empty() {
        return Err(Error::Validation("no training features".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::Validation(format!(
            "{} feature vectors vs {} labels",
            features.len(),
            labels.len()
        )));
    }
    if options.c <= 0.0 {
        return Err(Error::Config(format!("C must be positive, got {}", options.c)));
    }
    let dim = features[0].dim();
    if features.iter().any(|f| f.dim() != dim) {
        return Err(Error::Validation(
            "feature vectors have inconsistent dimensions".into(),
        ));
    }

    // squared norms with the augmented bias feature
    let q_diag: Vec<f64> = features
        .iter()
        .map(|f| {
            1.0 + f
                .nonzero()
                .iter()
                .map(|&(_, c)| (c as f64).powi(2))
                .sum::<f64>()
        })
        .collect();

    let mut weight = Array2::<f64>::zeros((NUM_CLASSES, dim));
    let mut bias = Array1::<f64>::zeros(NUM_CLASSES);

    for k in 0..NUM_CLASSES {
        let y: Vec<f64> = labels
            .iter()
            .map(|l| if l.index() == k { 1.0 } else { -1.0 })
            .collect();
        let (w, b) = train_binary(features, &y, &q_diag, dim, options, k as u64)?;
        weight.row_mut(k).assign(&w);
        bias[k] = b;
    }

    Ok(LinearSvm { weight, bias, dim })
}

/// Dual coordinate descent on one one-vs-rest subproblem.
fn train_binary(
    features: &[FeatureVector],
    y: &[f64],
    q_diag: &[f64],
    dim: usize,
    options: &SvmOptions,
    stream: u64,
) -> Result<(Array1<f64>, f64)> {
    let n = features.len();
    let mut alpha = vec![0.0f64; n];
    let mut w = Array1::<f64>::zeros(dim);
    let mut b = 0.0f64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = derive_rng(0x53564d, stream);

    for _ in 0..options.max_epochs {
        order.shuffle(&mut rng);
        let mut max_violation = 0.0f64;
        for &i in &order {
            let fv = &features[i];
            let mut decision = b;
            for &(j, c) in fv.nonzero() {
                decision += w[j as usize] * c as f64;
            }
            let gradient = y[i] * decision - 1.0;
            let projected = if alpha[i] <= 0.0 {
                gradient.min(0.0)
            } else if alpha[i] >= options.c {
                gradient.max(0.0)
            } else {
                gradient
            };
            max_violation = max_violation.max(projected.abs());
            if projected.abs() > 1e-12 {
                let updated = (alpha[i] - gradient / q_diag[i]).clamp(0.0, options.c);
                let delta = (updated - alpha[i]) * y[i];
                if delta != 0.0 {
                    for &(j, c) in fv.nonzero() {
                        w[j as usize] += delta * c as f64;
                    }
                    b += delta;
                    alpha[i] = updated;
                }
            }
        }
        if max_violation < options.tolerance {
            break;
        }
    }
    Ok((w, b))
}

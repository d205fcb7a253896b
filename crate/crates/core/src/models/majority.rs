//! Constant prediction of the modal training label.

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, NUM_CLASSES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityModel {
    pub label: Label,
}

impl MajorityModel {
    /// Modal label of the training split; ties break toward the larger value.
    pub fn fit(train_labels: &[Label]) -> Result<Self> {
        if train_labels.is_empty() {
            return Err(Error::Validation("no training labels".into()));
        }
        let mut counts = [0u64; NUM_CLASSES];
        for label in train_labels {
            counts[label.index()] += 1;
        }
        // last maximum wins, i.e. the larger label on ties
        let best = counts
            .iter()
            .enumerate()
            .max_by_key(|(_, c)| **c)
            .map(|(i, _)| i)
            .unwrap();
        Ok(MajorityModel {
            label: Label::from_index(best)?,
        })
    }

    pub fn predict_n(&self, query_count: usize) -> Vec<Label> {
        vec![self.label; query_count]
    }
}

/// Fit on the training labels and answer `query_count` constant predictions.
pub fn majority_fit_predict(train_labels: &[Label], query_count: usize) -> Result<Vec<Label>> {
    Ok(MajorityModel::fit(train_labels)?.predict_n(query_count))
}

//! Evaluation arithmetic: confusion matrices, accuracy, macro P/R/F1,
//! per-class recall, and Spearman rank correlation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, NUM_CLASSES};
use crate::error::{Error, Result};

/// 6x6 count matrix, rows = gold label, columns = predicted label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
    total: u64,
}

impl ConfusionMatrix {
    /// Tally (gold, predicted) pairs. Lengths must match.
    pub fn from_predictions(preds: &[Label], golds: &[Label]) -> Result<Self> {
        if preds.len() != golds.len() {
            return Err(Error::Validation(format!(
                "{} predictions vs {} gold labels",
                preds.len(),
                golds.len()
            )));
        }
        let mut counts = [[0u64; NUM_CLASSES]; NUM_CLASSES];
        for (pred, gold) in preds.iter().zip(golds) {
            counts[gold.index()][pred.index()] += 1;
        }
        Ok(ConfusionMatrix {
            counts,
            total: preds.len() as u64,
        })
    }

    pub fn from_counts(counts: [[u64; NUM_CLASSES]; NUM_CLASSES]) -> Self {
        let total = counts.iter().flatten().sum();
        ConfusionMatrix { counts, total }
    }

    pub fn count(&self, gold: Label, pred: Label) -> u64 {
        self.counts[gold.index()][pred.index()]
    }

    pub fn counts(&self) -> &[[u64; NUM_CLASSES]; NUM_CLASSES] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Correct predictions: sum of the diagonal.
    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    /// Gold count of class `i` (0-based).
    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    /// Prediction count of class `i` (0-based).
    pub fn col_sum(&self, i: usize) -> u64 {
        (0..NUM_CLASSES).map(|g| self.counts[g][i]).sum()
    }
}

/// Unweighted means over the 6 classes, plus overall accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

/// Macro precision/recall/F1 and accuracy from a confusion matrix.
///
/// Per-class precision is diagonal/column-sum and recall diagonal/row-sum;
/// classes with a zero denominator contribute 0 to the unweighted mean over
/// all 6 classes. F1 is the per-class harmonic mean.
pub fn macro_prf(cm: &ConfusionMatrix) -> Result<MacroScores> {
    if cm.total() == 0 {
        return Err(Error::Validation("empty confusion matrix".into()));
    }
    let mut precision_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut f1_sum = 0.0;
    for i in 0..NUM_CLASSES {
        let diag = cm.counts[i][i] as f64;
        let col = cm.col_sum(i) as f64;
        let row = cm.row_sum(i) as f64;
        let precision = if col > 0.0 { diag / col } else { 0.0 };
        let recall = if row > 0.0 { diag / row } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        precision_sum += precision;
        recall_sum += recall;
        f1_sum += f1;
    }
    let k = NUM_CLASSES as f64;
    Ok(MacroScores {
        precision: precision_sum / k,
        recall: recall_sum / k,
        f1: f1_sum / k,
        accuracy: cm.trace() as f64 / cm.total() as f64,
    })
}

/// Recall per gold class. Classes with zero support are omitted.
pub fn per_class_recall(cm: &ConfusionMatrix) -> BTreeMap<u8, f64> {
    let mut recalls = BTreeMap::new();
    for i in 0..NUM_CLASSES {
        let row = cm.row_sum(i);
        if row > 0 {
            recalls.insert(i as u8 + 1, cm.counts[i][i] as f64 / row as f64);
        }
    }
    recalls
}

/// Average fractional ranks (1-based); ties get the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the mean 1-based rank
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mean_x) * (b - mean_y);
        var_x += (a - mean_x).powi(2);
        var_y += (b - mean_y).powi(2);
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(Error::Validation(
            "correlation undefined for a constant sequence".into(),
        ));
    }
    Ok(cov / (var_x.sqrt() * var_y.sqrt()))
}

/// Spearman's rho: Pearson correlation of average-fractional ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Validation(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Validation(
            "correlation needs at least two points".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite value in correlation input".into()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Full evaluation output for one model on one labeled set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// label -> recall; zero-support labels are omitted.
    pub per_class_recall: BTreeMap<u8, f64>,
    pub confusion: ConfusionMatrix,
    pub n: u64,
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Result<Self> {
        let scores = macro_prf(&confusion)?;
        Ok(EvalReport {
            accuracy: scores.accuracy,
            macro_precision: scores.precision,
            macro_recall: scores.recall,
            macro_f1: scores.f1,
            per_class_recall: per_class_recall(&confusion),
            n: confusion.total(),
            confusion,
        })
    }

    pub fn from_predictions(preds: &[Label], golds: &[Label]) -> Result<Self> {
        EvalReport::from_confusion(ConfusionMatrix::from_predictions(preds, golds)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn label(v: u8) -> Label {
        Label::new(v).unwrap()
    }

    #[test]
    fn confusion_tallies_pairs() {
        let cm = ConfusionMatrix::from_predictions(
            &[label(6), label(6)],
            &[label(6), label(5)],
        )
        .unwrap();
        assert_eq!(cm.count(label(6), label(6)), 1);
        assert_eq!(cm.count(label(5), label(6)), 1);
        assert_eq!(cm.total(), 2);
        assert_eq!(cm.trace(), 1);
    }

    #[test]
    fn confusion_of_perfect_predictions_is_diagonal() {
        let labels: Vec<Label> = (1..=6).map(label).collect();
        let cm = ConfusionMatrix::from_predictions(&labels, &labels).unwrap();
        assert_eq!(cm.trace(), 6);
        assert_eq!(cm.total(), 6);
        let report = EvalReport::from_confusion(cm).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.macro_f1, 1.0);
        assert_eq!(report.macro_precision, 1.0);
        assert_eq!(report.macro_recall, 1.0);
        assert!(report.per_class_recall.values().all(|&r| r == 1.0));
    }

    #[test]
    fn confusion_rejects_length_mismatch() {
        assert!(ConfusionMatrix::from_predictions(&[label(1)], &[]).is_err());
    }

    #[test]
    fn per_class_recall_omits_zero_support() {
        let mut counts = [[0u64; 6]; 6];
        counts[0][0] = 3;
        counts[0][1] = 1;
        let cm = ConfusionMatrix::from_counts(counts);
        let recalls = per_class_recall(&cm);
        assert_eq!(recalls.len(), 1);
        assert_abs_diff_eq!(recalls[&1], 0.75);
    }

    #[test]
    fn macro_prf_handles_zero_denominator_classes() {
        // Only class 1 present in gold; class 2 predicted once.
        let mut counts = [[0u64; 6]; 6];
        counts[0][0] = 1;
        counts[0][1] = 1;
        let cm = ConfusionMatrix::from_counts(counts);
        let scores = macro_prf(&cm).unwrap();
        // class 1: p=1, r=0.5, f1=2/3; class 2: p=0 (no diag), r=0; others 0
        assert_abs_diff_eq!(scores.precision, 1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(scores.recall, 0.5 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(scores.f1, (2.0 / 3.0) / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(scores.accuracy, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn spearman_on_monotone_sequences() {
        assert_abs_diff_eq!(
            spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn spearman_rejects_constant_input() {
        assert!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn average_ranks_handles_ties() {
        // values: 10, 20, 20, 30 -> ranks 1, 2.5, 2.5, 4
        let ranks = average_ranks(&[10.0, 20.0, 20.0, 30.0]);
        assert_eq!(ranks, vec![1.0, 2.5, 2.5, 4.0]);
    }
}

//! Merge per-run training curves into one plottable data file plus a
//! rendered chart.

use std::path::{Path, PathBuf};

use nateval_core::training::TrainingCurve;
use nateval_core::{Error, Result};

use crate::chart::{render_curves, Series};
use super::train::CURVE_FILE;

pub const CURVES_CSV: &str = "curves.csv";
pub const CURVES_SVG: &str = "curves.svg";

/// Collect `curve.jsonl` from each run directory, emit a merged CSV and an
/// SVG chart into `out_dir`. Runs of different lengths simply end early.
pub fn cmd_curves(runs: &[PathBuf], out_dir: &Path) -> Result<()> {
    if runs.is_empty() {
        return Err(Error::Config("no run directories given".into()));
    }
    let mut series = Vec::new();
    for run in runs {
        let curve_path = run.join(CURVE_FILE);
        if !curve_path.exists() {
            return Err(Error::Config(format!(
                "run {} has no {CURVE_FILE}",
                run.display()
            )));
        }
        let curve = TrainingCurve::load_jsonl(&curve_path)?;
        let name = run
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| run.display().to_string());
        series.push((name, curve));
    }

    std::fs::create_dir_all(out_dir)?;
    let mut csv = String::from("run,epoch,dev_accuracy,train_loss\n");
    for (name, curve) in &series {
        for record in &curve.records {
            csv.push_str(&format!(
                "{name},{},{},{}\n",
                record.epoch, record.dev_accuracy, record.train_loss
            ));
        }
    }
    std::fs::write(out_dir.join(CURVES_CSV), csv)?;

    let chart_series: Vec<Series> = series
        .iter()
        .map(|(name, curve)| Series {
            name: name.clone(),
            points: curve
                .records
                .iter()
                .map(|r| (r.epoch, r.dev_accuracy))
                .collect(),
        })
        .collect();
    render_curves(&chart_series, &out_dir.join(CURVES_SVG))?;
    println!(
        "{} series merged into {}",
        series.len(),
        out_dir.display()
    );
    Ok(())
}

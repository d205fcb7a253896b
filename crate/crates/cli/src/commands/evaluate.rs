//! Test-set evaluation of a saved checkpoint.

use std::io::Write;
use std::path::Path;

use nateval_core::dataset::load_split;
use nateval_core::metrics::EvalReport;
use nateval_core::training::artifacts::load_model;
use nateval_core::{Criterion, Label, Result};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";

/// Human-readable report: the metric rows of the performance-comparison
/// table plus a per-class block (gold support, correct predictions, recall).
pub fn render_report_table(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<16}{:>8}\n", "F1_score", format!("{:.2}", report.macro_f1)));
    out.push_str(&format!("{:<16}{:>8}\n", "recall", format!("{:.2}", report.macro_recall)));
    out.push_str(&format!(
        "{:<16}{:>8}\n",
        "precision",
        format!("{:.2}", report.macro_precision)
    ));
    out.push_str(&format!("{:<16}{:>8}\n", "accuracy", format!("{:.2}", report.accuracy)));
    out.push('\n');

    out.push_str(&format!("{:<16}", "naturalness"));
    for label in 1..=6u8 {
        out.push_str(&format!("{label:>8}"));
    }
    out.push('\n');
    out.push_str(&format!("{:<16}", "test size"));
    for i in 0..6 {
        out.push_str(&format!("{:>8}", report.confusion.row_sum(i)));
    }
    out.push('\n');
    out.push_str(&format!("{:<16}", "prediction size"));
    for i in 0..6 {
        let label = Label::from_index(i).unwrap();
        out.push_str(&format!("{:>8}", report.confusion.count(label, label)));
    }
    out.push('\n');
    out.push_str(&format!("{:<16}", "accuracy"));
    for i in 0..6 {
        match report.per_class_recall.get(&(i as u8 + 1)) {
            Some(recall) => out.push_str(&format!("{:>8}", format!("{recall:.2}"))),
            None => out.push_str(&format!("{:>8}", "-")),
        }
    }
    out.push('\n');
    out
}

/// Evaluate a checkpoint on the test split and write `report.json` plus
/// `report.txt` into `out_dir`.
pub fn cmd_evaluate(checkpoint: &Path, prepared: &Path, out_dir: &Path) -> Result<EvalReport> {
    let (model, _config) = load_model(checkpoint)?;
    let (split, _) = load_split(prepared)?;

    let preds = model.predict_pairs(&split.test)?;
    let golds: Vec<Label> = split
        .test
        .iter()
        .map(|p| p.label(Criterion::Naturalness))
        .collect();
    let report = EvalReport::from_predictions(&preds, &golds)?;

    std::fs::create_dir_all(out_dir)?;
    let mut json = std::fs::File::create(out_dir.join(REPORT_JSON))?;
    serde_json::to_writer_pretty(&mut json, &report)?;
    json.write_all(b"\n")?;
    let table = render_report_table(&report);
    std::fs::write(out_dir.join(REPORT_TXT), &table)?;
    print!("{table}");
    Ok(report)
}

//! Spearman rank correlation between two rating criteria over the
//! aggregated pair labels.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use nateval_core::dataset::load_split;
use nateval_core::metrics::spearman;
use nateval_core::{Criterion, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub criterion_a: Criterion,
    pub criterion_b: Criterion,
    pub rho: f64,
    pub n: usize,
}

/// Correlate per-pair median labels over the full prepared corpus
/// (train + dev + test). Optionally writes a JSON report.
pub fn cmd_correlate(
    prepared: &Path,
    criterion_a: Criterion,
    criterion_b: Criterion,
    out_file: Option<&Path>,
) -> Result<CorrelationReport> {
    let (split, _) = load_split(prepared)?;
    let pairs: Vec<_> = split
        .train
        .iter()
        .chain(&split.dev)
        .chain(&split.test)
        .collect();
    let x: Vec<f64> = pairs.iter().map(|p| p.label(criterion_a).value() as f64).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.label(criterion_b).value() as f64).collect();
    let rho = spearman(&x, &y)?;

    let report = CorrelationReport {
        criterion_a,
        criterion_b,
        rho,
        n: pairs.len(),
    };
    println!(
        "spearman rho({criterion_a}, {criterion_b}) = {rho:.4} over {} pairs",
        report.n
    );
    if let Some(path) = out_file {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut file, &report)?;
        file.write_all(b"\n")?;
    }
    Ok(report)
}

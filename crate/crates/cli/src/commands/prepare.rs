//! Data preparation: load -> aggregate -> split -> distribution report.

use std::path::Path;

use nateval_core::dataset::{
    aggregate, distribution, load_records, save_split, sha256_file, split, LabelDistribution,
    SplitManifest,
};
use nateval_core::{Criterion, Error, Result};

use crate::config::RunConfig;

/// Render the label distribution in the two-row layout of the published
/// corpus table.
pub fn render_distribution(dist: &LabelDistribution) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<14}", dist.criterion.to_string()));
    for label in 1..=6 {
        out.push_str(&format!("{label:>8}"));
    }
    out.push('\n');
    out.push_str(&format!("{:<14}", "data size"));
    for count in dist.counts {
        out.push_str(&format!("{count:>8}"));
    }
    out.push('\n');
    out.push_str(&format!(
        "total {:>8}    majority label {} ({:.3})\n",
        dist.total, dist.majority_label, dist.majority_fraction
    ));
    out
}

/// Run the preparation pipeline and persist splits plus manifest into
/// `config.output.dir`. Returns the manifest.
pub fn cmd_prepare(config: &RunConfig) -> Result<SplitManifest> {
    let raw_path = config
        .data
        .path
        .as_deref()
        .ok_or_else(|| Error::Config("no input data file configured (data.path or --data)".into()))?;
    let out_dir: &Path = config
        .output
        .dir
        .as_deref()
        .ok_or_else(|| Error::Config("no output directory configured (output.dir or --out)".into()))?;

    let records = load_records(raw_path, &config.data.schema)?;
    let pairs = aggregate(&records)?;
    let dist = distribution(&pairs, Criterion::Naturalness)?;
    print!("{}", render_distribution(&dist));

    let checksum = sha256_file(raw_path)?;
    let dataset_split = split(pairs, config.split.split_ratios(), config.split.seed)?;
    println!(
        "split sizes: train {} / dev {} / test {} (seed {})",
        dataset_split.train.len(),
        dataset_split.dev.len(),
        dataset_split.test.len(),
        dataset_split.seed
    );
    let manifest = save_split(&dataset_split, &checksum, out_dir)?;
    println!("prepared data written to {}", out_dir.display());
    Ok(manifest)
}

//! The five subcommands: prepare, train, evaluate, correlate, curves.

mod correlate;
mod curves;
mod evaluate;
mod prepare;
mod train;

pub use correlate::{cmd_correlate, CorrelationReport};
pub use curves::{cmd_curves, CURVES_CSV, CURVES_SVG};
pub use evaluate::{cmd_evaluate, render_report_table, REPORT_JSON, REPORT_TXT};
pub use prepare::{cmd_prepare, render_distribution};
pub use train::{
    cmd_train, LineageFile, CHECKPOINT_DIR, CURVE_FILE, LINEAGE_FILE, RESOLVED_CONFIG_FILE,
    STAGE1_DIR,
};

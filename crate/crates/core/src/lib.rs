//! Learned estimation of how natural a generated sentence sounds, given a
//! human reference sentence.
//!
//! The pipeline: ingest per-judge 6-point Likert ratings of
//! (system output, human reference) pairs, aggregate them into per-pair
//! median labels, split deterministically, extract features (bag-of-words
//! for the SVM, WordPiece pair encodings for the neural models), train one
//! of the classifiers in the ladder (majority, linear SVM, Bi-LSTM,
//! transformer encoder with a linear+softmax head), optionally with a
//! two-stage transfer schedule across rating criteria, and report accuracy,
//! macro P/R/F1, per-class recall, and rank correlations.

pub mod dataset;
pub mod error;
pub mod features;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod training;

pub use dataset::{Criterion, Label, NUM_CLASSES};
pub use error::{Error, Result};

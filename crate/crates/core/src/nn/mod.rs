//! Minimal f64 neural-network toolkit: a reverse-mode tape over ndarray,
//! named parameter stores with tensor-file persistence, seeded
//! initializers, and Adam.
//!
//! Everything is CPU, single-threaded, and deterministic given the seeds,
//! which is what the reproducibility contract of the training pipeline
//! needs. f64 keeps finite-difference gradient checks tight.

mod adam;
mod init;
mod params;
mod tape;

pub use adam::Adam;
pub use init::{derive_rng, normal, ones, uniform, zeros};
pub use params::ParamStore;
pub use tape::{Grads, Tape, Var};

pub type Tensor = ndarray::ArrayD<f64>;

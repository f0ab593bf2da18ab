//! Sample-index selection for modulation classification: synthetic I/Q
//! frames, small neural classifiers trained from scratch, wrapper
//! selection of the sample positions that matter, baselines, and a
//! benchmark harness that reports accuracy against SNR.

pub mod baselines;
pub mod bench;
pub mod classifiers;
pub mod error;
pub mod neurokit;
pub mod search;
pub mod sigstream;
pub mod wrapper;

pub use error::{Error, Result};

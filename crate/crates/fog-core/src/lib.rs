//! Freezing-of-gait (FoG) detection from wearable 3D accelerometers.
//!
//! The crate covers the full detection pipeline:
//!
//! 1. [`ingest`] — parsing Daphnet-format recordings, removing
//!    out-of-experiment samples, deriving magnitude channels, and generating
//!    labeled synthetic recordings for testing.
//! 2. [`windowing`] — slicing recordings into fixed-length overlapping
//!    windows with binary freeze labels.
//! 3. [`features`] — the 145-feature catalog (statistical and spectral
//!    band-power features per channel), feature matrices, and recursive
//!    feature elimination.
//! 4. [`balance`] — SMOTE oversampling of the minority (freeze) class.
//! 5. [`model`] — a two-layer LSTM binary classifier trained from scratch
//!    with BPTT and Adam, plus a Freeze-Index threshold baseline.
//! 6. [`eval`] — confusion metrics, ROC/AUC, subject-dependent and
//!    subject-independent split protocols.
//! 7. [`harness`] — the config-driven experiment runner producing JSON
//!    reports for the 13-experiment grid.

pub mod balance;
pub mod error;
pub mod eval;
pub mod features;
pub mod harness;
pub mod ingest;
pub mod model;
pub mod windowing;

pub use error::{Error, Result};

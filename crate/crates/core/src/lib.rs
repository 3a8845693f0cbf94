//! Structured pruning toolkit for deep fully connected classifiers.
//!
//! The crate is organised bottom-up:
//!
//! - [`engine`]: dense layers, activations, loss, Adam, training loop.
//! - [`model`]: the stepped-width architecture, parameter accounting and
//!   layer surgery (masking, shrinking, span replacement, checkpoints).
//! - [`dataio`]: packet-record ingestion, 1515-wide featurization, class
//!   grouping, undersampling, splitting and a synthetic generator.
//! - [`pruning`]: the seven strategies behind one interface.
//! - [`harness`]: macro-F1, grid runs, aggregation with confidence
//!   intervals, scaled plot data and report files.
//! - [`config`]: flat `section.key=value` configuration and run manifests.

pub mod config;
pub mod dataio;
pub mod engine;
mod error;
pub mod harness;
pub mod model;
pub mod pruning;

pub use error::{Error, Result};
pub use model::{build_model, CountMode, ModelConfig, Net, PrunableNet};

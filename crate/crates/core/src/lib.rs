//! Data-driven STAP target localization.
//!
//! Pipeline: simulate per-range-bin array snapshots ([`scene`]), turn them
//! into MVDR output-power heatmap tensors ([`beamform`]), persist them as
//! datasets ([`dataset`]), regress target positions with a small CNN
//! ([`nn`]) and compare against the peak-cell baseline ([`eval`]).

pub mod beamform;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod hash;
pub mod linalg;
pub mod nn;
pub mod render;
pub mod scene;

pub use error::{Error, Result};

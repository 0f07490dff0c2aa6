//! Action recognition from 3D skeletal joint sequences.
//!
//! The pipeline segments a sequence into overlapping windows, describes each
//! window by the unit-normalized upper triangle of its joint covariance,
//! sparse-codes that descriptor over a sliding view of a time-stamped
//! dictionary, and turns per-class reconstruction errors into probabilities.
//! A second score, built from baseline-calibrated differences of raw joint
//! positions, is fused with the dictionary score per window. Fused scores
//! accumulate across windows (offline) or frames (online streaming), and the
//! class with the largest accumulated score wins.

pub mod config;
pub mod data;
pub mod do3dj;
pub mod error;
pub mod features;
pub mod model;
pub mod report;
pub mod scoring;
pub mod sparse;
pub mod synth;
pub mod windows;

pub use error::{Error, Result};

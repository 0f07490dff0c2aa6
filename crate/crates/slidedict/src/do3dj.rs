//! Difference-of-3D-joints score: baseline calibration against each
//! training sequence's first frame, Frobenius distances between calibrated
//! frame pairs, pooling of the L smallest distances per class, and the
//! inverse-score probability normalization.

use ndarray::Array2;

use crate::data::{ActionSequence, JointFrame};
use crate::error::{Error, Result};
use crate::sparse::{inverse_probabilities, ProbabilityVector};
use crate::windows::{segment, sliding_range, WindowSpec};

/// First-frame offset between a test sequence and one training sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub beta: Array2<f64>,
}

/// beta = first test frame - first training frame, elementwise.
pub fn baseline(test: &ActionSequence, train: &ActionSequence) -> Result<Baseline> {
    let t0 = &test.frames[0];
    let k0 = &train.frames[0];
    if t0.joint_count() != k0.joint_count() {
        return Err(Error::Dimension(format!(
            "test has {} joints, training sequence has {}",
            t0.joint_count(),
            k0.joint_count()
        )));
    }
    Ok(Baseline { beta: t0.coords() - k0.coords() })
}

/// Baseline from a single first frame, for streams where only frames (not a
/// whole sequence) exist yet.
pub fn baseline_from_frames(test_first: &JointFrame, train_first: &JointFrame) -> Result<Baseline> {
    if test_first.joint_count() != train_first.joint_count() {
        return Err(Error::Dimension(format!(
            "test has {} joints, training sequence has {}",
            test_first.joint_count(),
            train_first.joint_count()
        )));
    }
    Ok(Baseline { beta: test_first.coords() - train_first.coords() })
}

/// Frobenius norm of (test frame - training frame - beta).
pub fn frame_pair_distance(
    test_frame: &JointFrame,
    train_frame: &JointFrame,
    beta: &Baseline,
) -> f64 {
    let mut sum = 0.0;
    for ((t, k), b) in test_frame
        .coords()
        .iter()
        .zip(train_frame.coords().iter())
        .zip(beta.beta.iter())
    {
        let d = t - k - b;
        sum += d * d;
    }
    sum.sqrt()
}

/// Per-class pooled difference scores for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffScore {
    pub values: Vec<f64>,
    pub window: usize,
    pub pool_size: usize,
}

/// Score of one class for test window `w`: pool the calibrated distances
/// between every test-window frame and every frame of the training
/// sequences' windows w-N..w+N, then average the `l_pool` smallest (fewer if
/// the pool is smaller).
pub fn class_diff_score(
    test_window: &[&JointFrame],
    train_class: &[&ActionSequence],
    w: usize,
    spec: &WindowSpec,
    baselines: &[&Baseline],
    l_pool: usize,
) -> Result<f64> {
    if l_pool < 1 {
        return Err(Error::Parameter("pool size L must be >= 1".into()));
    }
    if test_window.is_empty() {
        return Err(Error::Empty("test window".into()));
    }
    if train_class.is_empty() {
        return Err(Error::Empty("no training sequences for class".into()));
    }
    if baselines.len() != train_class.len() {
        return Err(Error::Dimension(format!(
            "{} baselines for {} training sequences",
            baselines.len(),
            train_class.len()
        )));
    }

    let flat_dim = test_window[0].joint_count() * 3;
    let mut pool: Vec<f64> = Vec::new();
    let mut adjusted: Vec<f64> = Vec::new();
    let mut train_flat: Vec<f64> = Vec::new();
    for (train, beta) in train_class.iter().zip(baselines) {
        let windows = segment(train.frame_count(), spec.count)?;
        let range = sliding_range(w, spec.half_width, spec.count);
        let lo = windows[range.start() - 1].start;
        let hi = windows[range.end() - 1].end;
        // calibrated test frames for this training sequence, flattened
        adjusted.clear();
        for tf in test_window {
            adjusted.extend(
                tf.coords()
                    .iter()
                    .zip(beta.beta.iter())
                    .map(|(t, b)| t - b),
            );
        }
        train_flat.clear();
        for frame in &train.frames[lo..hi] {
            train_flat.extend(frame.coords().iter());
        }
        for train_frame in train_flat.chunks_exact(flat_dim) {
            for adj in adjusted.chunks_exact(flat_dim) {
                let mut sum = 0.0;
                for (a, k) in adj.iter().zip(train_frame) {
                    let d = a - k;
                    sum += d * d;
                }
                pool.push(sum.sqrt());
            }
        }
    }
    if pool.is_empty() {
        return Err(Error::Empty(format!("distance pool for window {w}")));
    }
    Ok(mean_of_smallest(&mut pool, l_pool))
}

/// Mean of the `l` smallest values (all of them when the pool is smaller).
/// Summation runs over the selected values in ascending order, matching a
/// full sort-and-average evaluation bit for bit.
fn mean_of_smallest(pool: &mut [f64], l: usize) -> f64 {
    let take = l.min(pool.len());
    if take < pool.len() {
        pool.select_nth_unstable_by(take - 1, |a, b| a.partial_cmp(b).unwrap());
    }
    let selected = &mut pool[..take];
    selected.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    selected.iter().sum::<f64>() / take as f64
}

/// Class probabilities from pooled difference scores; same inverse
/// normalization as the dictionary probabilities.
pub fn diff_probabilities(scores: &DiffScore, eps: f64) -> Result<ProbabilityVector> {
    inverse_probabilities(&scores.values, eps)
}

//! Covariance-of-joints descriptor: per-frame scatter across joints,
//! averaged over a window, upper-triangle vectorized and unit-normalized.

use ndarray::Array2;

use crate::data::JointFrame;
use crate::error::{Error, Result};

/// Norms below this are treated as zero; the descriptor stays all-zeros.
pub const ZERO_NORM_EPS: f64 = 1e-12;

/// Unit-normalized (or all-zero) window descriptor of dimension J(J+1)/2.
#[derive(Debug, Clone, PartialEq)]
pub struct CovDescriptor {
    pub values: Vec<f64>,
    pub source_window: usize,
}

impl CovDescriptor {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Descriptor dimension for J joints.
pub fn descriptor_dim(joints: usize) -> usize {
    joints * (joints + 1) / 2
}

/// Scatter of one frame: center each axis by its mean over joints, then
/// (S - M)(S - M)^T. The result is a symmetric PSD J x J matrix.
pub fn frame_scatter(frame: &JointFrame) -> Array2<f64> {
    let coords = frame.coords();
    let joints = coords.nrows();
    let mut mean = [0.0f64; 3];
    for row in coords.rows() {
        for a in 0..3 {
            mean[a] += row[a];
        }
    }
    for m in &mut mean {
        *m /= joints as f64;
    }
    let mut centered = coords.clone();
    for mut row in centered.rows_mut() {
        for a in 0..3 {
            row[a] -= mean[a];
        }
    }
    centered.dot(&centered.t())
}

/// Window descriptor: mean of the per-frame scatters, row-major upper
/// triangle (diagonal included), L2-normalized. A window whose triangle norm
/// is below [`ZERO_NORM_EPS`] keeps the all-zeros vector.
pub fn covariance_descriptor(frames: &[&JointFrame], window: usize) -> Result<CovDescriptor> {
    if frames.is_empty() {
        return Err(Error::Empty("window with no frames".into()));
    }
    let joints = frames[0].joint_count();
    for f in frames {
        if f.joint_count() != joints {
            return Err(Error::Dimension(format!(
                "window mixes {} and {} joints",
                joints,
                f.joint_count()
            )));
        }
    }
    let mut cov = Array2::<f64>::zeros((joints, joints));
    for f in frames {
        cov += &frame_scatter(f);
    }
    cov /= frames.len() as f64;

    let mut values = Vec::with_capacity(descriptor_dim(joints));
    for i in 0..joints {
        for j in i..joints {
            values.push(cov[(i, j)]);
        }
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm >= ZERO_NORM_EPS {
        for v in &mut values {
            *v /= norm;
        }
    } else {
        for v in &mut values {
            *v = 0.0;
        }
    }
    Ok(CovDescriptor { values, source_window: window })
}

/// Convenience over an owned frame slice.
pub fn covariance_descriptor_owned(frames: &[JointFrame], window: usize) -> Result<CovDescriptor> {
    let refs: Vec<&JointFrame> = frames.iter().collect();
    covariance_descriptor(&refs, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::JointFrame;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frame(rows: &[[f64; 3]]) -> JointFrame {
        JointFrame::from_rows(rows).unwrap()
    }

    /// Independent evaluation with explicit loops: mean over joints per axis,
    /// centered outer products averaged over frames, upper triangle, unit
    /// normalization.
    fn brute_force_descriptor(frames: &[JointFrame]) -> Vec<f64> {
        let j = frames[0].joint_count();
        let mut cov = vec![vec![0.0f64; j]; j];
        for f in frames {
            let c = f.coords();
            let mut mean = [0.0f64; 3];
            for jj in 0..j {
                for a in 0..3 {
                    mean[a] += c[(jj, a)];
                }
            }
            for a in 0..3 {
                mean[a] /= j as f64;
            }
            for p in 0..j {
                for q in 0..j {
                    let mut dot = 0.0;
                    for a in 0..3 {
                        dot += (c[(p, a)] - mean[a]) * (c[(q, a)] - mean[a]);
                    }
                    cov[p][q] += dot;
                }
            }
        }
        let n = frames.len() as f64;
        let mut tri = Vec::new();
        for p in 0..j {
            for q in p..j {
                tri.push(cov[p][q] / n);
            }
        }
        let norm: f64 = tri.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm >= ZERO_NORM_EPS {
            for v in &mut tri {
                *v /= norm;
            }
        } else {
            tri.iter_mut().for_each(|v| *v = 0.0);
        }
        tri
    }

    #[test]
    fn scatter_of_two_collinear_joints() {
        let f = frame(&[[1.0, 0.0, 0.0], [3.0, 0.0, 0.0]]);
        let s = frame_scatter(&f);
        assert_eq!(s, array![[1.0, -1.0], [-1.0, 1.0]]);
    }

    #[test]
    fn scatter_of_identical_joints_is_zero() {
        let f = frame(&[[2.0, -1.0, 0.5], [2.0, -1.0, 0.5], [2.0, -1.0, 0.5]]);
        let s = frame_scatter(&f);
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scatter_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let j = rng.gen_range(2..=5);
            let rows: Vec<[f64; 3]> = (0..j)
                .map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
                .collect();
            let s = frame_scatter(&frame(&rows));
            // PSD check via x^T S x >= -1e-12 on random directions
            for _ in 0..10 {
                let x: Vec<f64> = (0..j).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mut quad = 0.0;
                for p in 0..j {
                    for q in 0..j {
                        quad += x[p] * s[(p, q)] * x[q];
                    }
                }
                assert!(quad >= -1e-12, "negative quadratic form {quad}");
            }
        }
    }

    #[test]
    fn single_frame_descriptor_matches_hand_value() {
        let f = frame(&[[1.0, 0.0, 0.0], [3.0, 0.0, 0.0]]);
        let d = covariance_descriptor(&[&f], 1).unwrap();
        let s3 = 3.0f64.sqrt();
        assert_abs_diff_eq!(d.values[0], 1.0 / s3, epsilon = 1e-12);
        assert_abs_diff_eq!(d.values[1], -1.0 / s3, epsilon = 1e-12);
        assert_abs_diff_eq!(d.values[2], 1.0 / s3, epsilon = 1e-12);
        assert_abs_diff_eq!(d.norm(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_window_gives_zero_descriptor() {
        let f = frame(&[[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]);
        let d = covariance_descriptor(&[&f, &f, &f], 2).unwrap();
        assert!(d.is_zero());
        assert_eq!(d.dim(), 3);
    }

    #[test]
    fn empty_window_is_an_error() {
        assert!(covariance_descriptor(&[], 1).is_err());
    }

    fn random_window(rng: &mut ChaCha8Rng) -> Vec<JointFrame> {
        let j = rng.gen_range(2..=4);
        let n = rng.gen_range(1..=5);
        (0..n)
            .map(|_| {
                let rows: Vec<[f64; 3]> = (0..j)
                    .map(|_| {
                        [
                            rng.gen_range(-3.0..3.0),
                            rng.gen_range(-3.0..3.0),
                            rng.gen_range(-3.0..3.0),
                        ]
                    })
                    .collect();
                frame(&rows)
            })
            .collect()
    }

    #[test]
    fn descriptor_matches_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let frames = random_window(&mut rng);
            let d = covariance_descriptor_owned(&frames, 1).unwrap();
            let oracle = brute_force_descriptor(&frames);
            assert_eq!(d.values.len(), oracle.len());
            for (a, b) in d.values.iter().zip(&oracle) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn translation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let frames = random_window(&mut rng);
            let offset = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), 4.25];
            let shifted: Vec<JointFrame> = frames.iter().map(|f| f.translated(offset)).collect();
            let a = covariance_descriptor_owned(&frames, 1).unwrap();
            let b = covariance_descriptor_owned(&shifted, 1).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn scale_invariance_after_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &s in &[0.25, 2.0, 117.0] {
            let frames = random_window(&mut rng);
            let scaled: Vec<JointFrame> = frames
                .iter()
                .map(|f| JointFrame::new(f.coords() * s).unwrap())
                .collect();
            let a = covariance_descriptor_owned(&frames, 1).unwrap();
            let b = covariance_descriptor_owned(&scaled, 1).unwrap();
            // pre-normalization the covariance scales by s^2
            let cov_a = frame_scatter(&frames[0]);
            let cov_b = frame_scatter(&scaled[0]);
            for (x, y) in cov_a.iter().zip(cov_b.iter()) {
                assert_abs_diff_eq!(x * s * s, *y, epsilon = 1e-9 * (1.0 + y.abs()));
            }
            for (x, y) in a.values.iter().zip(&b.values) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn frame_permutation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let frames = random_window(&mut rng);
        let mut shuffled = frames.clone();
        shuffled.reverse();
        let a = covariance_descriptor_owned(&frames, 1).unwrap();
        let b = covariance_descriptor_owned(&shuffled, 1).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn norm_is_zero_or_one(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let frames = random_window(&mut rng);
            let d = covariance_descriptor_owned(&frames, 1).unwrap();
            let n = d.norm();
            prop_assert!(d.is_zero() || (n - 1.0).abs() <= 1e-9, "norm was {}", n);
            prop_assert_eq!(d.dim(), descriptor_dim(frames[0].joint_count()));
        }
    }
}

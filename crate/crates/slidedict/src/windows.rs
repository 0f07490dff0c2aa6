//! Deterministic segmentation of a sequence into overlapping windows, the
//! sliding index range around a window, and the variable-length
//! frame-centered windows used by the streaming classifier.

use crate::error::{Error, Result};

/// Windowing parameters shared by training and classification.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpec {
    /// Windows per sequence.
    pub count: usize,
    /// Sliding half-width: windows before and after the query window.
    pub half_width: usize,
    /// Candidate window lengths (frames) for frame-centered online windows.
    pub online_lengths: Vec<usize>,
}

impl WindowSpec {
    pub fn new(count: usize, half_width: usize, online_lengths: Vec<usize>) -> Result<Self> {
        if count < 1 {
            return Err(Error::Parameter("window count must be >= 1".into()));
        }
        if online_lengths.is_empty() {
            return Err(Error::Parameter("online_lengths must be non-empty".into()));
        }
        if online_lengths.iter().any(|&l| l < 2) {
            return Err(Error::Parameter("online window lengths must be >= 2".into()));
        }
        if online_lengths.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::Parameter(
                "online_lengths must be strictly increasing".into(),
            ));
        }
        Ok(Self { count, half_width, online_lengths })
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self { count: 8, half_width: 2, online_lengths: vec![8, 16, 24, 32] }
    }
}

/// One window: 1-based index, half-open frame range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub index: usize,
    pub start: usize,
    pub end: usize,
}

impl Window {
    /// Frame count n_w.
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, t: usize) -> bool {
        t >= self.start && t < self.end
    }
}

/// Splits `frame_count` frames into exactly `window_count` overlapping
/// windows. Window length is `min(F, max(1, 2*ceil(F/(W+1))))` (about 50%
/// overlap) and starts are spread evenly: window 1 begins at frame 0 and
/// window W ends at frame F.
pub fn segment(frame_count: usize, window_count: usize) -> Result<Vec<Window>> {
    if frame_count < 1 {
        return Err(Error::Parameter("frame count must be >= 1".into()));
    }
    if window_count < 1 {
        return Err(Error::Parameter("window count must be >= 1".into()));
    }
    let len = frame_count.min((2 * frame_count.div_ceil(window_count + 1)).max(1));
    let span = frame_count - len;
    let mut windows = Vec::with_capacity(window_count);
    for w in 1..=window_count {
        let start = if window_count == 1 {
            0
        } else {
            // round(span * (w-1) / (W-1)) in integer arithmetic
            let num = span * (w - 1);
            let den = window_count - 1;
            (2 * num + den) / (2 * den)
        };
        windows.push(Window { index: w, start, end: start + len });
    }
    Ok(windows)
}

/// Inclusive window-index range `[max(1, w-N), min(W, w+N)]`.
pub fn sliding_range(w: usize, half_width: usize, window_count: usize) -> std::ops::RangeInclusive<usize> {
    let lo = w.saturating_sub(half_width).max(1);
    let hi = (w + half_width).min(window_count);
    lo..=hi
}

/// All windows centered on frame `t` that fit in the available prefix: for
/// each candidate length l the window `[t - floor(l/2), t + ceil(l/2))`,
/// kept when it lies inside `[0, t_avail)`. Falls back to the single window
/// `[0, t_avail)` when no candidate fits.
pub fn centered_windows(t: usize, t_avail: usize, spec: &WindowSpec) -> Vec<Window> {
    assert!(t < t_avail, "frame index {t} outside available prefix {t_avail}");
    let mut out = Vec::new();
    for &len in &spec.online_lengths {
        let half_lo = len / 2;
        let half_hi = len - half_lo; // ceil(len/2)
        if t >= half_lo && t + half_hi <= t_avail {
            out.push(Window { index: out.len() + 1, start: t - half_lo, end: t + half_hi });
        }
    }
    if out.is_empty() {
        out.push(Window { index: 1, start: 0, end: t_avail });
    }
    out
}

/// Maps a stream frame index to a dictionary window index:
/// `clamp(ceil((t+1)/F_ref * W), 1, W)`. `f_ref` is a reference sequence
/// length (the trained model uses the median training length).
pub fn progress_to_window(t: usize, f_ref: usize, window_count: usize) -> usize {
    assert!(f_ref >= 1 && window_count >= 1);
    let w = ((t + 1) * window_count).div_ceil(f_ref);
    w.clamp(1, window_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn segment_f30_w4_has_half_overlap() {
        let windows = segment(30, 4).unwrap();
        let ranges: Vec<(usize, usize)> = windows.iter().map(|w| (w.start, w.end)).collect();
        assert_eq!(ranges, vec![(0, 12), (6, 18), (12, 24), (18, 30)]);
        assert!(windows.iter().all(|w| w.len() == 12));
    }

    #[test]
    fn segment_single_window_covers_everything() {
        let windows = segment(5, 1).unwrap();
        assert_eq!(windows, vec![Window { index: 1, start: 0, end: 5 }]);
    }

    #[test]
    fn segment_more_windows_than_frames() {
        // len = min(3, max(1, 2*ceil(3/5))) = 2; starts round(1*(w-1)/3)
        let windows = segment(3, 4).unwrap();
        let ranges: Vec<(usize, usize)> = windows.iter().map(|w| (w.start, w.end)).collect();
        assert_eq!(ranges, vec![(0, 2), (0, 2), (1, 3), (1, 3)]);
    }

    #[test]
    fn segment_rejects_zero_inputs() {
        assert!(segment(0, 4).is_err());
        assert!(segment(4, 0).is_err());
    }

    #[test]
    fn sliding_range_clamps_at_both_ends() {
        assert_eq!(sliding_range(3, 1, 5), 2..=4);
        assert_eq!(sliding_range(1, 2, 5), 1..=3);
        assert_eq!(sliding_range(5, 2, 5), 3..=5);
        assert_eq!(sliding_range(2, 0, 5), 2..=2);
    }

    fn spec_with_lengths(lengths: &[usize]) -> WindowSpec {
        WindowSpec::new(4, 2, lengths.to_vec()).unwrap()
    }

    #[test]
    fn centered_windows_interior_frame() {
        let spec = spec_with_lengths(&[8, 16]);
        let windows = centered_windows(10, 30, &spec);
        let ranges: Vec<(usize, usize)> = windows.iter().map(|w| (w.start, w.end)).collect();
        assert_eq!(ranges, vec![(6, 14), (2, 18)]);
    }

    #[test]
    fn centered_windows_stream_start_falls_back() {
        let spec = spec_with_lengths(&[8]);
        let windows = centered_windows(0, 1, &spec);
        assert_eq!(windows, vec![Window { index: 1, start: 0, end: 1 }]);
    }

    #[test]
    fn centered_windows_near_end_falls_back() {
        let spec = spec_with_lengths(&[8, 16]);
        let windows = centered_windows(28, 30, &spec);
        assert_eq!(windows, vec![Window { index: 1, start: 0, end: 30 }]);
    }

    #[test]
    fn progress_mapping_clamps() {
        assert_eq!(progress_to_window(0, 30, 4), 1);
        assert_eq!(progress_to_window(29, 30, 4), 4);
        assert_eq!(progress_to_window(59, 30, 4), 4);
    }

    #[test]
    fn spec_validation() {
        assert!(WindowSpec::new(0, 2, vec![8]).is_err());
        assert!(WindowSpec::new(4, 2, vec![]).is_err());
        assert!(WindowSpec::new(4, 2, vec![1, 8]).is_err());
        assert!(WindowSpec::new(4, 2, vec![8, 8]).is_err());
        assert!(WindowSpec::new(4, 0, vec![2]).is_ok());
    }

    proptest! {
        #[test]
        fn segment_covers_every_frame(f in 1usize..=500, w in 1usize..=16) {
            let windows = segment(f, w).unwrap();
            prop_assert_eq!(windows.len(), w);
            prop_assert_eq!(windows[0].start, 0);
            prop_assert_eq!(windows[w - 1].end, f);
            let mut covered = vec![false; f];
            for win in &windows {
                prop_assert!(win.end <= f && win.start < win.end);
                for t in win.start..win.end {
                    covered[t] = true;
                }
            }
            prop_assert!(covered.iter().all(|&c| c));
            // monotone starts, index order = temporal order
            for pair in windows.windows(2) {
                prop_assert!(pair[0].start <= pair[1].start);
                prop_assert_eq!(pair[0].index + 1, pair[1].index);
            }
            // consecutive windows overlap when there are enough frames
            if w > 1 && f >= w {
                for pair in windows.windows(2) {
                    prop_assert!(pair[1].start < pair[0].end);
                }
            }
            // determinism
            prop_assert_eq!(segment(f, w).unwrap(), windows);
        }

        #[test]
        fn centered_windows_fit_available_prefix(
            t_avail in 1usize..200,
            t_off in 0usize..200,
            l1 in 2usize..10,
            l2 in 10usize..40,
        ) {
            let t = t_off % t_avail;
            let spec = WindowSpec::new(4, 2, vec![l1, l2]).unwrap();
            let windows = centered_windows(t, t_avail, &spec);
            prop_assert!(!windows.is_empty());
            for w in &windows {
                prop_assert!(w.end <= t_avail);
                prop_assert!(w.contains(t) || windows.len() == 1);
            }
        }

        #[test]
        fn progress_stays_in_range(t in 0usize..1000, f_ref in 1usize..200, w in 1usize..20) {
            let idx = progress_to_window(t, f_ref, w);
            prop_assert!((1..=w).contains(&idx));
            if t + 1 >= f_ref {
                prop_assert_eq!(idx, w);
            }
        }
    }
}

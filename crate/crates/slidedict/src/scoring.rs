//! Score fusion, cumulative decision rule, and the offline and streaming
//! classifiers built on top of the dictionary and difference scores.

use crate::data::{ActionSequence, JointFrame};
use crate::do3dj::{baseline_from_frames, class_diff_score, diff_probabilities, Baseline, DiffScore};
use crate::error::{Error, Result};
use crate::features::covariance_descriptor;
use crate::model::Model;
use crate::sparse::{
    class_reconstruction_error, dict_probabilities, sliding_view, solve_lasso, ProbabilityVector,
};
use crate::windows::{centered_windows, progress_to_window, segment, WindowSpec};

/// Convex fusion weights; normalized so mu1 + mu2 == 1 exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionWeights {
    mu1: f64,
    mu2: f64,
}

impl FusionWeights {
    /// mu2 is derived as 1 - mu1.
    pub fn new(mu1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu1) {
            return Err(Error::Parameter(format!("mu1 must be in [0, 1], got {mu1}")));
        }
        Ok(Self { mu1, mu2: 1.0 - mu1 })
    }

    /// Normalizes an arbitrary nonnegative pair.
    pub fn from_pair(mu1: f64, mu2: f64) -> Result<Self> {
        if mu1 < 0.0 || mu2 < 0.0 || !(mu1 + mu2).is_finite() || mu1 + mu2 == 0.0 {
            return Err(Error::Parameter(format!(
                "weights must be nonnegative with a positive sum, got ({mu1}, {mu2})"
            )));
        }
        Self::new(mu1 / (mu1 + mu2))
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }
}

impl Default for FusionWeights {
    fn default() -> Self {
        Self { mu1: 0.5, mu2: 0.5 }
    }
}

/// tau(c) = mu1 * p_dict(c) + mu2 * p_diff(c).
pub fn fuse(
    p_dict: &ProbabilityVector,
    p_diff: &ProbabilityVector,
    weights: FusionWeights,
) -> Result<Vec<f64>> {
    if p_dict.len() != p_diff.len() {
        return Err(Error::Dimension(format!(
            "probability vectors over {} and {} classes",
            p_dict.len(),
            p_diff.len()
        )));
    }
    Ok(p_dict
        .values()
        .iter()
        .zip(p_diff.values())
        .map(|(a, b)| weights.mu1 * a + weights.mu2 * b)
        .collect())
}

/// Per-step fused scores and their running per-class sums.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTrace {
    class_count: usize,
    steps: Vec<Vec<f64>>,
    cumulative: Vec<f64>,
}

impl ScoreTrace {
    pub fn new(class_count: usize) -> Self {
        Self { class_count, steps: Vec::new(), cumulative: vec![0.0; class_count] }
    }

    /// Appends one fused step after checking it is a probability vector.
    pub fn push_step(&mut self, tau: Vec<f64>) -> Result<()> {
        if tau.len() != self.class_count {
            return Err(Error::Dimension(format!(
                "step over {} classes, trace over {}",
                tau.len(),
                self.class_count
            )));
        }
        let sum: f64 = tau.iter().sum();
        if tau.iter().any(|&v| !(0.0..=1.0 + 1e-9).contains(&v)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Data(format!("fused step is not a probability vector: {tau:?}")));
        }
        for (acc, &v) in self.cumulative.iter_mut().zip(&tau) {
            *acc += v;
        }
        self.steps.push(tau);
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn steps_seen(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[Vec<f64>] {
        &self.steps
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Prefix of the trace with only the first `steps` steps.
    pub fn truncated(&self, steps: usize) -> ScoreTrace {
        let mut out = ScoreTrace::new(self.class_count);
        for step in self.steps.iter().take(steps) {
            out.push_step(step.clone()).expect("existing steps revalidate");
        }
        out
    }
}

/// Numerically safe softmax.
fn softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// Predicted class and per-class confidence for an accumulated trace.
/// Accumulation runs in the log domain, so the argmax over the summed steps
/// equals the argmax over the product of exponentials. Ties break toward
/// the lowest class index.
pub fn decide(trace: &ScoreTrace) -> Result<(usize, Vec<f64>)> {
    if trace.steps_seen() == 0 {
        return Err(Error::Empty("score trace".into()));
    }
    let cumulative = trace.cumulative();
    let mut best = 0;
    for (c, &v) in cumulative.iter().enumerate() {
        if v > cumulative[best] {
            best = c;
        }
    }
    Ok((best, softmax(cumulative)))
}

/// Classification-time knobs not fixed by the trained model.
#[derive(Debug, Clone)]
pub struct EvalParams {
    pub tol: f64,
    pub max_iter: usize,
    pub eps: f64,
    pub l_pool: usize,
    pub weights: FusionWeights,
    pub online_lengths: Vec<usize>,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 1000,
            eps: 1e-12,
            l_pool: 3,
            weights: FusionWeights::default(),
            online_lengths: vec![8, 16, 24, 32],
        }
    }
}

/// Both per-window probability vectors for a span of test frames mapped to
/// dictionary window `w`.
fn window_probability_pair(
    model: &Model,
    params: &EvalParams,
    spec: &WindowSpec,
    test_frames: &[&JointFrame],
    w: usize,
    baselines: &[Baseline],
) -> Result<(ProbabilityVector, ProbabilityVector)> {
    let descriptor = covariance_descriptor(test_frames, w)?;
    let view = sliding_view(&model.dictionary, w, model.half_width)?;
    let code = solve_lasso(&descriptor, &view, model.lambda, params.max_iter, params.tol)?;
    let errors = class_reconstruction_error(&descriptor, &view, &code)?;
    let p_dict = dict_probabilities(&errors, params.eps)?;

    let mut scores = Vec::with_capacity(model.class_count());
    for members in &model.train_by_class {
        let seqs: Vec<&ActionSequence> = members.iter().map(|&i| &model.train[i]).collect();
        let betas: Vec<&Baseline> = members.iter().map(|&i| &baselines[i]).collect();
        scores.push(class_diff_score(
            test_frames,
            &seqs,
            w,
            spec,
            &betas,
            params.l_pool,
        )?);
    }
    let diff = DiffScore { values: scores, window: w, pool_size: params.l_pool };
    let p_diff = diff_probabilities(&diff, params.eps)?;
    Ok((p_dict, p_diff))
}

fn baselines_for(model: &Model, first_frame: &JointFrame) -> Result<Vec<Baseline>> {
    model
        .train
        .iter()
        .map(|k| baseline_from_frames(first_frame, &k.frames[0]))
        .collect()
}

/// Full-sequence classification: one fused step per window, then the
/// cumulative decision.
pub fn classify_offline(
    test: &ActionSequence,
    model: &Model,
    params: &EvalParams,
) -> Result<(usize, ScoreTrace)> {
    if test.joint_count() != model.joints {
        return Err(Error::Dimension(format!(
            "test sequence has {} joints, model expects {}",
            test.joint_count(),
            model.joints
        )));
    }
    let spec = model.window_spec(params.online_lengths.clone())?;
    let baselines = baselines_for(model, &test.frames[0])?;
    let windows = segment(test.frame_count(), spec.count)?;
    let mut trace = ScoreTrace::new(model.class_count());
    for win in &windows {
        let frames: Vec<&JointFrame> = test.frames[win.start..win.end].iter().collect();
        let (p_dict, p_diff) =
            window_probability_pair(model, params, &spec, &frames, win.index, &baselines)?;
        trace.push_step(fuse(&p_dict, &p_diff, params.weights)?)?;
    }
    let (class, _) = decide(&trace)?;
    Ok((class, trace))
}

/// Per-class maximum over several probability vectors, renormalized to sum 1.
fn max_renormalized(vectors: &[ProbabilityVector]) -> Result<ProbabilityVector> {
    if vectors.is_empty() {
        return Err(Error::Empty("probability vectors".into()));
    }
    let classes = vectors[0].len();
    let mut maxes = vec![0.0f64; classes];
    for v in vectors {
        if v.len() != classes {
            return Err(Error::Dimension("mixed class counts".into()));
        }
        for (m, &p) in maxes.iter_mut().zip(v.values()) {
            *m = m.max(p);
        }
    }
    let total: f64 = maxes.iter().sum();
    ProbabilityVector::new(maxes.iter().map(|&m| m / total).collect())
}

/// Streaming classifier: frames arrive in order and each frame contributes
/// one fused step once every centered window that can ever enclose it has
/// fully arrived. A frame's step is computed at a canonical availability
/// horizon, so the trace after T frames does not depend on delivery
/// batching. `finish` flushes frames still waiting on future context using
/// the final stream length, then decides.
pub struct OnlineClassifier<'m> {
    model: &'m Model,
    params: EvalParams,
    spec: WindowSpec,
    frames: Vec<JointFrame>,
    baselines: Vec<Baseline>,
    emitted: usize,
    finished: bool,
    trace: ScoreTrace,
}

impl<'m> OnlineClassifier<'m> {
    pub fn new(model: &'m Model, params: EvalParams) -> Result<Self> {
        let spec = model.window_spec(params.online_lengths.clone())?;
        Ok(Self {
            model,
            params,
            spec,
            frames: Vec::new(),
            baselines: Vec::new(),
            emitted: 0,
            finished: false,
            trace: ScoreTrace::new(model.class_count()),
        })
    }

    /// Earliest frame count at which frame `t`'s full window set is known:
    /// the farthest end among candidate windows starting at or after frame 0,
    /// or t+1 when no candidate can ever fit.
    fn ready_at(&self, t: usize) -> usize {
        let mut horizon = t + 1;
        for &len in &self.spec.online_lengths {
            let half_lo = len / 2;
            let half_hi = len - half_lo;
            if t >= half_lo {
                horizon = horizon.max(t + half_hi);
            }
        }
        horizon
    }

    fn emit(&mut self, t: usize, t_eff: usize) -> Result<()> {
        let w = progress_to_window(t, self.model.f_ref, self.spec.count);
        let windows = centered_windows(t, t_eff, &self.spec);
        let mut dict_vecs = Vec::with_capacity(windows.len());
        let mut diff_vecs = Vec::with_capacity(windows.len());
        for win in &windows {
            let frames: Vec<&JointFrame> = self.frames[win.start..win.end].iter().collect();
            let (p_dict, p_diff) = window_probability_pair(
                self.model,
                &self.params,
                &self.spec,
                &frames,
                w,
                &self.baselines,
            )?;
            dict_vecs.push(p_dict);
            diff_vecs.push(p_diff);
        }
        let p_dict = max_renormalized(&dict_vecs)?;
        let p_diff = max_renormalized(&diff_vecs)?;
        self.trace.push_step(fuse(&p_dict, &p_diff, self.params.weights)?)?;
        Ok(())
    }

    fn advance(&mut self) -> Result<usize> {
        let available = self.frames.len();
        let mut emitted_now = 0;
        while self.emitted < available {
            let t = self.emitted;
            let horizon = self.ready_at(t);
            if horizon > available {
                break;
            }
            self.emit(t, horizon)?;
            self.emitted += 1;
            emitted_now += 1;
        }
        Ok(emitted_now)
    }

    /// Appends the next frame; returns how many trace steps became final.
    pub fn push_frame(&mut self, frame: JointFrame) -> Result<usize> {
        if self.finished {
            return Err(Error::Data("stream already finished".into()));
        }
        if frame.joint_count() != self.model.joints {
            return Err(Error::Dimension(format!(
                "stream frame has {} joints, model expects {}",
                frame.joint_count(),
                self.model.joints
            )));
        }
        if !frame.is_finite() {
            return Err(Error::NonFinite(format!("stream frame {}", self.frames.len())));
        }
        if self.frames.is_empty() {
            self.baselines = baselines_for(self.model, &frame)?;
        }
        self.frames.push(frame);
        self.advance()
    }

    /// Appends a frame carrying its own index; the index must be the next
    /// expected one.
    pub fn push_frame_at(&mut self, t: usize, frame: JointFrame) -> Result<usize> {
        if t != self.frames.len() {
            return Err(Error::OutOfOrderFrame { expected: self.frames.len(), got: t });
        }
        self.push_frame(frame)
    }

    pub fn push_frames<I: IntoIterator<Item = JointFrame>>(&mut self, frames: I) -> Result<usize> {
        let mut emitted = 0;
        for f in frames {
            emitted += self.push_frame(f)?;
        }
        Ok(emitted)
    }

    pub fn frames_seen(&self) -> usize {
        self.frames.len()
    }

    pub fn trace(&self) -> &ScoreTrace {
        &self.trace
    }

    /// Current prediction, or None before the first step lands.
    pub fn prediction(&self) -> Option<(usize, Vec<f64>)> {
        decide(&self.trace).ok()
    }

    /// End-of-action signal: emits the pending frames against the final
    /// stream length and returns the decision.
    pub fn finish(&mut self) -> Result<(usize, Vec<f64>)> {
        if self.frames.is_empty() {
            return Err(Error::Empty("stream with no frames".into()));
        }
        if !self.finished {
            let total = self.frames.len();
            while self.emitted < total {
                let t = self.emitted;
                self.emit(t, total)?;
                self.emitted += 1;
            }
            self.finished = true;
        }
        decide(&self.trace)
    }
}

/// Replays a complete sequence through the streaming classifier.
pub fn classify_online(
    test: &ActionSequence,
    model: &Model,
    params: &EvalParams,
) -> Result<(usize, ScoreTrace)> {
    let mut stream = OnlineClassifier::new(model, params.clone())?;
    for frame in &test.frames {
        stream.push_frame(frame.clone())?;
    }
    let (class, _) = stream.finish()?;
    Ok((class, stream.trace.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn prob(values: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn fusion_fixtures() {
        let w = FusionWeights::default();
        let tau = fuse(&prob(&[0.8, 0.2]), &prob(&[0.6, 0.4]), w).unwrap();
        assert_abs_diff_eq!(tau[0], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(tau[1], 0.3, epsilon = 1e-12);

        let only_dict = FusionWeights::new(1.0).unwrap();
        let tau = fuse(&prob(&[0.8, 0.2]), &prob(&[0.6, 0.4]), only_dict).unwrap();
        assert_eq!(tau, vec![0.8, 0.2]);

        let tau = fuse(&prob(&[0.5, 0.5]), &prob(&[0.5, 0.5]), w).unwrap();
        assert_abs_diff_eq!(tau[0], 0.5, epsilon = 1e-12);

        assert!(fuse(&prob(&[1.0]), &prob(&[0.5, 0.5]), w).is_err());
    }

    #[test]
    fn weights_normalize_exactly() {
        let w = FusionWeights::from_pair(2.0, 6.0).unwrap();
        assert_eq!(w.mu1() + w.mu2(), 1.0);
        assert_abs_diff_eq!(w.mu1(), 0.25, epsilon = 1e-12);
        assert!(FusionWeights::from_pair(-1.0, 2.0).is_err());
        assert!(FusionWeights::from_pair(0.0, 0.0).is_err());
        assert!(FusionWeights::new(1.5).is_err());
        // mu1 + (1 - mu1) lands within half an ulp of 1, so the sum is
        // exactly 1.0 for every admissible mu1
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let w = FusionWeights::new(rng.gen_range(0.0..=1.0)).unwrap();
            assert_eq!(w.mu1() + w.mu2(), 1.0);
        }
    }

    #[test]
    fn trace_accumulates_exactly() {
        let mut trace = ScoreTrace::new(2);
        trace.push_step(vec![0.6, 0.4]).unwrap();
        trace.push_step(vec![0.3, 0.7]).unwrap();
        let manual = [0.6f64 + 0.3, 0.4f64 + 0.7];
        assert_eq!(trace.cumulative()[0].to_bits(), manual[0].to_bits());
        assert_eq!(trace.cumulative()[1].to_bits(), manual[1].to_bits());
        assert!(trace.push_step(vec![0.9, 0.3]).is_err());
        assert!(trace.push_step(vec![1.0]).is_err());
    }

    #[test]
    fn decide_fixtures() {
        let mut trace = ScoreTrace::new(2);
        trace.push_step(vec![0.7, 0.3]).unwrap();
        assert_eq!(decide(&trace).unwrap().0, 0);

        let mut trace = ScoreTrace::new(2);
        trace.push_step(vec![0.6, 0.4]).unwrap();
        trace.push_step(vec![0.3, 0.7]).unwrap();
        assert_eq!(decide(&trace).unwrap().0, 1);

        let empty = ScoreTrace::new(2);
        assert!(decide(&empty).is_err());

        // tie breaks to the lowest class index
        let mut tie = ScoreTrace::new(2);
        tie.push_step(vec![0.5, 0.5]).unwrap();
        assert_eq!(decide(&tie).unwrap().0, 0);
    }

    #[test]
    fn log_domain_decision_matches_product_of_exponentials() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let classes = rng.gen_range(2..=5);
            let steps = rng.gen_range(1..=50);
            let mut trace = ScoreTrace::new(classes);
            for _ in 0..steps {
                let raw: Vec<f64> = (0..classes).map(|_| rng.gen_range(0.01..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                trace.push_step(raw.iter().map(|v| v / sum).collect()).unwrap();
            }
            // direct product of exp(tau) per class
            let mut product = vec![1.0f64; classes];
            for step in trace.steps() {
                for (p, &tau) in product.iter_mut().zip(step) {
                    *p *= tau.exp();
                }
            }
            let mut oracle_best = 0;
            for (c, &p) in product.iter().enumerate() {
                if p > product[oracle_best] {
                    oracle_best = c;
                }
            }
            let (got, confidence) = decide(&trace).unwrap();
            assert_eq!(got, oracle_best);
            assert!(confidence.iter().all(|v| v.is_finite()));
            assert_abs_diff_eq!(confidence.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn confidence_stays_finite_on_very_long_traces() {
        let mut trace = ScoreTrace::new(3);
        for _ in 0..10_000 {
            trace.push_step(vec![0.6, 0.25, 0.15]).unwrap();
        }
        let (class, confidence) = decide(&trace).unwrap();
        assert_eq!(class, 0);
        assert!(confidence.iter().all(|v| v.is_finite()));
        assert_abs_diff_eq!(confidence.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn max_renormalization_contract() {
        let vectors = vec![prob(&[0.8, 0.2]), prob(&[0.3, 0.7])];
        let m = max_renormalized(&vectors).unwrap();
        assert_abs_diff_eq!(m.values()[0], 0.8 / 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.values()[1], 0.7 / 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.values().iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        let single = max_renormalized(&[prob(&[0.9, 0.1])]).unwrap();
        assert_eq!(single.values(), &[0.9, 0.1]);
    }

    // --- end-to-end fixtures on a tiny deterministic dataset ---

    fn synthetic_sequence(class: usize, variant: u64, frames: usize) -> ActionSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 * class as u64 + variant);
        let offset = [
            rng.gen_range(-0.1..0.1),
            rng.gen_range(-0.1..0.1),
            rng.gen_range(-0.1..0.1),
        ];
        let freq = 0.5 + class as f64 * 0.9;
        let amp = 0.4 + class as f64 * 0.2;
        let joints = 4;
        let fs = (0..frames)
            .map(|t| {
                let rows: Vec<[f64; 3]> = (0..joints)
                    .map(|j| {
                        let phase = j as f64 * 0.7 + class as f64 * 1.3;
                        let s = (freq * t as f64 / 6.0 + phase).sin() * amp;
                        [
                            j as f64 * 0.3 + offset[0] + s,
                            offset[1] + s * 0.5,
                            1.0 + offset[2] - s * 0.25,
                        ]
                    })
                    .collect();
                JointFrame::from_rows(&rows).unwrap()
            })
            .collect();
        ActionSequence::new(fs)
            .unwrap()
            .with_meta(&format!("class{class}"), variant as u32 + 1, variant as u32)
    }

    fn tiny_model() -> Model {
        let mut train = Vec::new();
        for class in 0..2 {
            for variant in 0..3 {
                train.push(synthetic_sequence(class, variant, 20 + variant as usize));
            }
        }
        let spec = WindowSpec::new(4, 1, vec![6, 10]).unwrap();
        Model::train(train, &spec, 0.1).unwrap()
    }

    fn tiny_params() -> EvalParams {
        EvalParams { online_lengths: vec![6, 10], ..EvalParams::default() }
    }

    #[test]
    fn training_copy_is_recognized_offline() {
        let model = tiny_model();
        let params = tiny_params();
        for class in 0..2 {
            let test = synthetic_sequence(class, 0, 20);
            let (predicted, trace) = classify_offline(&test, &model, &params).unwrap();
            assert_eq!(predicted, class);
            assert_eq!(trace.steps_seen(), 4);
            for step in trace.steps() {
                let sum: f64 = step.iter().sum();
                assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
            }
            // full-trace decision equals decision on the whole-trace prefix
            let (again, _) = decide(&trace.truncated(trace.steps_seen())).unwrap();
            assert_eq!(again, predicted);
        }
    }

    #[test]
    fn unseen_variants_are_recognized() {
        let model = tiny_model();
        let params = tiny_params();
        let mut correct = 0;
        let mut total = 0;
        for class in 0..2 {
            for variant in 10..14 {
                let test = synthetic_sequence(class, variant, 22);
                let (predicted, _) = classify_offline(&test, &model, &params).unwrap();
                total += 1;
                if predicted == class {
                    correct += 1;
                }
            }
        }
        assert!(correct * 10 >= total * 9, "only {correct}/{total} correct");
    }

    #[test]
    fn online_replay_of_training_copy_recovers_class() {
        let model = tiny_model();
        let params = tiny_params();
        let test = synthetic_sequence(1, 1, 21);
        let (predicted, trace) = classify_online(&test, &model, &params).unwrap();
        assert_eq!(predicted, 1);
        assert_eq!(trace.steps_seen(), test.frame_count());
    }

    #[test]
    fn cumulative_scores_never_decrease() {
        let model = tiny_model();
        let params = tiny_params();
        let test = synthetic_sequence(0, 7, 25);
        let mut stream = OnlineClassifier::new(&model, params).unwrap();
        let mut last = vec![0.0; model.class_count()];
        for frame in &test.frames {
            stream.push_frame(frame.clone()).unwrap();
            for (c, &v) in stream.trace().cumulative().iter().enumerate() {
                assert!(v + 1e-12 >= last[c]);
                last[c] = v;
            }
        }
        stream.finish().unwrap();
        for (c, &v) in stream.trace().cumulative().iter().enumerate() {
            assert!(v + 1e-12 >= last[c]);
        }
    }

    #[test]
    fn streaming_is_batch_invariant() {
        let model = tiny_model();
        let params = tiny_params();
        let test = synthetic_sequence(0, 3, 23);

        let mut one_by_one = OnlineClassifier::new(&model, params.clone()).unwrap();
        for frame in &test.frames {
            one_by_one.push_frame(frame.clone()).unwrap();
        }
        let mut batched = OnlineClassifier::new(&model, params.clone()).unwrap();
        batched.push_frames(test.frames.iter().cloned()).unwrap();

        assert_eq!(one_by_one.trace(), batched.trace());

        // prefix: cut the stream at an arbitrary point
        let cut = 11;
        let mut partial = OnlineClassifier::new(&model, params).unwrap();
        partial.push_frames(test.frames[..cut].iter().cloned()).unwrap();
        let prefix_steps = partial.trace().steps_seen();
        for (a, b) in partial.trace().steps().iter().zip(one_by_one.trace().steps()) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert!(prefix_steps <= one_by_one.trace().steps_seen());

        let (c1, _) = one_by_one.finish().unwrap();
        let (c2, _) = batched.finish().unwrap();
        assert_eq!(c1, c2);
        assert_eq!(one_by_one.trace(), batched.trace());
    }

    #[test]
    fn out_of_order_frames_are_rejected() {
        let model = tiny_model();
        let mut stream = OnlineClassifier::new(&model, tiny_params()).unwrap();
        let test = synthetic_sequence(0, 0, 20);
        stream.push_frame_at(0, test.frames[0].clone()).unwrap();
        let err = stream.push_frame_at(2, test.frames[1].clone()).unwrap_err();
        assert!(matches!(err, Error::OutOfOrderFrame { expected: 1, got: 2 }));
    }

    #[test]
    fn online_steps_are_probability_vectors() {
        let model = tiny_model();
        let test = synthetic_sequence(1, 9, 24);
        let (_, trace) = classify_online(&test, &model, &tiny_params()).unwrap();
        for step in trace.steps() {
            let sum: f64 = step.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
            assert!(step.iter().all(|&v| (0.0..=1.0 + 1e-9).contains(&v)));
        }
    }
}

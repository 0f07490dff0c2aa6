//! Time-stamped dictionary of window descriptors, sliding views over it,
//! an L1-regularized least-squares solver (cyclic coordinate descent with
//! soft thresholding), per-class reconstruction errors and the
//! inverse-error class probabilities.

use ndarray::Array2;

use crate::data::{ActionSequence, LabelSet};
use crate::error::{Error, Result};
use crate::features::{covariance_descriptor, CovDescriptor, ZERO_NORM_EPS};
use crate::windows::{segment, sliding_range, WindowSpec};

/// Provenance of one dictionary column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtomMeta {
    /// Class index into the dictionary's label set.
    pub class: usize,
    /// 1-based window index the atom was computed from.
    pub window: usize,
    /// Index of the training example within its class.
    pub example: usize,
}

/// Matrix of unit-norm (or zero) descriptor atoms, one column per
/// (class, window, example), grouped by window index ascending.
#[derive(Debug, Clone)]
pub struct Dictionary {
    atoms: Array2<f64>,
    meta: Vec<AtomMeta>,
    labels: LabelSet,
    window_count: usize,
}

impl Dictionary {
    pub fn new(
        atoms: Array2<f64>,
        meta: Vec<AtomMeta>,
        labels: LabelSet,
        window_count: usize,
    ) -> Result<Self> {
        if atoms.ncols() != meta.len() {
            return Err(Error::Dimension(format!(
                "{} atoms but {} metadata entries",
                atoms.ncols(),
                meta.len()
            )));
        }
        let total: usize = labels.counts().iter().sum();
        if meta.len() != window_count * total {
            return Err(Error::Dimension(format!(
                "expected {} atoms (W * sum K_c), got {}",
                window_count * total,
                meta.len()
            )));
        }
        Ok(Self { atoms, meta, labels, window_count })
    }

    /// Descriptor dimension d.
    pub fn dim(&self) -> usize {
        self.atoms.nrows()
    }

    /// Total atom count M.
    pub fn atom_count(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn window_count(&self) -> usize {
        self.window_count
    }

    pub fn class_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn meta(&self) -> &[AtomMeta] {
        &self.meta
    }

    pub fn atoms(&self) -> &Array2<f64> {
        &self.atoms
    }

    pub fn atom(&self, column: usize) -> Vec<f64> {
        self.atoms.column(column).to_vec()
    }
}

/// Builds the dictionary from labeled training sequences: each sequence is
/// segmented into `spec.count` windows, each window described by its
/// covariance descriptor and stored with (class, window, example) metadata.
/// Column order is window-major, then class, then example.
pub fn build_dictionary(train: &[ActionSequence], spec: &WindowSpec) -> Result<Dictionary> {
    if train.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    let labels = LabelSet::from_sequences(train)?;
    let joints = train[0].joint_count();
    for seq in train {
        if seq.joint_count() != joints {
            return Err(Error::Dimension(format!(
                "training sequences mix {} and {} joints",
                joints,
                seq.joint_count()
            )));
        }
    }

    // per class, the indices of its training sequences in input order
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); labels.len()];
    for (i, seq) in train.iter().enumerate() {
        let c = labels.index_of(seq.label.as_ref().unwrap()).unwrap();
        by_class[c].push(i);
    }

    // descriptors per sequence, one per window
    let mut per_seq: Vec<Vec<CovDescriptor>> = Vec::with_capacity(train.len());
    for seq in train {
        let windows = segment(seq.frame_count(), spec.count)?;
        let mut descs = Vec::with_capacity(windows.len());
        for win in &windows {
            let refs: Vec<&_> = seq.frames[win.start..win.end].iter().collect();
            descs.push(covariance_descriptor(&refs, win.index)?);
        }
        per_seq.push(descs);
    }

    let dim = per_seq[0][0].dim();
    let total: usize = labels.counts().iter().sum();
    let atom_count = spec.count * total;
    let mut atoms = Array2::<f64>::zeros((dim, atom_count));
    let mut meta = Vec::with_capacity(atom_count);
    let mut col = 0;
    for w in 1..=spec.count {
        for (c, members) in by_class.iter().enumerate() {
            for (example, &seq_idx) in members.iter().enumerate() {
                let desc = &per_seq[seq_idx][w - 1];
                for (row, &v) in desc.values.iter().enumerate() {
                    atoms[(row, col)] = v;
                }
                meta.push(AtomMeta { class: c, window: w, example });
                col += 1;
            }
        }
    }
    Dictionary::new(atoms, meta, labels, spec.count)
}

/// Column subset of the dictionary whose window index lies within the
/// sliding range of the query window.
#[derive(Debug)]
pub struct SlidingView<'a> {
    dict: &'a Dictionary,
    center: usize,
    columns: Vec<usize>,
}

impl<'a> SlidingView<'a> {
    pub fn center(&self) -> usize {
        self.center
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Indices into the parent dictionary, in dictionary order.
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn dict(&self) -> &'a Dictionary {
        self.dict
    }

    pub fn meta(&self, view_col: usize) -> AtomMeta {
        self.dict.meta[self.columns[view_col]]
    }

    /// Materializes the view's columns as contiguous vectors.
    pub fn column_vectors(&self) -> Vec<Vec<f64>> {
        self.columns.iter().map(|&c| self.dict.atom(c)).collect()
    }
}

/// Selects the sliding view centered on window `w` with half-width `n`.
pub fn sliding_view(dict: &Dictionary, w: usize, n: usize) -> Result<SlidingView<'_>> {
    if w < 1 || w > dict.window_count() {
        return Err(Error::Parameter(format!(
            "window index {w} outside [1, {}]",
            dict.window_count()
        )));
    }
    let range = sliding_range(w, n, dict.window_count());
    let columns: Vec<usize> = dict
        .meta
        .iter()
        .enumerate()
        .filter(|(_, m)| range.contains(&m.window))
        .map(|(i, _)| i)
        .collect();
    Ok(SlidingView { dict, center: w, columns })
}

/// Solution of the L1 problem: coefficients, the weight used, and the
/// achieved objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    pub alpha: Vec<f64>,
    pub lambda: f64,
    pub objective: f64,
}

fn soft_threshold(x: f64, kappa: f64) -> f64 {
    if x > kappa {
        x - kappa
    } else if x < -kappa {
        x + kappa
    } else {
        0.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest breach of the stationarity conditions for
/// `min ||f - A alpha||^2 + lambda ||alpha||_1`: with g_j = 2 a_j^T(A alpha - f),
/// a zero coefficient needs |g_j| <= lambda and a nonzero one needs
/// g_j = -lambda sign(alpha_j).
pub fn kkt_violation_dense(columns: &[Vec<f64>], f: &[f64], alpha: &[f64], lambda: f64) -> f64 {
    let mut residual = f.to_vec();
    for (j, col) in columns.iter().enumerate() {
        if alpha[j] != 0.0 {
            for (r, &v) in residual.iter_mut().zip(col) {
                *r -= v * alpha[j];
            }
        }
    }
    let mut worst = 0.0f64;
    for (j, col) in columns.iter().enumerate() {
        let g = -2.0 * dot(col, &residual);
        let v = if alpha[j] == 0.0 {
            (g.abs() - lambda).max(0.0)
        } else {
            (g + lambda * alpha[j].signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Cyclic coordinate descent from alpha = 0 for
/// `min ||f - A alpha||^2 + lambda ||alpha||_1`. Each coordinate is set to
/// `soft(a_j^T(f - A alpha + a_j alpha_j), lambda/2) / ||a_j||^2`; zero-norm
/// columns keep a zero coefficient. Full sweeps alternate with sweeps over
/// the current support; the solve stops once a full sweep moves no
/// coordinate by `tol` or more and the stationarity residual is inside
/// [`KKT_TOLERANCE`], or after `max_iter` sweeps in total.
pub fn solve_lasso_dense(
    columns: &[Vec<f64>],
    f: &[f64],
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> Result<SparseCode> {
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("query descriptor".into()));
    }
    for (j, col) in columns.iter().enumerate() {
        if col.len() != f.len() {
            return Err(Error::Dimension(format!(
                "column {j} has dimension {}, query has {}",
                col.len(),
                f.len()
            )));
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("dictionary column {j}")));
        }
    }

    let m = columns.len();
    let col_sq: Vec<f64> = columns.iter().map(|c| dot(c, c)).collect();
    let mut alpha = vec![0.0f64; m];
    let mut residual = f.to_vec();
    let kappa = lambda / 2.0;
    let kkt_target = KKT_TOLERANCE * 0.9;

    let sweep = |indices: &[usize], alpha: &mut [f64], residual: &mut [f64]| -> f64 {
        let mut max_change = 0.0f64;
        for &j in indices {
            if col_sq[j] < ZERO_NORM_EPS {
                continue;
            }
            let col = &columns[j];
            let rho = dot(col, residual) + col_sq[j] * alpha[j];
            let new = soft_threshold(rho, kappa) / col_sq[j];
            let change = new - alpha[j];
            if change != 0.0 {
                for (r, &v) in residual.iter_mut().zip(col) {
                    *r -= v * change;
                }
                alpha[j] = new;
                max_change = max_change.max(change.abs());
            }
        }
        max_change
    };

    let all: Vec<usize> = (0..m).collect();
    let mut sweeps_used = 0;
    while sweeps_used < max_iter {
        let full_change = sweep(&all, &mut alpha, &mut residual);
        sweeps_used += 1;
        if full_change < tol {
            let (worst, j1, j2) = worst_violations(columns, &col_sq, &alpha, &residual, lambda);
            if worst <= kkt_target {
                break;
            }
            match (j1, j2) {
                (Some(j1), Some(j2)) => {
                    refine_pair(columns, &col_sq, &mut alpha, &mut residual, lambda, j1, j2);
                    sweeps_used += 1;
                    continue;
                }
                // a lone usable column satisfies its condition exactly
                // after its own update, so there is nothing left to move
                _ => break,
            }
        }
        // polish the support before scanning every column again, bounded so
        // a zigzagging pair cannot eat the whole sweep budget
        let active: Vec<usize> = (0..m).filter(|&j| alpha[j] != 0.0).collect();
        if active.len() < m {
            for _ in 0..8 {
                if sweeps_used >= max_iter {
                    break;
                }
                let change = sweep(&active, &mut alpha, &mut residual);
                sweeps_used += 1;
                if change < tol {
                    break;
                }
            }
        }
        // highly correlated column pairs make single-coordinate descent
        // zigzag; jointly minimizing the two worst coordinates in closed
        // form short-circuits that
        if sweeps_used < max_iter {
            let (worst, j1, j2) = worst_violations(columns, &col_sq, &alpha, &residual, lambda);
            if worst <= kkt_target {
                break;
            }
            if let (Some(j1), Some(j2)) = (j1, j2) {
                refine_pair(columns, &col_sq, &mut alpha, &mut residual, lambda, j1, j2);
                sweeps_used += 1;
            }
        }
    }

    let objective = dot(&residual, &residual) + lambda * alpha.iter().map(|a| a.abs()).sum::<f64>();
    Ok(SparseCode { alpha, lambda, objective })
}

/// Largest and second-largest stationarity violations over usable columns.
fn worst_violations(
    columns: &[Vec<f64>],
    col_sq: &[f64],
    alpha: &[f64],
    residual: &[f64],
    lambda: f64,
) -> (f64, Option<usize>, Option<usize>) {
    let mut worst = 0.0f64;
    let mut first: Option<usize> = None;
    let mut second: Option<usize> = None;
    let mut first_v = -1.0f64;
    let mut second_v = -1.0f64;
    for (j, col) in columns.iter().enumerate() {
        if col_sq[j] < ZERO_NORM_EPS {
            continue;
        }
        let g = -2.0 * dot(col, residual);
        let v = if alpha[j] == 0.0 {
            (g.abs() - lambda).max(0.0)
        } else {
            (g + lambda * alpha[j].signum()).abs()
        };
        worst = worst.max(v);
        if v > first_v {
            second = first;
            second_v = first_v;
            first = Some(j);
            first_v = v;
        } else if v > second_v {
            second = Some(j);
            second_v = v;
        }
    }
    (worst, first, second)
}

/// Exact minimization of the objective over coordinates (j1, j2) with the
/// rest held fixed: candidates are the zero vector, the two one-coordinate
/// soft-threshold solutions, and the sign-consistent stationary points of
/// the 2x2 system. Never increases the objective.
fn refine_pair(
    columns: &[Vec<f64>],
    col_sq: &[f64],
    alpha: &mut [f64],
    residual: &mut [f64],
    lambda: f64,
    j1: usize,
    j2: usize,
) {
    let d1 = &columns[j1];
    let d2 = &columns[j2];
    // residual with the pair's contribution removed
    let r0: Vec<f64> = residual
        .iter()
        .zip(d1.iter().zip(d2))
        .map(|(r, (a, b))| r + a * alpha[j1] + b * alpha[j2])
        .collect();
    let g11 = col_sq[j1];
    let g22 = col_sq[j2];
    let g12 = dot(d1, d2);
    let b1 = dot(d1, &r0);
    let b2 = dot(d2, &r0);
    // objective over the pair, dropping the constant ||r0||^2
    let pair_obj = |a1: f64, a2: f64| -> f64 {
        g11 * a1 * a1 + 2.0 * g12 * a1 * a2 + g22 * a2 * a2 - 2.0 * (b1 * a1 + b2 * a2)
            + lambda * (a1.abs() + a2.abs())
    };
    // keeping the incoming point in the candidate set makes the move
    // non-increasing even when the 2x2 system is singular
    let mut best = (alpha[j1], alpha[j2]);
    let mut best_obj = pair_obj(alpha[j1], alpha[j2]);
    let consider = |a1: f64, a2: f64, best: &mut (f64, f64), best_obj: &mut f64| {
        if a1.is_finite() && a2.is_finite() {
            let obj = pair_obj(a1, a2);
            if obj < *best_obj {
                *best_obj = obj;
                *best = (a1, a2);
            }
        }
    };
    consider(0.0, 0.0, &mut best, &mut best_obj);
    consider(soft_threshold(b1, lambda / 2.0) / g11, 0.0, &mut best, &mut best_obj);
    consider(0.0, soft_threshold(b2, lambda / 2.0) / g22, &mut best, &mut best_obj);
    let det = g11 * g22 - g12 * g12;
    if det.abs() > 0.0 {
        for s1 in [-1.0, 1.0] {
            for s2 in [-1.0, 1.0] {
                let r1 = b1 - lambda * s1 / 2.0;
                let r2 = b2 - lambda * s2 / 2.0;
                let a1 = (g22 * r1 - g12 * r2) / det;
                let a2 = (g11 * r2 - g12 * r1) / det;
                if a1 * s1 > 0.0 && a2 * s2 > 0.0 {
                    consider(a1, a2, &mut best, &mut best_obj);
                }
            }
        }
    }
    let (new1, new2) = best;
    for ((r, r0v), (a, b)) in residual.iter_mut().zip(&r0).zip(d1.iter().zip(d2)) {
        *r = r0v - a * new1 - b * new2;
    }
    alpha[j1] = new1;
    alpha[j2] = new2;
}

/// Stationarity tolerance every returned [`SparseCode`] is held to.
pub const KKT_TOLERANCE: f64 = 1e-6;

/// Sparse-codes a window descriptor over a sliding view.
pub fn solve_lasso(
    f: &CovDescriptor,
    view: &SlidingView<'_>,
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> Result<SparseCode> {
    if f.dim() != view.dict().dim() {
        return Err(Error::Dimension(format!(
            "descriptor dimension {} does not match dictionary {}",
            f.dim(),
            view.dict().dim()
        )));
    }
    let columns = view.column_vectors();
    solve_lasso_dense(&columns, &f.values, lambda, max_iter, tol)
}

/// Per-class squared reconstruction errors for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassErrors {
    pub values: Vec<f64>,
    pub window: usize,
}

/// R_c = ||A_c alpha_c - f||^2 using only the view columns of class c.
/// A class with no columns in the view scores ||f||^2.
pub fn class_reconstruction_error(
    f: &CovDescriptor,
    view: &SlidingView<'_>,
    code: &SparseCode,
) -> Result<ClassErrors> {
    if code.alpha.len() != view.len() {
        return Err(Error::Dimension(format!(
            "code has {} coefficients, view has {} columns",
            code.alpha.len(),
            view.len()
        )));
    }
    let classes = view.dict().class_count();
    let dim = view.dict().dim();
    let mut recon = vec![vec![0.0f64; dim]; classes];
    for (vc, &col_idx) in view.columns().iter().enumerate() {
        let a = code.alpha[vc];
        if a == 0.0 {
            continue;
        }
        let class = view.dict().meta[col_idx].class;
        let col = view.dict().atoms().column(col_idx);
        for (acc, &v) in recon[class].iter_mut().zip(col.iter()) {
            *acc += a * v;
        }
    }
    let values = recon
        .iter()
        .map(|r| {
            r.iter()
                .zip(&f.values)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .collect();
    Ok(ClassErrors { values, window: f.source_window })
}

/// Probability vector over classes: entries in [0, 1] summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    p: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::Empty("probability vector".into()));
        }
        let sum: f64 = p.iter().sum();
        if p.iter().any(|&v| !(0.0..=1.0 + 1e-9).contains(&v)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Data(format!(
                "not a probability vector: sum {sum}, values {p:?}"
            )));
        }
        Ok(Self { p })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.p.iter().enumerate() {
            if v > self.p[best] {
                best = i;
            }
        }
        best
    }
}

/// Shared inverse normalization: p_c = (1/max(v_c, eps)) / sum_k (1/max(v_k, eps)).
pub fn inverse_probabilities(values: &[f64], eps: f64) -> Result<ProbabilityVector> {
    if values.is_empty() {
        return Err(Error::Empty("score vector".into()));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Data(format!("scores must be finite and >= 0: {values:?}")));
    }
    let inv: Vec<f64> = values.iter().map(|&v| 1.0 / v.max(eps)).collect();
    let total: f64 = inv.iter().sum();
    ProbabilityVector::new(inv.iter().map(|&v| v / total).collect())
}

/// Class probabilities from reconstruction errors: lower error, higher
/// probability. `eps` floors the errors before inversion.
pub fn dict_probabilities(errors: &ClassErrors, eps: f64) -> Result<ProbabilityVector> {
    inverse_probabilities(&errors.values, eps)
}

//! Trained model: the atom dictionary plus the raw training sequences the
//! difference score needs, with a versioned binary container for both.
//!
//! Container layout (integers and floats little-endian):
//!
//! ```text
//! u8   version (1)
//! [u8; 4] magic "SLDM"
//! u32  joints J
//! u32  descriptor dimension d
//! u32  atom count M
//! u32  window count W
//! u32  sliding half-width N
//! u32  class count C
//! f64  lambda
//! C x  { u16 name length, name bytes (utf-8), u32 training count }
//! d*M  f64 atom matrix, column-major
//! M x  { u32 class, u32 window, u32 example }
//! u32  training sequence count
//! per sequence: { u32 label index, u32 subject, u32 trial, u32 frames F,
//!                 F*J*3 f64 coordinates, row-major per frame }
//! ```

use std::path::Path;

use ndarray::Array2;

use crate::data::{validate_sequence, ActionSequence, JointFrame, LabelSet};
use crate::error::{Error, Result};
use crate::sparse::{build_dictionary, AtomMeta, Dictionary};
use crate::windows::WindowSpec;

const MAGIC: [u8; 4] = *b"SLDM";
const VERSION: u8 = 1;

/// Everything classification needs: dictionary, training sequences grouped
/// by class, and the solve parameters fixed at training time.
#[derive(Debug, Clone)]
pub struct Model {
    pub dictionary: Dictionary,
    pub train: Vec<ActionSequence>,
    /// Indices into `train`, one list per class, in dictionary class order.
    pub train_by_class: Vec<Vec<usize>>,
    pub lambda: f64,
    pub half_width: usize,
    pub joints: usize,
    /// Reference stream length: lower median of the training lengths.
    pub f_ref: usize,
}

impl Model {
    /// Builds the dictionary over the training set and retains the
    /// sequences for the difference score. Requires at least two classes.
    pub fn train(train: Vec<ActionSequence>, spec: &WindowSpec, lambda: f64) -> Result<Self> {
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
        }
        if train.is_empty() {
            return Err(Error::Empty("training set".into()));
        }
        for (i, seq) in train.iter().enumerate() {
            let violations = validate_sequence(seq);
            if !violations.is_empty() {
                return Err(Error::Data(format!(
                    "training sequence {i}: {}",
                    violations
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join("; ")
                )));
            }
        }
        let dictionary = build_dictionary(&train, spec)?;
        if dictionary.class_count() < 2 {
            return Err(Error::Data(
                "classification needs at least 2 classes in the training set".into(),
            ));
        }
        let mut train_by_class = vec![Vec::new(); dictionary.class_count()];
        for (i, seq) in train.iter().enumerate() {
            let c = dictionary
                .labels()
                .index_of(seq.label.as_ref().unwrap())
                .unwrap();
            train_by_class[c].push(i);
        }
        let joints = train[0].joint_count();
        let f_ref = median_length(&train);
        Ok(Self {
            dictionary,
            train,
            train_by_class,
            lambda,
            half_width: spec.half_width,
            joints,
            f_ref,
        })
    }

    pub fn class_count(&self) -> usize {
        self.dictionary.class_count()
    }

    pub fn window_count(&self) -> usize {
        self.dictionary.window_count()
    }

    /// Window spec for classification: count and half-width are the model's,
    /// the online lengths come from the caller's configuration.
    pub fn window_spec(&self, online_lengths: Vec<usize>) -> Result<WindowSpec> {
        WindowSpec::new(self.window_count(), self.half_width, online_lengths)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let dict = &self.dictionary;
        let mut out = Vec::new();
        out.push(VERSION);
        out.extend_from_slice(&MAGIC);
        push_u32(&mut out, self.joints as u32);
        push_u32(&mut out, dict.dim() as u32);
        push_u32(&mut out, dict.atom_count() as u32);
        push_u32(&mut out, dict.window_count() as u32);
        push_u32(&mut out, self.half_width as u32);
        push_u32(&mut out, dict.class_count() as u32);
        push_f64(&mut out, self.lambda);
        for (name, &count) in dict.labels().classes().iter().zip(dict.labels().counts()) {
            let bytes = name.as_bytes();
            out.extend_from_slice(&(bytes.len() as u16).to_le_bytes());
            out.extend_from_slice(bytes);
            push_u32(&mut out, count as u32);
        }
        for col in 0..dict.atom_count() {
            for &v in &dict.atom(col) {
                push_f64(&mut out, v);
            }
        }
        for meta in dict.meta() {
            push_u32(&mut out, meta.class as u32);
            push_u32(&mut out, meta.window as u32);
            push_u32(&mut out, meta.example as u32);
        }
        push_u32(&mut out, self.train.len() as u32);
        for seq in &self.train {
            let label_idx = dict.labels().index_of(seq.label.as_ref().unwrap()).unwrap();
            push_u32(&mut out, label_idx as u32);
            push_u32(&mut out, seq.subject);
            push_u32(&mut out, seq.trial);
            push_u32(&mut out, seq.frame_count() as u32);
            for frame in &seq.frames {
                for &v in frame.coords().iter() {
                    push_f64(&mut out, v);
                }
            }
        }
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = Reader { data, pos: 0 };
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::Model(format!(
                "unsupported container version {version}, expected {VERSION}"
            )));
        }
        if r.bytes(4)? != MAGIC {
            return Err(Error::Model("bad magic".into()));
        }
        let joints = r.u32()? as usize;
        let dim = r.u32()? as usize;
        let atom_count = r.u32()? as usize;
        let window_count = r.u32()? as usize;
        let half_width = r.u32()? as usize;
        let class_count = r.u32()? as usize;
        let lambda = r.f64()?;
        if joints < 2 {
            return Err(Error::Model(format!("joint count {joints} below 2")));
        }
        if dim != joints * (joints + 1) / 2 {
            return Err(Error::Model(format!(
                "descriptor dimension {dim} does not match {joints} joints"
            )));
        }
        if window_count < 1 || class_count < 2 {
            return Err(Error::Model(format!(
                "bad counts: {window_count} windows, {class_count} classes"
            )));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Model(format!("bad lambda {lambda}")));
        }

        let mut classes = Vec::with_capacity(class_count.min(r.remaining()));
        let mut counts = Vec::with_capacity(class_count.min(r.remaining()));
        for _ in 0..class_count {
            let len = r.u16()? as usize;
            let name = String::from_utf8(r.bytes(len)?.to_vec())
                .map_err(|_| Error::Model("class name is not utf-8".into()))?;
            classes.push(name);
            counts.push(r.u32()? as usize);
        }
        let labels = LabelSet::new(classes, counts.clone())
            .map_err(|e| Error::Model(format!("bad label set: {e}")))?;
        let total: usize = counts.iter().sum();
        if atom_count != window_count * total {
            return Err(Error::Model(format!(
                "atom count {atom_count} is not W * sum K_c = {}",
                window_count * total
            )));
        }

        r.expect_remaining((dim as u64) * (atom_count as u64) * 8)?;
        let mut atoms = Array2::<f64>::zeros((dim, atom_count));
        for col in 0..atom_count {
            for row in 0..dim {
                let v = r.f64()?;
                if !v.is_finite() {
                    return Err(Error::Model(format!("non-finite atom value in column {col}")));
                }
                atoms[(row, col)] = v;
            }
        }
        r.expect_remaining((atom_count as u64) * 12)?;
        let mut meta = Vec::with_capacity(atom_count);
        for _ in 0..atom_count {
            let class = r.u32()? as usize;
            let window = r.u32()? as usize;
            let example = r.u32()? as usize;
            if class >= class_count || window < 1 || window > window_count {
                return Err(Error::Model(format!(
                    "atom metadata out of range: class {class}, window {window}"
                )));
            }
            meta.push(AtomMeta { class, window, example });
        }
        let dictionary = Dictionary::new(atoms, meta, labels, window_count)
            .map_err(|e| Error::Model(e.to_string()))?;

        let train_count = r.u32()? as usize;
        if train_count == 0 {
            return Err(Error::Model("container holds no training sequences".into()));
        }
        let mut train = Vec::with_capacity(train_count.min(r.remaining()));
        for s in 0..train_count {
            let label_idx = r.u32()? as usize;
            let subject = r.u32()?;
            let trial = r.u32()?;
            let frame_count = r.u32()? as usize;
            if label_idx >= class_count {
                return Err(Error::Model(format!("sequence {s} has label index {label_idx}")));
            }
            if frame_count == 0 {
                return Err(Error::Model(format!("sequence {s} has zero frames")));
            }
            r.expect_remaining((frame_count as u64) * (joints as u64) * 24)?;
            let mut frames = Vec::with_capacity(frame_count);
            for f in 0..frame_count {
                let mut coords = Array2::<f64>::zeros((joints, 3));
                for j in 0..joints {
                    for a in 0..3 {
                        let v = r.f64()?;
                        if !v.is_finite() {
                            return Err(Error::Model(format!(
                                "non-finite coordinate in sequence {s}, frame {f}"
                            )));
                        }
                        coords[(j, a)] = v;
                    }
                }
                frames.push(JointFrame::new(coords)?);
            }
            let label = dictionary.labels().classes()[label_idx].clone();
            train.push(ActionSequence::new(frames)?.with_meta(&label, subject, trial));
        }
        if r.remaining() != 0 {
            return Err(Error::Model(format!("{} trailing bytes", r.remaining())));
        }

        let mut train_by_class = vec![Vec::new(); class_count];
        for (i, seq) in train.iter().enumerate() {
            let c = dictionary
                .labels()
                .index_of(seq.label.as_ref().unwrap())
                .unwrap();
            train_by_class[c].push(i);
        }
        if train_by_class.iter().any(|v| v.is_empty()) {
            return Err(Error::Model("a class has no training sequences".into()));
        }
        let f_ref = median_length(&train);
        Ok(Self {
            dictionary,
            train,
            train_by_class,
            lambda,
            half_width,
            joints,
            f_ref,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&data)
    }
}

/// Lower median of the training sequence lengths.
fn median_length(train: &[ActionSequence]) -> usize {
    let mut lengths: Vec<usize> = train.iter().map(|s| s.frame_count()).collect();
    lengths.sort_unstable();
    lengths[(lengths.len() - 1) / 2]
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    fn expect_remaining(&self, needed: u64) -> Result<()> {
        if (self.remaining() as u64) < needed {
            return Err(Error::Model(format!(
                "container truncated: need {needed} more bytes, have {}",
                self.remaining()
            )));
        }
        Ok(())
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Model(format!(
                "container truncated at byte {}",
                self.pos
            )));
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }
}

//! Skeleton sequence data model, file I/O, dataset manifests and
//! cross-subject splitting.
//!
//! Two on-disk sequence formats are supported: the canonical CSV layout
//! (header `frame,x0,y0,z0,...`, one row per frame) and the UTK-style
//! whitespace text layout (frame id followed by 3*J reals per row).
//! Datasets are described by a JSON manifest listing one entry per file.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One frame of J joints, each an (x, y, z) world coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct JointFrame {
    coords: Array2<f64>,
}

impl JointFrame {
    /// Wraps a J x 3 coordinate matrix. Shape is enforced here; finiteness
    /// and the J >= 2 rule are reported by [`validate_sequence`] instead so
    /// that malformed data can be inspected rather than only rejected.
    pub fn new(coords: Array2<f64>) -> Result<Self> {
        if coords.ncols() != 3 {
            return Err(Error::Dimension(format!(
                "joint frame needs 3 columns, got {}",
                coords.ncols()
            )));
        }
        if coords.nrows() == 0 {
            return Err(Error::Empty("joint frame with zero joints".into()));
        }
        Ok(Self { coords })
    }

    pub fn from_rows(rows: &[[f64; 3]]) -> Result<Self> {
        let mut coords = Array2::zeros((rows.len(), 3));
        for (j, row) in rows.iter().enumerate() {
            for (a, v) in row.iter().enumerate() {
                coords[(j, a)] = *v;
            }
        }
        Self::new(coords)
    }

    /// Number of joints J.
    pub fn joint_count(&self) -> usize {
        self.coords.nrows()
    }

    pub fn coords(&self) -> &Array2<f64> {
        &self.coords
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|v| v.is_finite())
    }

    /// Returns a copy with `offset` added to every joint.
    pub fn translated(&self, offset: [f64; 3]) -> Self {
        let mut coords = self.coords.clone();
        for mut row in coords.rows_mut() {
            for a in 0..3 {
                row[a] += offset[a];
            }
        }
        Self { coords }
    }
}

/// An ordered sequence of frames with optional label and origin metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSequence {
    pub frames: Vec<JointFrame>,
    pub label: Option<String>,
    pub subject: u32,
    pub trial: u32,
}

impl ActionSequence {
    pub fn new(frames: Vec<JointFrame>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Empty("sequence with zero frames".into()));
        }
        Ok(Self {
            frames,
            label: None,
            subject: 0,
            trial: 0,
        })
    }

    pub fn with_meta(mut self, label: &str, subject: u32, trial: u32) -> Self {
        self.label = Some(label.to_string());
        self.subject = subject;
        self.trial = trial;
        self
    }

    /// Frame count F.
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Joint count of the first frame.
    pub fn joint_count(&self) -> usize {
        self.frames[0].joint_count()
    }
}

/// Ordered class names together with the number of training sequences per
/// class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    classes: Vec<String>,
    counts: Vec<usize>,
}

impl LabelSet {
    pub fn new(classes: Vec<String>, counts: Vec<usize>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Empty("label set with no classes".into()));
        }
        if classes.len() != counts.len() {
            return Err(Error::Dimension(format!(
                "{} class names but {} counts",
                classes.len(),
                counts.len()
            )));
        }
        let unique: BTreeSet<&String> = classes.iter().collect();
        if unique.len() != classes.len() {
            return Err(Error::Data("duplicate class names in label set".into()));
        }
        if counts.iter().any(|&k| k == 0) {
            return Err(Error::Data("class with zero training sequences".into()));
        }
        Ok(Self { classes, counts })
    }

    /// Builds a label set from labeled sequences in first-appearance order.
    pub fn from_sequences(seqs: &[ActionSequence]) -> Result<Self> {
        let mut classes: Vec<String> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for seq in seqs {
            let label = seq
                .label
                .as_ref()
                .ok_or_else(|| Error::Data("unlabeled sequence in training set".into()))?;
            match classes.iter().position(|c| c == label) {
                Some(i) => counts[i] += 1,
                None => {
                    classes.push(label.clone());
                    counts.push(1);
                }
            }
        }
        Self::new(classes, counts)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }
}

/// One dataset file reference.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub path: String,
    pub label: String,
    pub subject: u32,
    pub trial: u32,
}

/// JSON manifest describing a dataset: entries plus the expected joint count.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetManifest {
    pub joint_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate: Option<f64>,
    #[serde(default)]
    pub format: SequenceFormat,
    pub entries: Vec<ManifestEntry>,
    /// Directory entry paths are resolved against; set when loaded from disk.
    #[serde(skip)]
    pub root: PathBuf,
}

/// On-disk sequence encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SequenceFormat {
    #[default]
    #[serde(rename = "canonical-csv")]
    CanonicalCsv,
    #[serde(rename = "utk-text")]
    UtkText,
}

impl DatasetManifest {
    /// Parses manifest JSON and validates its structural invariants. Does not
    /// touch the filesystem.
    pub fn parse_str(text: &str) -> Result<Self> {
        let manifest: DatasetManifest =
            serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut manifest = Self::parse_str(&text)?;
        manifest.root = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| Error::Manifest(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Manifest("manifest has no entries".into()));
        }
        if self.joint_count < 2 {
            return Err(Error::Manifest(format!(
                "joint_count must be >= 2, got {}",
                self.joint_count
            )));
        }
        if let Some(rate) = self.sample_rate {
            if !rate.is_finite() || rate <= 0.0 {
                return Err(Error::Manifest(format!("bad sample_rate {rate}")));
            }
        }
        Ok(())
    }

    /// Loads every entry, attaches its metadata and checks it against the
    /// manifest joint count and the sequence invariants.
    pub fn load_entries(&self) -> Result<Vec<ActionSequence>> {
        self.entries.iter().map(|e| self.load_entry(e)).collect()
    }

    pub fn load_entry(&self, entry: &ManifestEntry) -> Result<ActionSequence> {
        let path = self.root.join(&entry.path);
        let seq = load_sequence(&path, self.format)?
            .with_meta(&entry.label, entry.subject, entry.trial);
        if seq.joint_count() != self.joint_count {
            return Err(Error::Manifest(format!(
                "{}: expected {} joints, found {}",
                entry.path,
                self.joint_count,
                seq.joint_count()
            )));
        }
        let violations = validate_sequence(&seq);
        if !violations.is_empty() {
            return Err(Error::Data(format!(
                "{}: {}",
                entry.path,
                violations
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("; ")
            )));
        }
        Ok(seq)
    }

    pub fn subjects(&self) -> BTreeSet<u32> {
        self.entries.iter().map(|e| e.subject).collect()
    }
}

/// Loads one sequence file; label/subject/trial stay at their defaults.
pub fn load_sequence(path: &Path, format: SequenceFormat) -> Result<ActionSequence> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let frames = match format {
        SequenceFormat::CanonicalCsv => parse_canonical_csv(&text)?,
        SequenceFormat::UtkText => parse_utk_text(&text)?,
    };
    ActionSequence::new(frames)
}

fn parse_f64(token: &str, line: usize) -> Result<f64> {
    let value: f64 = token.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("not a number: {token:?}"),
    })?;
    if !value.is_finite() {
        return Err(Error::NonFinite(format!(
            "coordinate {token:?} at line {line}"
        )));
    }
    Ok(value)
}

/// Parses the canonical CSV layout: header `frame,x0,y0,z0,...`, then one
/// row per frame holding the frame id and 3*J coordinates.
pub fn parse_canonical_csv(text: &str) -> Result<Vec<JointFrame>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (header_no, header) = lines
        .next()
        .ok_or_else(|| Error::Empty("empty file".into()))?;
    let cols: Vec<&str> = header.split(',').map(|c| c.trim()).collect();
    if cols.is_empty() || cols[0] != "frame" {
        return Err(Error::Parse {
            line: header_no,
            message: "header must start with `frame`".into(),
        });
    }
    if cols.len() < 2 || (cols.len() - 1) % 3 != 0 {
        return Err(Error::Parse {
            line: header_no,
            message: format!("header has {} coordinate columns, need a multiple of 3", cols.len() - 1),
        });
    }
    let joints = (cols.len() - 1) / 3;
    if joints < 2 {
        return Err(Error::Parse {
            line: header_no,
            message: format!("need at least 2 joints, header describes {joints}"),
        });
    }
    for j in 0..joints {
        let expected = [format!("x{j}"), format!("y{j}"), format!("z{j}")];
        for (a, name) in expected.iter().enumerate() {
            if cols[1 + 3 * j + a] != name {
                return Err(Error::Parse {
                    line: header_no,
                    message: format!(
                        "header column {} is {:?}, expected {:?}",
                        1 + 3 * j + a,
                        cols[1 + 3 * j + a],
                        name
                    ),
                });
            }
        }
    }

    let mut frames = Vec::new();
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 1 + 3 * joints {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} fields, got {}", 1 + 3 * joints, fields.len()),
            });
        }
        fields[0].trim().parse::<i64>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad frame id {:?}", fields[0]),
        })?;
        let mut coords = Array2::zeros((joints, 3));
        for j in 0..joints {
            for a in 0..3 {
                coords[(j, a)] = parse_f64(fields[1 + 3 * j + a], line_no)?;
            }
        }
        frames.push(JointFrame::new(coords)?);
    }
    if frames.is_empty() {
        return Err(Error::Empty("no frame rows".into()));
    }
    Ok(frames)
}

/// Parses UTK-style text: whitespace-delimited rows, first token a frame id,
/// then 3*J reals in joint-major (x, y, z) order. J is inferred from the
/// first row and enforced on the rest.
pub fn parse_utk_text(text: &str) -> Result<Vec<JointFrame>> {
    let mut frames = Vec::new();
    let mut joints: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        parse_f64(tokens[0], line_no)?; // frame id; UTK files store it as a real
        let ncoords = tokens.len() - 1;
        if ncoords % 3 != 0 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("{ncoords} coordinates is not a multiple of 3"),
            });
        }
        let j = ncoords / 3;
        if j < 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("need at least 2 joints, row has {j}"),
            });
        }
        match joints {
            None => joints = Some(j),
            Some(expected) if expected != j => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("row has {j} joints, expected {expected}"),
                });
            }
            _ => {}
        }
        let mut coords = Array2::zeros((j, 3));
        for jj in 0..j {
            for a in 0..3 {
                coords[(jj, a)] = parse_f64(tokens[1 + 3 * jj + a], line_no)?;
            }
        }
        frames.push(JointFrame::new(coords)?);
    }
    if frames.is_empty() {
        return Err(Error::Empty("no frame rows".into()));
    }
    Ok(frames)
}

/// Writes frames in the canonical CSV layout. Coordinates are formatted with
/// Rust's shortest round-trip float notation, so write-then-load reproduces
/// every value bit for bit.
pub fn write_canonical_csv(frames: &[JointFrame]) -> Result<String> {
    if frames.is_empty() {
        return Err(Error::Empty("no frames to write".into()));
    }
    let joints = frames[0].joint_count();
    let mut out = String::from("frame");
    for j in 0..joints {
        out.push_str(&format!(",x{j},y{j},z{j}"));
    }
    out.push('\n');
    for (i, frame) in frames.iter().enumerate() {
        if frame.joint_count() != joints {
            return Err(Error::Dimension(format!(
                "frame {i} has {} joints, expected {joints}",
                frame.joint_count()
            )));
        }
        if !frame.is_finite() {
            return Err(Error::NonFinite(format!("frame {i}")));
        }
        out.push_str(&i.to_string());
        for j in 0..joints {
            for a in 0..3 {
                out.push(',');
                out.push_str(&frame.coords()[(j, a)].to_string());
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn save_sequence_csv(seq: &ActionSequence, path: &Path) -> Result<()> {
    let text = write_canonical_csv(&seq.frames)?;
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A reported invariant breach; `validate_sequence` returns these instead of
/// failing so callers can inspect bad data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NonFiniteCoordinate { frame: usize },
    JointCountMismatch { frame: usize, expected: usize, found: usize },
    TooFewJoints { joints: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteCoordinate { frame } => {
                write!(f, "non-finite coordinate in frame {frame}")
            }
            Violation::JointCountMismatch { frame, expected, found } => {
                write!(f, "frame {frame} has {found} joints, expected {expected}")
            }
            Violation::TooFewJoints { joints } => {
                write!(f, "sequence has {joints} joints, need at least 2")
            }
        }
    }
}

/// Checks the frame invariants and returns every breach found.
pub fn validate_sequence(seq: &ActionSequence) -> Vec<Violation> {
    let mut violations = Vec::new();
    let joints = seq.joint_count();
    if joints < 2 {
        violations.push(Violation::TooFewJoints { joints });
    }
    for (i, frame) in seq.frames.iter().enumerate() {
        if frame.joint_count() != joints {
            violations.push(Violation::JointCountMismatch {
                frame: i,
                expected: joints,
                found: frame.joint_count(),
            });
        }
        if !frame.is_finite() {
            violations.push(Violation::NonFiniteCoordinate { frame: i });
        }
    }
    violations
}

/// How subjects are assigned to the training side of a split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitRule {
    /// Odd-numbered subjects train, even-numbered subjects test.
    OddTrain,
    /// The listed subjects train, everyone else tests.
    ListedSubjects(Vec<u32>),
}

/// Loads every manifest entry and splits it by subject. No subject ends up on
/// both sides; both sides must be non-empty.
pub fn split_cross_subject(
    manifest: &DatasetManifest,
    rule: &SplitRule,
) -> Result<(Vec<ActionSequence>, Vec<ActionSequence>)> {
    let present = manifest.subjects();
    let train_subjects: BTreeSet<u32> = match rule {
        SplitRule::OddTrain => present.iter().copied().filter(|s| s % 2 == 1).collect(),
        SplitRule::ListedSubjects(listed) => {
            for s in listed {
                if !present.contains(s) {
                    return Err(Error::Manifest(format!(
                        "unknown subject {s} in split list"
                    )));
                }
            }
            listed.iter().copied().collect()
        }
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for entry in &manifest.entries {
        let seq = manifest.load_entry(entry)?;
        if train_subjects.contains(&entry.subject) {
            train.push(seq);
        } else {
            test.push(seq);
        }
    }
    if train.is_empty() {
        return Err(Error::Manifest("split leaves the training set empty".into()));
    }
    if test.is_empty() {
        return Err(Error::Manifest("split leaves the test set empty".into()));
    }
    Ok((train, test))
}

/// Splits already-loaded sequences by subject. Same rules as
/// [`split_cross_subject`], for in-memory datasets.
pub fn split_sequences(
    seqs: Vec<ActionSequence>,
    rule: &SplitRule,
) -> Result<(Vec<ActionSequence>, Vec<ActionSequence>)> {
    let present: BTreeSet<u32> = seqs.iter().map(|s| s.subject).collect();
    let train_subjects: BTreeSet<u32> = match rule {
        SplitRule::OddTrain => present.iter().copied().filter(|s| s % 2 == 1).collect(),
        SplitRule::ListedSubjects(listed) => {
            for s in listed {
                if !present.contains(s) {
                    return Err(Error::Manifest(format!(
                        "unknown subject {s} in split list"
                    )));
                }
            }
            listed.iter().copied().collect()
        }
    };
    let (train, test): (Vec<_>, Vec<_>) = seqs
        .into_iter()
        .partition(|s| train_subjects.contains(&s.subject));
    if train.is_empty() {
        return Err(Error::Manifest("split leaves the training set empty".into()));
    }
    if test.is_empty() {
        return Err(Error::Manifest("split leaves the test set empty".into()));
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn frame(rows: &[[f64; 3]]) -> JointFrame {
        JointFrame::from_rows(rows).unwrap()
    }

    #[test]
    fn canonical_csv_two_frames() {
        let text = "frame,x0,y0,z0,x1,y1,z1\n0,1,2,3,4,5,6\n1,7,8,9,10,11,12\n";
        let frames = parse_canonical_csv(text).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[0].joint_count(), 2);
        assert_eq!(frames[0].coords(), &array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        assert_eq!(frames[1].coords()[(1, 2)], 12.0);
    }

    #[test]
    fn canonical_csv_rejects_bad_rows() {
        let short = "frame,x0,y0,z0,x1,y1,z1\n0,1,2,3,4,5\n";
        assert!(matches!(parse_canonical_csv(short), Err(Error::Parse { line: 2, .. })));
        let garbage = "frame,x0,y0,z0,x1,y1,z1\n0,1,2,3,4,5,abc\n";
        assert!(matches!(parse_canonical_csv(garbage), Err(Error::Parse { .. })));
        let nan = "frame,x0,y0,z0,x1,y1,z1\n0,1,2,3,4,5,NaN\n";
        assert!(matches!(parse_canonical_csv(nan), Err(Error::NonFinite(_))));
        assert!(matches!(parse_canonical_csv(""), Err(Error::Empty(_))));
        let header_only = "frame,x0,y0,z0,x1,y1,z1\n";
        assert!(matches!(parse_canonical_csv(header_only), Err(Error::Empty(_))));
        let bad_header = "time,x0,y0,z0\n0,1,2,3\n";
        assert!(matches!(parse_canonical_csv(bad_header), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn utk_rows_of_60_reals_give_20_joints() {
        let mut text = String::new();
        for t in 0..3 {
            text.push_str(&format!("{t}"));
            for k in 0..60 {
                text.push_str(&format!(" {}", 0.1 * (t * 60 + k) as f64));
            }
            text.push('\n');
        }
        let frames = parse_utk_text(&text).unwrap();
        assert_eq!(frames.len(), 3);
        assert_eq!(frames[0].joint_count(), 20);
        assert_eq!(frames[1].coords()[(0, 0)], 6.0);
    }

    #[test]
    fn utk_row_with_59_coordinates_is_rejected() {
        let mut text = String::from("0");
        for k in 0..59 {
            text.push_str(&format!(" {}", k as f64));
        }
        text.push('\n');
        assert!(matches!(parse_utk_text(&text), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let frames = vec![
            frame(&[[1.25, -0.5, 3.0000001], [0.1, 0.2, 0.3]]),
            frame(&[[-2.0, 1e-9, 7.5], [1.0 / 3.0, 2.0, -0.0]]),
        ];
        let text = write_canonical_csv(&frames).unwrap();
        let back = parse_canonical_csv(&text).unwrap();
        assert_eq!(back.len(), frames.len());
        for (a, b) in frames.iter().zip(&back) {
            for (x, y) in a.coords().iter().zip(b.coords().iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn validate_reports_violations() {
        let good = ActionSequence::new(vec![frame(&[[0.0; 3], [1.0; 3]])]).unwrap();
        assert!(validate_sequence(&good).is_empty());

        let nan = ActionSequence::new(vec![
            frame(&[[0.0; 3], [1.0; 3]]),
            frame(&[[f64::NAN, 0.0, 0.0], [1.0; 3]]),
        ])
        .unwrap();
        let v = validate_sequence(&nan);
        assert_eq!(v, vec![Violation::NonFiniteCoordinate { frame: 1 }]);

        let mixed = ActionSequence::new(vec![
            frame(&[[0.0; 3], [1.0; 3]]),
            frame(&[[0.0; 3], [1.0; 3], [2.0; 3]]),
        ])
        .unwrap();
        let v = validate_sequence(&mixed);
        assert_eq!(
            v,
            vec![Violation::JointCountMismatch { frame: 1, expected: 2, found: 3 }]
        );
    }

    fn manifest_with_subjects(dir: &Path, subjects: &[u32]) -> DatasetManifest {
        let mut entries = Vec::new();
        for (i, &s) in subjects.iter().enumerate() {
            let name = format!("seq{i}.csv");
            let seq = ActionSequence::new(vec![
                frame(&[[i as f64, 0.0, 0.0], [0.0, 1.0, 0.0]]),
                frame(&[[i as f64, 0.5, 0.0], [0.0, 1.5, 0.0]]),
            ])
            .unwrap();
            save_sequence_csv(&seq, &dir.join(&name)).unwrap();
            entries.push(ManifestEntry {
                path: name,
                label: format!("class{}", i % 2),
                subject: s,
                trial: i as u32,
            });
        }
        DatasetManifest {
            joint_count: 2,
            sample_rate: Some(30.0),
            format: SequenceFormat::CanonicalCsv,
            entries,
            root: dir.to_path_buf(),
        }
    }

    #[test]
    fn listed_subject_split_matches_protocol() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = manifest_with_subjects(dir.path(), &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
        let rule = SplitRule::ListedSubjects(vec![1, 3, 5, 7, 9]);
        let (train, test) = split_cross_subject(&manifest, &rule).unwrap();
        let train_subj: BTreeSet<u32> = train.iter().map(|s| s.subject).collect();
        let test_subj: BTreeSet<u32> = test.iter().map(|s| s.subject).collect();
        assert_eq!(train_subj, [1, 3, 5, 7, 9].into_iter().collect());
        assert_eq!(test_subj, [2, 4, 6, 8, 10].into_iter().collect());
        assert_eq!(train.len() + test.len(), manifest.entries.len());
    }

    #[test]
    fn odd_train_split() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = manifest_with_subjects(dir.path(), &[1, 2, 3, 4, 5, 6, 7, 8]);
        let (train, test) = split_cross_subject(&manifest, &SplitRule::OddTrain).unwrap();
        let train_subj: BTreeSet<u32> = train.iter().map(|s| s.subject).collect();
        assert_eq!(train_subj, [1, 3, 5, 7].into_iter().collect());
        assert!(test.iter().all(|s| s.subject % 2 == 0));
    }

    #[test]
    fn degenerate_split_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = manifest_with_subjects(dir.path(), &[2, 2]);
        assert!(split_cross_subject(&manifest, &SplitRule::OddTrain).is_err());
    }

    #[test]
    fn unknown_subject_in_list_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = manifest_with_subjects(dir.path(), &[1, 2]);
        let rule = SplitRule::ListedSubjects(vec![1, 7]);
        let err = split_cross_subject(&manifest, &rule).unwrap_err();
        assert!(err.to_string().contains("unknown subject 7"));
    }

    #[test]
    fn manifest_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = manifest_with_subjects(dir.path(), &[1, 2]);
        let path = dir.path().join("manifest.json");
        manifest.save(&path).unwrap();
        let loaded = DatasetManifest::load(&path).unwrap();
        assert_eq!(loaded.entries, manifest.entries);
        assert_eq!(loaded.joint_count, 2);
        assert_eq!(loaded.root, dir.path());
        let seqs = loaded.load_entries().unwrap();
        assert_eq!(seqs.len(), 2);
        assert_eq!(seqs[0].label.as_deref(), Some("class0"));
    }

    #[test]
    fn manifest_rejects_bad_json_and_bad_fields() {
        assert!(DatasetManifest::parse_str("not json").is_err());
        assert!(DatasetManifest::parse_str(r#"{"joint_count":2,"entries":[]}"#).is_err());
        assert!(DatasetManifest::parse_str(
            r#"{"joint_count":1,"entries":[{"path":"a","label":"b","subject":1,"trial":0}]}"#
        )
        .is_err());
    }

    #[test]
    fn label_set_from_sequences_keeps_first_appearance_order() {
        let mk = |label: &str| {
            ActionSequence::new(vec![frame(&[[0.0; 3], [1.0; 3]])])
                .unwrap()
                .with_meta(label, 1, 0)
        };
        let seqs = vec![mk("wave"), mk("kick"), mk("wave")];
        let labels = LabelSet::from_sequences(&seqs).unwrap();
        assert_eq!(labels.classes(), ["wave".to_string(), "kick".to_string()]);
        assert_eq!(labels.counts(), [2, 1]);
        assert_eq!(labels.index_of("kick"), Some(1));
    }
}

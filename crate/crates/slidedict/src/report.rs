//! Evaluation reports (confusion matrix, accuracy, accuracy-vs-fraction
//! curve) and the per-sequence score-trace CSV format consumed by external
//! plotting.

use crate::error::{Error, Result};
use crate::scoring::ScoreTrace;

/// Results of one evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub labels: Vec<String>,
    /// Rows are truth, columns are prediction.
    pub confusion: Vec<Vec<usize>>,
    /// (frame fraction, accuracy) pairs; empty for offline-only runs.
    pub curve: Vec<(f64, f64)>,
}

impl EvalReport {
    /// Builds the confusion matrix from (truth, predicted) index pairs.
    pub fn from_predictions(labels: Vec<String>, pairs: &[(usize, usize)]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("label list".into()));
        }
        if pairs.is_empty() {
            return Err(Error::Empty("prediction list".into()));
        }
        let c = labels.len();
        let mut confusion = vec![vec![0usize; c]; c];
        for &(truth, predicted) in pairs {
            if truth >= c || predicted >= c {
                return Err(Error::Data(format!(
                    "class index ({truth}, {predicted}) outside {c} classes"
                )));
            }
            confusion[truth][predicted] += 1;
        }
        Ok(Self { labels, confusion, curve: Vec::new() })
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().map(|row| row.iter().sum::<usize>()).sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.labels.len()).map(|i| self.confusion[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }

    /// Diagonal over row sum per class; NaN-free (empty rows give 0).
    pub fn per_class_accuracy(&self) -> Vec<f64> {
        self.confusion
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let total: usize = row.iter().sum();
                if total == 0 {
                    0.0
                } else {
                    row[i] as f64 / total as f64
                }
            })
            .collect()
    }

    /// Row sums, i.e. test sequences per true class.
    pub fn row_sums(&self) -> Vec<usize> {
        self.confusion.iter().map(|row| row.iter().sum()).collect()
    }

    /// Confusion matrix as CSV: header `truth\prediction,...`, one row per
    /// true class.
    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("truth\\prediction");
        for label in &self.labels {
            out.push(',');
            out.push_str(label);
        }
        out.push('\n');
        for (label, row) in self.labels.iter().zip(&self.confusion) {
            out.push_str(label);
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = format!(
            "sequences: {}\ncorrect: {}\naccuracy: {:.4}\n",
            self.total(),
            self.correct(),
            self.accuracy()
        );
        for (label, acc) in self.labels.iter().zip(self.per_class_accuracy()) {
            out.push_str(&format!("class {label}: {acc:.4}\n"));
        }
        if !self.curve.is_empty() {
            out.push_str("curve:\n");
            for (fraction, acc) in &self.curve {
                out.push_str(&format!("  {fraction:.2} -> {acc:.4}\n"));
            }
        }
        out
    }
}

/// Accuracy-vs-fraction curve as CSV.
pub fn curve_csv(curve: &[(f64, f64)]) -> String {
    let mut out = String::from("fraction,accuracy\n");
    for (fraction, accuracy) in curve {
        out.push_str(&format!("{fraction},{accuracy}\n"));
    }
    out
}

const TRACE_HEADER: &str = "step,class,tau,cumulative";

/// Serializes a trace: one row per class per step, columns
/// `step,class,tau,cumulative`. Cumulative values are the running sums in
/// step order, written with shortest round-trip float formatting.
pub fn write_trace_csv(trace: &ScoreTrace, labels: &[String]) -> Result<String> {
    if labels.len() != trace.class_count() {
        return Err(Error::Dimension(format!(
            "{} labels for a trace over {} classes",
            labels.len(),
            trace.class_count()
        )));
    }
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    let mut running = vec![0.0f64; labels.len()];
    for (i, step) in trace.steps().iter().enumerate() {
        for (c, label) in labels.iter().enumerate() {
            running[c] += step[c];
            out.push_str(&format!("{},{},{},{}\n", i + 1, label, step[c], running[c]));
        }
    }
    Ok(out)
}

/// One parsed trace row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub class: String,
    pub tau: f64,
    pub cumulative: f64,
}

/// A parsed, validated trace file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedTrace {
    pub rows: Vec<TraceRow>,
}

impl ParsedTrace {
    pub fn step_count(&self) -> usize {
        self.rows.iter().map(|r| r.step).max().unwrap_or(0)
    }

    pub fn classes(&self) -> Vec<String> {
        let mut out = Vec::new();
        for row in &self.rows {
            if !out.contains(&row.class) {
                out.push(row.class.clone());
            }
        }
        out
    }
}

/// Parses and validates a trace CSV: schema, finite values, tau within
/// [0, 1], per-class cumulative consistency and monotonicity.
pub fn parse_trace_csv(text: &str) -> Result<ParsedTrace> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Empty("trace file".into()))?;
    if header.trim_end_matches('\r') != TRACE_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {TRACE_HEADER:?}"),
        });
    }
    let mut rows = Vec::new();
    let mut running: std::collections::BTreeMap<String, f64> = Default::default();
    for (i, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let line_no = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let step: usize = fields[0].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad step {:?}", fields[0]),
        })?;
        if step < 1 {
            return Err(Error::Parse { line: line_no, message: "step must be >= 1".into() });
        }
        let class = fields[1].to_string();
        let tau: f64 = fields[2].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad tau {:?}", fields[2]),
        })?;
        let cumulative: f64 = fields[3].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad cumulative {:?}", fields[3]),
        })?;
        if !tau.is_finite() || !cumulative.is_finite() {
            return Err(Error::NonFinite(format!("trace value at line {line_no}")));
        }
        if !(-1e-9..=1.0 + 1e-9).contains(&tau) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("tau {tau} outside [0, 1]"),
            });
        }
        let prev = running.get(&class).copied().unwrap_or(0.0);
        if cumulative + 1e-6 < prev {
            return Err(Error::Parse {
                line: line_no,
                message: format!("cumulative for {class} decreased from {prev} to {cumulative}"),
            });
        }
        if (prev + tau - cumulative).abs() > 1e-6 {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "cumulative for {class} is {cumulative}, expected {prev} + {tau}"
                ),
            });
        }
        running.insert(class.clone(), cumulative);
        rows.push(TraceRow { step, class, tau, cumulative });
    }
    if rows.is_empty() {
        return Err(Error::Empty("trace with no rows".into()));
    }
    Ok(ParsedTrace { rows })
}

/// Merges named traces into one tidy CSV with a leading `trace` column.
pub fn merge_traces(traces: &[(String, ParsedTrace)]) -> Result<String> {
    if traces.is_empty() {
        return Err(Error::Empty("no traces to merge".into()));
    }
    let mut out = String::from("trace,step,class,tau,cumulative\n");
    for (name, trace) in traces {
        for row in &trace.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                name, row.step, row.class, row.tau, row.cumulative
            ));
        }
    }
    Ok(out)
}

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use slidedict::config::Config;
use slidedict::data::{split_cross_subject, ActionSequence, DatasetManifest};
use slidedict::model::Model;
use slidedict::report::{curve_csv, merge_traces, parse_trace_csv, write_trace_csv, EvalReport};
use slidedict::scoring::{classify_offline, decide, EvalParams, OnlineClassifier};
use slidedict::synth::{generate, write_dataset};

#[derive(Parser)]
#[command(
    name = "slidedict",
    version,
    about = "Skeleton action recognition: train, evaluate, stream, generate and report"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model from the training side of a dataset split.
    Train(TrainArgs),
    /// Classify the test split offline and report a confusion matrix.
    Eval(EvalArgs),
    /// Replay test sequences frame by frame and report accuracy per frame fraction.
    Stream(StreamArgs),
    /// Generate a synthetic dataset (canonical CSV + manifest).
    Synth(SynthArgs),
    /// Merge score traces into one plot-ready CSV.
    Report(ReportArgs),
}

/// Config-file keys, exposed one-to-one as command-line flags.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long = "dataset.manifest", value_name = "PATH")]
    dataset_manifest: Option<String>,
    #[arg(long = "split.rule", value_name = "RULE")]
    split_rule: Option<String>,
    #[arg(long = "split.subjects", value_name = "LIST")]
    split_subjects: Option<String>,
    #[arg(long = "windows.W", value_name = "INT")]
    windows_w: Option<String>,
    #[arg(long = "windows.N", value_name = "INT")]
    windows_n: Option<String>,
    #[arg(long = "windows.online_lengths", value_name = "LIST")]
    windows_online_lengths: Option<String>,
    #[arg(long = "sparse.lambda", value_name = "REAL")]
    sparse_lambda: Option<String>,
    #[arg(long = "sparse.tol", value_name = "REAL")]
    sparse_tol: Option<String>,
    #[arg(long = "sparse.max_iter", value_name = "INT")]
    sparse_max_iter: Option<String>,
    #[arg(long = "sparse.eps", value_name = "REAL")]
    sparse_eps: Option<String>,
    #[arg(long = "do3dj.L", value_name = "INT")]
    do3dj_l: Option<String>,
    #[arg(long = "fusion.mu1", value_name = "REAL")]
    fusion_mu1: Option<String>,
    #[arg(long = "output.dir", value_name = "DIR")]
    output_dir: Option<String>,
    #[arg(long = "seed", value_name = "INT")]
    seed: Option<String>,
    #[arg(long = "workers", value_name = "INT")]
    workers: Option<String>,
    #[arg(long = "synth.classes", value_name = "INT")]
    synth_classes: Option<String>,
    #[arg(long = "synth.joints", value_name = "INT")]
    synth_joints: Option<String>,
    #[arg(long = "synth.f_min", value_name = "INT")]
    synth_f_min: Option<String>,
    #[arg(long = "synth.f_max", value_name = "INT")]
    synth_f_max: Option<String>,
    #[arg(long = "synth.noise_sigma", value_name = "REAL")]
    synth_noise_sigma: Option<String>,
    #[arg(long = "synth.n_per_class", value_name = "INT")]
    synth_n_per_class: Option<String>,
    #[arg(long = "synth.subjects", value_name = "INT")]
    synth_subjects: Option<String>,
}

impl Overrides {
    fn apply(&self, config: &mut Config) -> anyhow::Result<()> {
        let pairs: [(&str, &Option<String>); 22] = [
            ("dataset.manifest", &self.dataset_manifest),
            ("split.rule", &self.split_rule),
            ("split.subjects", &self.split_subjects),
            ("windows.W", &self.windows_w),
            ("windows.N", &self.windows_n),
            ("windows.online_lengths", &self.windows_online_lengths),
            ("sparse.lambda", &self.sparse_lambda),
            ("sparse.tol", &self.sparse_tol),
            ("sparse.max_iter", &self.sparse_max_iter),
            ("sparse.eps", &self.sparse_eps),
            ("do3dj.L", &self.do3dj_l),
            ("fusion.mu1", &self.fusion_mu1),
            ("output.dir", &self.output_dir),
            ("seed", &self.seed),
            ("workers", &self.workers),
            ("synth.classes", &self.synth_classes),
            ("synth.joints", &self.synth_joints),
            ("synth.f_min", &self.synth_f_min),
            ("synth.f_max", &self.synth_f_max),
            ("synth.noise_sigma", &self.synth_noise_sigma),
            ("synth.n_per_class", &self.synth_n_per_class),
            ("synth.subjects", &self.synth_subjects),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        Ok(())
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct StreamArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Frame fractions: `0.1..1.0`, `0.2..0.8:0.3`, or `0.25,0.5,1.0`.
    #[arg(long, value_name = "SPEC", default_value = "0.1..1.0")]
    fractions: String,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator configuration (same key-value format as experiment configs).
    #[arg(long, value_name = "PATH")]
    spec: Option<PathBuf>,
    #[arg(long = "out-dir", value_name = "DIR")]
    out_dir: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ReportArgs {
    /// Glob matching trace CSV files.
    #[arg(long, value_name = "GLOB")]
    traces: String,
    #[arg(long = "out-dir", value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Stream(args) => cmd_stream(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn load_config(path: &Path, overrides: &Overrides) -> anyhow::Result<Config> {
    let mut config = Config::load(path).with_context(|| format!("loading {}", path.display()))?;
    overrides.apply(&mut config)?;
    Ok(config)
}

fn thread_pool(workers: usize) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")
}

fn write_file(path: &Path, content: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<()> {
    let config = load_config(&args.config, &args.overrides)?;
    let manifest = DatasetManifest::load(&config.manifest_path()?)?;
    let rule = config.split_rule()?;
    let (train, test) = split_cross_subject(&manifest, &rule)?;
    let spec = config.window_spec()?;
    let model = Model::train(train, &spec, config.lambda()?)?;
    model.save(&args.out)?;
    println!(
        "trained dictionary: {} atoms ({} classes, {} windows, descriptor dim {})",
        model.dictionary.atom_count(),
        model.class_count(),
        model.window_count(),
        model.dictionary.dim()
    );
    println!(
        "training sequences: {}; held-out test sequences: {}",
        model.train.len(),
        test.len()
    );
    println!("model written to {}", args.out.display());
    Ok(())
}

/// Loads the test split and resolves each label to a model class index.
fn test_split_with_truth(
    config: &Config,
    model: &Model,
) -> anyhow::Result<Vec<(usize, ActionSequence)>> {
    let manifest = DatasetManifest::load(&config.manifest_path()?)?;
    if manifest.joint_count != model.joints {
        bail!(
            "manifest has {} joints, model expects {}",
            manifest.joint_count,
            model.joints
        );
    }
    let rule = config.split_rule()?;
    let (_, test) = split_cross_subject(&manifest, &rule)?;
    test.into_iter()
        .map(|seq| {
            let label = seq.label.clone().unwrap();
            let truth = model
                .dictionary
                .labels()
                .index_of(&label)
                .with_context(|| format!("test label {label:?} unknown to the model"))?;
            Ok((truth, seq))
        })
        .collect()
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<()> {
    let config = load_config(&args.config, &args.overrides)?;
    let model = Model::load(&args.model)?;
    let params = config.eval_params()?;
    let test = test_split_with_truth(&config, &model)?;
    let pool = thread_pool(config.workers()?)?;

    let pairs: Vec<(usize, usize)> = pool.install(|| {
        test.par_iter()
            .map(|(truth, seq)| {
                classify_offline(seq, &model, &params).map(|(predicted, _)| (*truth, predicted))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let report =
        EvalReport::from_predictions(model.dictionary.labels().classes().to_vec(), &pairs)?;
    let out_dir = config.out_dir();
    write_file(&out_dir.join("confusion.csv"), &report.confusion_csv())?;
    write_file(&out_dir.join("summary.txt"), &report.summary_text())?;
    print!("{}", report.summary_text());
    println!("reports written to {}", out_dir.display());
    Ok(())
}

/// Parses a fraction schedule: `a..b` (step 0.1), `a..b:step`, or a comma
/// list. Every value must lie in (0, 1].
fn parse_fractions(spec: &str) -> anyhow::Result<Vec<f64>> {
    let mut out = Vec::new();
    if let Some((range, step)) = spec
        .split_once("..")
        .map(|(a, rest)| match rest.split_once(':') {
            Some((b, s)) => ((a, b), s.to_string()),
            None => ((a, rest), "0.1".to_string()),
        })
    {
        let (a, b) = range;
        let start: f64 = a.trim().parse().context("bad fraction range start")?;
        let end: f64 = b.trim().parse().context("bad fraction range end")?;
        let step: f64 = step.trim().parse().context("bad fraction step")?;
        if step <= 1e-9 {
            bail!("fraction step must be positive");
        }
        let mut f = start;
        while f <= end + 1e-9 {
            // accumulated steps pick up float dust; snap to 1e-9
            out.push(((f.min(end)) * 1e9).round() / 1e9);
            f += step;
        }
    } else {
        for token in spec.split(',') {
            out.push(token.trim().parse().context("bad fraction")?);
        }
    }
    if out.is_empty() {
        bail!("empty fraction schedule");
    }
    for &f in &out {
        if !(f > 0.0 && f <= 1.0) {
            bail!("fraction {f} outside (0, 1]");
        }
    }
    Ok(out)
}

struct StreamOutcome {
    truth: usize,
    predictions: Vec<usize>,
    trace_csv: String,
}

fn cmd_stream(args: StreamArgs) -> anyhow::Result<()> {
    let config = load_config(&args.config, &args.overrides)?;
    let model = Model::load(&args.model)?;
    let params = config.eval_params()?;
    let fractions = parse_fractions(&args.fractions)?;
    let test = test_split_with_truth(&config, &model)?;
    let pool = thread_pool(config.workers()?)?;
    let labels = model.dictionary.labels().classes().to_vec();

    let outcomes: Vec<StreamOutcome> = pool.install(|| {
        test.par_iter()
            .map(|(truth, seq)| stream_one(*truth, seq, &model, &params, &fractions, &labels))
            .collect::<anyhow::Result<Vec<_>>>()
    })?;

    let out_dir = config.out_dir();
    let trace_dir = out_dir.join("traces");
    for (i, ((_, seq), outcome)) in test.iter().zip(&outcomes).enumerate() {
        let name = format!(
            "trace_{i:04}_{}_s{}_t{}.csv",
            seq.label.as_deref().unwrap_or("unknown"),
            seq.subject,
            seq.trial
        );
        write_file(&trace_dir.join(name), &outcome.trace_csv)?;
    }

    let mut curve = Vec::with_capacity(fractions.len());
    for (fi, &fraction) in fractions.iter().enumerate() {
        let correct = outcomes.iter().filter(|o| o.predictions[fi] == o.truth).count();
        curve.push((fraction, correct as f64 / outcomes.len() as f64));
    }
    write_file(&out_dir.join("curve.csv"), &curve_csv(&curve))?;
    for (fraction, accuracy) in &curve {
        println!("fraction {fraction:.2}: accuracy {accuracy:.4}");
    }
    println!(
        "curve and {} traces written to {}",
        outcomes.len(),
        out_dir.display()
    );
    Ok(())
}

fn stream_one(
    truth: usize,
    seq: &ActionSequence,
    model: &Model,
    params: &EvalParams,
    fractions: &[f64],
    labels: &[String],
) -> anyhow::Result<StreamOutcome> {
    let total = seq.frame_count();
    // frames to feed per fraction: ceil(fraction * F), at least 1
    let cutoffs: Vec<usize> = fractions
        .iter()
        .map(|f| ((f * total as f64).ceil() as usize).clamp(1, total))
        .collect();
    let mut stream = OnlineClassifier::new(model, params.clone())?;
    let mut predictions = vec![0usize; fractions.len()];
    let mut fed = 0;
    for frame in &seq.frames {
        stream.push_frame(frame.clone())?;
        fed += 1;
        for (fi, &cut) in cutoffs.iter().enumerate() {
            if cut == fed && fractions[fi] < 1.0 {
                let (predicted, _) = decide(stream.trace())?;
                predictions[fi] = predicted;
            }
        }
    }
    // the end-of-action signal settles the full-stream prediction
    let (final_predicted, _) = stream.finish()?;
    for (fi, &fraction) in fractions.iter().enumerate() {
        if fraction >= 1.0 {
            predictions[fi] = final_predicted;
        }
    }
    let trace_csv = write_trace_csv(stream.trace(), labels)?;
    Ok(StreamOutcome { truth, predictions, trace_csv })
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<()> {
    let mut config = match &args.spec {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    args.overrides.apply(&mut config)?;
    let spec = config.synth_spec()?;
    let dataset = generate(&spec, config.synth_n_per_class()?, config.synth_subjects()?)?;
    let manifest = write_dataset(&dataset, &args.out_dir)?;
    println!(
        "generated {} sequences ({} classes, {} joints) in {}",
        manifest.entries.len(),
        spec.classes,
        spec.joints,
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> anyhow::Result<()> {
    let mut paths: Vec<PathBuf> = glob::glob(&args.traces)
        .context("bad glob pattern")?
        .collect::<Result<Vec<_>, _>>()
        .context("walking glob matches")?;
    paths.sort();
    if paths.is_empty() {
        bail!("no trace files match {:?}", args.traces);
    }
    let mut traces = Vec::with_capacity(paths.len());
    for path in &paths {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let parsed =
            parse_trace_csv(&text).with_context(|| format!("parsing {}", path.display()))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        traces.push((name, parsed));
    }
    let merged = merge_traces(&traces)?;
    let out = args.out_dir.join("scores_tidy.csv");
    write_file(&out, &merged)?;
    println!(
        "merged {} traces ({} rows) into {}",
        traces.len(),
        merged.lines().count() - 1,
        out.display()
    );
    Ok(())
}

//! Flat key-value experiment configuration: `key = value` lines, `#`
//! comments, later assignments win. Command-line flags override file values
//! under the same key names.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::data::SplitRule;
use crate::error::{Error, Result};
use crate::scoring::{EvalParams, FusionWeights};
use crate::synth::SynthSpec;
use crate::windows::WindowSpec;

/// Every key the parser accepts.
pub const KNOWN_KEYS: &[&str] = &[
    "dataset.manifest",
    "split.rule",
    "split.subjects",
    "windows.W",
    "windows.N",
    "windows.online_lengths",
    "sparse.lambda",
    "sparse.tol",
    "sparse.max_iter",
    "sparse.eps",
    "do3dj.L",
    "fusion.mu1",
    "output.dir",
    "seed",
    "workers",
    "synth.classes",
    "synth.joints",
    "synth.f_min",
    "synth.f_max",
    "synth.noise_sigma",
    "synth.n_per_class",
    "synth.subjects",
];

/// Raw parsed configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
    /// Directory relative paths resolve against.
    pub base_dir: PathBuf,
}

impl Config {
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("unknown key {key:?}"),
                });
            }
            values.insert(key.to_string(), value.to_string());
        }
        Ok(Self { values, base_dir: PathBuf::from(".") })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::parse_str(&text)?;
        config.base_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        Ok(config)
    }

    /// Sets a value, e.g. from a command-line override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key}: not an integer: {v:?}"))),
        }
    }

    fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key}: not an integer: {v:?}"))),
        }
    }

    fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key}: not a number: {v:?}"))),
        }
    }

    fn get_usize_list(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.values.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("{key}: bad integer {t:?}")))
                })
                .collect(),
        }
    }

    fn get_u32_list(&self, key: &str) -> Result<Vec<u32>> {
        match self.values.get(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("{key}: bad integer {t:?}")))
                })
                .collect(),
        }
    }

    pub fn split_rule(&self) -> Result<SplitRule> {
        match self.values.get("split.rule").map(|s| s.as_str()) {
            None | Some("odd-train") => Ok(SplitRule::OddTrain),
            Some("listed-subjects") => {
                let subjects = self.get_u32_list("split.subjects")?;
                if subjects.is_empty() {
                    return Err(Error::Config(
                        "split.rule = listed-subjects needs split.subjects".into(),
                    ));
                }
                Ok(SplitRule::ListedSubjects(subjects))
            }
            Some(other) => Err(Error::Config(format!("unknown split.rule {other:?}"))),
        }
    }

    pub fn window_spec(&self) -> Result<WindowSpec> {
        WindowSpec::new(
            self.get_usize("windows.W", 8)?,
            self.get_usize("windows.N", 2)?,
            self.get_usize_list("windows.online_lengths", &[8, 16, 24, 32])?,
        )
    }

    pub fn eval_params(&self) -> Result<EvalParams> {
        let tol = self.get_f64("sparse.tol", 1e-7)?;
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::Config(format!("sparse.tol must be positive, got {tol}")));
        }
        let eps = self.get_f64("sparse.eps", 1e-12)?;
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Config(format!("sparse.eps must be positive, got {eps}")));
        }
        let max_iter = self.get_usize("sparse.max_iter", 1000)?;
        if max_iter < 1 {
            return Err(Error::Config("sparse.max_iter must be >= 1".into()));
        }
        let l_pool = self.get_usize("do3dj.L", 3)?;
        if l_pool < 1 {
            return Err(Error::Config("do3dj.L must be >= 1".into()));
        }
        let weights = FusionWeights::new(self.get_f64("fusion.mu1", 0.5)?)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(EvalParams {
            tol,
            max_iter,
            eps,
            l_pool,
            weights,
            online_lengths: self.window_spec()?.online_lengths,
        })
    }

    pub fn lambda(&self) -> Result<f64> {
        let lambda = self.get_f64("sparse.lambda", 0.1)?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!(
                "sparse.lambda must be positive, got {lambda}"
            )));
        }
        Ok(lambda)
    }

    pub fn manifest_path(&self) -> Result<PathBuf> {
        let raw = self
            .values
            .get("dataset.manifest")
            .ok_or_else(|| Error::Config("dataset.manifest is required".into()))?;
        Ok(self.base_dir.join(raw))
    }

    pub fn out_dir(&self) -> PathBuf {
        let raw = self.values.get("output.dir").map(|s| s.as_str()).unwrap_or("out");
        self.base_dir.join(raw)
    }

    pub fn seed(&self) -> Result<u64> {
        self.get_u64("seed", 42)
    }

    /// Worker count: `SLIDEDICT_WORKERS` overrides the config value;
    /// 0 means "use every core".
    pub fn workers(&self) -> Result<usize> {
        if let Ok(env) = std::env::var("SLIDEDICT_WORKERS") {
            return env
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("SLIDEDICT_WORKERS: bad integer {env:?}")));
        }
        self.get_usize("workers", 0)
    }

    pub fn synth_spec(&self) -> Result<SynthSpec> {
        let f_min = self.get_usize("synth.f_min", 30)?;
        let f_max = self.get_usize("synth.f_max", 60)?;
        SynthSpec::with_default_motions(
            self.get_usize("synth.classes", 3)?,
            self.get_usize("synth.joints", 20)?,
            (f_min, f_max),
            self.get_f64("synth.noise_sigma", 0.0)?,
            self.seed()?,
        )
    }

    pub fn synth_n_per_class(&self) -> Result<usize> {
        let n = self.get_usize("synth.n_per_class", 10)?;
        if n < 1 {
            return Err(Error::Config("synth.n_per_class must be >= 1".into()));
        }
        Ok(n)
    }

    pub fn synth_subjects(&self) -> Result<usize> {
        let n = self.get_usize("synth.subjects", 2)?;
        if n < 1 {
            return Err(Error::Config("synth.subjects must be >= 1".into()));
        }
        Ok(n)
    }
}

//! `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored; unknown keys are errors. List
//! keys (`states`, `fingerprint_layers`) span a model-selection grid whose
//! first point is used by single-model commands.

use std::fmt::Write as _;
use std::path::Path;

use crate::eval::{CvScheme, KernelKind, LinearConfig};
use crate::layer::EmConfig;
use crate::stack::{FingerprintMode, LayerSelection, NGram, PredecessorMode, StackConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub states: Vec<usize>,
    pub max_layers: usize,
    pub pool_size: usize,
    pub predecessors: PredecessorMode,
    pub em_max_iters: usize,
    pub em_tol: f64,
    pub smoothing: f64,
    pub fingerprint: NGram,
    pub fingerprint_layers: Vec<LayerSelection>,
    pub normalize: bool,
    pub kernel: String,
    pub gamma: f64,
    pub cv: CvScheme,
    pub seed: u64,
    /// 0 means one thread per core.
    pub threads: usize,
    pub validation_fraction: f64,
    pub patience: usize,
    pub classifier_l2: f64,
    pub classifier_epochs: usize,
    pub classifier_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let em = EmConfig::default();
        let stack = StackConfig::default();
        let lin = LinearConfig::default();
        RunConfig {
            states: vec![20, 40],
            max_layers: stack.max_layers,
            pool_size: stack.pool_size,
            predecessors: stack.predecessors,
            em_max_iters: em.max_iters,
            em_tol: em.tol,
            smoothing: em.smoothing,
            fingerprint: NGram::Unigram,
            fingerprint_layers: vec![LayerSelection::All, LayerSelection::Last],
            normalize: false,
            kernel: "jaccard".into(),
            gamma: 1.0,
            cv: CvScheme::TenFold,
            seed: 0,
            threads: 0,
            validation_fraction: stack.validation_fraction,
            patience: stack.patience,
            classifier_l2: lin.l2,
            classifier_epochs: lin.max_epochs,
            classifier_tol: lin.tol,
        }
    }
}

fn bad(line: usize, key: &str, value: &str) -> Error {
    Error::Config(format!("line {line}: invalid value `{value}` for `{key}`"))
}

fn num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(line, key, value))
}

fn list<T>(line: usize, key: &str, value: &str, item: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let items = value
        .split(',')
        .map(|v| item(v.trim()).ok_or_else(|| bad(line, key, value)))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(bad(line, key, value));
    }
    Ok(items)
}

fn layer_selection(s: &str) -> Option<LayerSelection> {
    match s {
        "last" => Some(LayerSelection::Last),
        "all" => Some(LayerSelection::All),
        _ => None,
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected key = value")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "states" => c.states = list(line, key, value, |v| v.parse().ok().filter(|&n: &usize| n > 0))?,
                "max_layers" => c.max_layers = num(line, key, value)?,
                "pool_size" => c.pool_size = num(line, key, value)?,
                "predecessors" => {
                    c.predecessors = match value {
                        "all" => PredecessorMode::All,
                        v => PredecessorMode::Window(num::<usize>(line, key, v).ok().filter(|&n| n > 0).ok_or_else(|| bad(line, key, v))?),
                    }
                }
                "em_max_iters" => c.em_max_iters = num(line, key, value)?,
                "em_tol" => c.em_tol = num(line, key, value)?,
                "smoothing" => c.smoothing = num(line, key, value)?,
                "fingerprint" => {
                    c.fingerprint = match value {
                        "unigram" => NGram::Unigram,
                        "unibigram" => NGram::UniBigram,
                        _ => return Err(bad(line, key, value)),
                    }
                }
                "fingerprint_layers" => c.fingerprint_layers = list(line, key, value, layer_selection)?,
                "normalize" => c.normalize = num(line, key, value)?,
                "kernel" => {
                    if value != "jaccard" && value != "rbf" {
                        return Err(bad(line, key, value));
                    }
                    c.kernel = value.into();
                }
                "gamma" => c.gamma = num(line, key, value)?,
                "cv" => {
                    c.cv = match value {
                        "tenfold" => CvScheme::TenFold,
                        "nested" => CvScheme::Nested,
                        _ => return Err(bad(line, key, value)),
                    }
                }
                "seed" => c.seed = num(line, key, value)?,
                "threads" => c.threads = num(line, key, value)?,
                "validation_fraction" => c.validation_fraction = num(line, key, value)?,
                "patience" => c.patience = num(line, key, value)?,
                "classifier_l2" => c.classifier_l2 = num(line, key, value)?,
                "classifier_epochs" => c.classifier_epochs = num(line, key, value)?,
                "classifier_tol" => c.classifier_tol = num(line, key, value)?,
                _ => return Err(Error::Config(format!("line {line}: unknown key `{key}`"))),
            }
        }
        c.check()?;
        Ok(c)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    fn check(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.into()));
        if self.max_layers < 1 {
            return fail("max_layers must be at least 1");
        }
        if self.pool_size < 1 {
            return fail("pool_size must be at least 1");
        }
        if !(self.gamma > 0.0) {
            return fail("gamma must be positive");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return fail("validation_fraction must lie in (0, 1)");
        }
        if !(self.smoothing >= 0.0) || !(self.em_tol >= 0.0) || !(self.classifier_l2 >= 0.0) {
            return fail("smoothing, em_tol and classifier_l2 must be non-negative");
        }
        Ok(())
    }

    pub fn kernel_kind(&self) -> KernelKind {
        match self.kernel.as_str() {
            "rbf" => KernelKind::Rbf { gamma: self.gamma },
            _ => KernelKind::Jaccard,
        }
    }

    fn stack_config(&self, states: usize, layers: LayerSelection) -> StackConfig {
        StackConfig {
            em: EmConfig {
                n_states: states,
                max_iters: self.em_max_iters,
                tol: self.em_tol,
                smoothing: self.smoothing,
            },
            max_layers: self.max_layers,
            pool_size: self.pool_size,
            predecessors: self.predecessors,
            patience: self.patience,
            fingerprint: FingerprintMode {
                ngram: self.fingerprint,
                layers,
                normalize: self.normalize,
            },
            classifier: LinearConfig {
                l2: self.classifier_l2,
                max_epochs: self.classifier_epochs,
                tol: self.classifier_tol,
            },
            validation_fraction: self.validation_fraction,
            seed: self.seed,
        }
    }

    /// Every `(states, fingerprint_layers)` combination, states outermost.
    pub fn grid(&self) -> Vec<StackConfig> {
        self.states
            .iter()
            .flat_map(|&c| self.fingerprint_layers.iter().map(move |&l| (c, l)))
            .map(|(c, l)| self.stack_config(c, l))
            .collect()
    }

    /// The first grid point.
    pub fn primary(&self) -> StackConfig {
        self.stack_config(self.states[0], self.fingerprint_layers[0])
    }

    /// Fully resolved configuration in the input format.
    pub fn to_text(&self) -> String {
        let join = |xs: Vec<String>| xs.join(",");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        kv("states", join(self.states.iter().map(usize::to_string).collect()));
        kv("max_layers", self.max_layers.to_string());
        kv("pool_size", self.pool_size.to_string());
        kv(
            "predecessors",
            match self.predecessors {
                PredecessorMode::All => "all".into(),
                PredecessorMode::Window(n) => n.to_string(),
            },
        );
        kv("em_max_iters", self.em_max_iters.to_string());
        kv("em_tol", self.em_tol.to_string());
        kv("smoothing", self.smoothing.to_string());
        kv(
            "fingerprint",
            match self.fingerprint {
                NGram::Unigram => "unigram",
                NGram::UniBigram => "unibigram",
            }
            .into(),
        );
        kv(
            "fingerprint_layers",
            join(
                self.fingerprint_layers
                    .iter()
                    .map(|l| match l {
                        LayerSelection::Last => "last".to_string(),
                        LayerSelection::All => "all".to_string(),
                    })
                    .collect(),
            ),
        );
        kv("normalize", self.normalize.to_string());
        kv("kernel", self.kernel.clone());
        kv("gamma", self.gamma.to_string());
        kv("cv", self.cv.to_string());
        kv("seed", self.seed.to_string());
        kv("threads", self.threads.to_string());
        kv("validation_fraction", self.validation_fraction.to_string());
        kv("patience", self.patience.to_string());
        kv("classifier_l2", self.classifier_l2.to_string());
        kv("classifier_epochs", self.classifier_epochs.to_string());
        kv("classifier_tol", self.classifier_tol.to_string());
        out
    }
}

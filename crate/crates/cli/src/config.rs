//! JSON experiment configuration.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use gsi_core::{GanConfig, GdConfig, KnnWeighting, Regularizer};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("config error at `{key}`: {reason}")]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, reason: impl fmt::Display) -> Self {
        Self {
            key: key.into(),
            reason: reason.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Graph-regularized GAN.
    Proposed,
    /// Same GAN with `beta = 0`.
    Gain,
    /// Gradient-descent baseline.
    Gd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Proposed, Method::Gain, Method::Gd];

    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Gain => "gain",
            Method::Gd => "gd",
        }
    }

    pub fn is_gan(self) -> bool {
        matches!(self, Method::Proposed | Method::Gain)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| {
                ConfigError::new(
                    "methods",
                    format!("unknown method `{s}` (expected proposed, gain or gd)"),
                )
            })
    }
}

pub fn parse_methods(list: &str) -> Result<Vec<Method>, ConfigError> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphSpec {
    pub n_nodes: usize,
    pub k: usize,
    pub weighting: KnnWeighting,
}

impl Default for GraphSpec {
    fn default() -> Self {
        Self {
            n_nodes: 64,
            k: 6,
            weighting: KnnWeighting::Binary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    Smooth {
        #[serde(default = "default_filter_decay")]
        filter_decay: f64,
    },
    Bandlimited {
        k: usize,
    },
}

fn default_filter_decay() -> f64 {
    3.0
}

impl Default for SignalSpec {
    fn default() -> Self {
        SignalSpec::Smooth {
            filter_decay: default_filter_decay(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub graph: GraphSpec,
    pub signal: SignalSpec,
    pub r_train: usize,
    pub r_test: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            graph: GraphSpec::default(),
            signal: SignalSpec::default(),
            r_train: 2000,
            r_test: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MnistSpec {
    pub train_images: PathBuf,
    pub test_images: PathBuf,
    /// Training images whose pixel values form the k-NN node features.
    #[serde(default = "default_graph_subsample")]
    pub graph_subsample: usize,
    #[serde(default = "default_mnist_k")]
    pub k: usize,
    #[serde(default)]
    pub weighting: KnnWeighting,
    #[serde(default)]
    pub max_train: Option<usize>,
    #[serde(default)]
    pub max_test: Option<usize>,
}

fn default_graph_subsample() -> usize {
    1000
}

fn default_mnist_k() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Mnist(MnistSpec),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SyntheticSpec::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub mask_probability: f64,
    pub methods: Vec<Method>,
    /// Shared by `proposed` and `gain`; `gain` overrides `beta` with 0.
    /// `gan.seed` is replaced per run by a seed derived from `seeds`.
    pub gan: GanConfig,
    pub gd: GdConfig,
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::default(),
            mask_probability: 0.5,
            methods: Method::ALL.to_vec(),
            gan: GanConfig::default(),
            gd: GdConfig::default(),
            output_dir: PathBuf::from("out"),
            seeds: vec![0],
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = self.mask_probability;
        if !(p > 0.0 && p <= 1.0) {
            return Err(ConfigError::new(
                "mask_probability",
                format!("must lie in (0, 1], got {p}"),
            ));
        }
        if self.methods.is_empty() {
            return Err(ConfigError::new(
                "methods",
                "at least one method is required",
            ));
        }
        let unique: BTreeSet<_> = self.methods.iter().collect();
        if unique.len() != self.methods.len() {
            return Err(ConfigError::new("methods", "methods must not repeat"));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::new("seeds", "at least one seed is required"));
        }
        validate_gan(&self.gan)?;
        validate_gd(&self.gd)?;
        match &self.data {
            DataSource::Synthetic(s) => validate_synthetic(s),
            DataSource::Mnist(m) => validate_mnist(m),
        }
    }

    pub fn uses_gan(&self) -> bool {
        self.methods.iter().any(|m| m.is_gan())
    }

    /// Effective GAN configuration of `method` for one run seed.
    pub fn gan_for(&self, method: Method, gan_seed: u64) -> GanConfig {
        let mut cfg = self.gan.clone();
        cfg.seed = gan_seed;
        if method == Method::Gain {
            cfg.beta = 0.0;
        }
        cfg
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(
            key,
            format!("must be a positive number, got {v}"),
        ))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(
            key,
            format!("must be a non-negative number, got {v}"),
        ))
    }
}

fn at_least_one(key: &str, v: usize) -> Result<(), ConfigError> {
    if v >= 1 {
        Ok(())
    } else {
        Err(ConfigError::new(key, "must be at least 1"))
    }
}

fn validate_gan(g: &GanConfig) -> Result<(), ConfigError> {
    non_negative("gan.alpha", g.alpha)?;
    non_negative("gan.beta", g.beta)?;
    at_least_one("gan.batch_size", g.batch_size)?;
    at_least_one("gan.epochs", g.epochs)?;
    at_least_one("gan.d_steps_per_g_step", g.d_steps_per_g_step)?;
    positive("gan.tau", g.tau)?;
    positive("gan.lr_g", g.lr_g)?;
    positive("gan.lr_d", g.lr_d)?;
    if let Some(i) = g.hidden.iter().position(|&h| h == 0) {
        return Err(ConfigError::new(
            format!("gan.hidden[{i}]"),
            "must be at least 1",
        ));
    }
    if let Regularizer::BlEnergy { k } = g.regularizer {
        at_least_one("gan.regularizer.k", k)?;
    }
    Ok(())
}

fn validate_gd(g: &GdConfig) -> Result<(), ConfigError> {
    positive("gd.mu", g.mu)?;
    non_negative("gd.beta", g.beta)
}

fn validate_synthetic(s: &SyntheticSpec) -> Result<(), ConfigError> {
    let n = s.graph.n_nodes;
    if n < 2 {
        return Err(ConfigError::new("data.graph.n_nodes", "must be at least 2"));
    }
    if s.graph.k == 0 || s.graph.k >= n {
        return Err(ConfigError::new(
            "data.graph.k",
            format!("must lie in 1..{n}, got {}", s.graph.k),
        ));
    }
    at_least_one("data.r_train", s.r_train)?;
    at_least_one("data.r_test", s.r_test)?;
    match s.signal {
        SignalSpec::Smooth { filter_decay } => {
            non_negative("data.signal.filter_decay", filter_decay)
        }
        SignalSpec::Bandlimited { k } if k == 0 || k > n => Err(ConfigError::new(
            "data.signal.k",
            format!("must lie in 1..={n}, got {k}"),
        )),
        SignalSpec::Bandlimited { .. } => Ok(()),
    }
}

fn validate_mnist(m: &MnistSpec) -> Result<(), ConfigError> {
    at_least_one("data.graph_subsample", m.graph_subsample)?;
    at_least_one("data.k", m.k)?;
    if m.max_train == Some(0) {
        return Err(ConfigError::new("data.max_train", "must be at least 1"));
    }
    if m.max_test == Some(0) {
        return Err(ConfigError::new("data.max_test", "must be at least 1"));
    }
    Ok(())
}

/// A parsed configuration with the keys that were filled from defaults.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub config: ExperimentConfig,
    pub defaulted: Vec<String>,
}

pub fn parse_config(text: &str) -> Result<ResolvedConfig, ConfigError> {
    let raw: Value = serde_json::from_str(text).map_err(|e| ConfigError::new("<root>", e))?;
    let mut de = serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let key = e.path().to_string();
        let key = if key == "." {
            "<root>".to_string()
        } else {
            key
        };
        ConfigError::new(key, e.into_inner())
    })?;
    config.validate()?;
    let resolved = serde_json::to_value(&config).expect("config serializes");
    let mut defaulted = Vec::new();
    missing_keys(&resolved, &raw, String::new(), &mut defaulted);
    Ok(ResolvedConfig { config, defaulted })
}

pub fn load_config(path: &Path) -> Result<ResolvedConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Leaf paths present in `resolved` but absent from `raw`.
fn missing_keys(resolved: &Value, raw: &Value, prefix: String, out: &mut Vec<String>) {
    let Value::Object(fields) = resolved else {
        return;
    };
    for (key, value) in fields {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match (raw.get(key), value) {
            (None, Value::Object(_)) => missing_keys(value, &Value::Null, path, out),
            (None, _) => out.push(path),
            (Some(inner), _) => missing_keys(value, inner, path, out),
        }
    }
}

//! Configuration loading, validation and error/exit-code policy.
//!
//! Every command reads a single JSON config file. Unknown keys are rejected
//! so that a typo cannot silently fall back to a default. The seed given on
//! the command line overrides the one in the file; one of the two must be
//! present.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::Error as _;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use scorecast::corpus::{AgreementScope, InclusionPolicy, LabelMode, LabelScheme, SyntheticSpec};
use scorecast::features::InputSet;
use scorecast::learners::ModelSpec;
use scorecast::strategies::active::ActiveLearningConfig;
use scorecast::strategies::SplitPlan;

/// Process exit code for configuration problems (bad file, bad schema,
/// invalid values, missing seed).
pub const EXIT_CONFIG: i32 = 2;
/// Process exit code for data problems (unreadable corpus, malformed rows,
/// degenerate splits, empty inputs).
pub const EXIT_DATA: i32 = 3;
/// Process exit code for internal failures (output files cannot be
/// written, serialization failures).
pub const EXIT_INTERNAL: i32 = 4;

/// An error carrying the pipeline stage it happened in and the exit code it
/// should terminate the process with.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error [{}]: {}", self.stage, self.message)
    }
}

impl CliError {
    pub fn config(stage: &'static str, message: impl Into<String>) -> Self {
        CliError { stage, code: EXIT_CONFIG, message: message.into() }
    }

    pub fn data(stage: &'static str, message: impl Into<String>) -> Self {
        CliError { stage, code: EXIT_DATA, message: message.into() }
    }

    pub fn internal(stage: &'static str, message: impl Into<String>) -> Self {
        CliError { stage, code: EXIT_INTERNAL, message: message.into() }
    }

    /// Wrap a library error, choosing the exit code from the error kind:
    /// invalid settings are configuration errors, everything else the
    /// library raises concerns the data it was fed.
    pub fn from_core(stage: &'static str, err: scorecast::Error) -> Self {
        let code = match &err {
            scorecast::Error::InvalidSpec(_) => EXIT_CONFIG,
            _ => EXIT_DATA,
        };
        CliError { stage, code, message: err.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn d_k_total() -> usize {
    1000
}

fn d_top_n() -> usize {
    10
}

fn d_eligible_fraction() -> f64 {
    0.626
}

fn d_n_iterations() -> usize {
    10
}

fn d_agreement_scope() -> AgreementScope {
    AgreementScope::WithinUoa
}

/// Split settings for the fixed-fraction strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Strategy1Cfg {
    pub train_fraction: f64,
    #[serde(default = "d_n_iterations")]
    pub n_iterations: usize,
}

/// Split settings plus the confidence threshold for the guaranteed-accuracy
/// strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Strategy2Cfg {
    pub train_fraction: f64,
    #[serde(default = "d_n_iterations")]
    pub n_iterations: usize,
    pub threshold: f64,
}

/// Settings for training on one year and scoring the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossYearCfg {
    pub train_year: i32,
    pub test_years: Vec<i32>,
    #[serde(default = "d_n_iterations")]
    pub n_iterations: usize,
}

/// Which experiment the `run` command executes, tagged by `kind` in the
/// config file.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategyChoice {
    Strategy1(Strategy1Cfg),
    Strategy2(Strategy2Cfg),
    ActiveLearning(ActiveLearningConfig),
    CrossYear(CrossYearCfg),
}

impl StrategyChoice {
    pub fn kind(&self) -> &'static str {
        match self {
            StrategyChoice::Strategy1(_) => "strategy1",
            StrategyChoice::Strategy2(_) => "strategy2",
            StrategyChoice::ActiveLearning(_) => "active_learning",
            StrategyChoice::CrossYear(_) => "cross_year",
        }
    }

    fn inner_value(&self) -> Value {
        match self {
            StrategyChoice::Strategy1(c) => serde_json::to_value(c),
            StrategyChoice::Strategy2(c) => serde_json::to_value(c),
            StrategyChoice::ActiveLearning(c) => serde_json::to_value(c),
            StrategyChoice::CrossYear(c) => serde_json::to_value(c),
        }
        .expect("strategy settings serialize")
    }
}

impl Serialize for StrategyChoice {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut value = self.inner_value();
        value
            .as_object_mut()
            .expect("strategy settings are an object")
            .insert("kind".into(), Value::String(self.kind().into()));
        value.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StrategyChoice {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let mut value = Value::deserialize(deserializer)?;
        let object = value
            .as_object_mut()
            .ok_or_else(|| D::Error::custom("strategy: expected an object"))?;
        let kind = match object.remove("kind") {
            Some(Value::String(s)) => s,
            Some(_) => return Err(D::Error::custom("strategy.kind: expected a string")),
            None => return Err(D::Error::custom("strategy.kind: missing")),
        };
        let rest = Value::Object(object.clone());
        let wrap = |e: serde_json::Error| D::Error::custom(format!("strategy: {e}"));
        match kind.as_str() {
            "strategy1" => Ok(StrategyChoice::Strategy1(serde_json::from_value(rest).map_err(wrap)?)),
            "strategy2" => Ok(StrategyChoice::Strategy2(serde_json::from_value(rest).map_err(wrap)?)),
            "active_learning" | "strategy3" => {
                Ok(StrategyChoice::ActiveLearning(serde_json::from_value(rest).map_err(wrap)?))
            }
            "cross_year" => Ok(StrategyChoice::CrossYear(serde_json::from_value(rest).map_err(wrap)?)),
            other => Err(D::Error::custom(format!(
                "strategy.kind: unknown kind `{other}` (expected strategy1, strategy2, \
                 active_learning/strategy3 or cross_year)"
            ))),
        }
    }
}

/// Full configuration for the `run` command. Also consumed (in part) by
/// `terms`, `agreement` and `homogeneity`, which stop after the corpus
/// stages.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; the `--seed` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Read the corpus from a file (`.csv` or JSON-lines).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_path: Option<PathBuf>,
    /// Generate the corpus from a generator-spec JSON file instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_spec: Option<PathBuf>,
    pub label_mode: LabelMode,
    #[serde(default)]
    pub inclusion: InclusionPolicy,
    pub input_set: InputSet,
    #[serde(default = "d_k_total")]
    pub k_total: usize,
    pub model: ModelSpec,
    pub strategy: StrategyChoice,
    /// Rows per class in the term-association report.
    #[serde(default = "d_top_n")]
    pub top_n: usize,
    #[serde(default = "d_agreement_scope")]
    pub agreement_scope: AgreementScope,
    /// Fraction of output wired to model-eligible articles when blending
    /// human and machine scoring into an overall accuracy.
    #[serde(default = "d_eligible_fraction")]
    pub eligible_fraction: f64,
    /// Output directory; the `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

/// A [`RunConfig`] with seed and output directory fully resolved.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub config: RunConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl ResolvedConfig {
    pub fn scheme(&self) -> LabelScheme {
        LabelScheme::new(self.config.label_mode)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::config("config", format!("cannot read {what} `{}`: {e}", path.display()))
    })?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path_str = e.path().to_string();
        let prefix = if path_str == "." { String::new() } else { format!("{path_str}: ") };
        CliError::config(
            "config",
            format!("{what} `{}`: {prefix}{}", path.display(), e.into_inner()),
        )
    })
}

/// Load, resolve and validate a run configuration.
pub fn load_run_config(
    path: &Path,
    seed_flag: Option<u64>,
    out_flag: Option<PathBuf>,
) -> CliResult<ResolvedConfig> {
    let mut config: RunConfig = read_json(path, "config")?;

    match (&config.corpus_path, &config.synthetic_spec) {
        (Some(_), Some(_)) => {
            return Err(CliError::config(
                "config",
                "corpus_path and synthetic_spec are mutually exclusive; set exactly one",
            ));
        }
        (None, None) => {
            return Err(CliError::config(
                "config",
                "no corpus source: set corpus_path or synthetic_spec",
            ));
        }
        _ => {}
    }

    let seed = seed_flag.or(config.seed).ok_or_else(|| {
        CliError::config("config", "seed: missing (set `seed` in the config or pass --seed)")
    })?;
    config.seed = Some(seed);

    let out_dir = out_flag.or_else(|| config.out_dir.clone()).ok_or_else(|| {
        CliError::config("config", "output directory: missing (set `out_dir` or pass --out)")
    })?;
    config.out_dir = Some(out_dir.clone());

    config.model.validate().map_err(|e| CliError::config("config", format!("model: {e}")))?;

    if !(config.eligible_fraction >= 0.0 && config.eligible_fraction <= 1.0) {
        return Err(CliError::config("config", "eligible_fraction: must lie in [0, 1]"));
    }
    if config.input_set == InputSet::WithText && config.k_total <= config.input_set.n_dense() {
        return Err(CliError::config(
            "config",
            format!(
                "k_total: must exceed the {} dense columns when text features are enabled",
                config.input_set.n_dense()
            ),
        ));
    }

    match &config.strategy {
        StrategyChoice::Strategy1(c) => {
            let plan =
                SplitPlan { train_fraction: c.train_fraction, n_iterations: c.n_iterations, seed };
            plan.validate().map_err(|e| CliError::config("config", format!("strategy: {e}")))?;
        }
        StrategyChoice::Strategy2(c) => {
            let plan =
                SplitPlan { train_fraction: c.train_fraction, n_iterations: c.n_iterations, seed };
            plan.validate().map_err(|e| CliError::config("config", format!("strategy: {e}")))?;
            if !(c.threshold > 0.0 && c.threshold <= 1.0) {
                return Err(CliError::config("config", "strategy.threshold: must lie in (0, 1]"));
            }
        }
        StrategyChoice::ActiveLearning(c) => {
            c.validate().map_err(|e| CliError::config("config", format!("strategy: {e}")))?;
        }
        StrategyChoice::CrossYear(c) => {
            if c.n_iterations < 1 {
                return Err(CliError::config("config", "strategy.n_iterations: must be ≥ 1"));
            }
            if c.test_years.is_empty() {
                return Err(CliError::config("config", "strategy.test_years: must be non-empty"));
            }
        }
    }

    Ok(ResolvedConfig { config, seed, out_dir })
}

/// Load and validate a synthetic-corpus generator spec (for `synth`).
pub fn load_synth_spec(path: &Path) -> CliResult<SyntheticSpec> {
    let spec: SyntheticSpec = read_json(path, "generator spec")?;
    spec.validate().map_err(|e| CliError::config("config", e.to_string()))?;
    Ok(spec)
}

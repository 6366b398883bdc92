//! Run configuration: a JSON file with a schema-version key, overridden by flags.
//!
//! Precedence, highest first: command-line flag, config file value, the `VDD_SEED`
//! environment variable (seed only), built-in default. Relative paths in a config
//! file resolve against the file's directory.

use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use vdd_core::decoding::{DebiasMode, Strategy, DEFAULT_ALPHA, DEFAULT_BETA};
use vdd_core::source::{ProceduralModelSpec, Variant};
use vdd_core::sweep::SelectionMode;

use crate::error::{Error, Result};

pub const CONFIG_FORMAT: &str = "vdd-config/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Probe,
    Classify,
    Generate,
    Sweep,
    Eval,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Probe => "probe",
            Task::Classify => "classify",
            Task::Generate => "generate",
            Task::Sweep => "sweep",
            Task::Eval => "eval",
        }
    }
}

/// Exactly one logit source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Trace {
        path: PathBuf,
        samples: PathBuf,
    },
    Scenario {
        path: PathBuf,
    },
    Procedural {
        spec: ProceduralModelSpec,
        samples: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodingSection {
    #[serde(default = "greedy")]
    pub strategy: Strategy,
    #[serde(default)]
    pub debias: DebiasMode,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_max_new_tokens")]
    pub max_new_tokens: usize,
    /// Token strings; `<eos>` when absent and present in the vocabulary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_tokens: Option<Vec<String>>,
}

fn greedy() -> Strategy {
    Strategy::Greedy
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_beta() -> f64 {
    DEFAULT_BETA
}
fn default_max_new_tokens() -> usize {
    16
}

impl Default for DecodingSection {
    fn default() -> Self {
        Self {
            strategy: greedy(),
            debias: DebiasMode::Naive,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            max_new_tokens: default_max_new_tokens(),
            stop_tokens: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub decoding: DecodingSection,
    /// Degenerate variants averaged into the post-hoc prior.
    #[serde(default = "default_variants")]
    pub debias_variants: Vec<Variant>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
    #[serde(default = "default_mode")]
    pub mode: SelectionMode,
    #[serde(default = "default_top_n")]
    pub top_n: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_label: Option<String>,
    /// Classification records consumed by `eval`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub debug_steps: bool,
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::NoneCtx, Variant::Unk]
}
fn default_epsilon() -> f64 {
    vdd_core::calibration::DEFAULT_EPSILON
}
fn default_mode() -> SelectionMode {
    SelectionMode::Oracle
}
fn default_top_n() -> usize {
    15
}
fn default_bins() -> usize {
    10
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str(&format!("{{\"format\":\"{CONFIG_FORMAT}\"}}")).expect("defaults parse")
    }
}

impl RunConfig {
    /// Reads a config file and resolves its relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    /// Parses config text; the error names the offending key where serde reports one.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let key = offending_key(&msg).unwrap_or_else(|| "<document>".to_string());
            Error::config(key, msg)
        })?;
        if cfg.format != CONFIG_FORMAT {
            return Err(Error::config(
                "format",
                format!("expected {CONFIG_FORMAT:?}, got {:?}", cfg.format),
            ));
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.source {
            Some(SourceConfig::Trace { path, samples }) => {
                fix(path);
                fix(samples);
            }
            Some(SourceConfig::Scenario { path }) => fix(path),
            Some(SourceConfig::Procedural { samples, .. }) => fix(samples),
            None => {}
        }
        if let Some(p) = &mut self.output {
            fix(p);
        }
        if let Some(p) = &mut self.input {
            fix(p);
        }
    }

    /// Checks cross-field constraints once flags have been applied.
    pub fn validate(&self) -> Result<()> {
        let task = self.task.ok_or_else(|| Error::config("task", "no task given"))?;
        if task != Task::Eval && self.source.is_none() {
            return Err(Error::config("source", "exactly one source is required"));
        }
        if task == Task::Eval && self.input.is_none() {
            return Err(Error::config("input", "eval needs classification records (--input)"));
        }
        if self.output.is_none() {
            return Err(Error::config("output", "no output directory given"));
        }
        if self.debias_variants.is_empty() && task == Task::Classify {
            return Err(Error::config("debias_variants", "at least one variant is required"));
        }
        if let Some(v) = self.debias_variants.iter().find(|v| !v.is_degenerate()) {
            return Err(Error::config(
                "debias_variants",
                format!("{v} is not a degenerate variant"),
            ));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::config("epsilon", "must be > 0"));
        }
        if self.top_n < 1 {
            return Err(Error::config("top_n", "must be >= 1"));
        }
        if self.bins < 1 {
            return Err(Error::config("bins", "must be >= 1"));
        }
        if self.parallelism == Some(0) {
            return Err(Error::config("parallelism", "must be >= 1"));
        }
        let d = &self.decoding;
        d.strategy
            .validate()
            .map_err(|e| Error::config("decoding.strategy", e.to_string()))?;
        if !(d.alpha >= 0.0 && d.alpha.is_finite()) {
            return Err(Error::config("decoding.alpha", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&d.beta) {
            return Err(Error::config("decoding.beta", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Copy with every path rewritten relative to `dir`, for the config echo.
    pub fn relative_to(&self, dir: &Path) -> Self {
        let mut out = self.clone();
        let rel = |p: &mut PathBuf| *p = relative_path(p, dir);
        match &mut out.source {
            Some(SourceConfig::Trace { path, samples }) => {
                rel(path);
                rel(samples);
            }
            Some(SourceConfig::Scenario { path }) => rel(path),
            Some(SourceConfig::Procedural { samples, .. }) => rel(samples),
            None => {}
        }
        if let Some(p) = &mut out.output {
            rel(p);
        }
        if let Some(p) = &mut out.input {
            rel(p);
        }
        out
    }
}

fn offending_key(msg: &str) -> Option<String> {
    for marker in ["unknown field `", "missing field `", "unknown variant `"] {
        if let Some(i) = msg.find(marker) {
            let rest = &msg[i + marker.len()..];
            return rest.find('`').map(|j| rest[..j].to_string());
        }
    }
    None
}

fn absolute(p: &Path) -> PathBuf {
    let p = if p.is_absolute() {
        p.to_path_buf()
    } else {
        std::env::current_dir().unwrap_or_default().join(p)
    };
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    out
}

/// `path` expressed relative to `dir`, both taken lexically; uses `/` separators.
pub fn relative_path(path: &Path, dir: &Path) -> PathBuf {
    let path = absolute(path);
    let dir = absolute(dir);
    let a: Vec<_> = path.components().collect();
    let b: Vec<_> = dir.components().collect();
    let common = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut parts: Vec<String> = std::iter::repeat_n("..".to_string(), b.len() - common).collect();
    parts.extend(a[common..].iter().map(|c| c.as_os_str().to_string_lossy().into_owned()));
    if parts.is_empty() {
        PathBuf::from(".")
    } else {
        PathBuf::from(parts.join("/"))
    }
}

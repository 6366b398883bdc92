//! The `vdd` command line.
//!
//! Exit codes: 0 success, 2 configuration error, 1 runtime error. Result files are
//! named `<task>-<hash>-s<seed>.*` where `<hash>` is the first 12 hex digits of the
//! SHA-256 of the config echo written next to them.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use vdd_core::calibration::{CandidateScoring, PosthocOptions};
use vdd_core::decoding::{DebiasMode, DecodingConfig};
use vdd_core::eval::probe_report;
use vdd_core::source::{noise_seed, ProceduralModel, Sample, ScenarioSource, Variant, VisualContext};
use vdd_core::sweep::{summarize, SelectionMode};
use vdd_core::{Prompt, Vocabulary};

use crate::config::{RunConfig, SourceConfig, Task};
use crate::error::{Error, Result};
use crate::report::{bins_csv, classification_report};
use crate::runner::{classify_batch, generate_batch, run_sweep, ClassifyRecord, SharedSource};
use crate::samples::{load_samples, load_scenario};
use crate::trace::load_trace;

pub const SEED_ENV: &str = "VDD_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "vdd",
    version,
    about = "Debiased scoring and decoding over recorded or synthetic logits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank candidate answers under degenerate visual contexts.
    Probe(RunArgs),
    /// Score candidates naively and with post-hoc debiasing.
    Classify(RunArgs),
    /// Open-ended generation with optional contrastive debiasing.
    Generate(RunArgs),
    /// Run the 49-point decoding grid and select per group.
    Sweep(RunArgs),
    /// Metrics and confidence bins over classification records.
    Eval(RunArgs),
    /// Write the deterministic fixture set.
    MakeFixtures(FixtureArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Variant list for probe/classify/eval (`none,unk`, `both`), mode for generate/sweep.
    #[arg(long)]
    pub debias: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// `oracle` or `fixed`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub top_n: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub positive_label: Option<String>,
    #[arg(long)]
    pub debug_steps: bool,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(Outcome { line, failures }) => {
            println!("{line}");
            if failures > 0 {
                eprintln!("error: {failures} record(s) failed; results were written");
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}

struct Outcome {
    line: String,
    failures: usize,
}

fn execute(command: Command) -> Result<Outcome> {
    let (task, args) = match command {
        Command::MakeFixtures(f) => {
            let written = crate::fixtures::make_fixtures(&f.output, f.seed)?;
            return Ok(Outcome {
                line: format!("make-fixtures: wrote {} files to {}", written.len(), f.output.display()),
                failures: 0,
            });
        }
        Command::Probe(a) => (Task::Probe, a),
        Command::Classify(a) => (Task::Classify, a),
        Command::Generate(a) => (Task::Generate, a),
        Command::Sweep(a) => (Task::Sweep, a),
        Command::Eval(a) => (Task::Eval, a),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = resolve(task, &args, env_seed.as_deref())?;
    let parallelism = cfg.parallelism.unwrap_or_else(default_parallelism);
    let seed = cfg.seed.unwrap_or(0);
    let out_dir = cfg.output.clone().expect("validated");
    let echo = echo_bytes(&cfg, &out_dir);
    let stem = format!(
        "{}-{}-s{seed}",
        task.as_str(),
        &hex::encode(Sha256::digest(&echo))[..12]
    );
    let out = Output::create(out_dir, stem)?;
    out.write("config.json", &echo)?;
    match task {
        Task::Probe => probe(&cfg, seed, &out),
        Task::Classify => classify(&cfg, seed, parallelism, &out),
        Task::Generate => generate(&cfg, seed, parallelism, &out),
        Task::Sweep => sweep(&cfg, seed, parallelism, &out),
        Task::Eval => eval(&cfg, &out),
    }
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Merges config file, flags and the environment seed, then validates.
pub fn resolve(task: Task, args: &RunArgs, env_seed: Option<&str>) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.task = Some(task);
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if cfg.seed.is_none() {
        cfg.seed = match env_seed {
            Some(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| Error::config(SEED_ENV, format!("not an unsigned integer: {v:?}")))?,
            ),
            None => Some(0),
        };
    }
    if let Some(p) = args.parallelism {
        cfg.parallelism = Some(p);
    }
    if let Some(a) = args.alpha {
        cfg.decoding.alpha = a;
    }
    if let Some(b) = args.beta {
        cfg.decoding.beta = b;
    }
    if let Some(d) = &args.debias {
        match task {
            Task::Generate | Task::Sweep => {
                cfg.decoding.debias = d
                    .parse::<DebiasMode>()
                    .map_err(|e| Error::config("--debias", e.to_string()))?;
            }
            _ => cfg.debias_variants = parse_variants(d)?,
        }
    }
    if let Some(o) = &args.output {
        cfg.output = Some(o.clone());
    }
    if let Some(m) = &args.mode {
        cfg.mode = m
            .parse::<SelectionMode>()
            .map_err(|e| Error::config("--mode", e.to_string()))?;
    }
    if let Some(n) = args.top_n {
        cfg.top_n = n;
    }
    if let Some(n) = args.bins {
        cfg.bins = n;
    }
    if let Some(i) = &args.input {
        cfg.input = Some(i.clone());
    }
    if let Some(l) = &args.positive_label {
        cfg.positive_label = Some(l.clone());
    }
    if args.debug_steps {
        cfg.debug_steps = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `both` expands to `none,unk`.
pub fn parse_variants(list: &str) -> Result<Vec<Variant>> {
    let mut out: Vec<Variant> = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let items = match item {
            "both" => vec![Variant::NoneCtx, Variant::Unk],
            other => vec![other
                .parse::<Variant>()
                .map_err(|e| Error::config("--debias", e.to_string()))?],
        };
        for v in items {
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    Ok(out)
}

/// Config echo: paths relative to the output directory, thread count omitted.
fn echo_bytes(cfg: &RunConfig, out_dir: &Path) -> Vec<u8> {
    let mut echo = cfg.relative_to(out_dir);
    echo.parallelism = None;
    let mut s = serde_json::to_string_pretty(&echo).expect("config serializes");
    s.push('\n');
    s.into_bytes()
}

struct Output {
    dir: PathBuf,
    stem: String,
}

impl Output {
    fn create(dir: PathBuf, stem: String) -> Result<Self> {
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir, stem })
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}.{suffix}", self.stem))
    }

    fn write(&self, suffix: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.path(suffix);
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }

    fn jsonl<T: Serialize>(&self, suffix: &str, rows: &[T]) -> Result<PathBuf> {
        let mut buf = String::new();
        for r in rows {
            buf.push_str(&serde_json::to_string(r).expect("record serializes"));
            buf.push('\n');
        }
        self.write(suffix, buf.as_bytes())
    }

    fn json<T: Serialize>(&self, suffix: &str, value: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value).expect("summary serializes");
        s.push('\n');
        self.write(suffix, s.as_bytes())
    }
}

struct Loaded {
    source: Box<SharedSource>,
    samples: Vec<Sample>,
}

fn source_error(e: Error) -> Error {
    match e {
        Error::Config { .. } => e,
        other => Error::config("source", other.to_string()),
    }
}

fn load_source(cfg: &RunConfig) -> Result<Loaded> {
    let loaded = match cfg.source.as_ref().expect("validated") {
        SourceConfig::Trace { path, samples } => {
            let trace = load_trace(path).map_err(source_error)?;
            let samples = load_samples(samples, vdd_core::LogitSource::vocabulary(&trace)).map_err(source_error)?;
            Loaded {
                source: Box::new(trace),
                samples,
            }
        }
        SourceConfig::Scenario { path } => {
            let scenario: ScenarioSource = load_scenario(path).map_err(source_error)?;
            let samples = scenario.samples().to_vec();
            Loaded {
                source: Box::new(scenario),
                samples,
            }
        }
        SourceConfig::Procedural { spec, samples } => {
            let model = ProceduralModel::new(spec.clone())
                .map_err(|e| Error::config("source.procedural.spec", e.to_string()))?;
            let samples = load_samples(samples, vdd_core::LogitSource::vocabulary(&model)).map_err(source_error)?;
            Loaded {
                source: Box::new(model),
                samples,
            }
        }
    };
    Ok(loaded)
}

fn decoding_config(cfg: &RunConfig, vocab: &Vocabulary, seed: u64) -> Result<DecodingConfig> {
    let d = &cfg.decoding;
    let stop_tokens = match &d.stop_tokens {
        Some(list) => list
            .iter()
            .map(|t| {
                vocab
                    .id(t)
                    .ok_or_else(|| Error::config("decoding.stop_tokens", format!("{t:?} is not in the vocabulary")))
            })
            .collect::<Result<Vec<_>>>()?,
        None => vocab.id(vdd_core::source::scenario::EOS_TOKEN).into_iter().collect(),
    };
    let config = DecodingConfig {
        strategy: d.strategy,
        debias: d.debias,
        alpha: d.alpha,
        beta: d.beta,
        max_new_tokens: d.max_new_tokens,
        stop_tokens,
        seed,
    };
    config
        .validate()
        .map_err(|e| Error::config("decoding", e.to_string()))?;
    Ok(config)
}

fn context_for(variant: Variant, seed: u64) -> VisualContext {
    match variant {
        Variant::Real => VisualContext::Real { id: String::new() },
        Variant::NoneCtx => VisualContext::NoneCtx,
        Variant::Unk => VisualContext::Unk,
        Variant::Noise => VisualContext::Noise {
            seed: noise_seed(seed, "probe"),
        },
        Variant::Zeros => VisualContext::Zeros,
        Variant::Ones => VisualContext::Ones,
    }
}

fn probe(cfg: &RunConfig, seed: u64, out: &Output) -> Result<Outcome> {
    let loaded = load_source(cfg)?;
    let prompts: Vec<Prompt> = loaded
        .samples
        .iter()
        .filter(|s| s.prompt.candidates.is_some())
        .map(|s| s.prompt.clone())
        .collect();
    let contexts: Vec<VisualContext> = cfg.debias_variants.iter().map(|&v| context_for(v, seed)).collect();
    let tables = probe_report(&*loaded.source, &prompts, &contexts, cfg.top_n)?;
    let mut tsv = String::from("variant\trank\tanswer\tprobability\n");
    for t in &tables {
        for r in &t.rows {
            tsv.push_str(&format!("{}\t{}\t{}\t{}\n", t.variant, r.rank, r.answer, r.probability));
        }
    }
    let path = out.write("tsv", tsv.as_bytes())?;
    Ok(Outcome {
        line: format!(
            "probe: {} prompts, {} variants -> {}",
            prompts.len(),
            tables.len(),
            path.display()
        ),
        failures: 0,
    })
}

fn classify(cfg: &RunConfig, seed: u64, parallelism: usize, out: &Output) -> Result<Outcome> {
    let loaded = load_source(cfg)?;
    let options = PosthocOptions {
        variants: cfg.debias_variants.clone(),
        epsilon: cfg.epsilon,
        scoring: CandidateScoring::Sum,
        seed,
    };
    let records = classify_batch(&*loaded.source, &loaded.samples, &options, parallelism)?;
    out.jsonl("jsonl", &records)?;
    let report = classification_report(&records, cfg.positive_label.as_deref(), cfg.bins)?;
    let path = out.json("summary.json", &report)?;
    Ok(Outcome {
        line: format!(
            "classify: {} samples, naive accuracy {:.4}, debiased accuracy {:.4} -> {}",
            report.samples,
            report.naive.accuracy,
            report.debiased.accuracy,
            path.display()
        ),
        failures: report.errors,
    })
}

#[derive(Serialize)]
struct GenerateSummary {
    samples: usize,
    errors: usize,
    accuracy: f64,
}

fn generate(cfg: &RunConfig, seed: u64, parallelism: usize, out: &Output) -> Result<Outcome> {
    let loaded = load_source(cfg)?;
    let config = decoding_config(cfg, loaded.source.vocabulary(), seed)?;
    let records = generate_batch(&*loaded.source, &loaded.samples, &config, parallelism)?;
    out.jsonl("jsonl", &records)?;
    if cfg.debug_steps {
        let steps: Vec<_> = records.iter().flat_map(|r| r.steps.iter()).collect();
        out.jsonl("steps.jsonl", &steps)?;
    }
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    let correct = records.iter().filter(|r| r.correct).count();
    let summary = GenerateSummary {
        samples: records.len(),
        errors,
        accuracy: if records.is_empty() {
            0.0
        } else {
            correct as f64 / records.len() as f64
        },
    };
    let path = out.json("summary.json", &summary)?;
    Ok(Outcome {
        line: format!(
            "generate: {} samples, accuracy {:.4} -> {}",
            summary.samples,
            summary.accuracy,
            path.display()
        ),
        failures: errors,
    })
}

fn sweep(cfg: &RunConfig, seed: u64, parallelism: usize, out: &Output) -> Result<Outcome> {
    let loaded = load_source(cfg)?;
    let base = decoding_config(cfg, loaded.source.vocabulary(), seed)?;
    let result = run_sweep(&*loaded.source, &loaded.samples, &base, parallelism)?;
    out.jsonl("jsonl", &result.records)?;
    out.jsonl("defaults.jsonl", &result.defaults)?;
    let summary = summarize(&result, cfg.mode);
    let path = out.json("summary.json", &summary)?;
    Ok(Outcome {
        line: format!(
            "sweep: {} samples x {} configs, temp {:.4}, top_p {:.4}, top_k {:.4}, overall {:.4}, default {:.4} -> {}",
            summary.samples,
            result.grid.points.len(),
            summary.groups.temp,
            summary.groups.top_p,
            summary.groups.top_k,
            summary.groups.overall,
            summary.default,
            path.display()
        ),
        failures: summary.errors,
    })
}

fn eval(cfg: &RunConfig, out: &Output) -> Result<Outcome> {
    let input = cfg.input.as_ref().expect("validated");
    let text = fs::read_to_string(input).map_err(|e| Error::config("input", format!("{}: {e}", input.display())))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: ClassifyRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: input.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(r);
    }
    let report = classification_report(&records, cfg.positive_label.as_deref(), cfg.bins)?;
    out.json("summary.json", &report)?;
    let path = out.write("bins.csv", bins_csv(&report).as_bytes())?;
    Ok(Outcome {
        line: format!(
            "eval: {} records, naive accuracy {:.4}, debiased accuracy {:.4} -> {}",
            report.samples,
            report.naive.accuracy,
            report.debiased.accuracy,
            path.display()
        ),
        failures: 0,
    })
}

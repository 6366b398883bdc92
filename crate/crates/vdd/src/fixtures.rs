//! Golden fixture set: a small recorded trace with its samples file, the
//! prior-versus-evidence scenario suite, the decoding grid, and ready-to-run configs.
//! Output is a pure function of the seed.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use vdd_core::decoding::DecodingConfig;
use vdd_core::source::scenario::{prior_vs_evidence, PriorEvidenceParams};
use vdd_core::source::{TraceSource, Variant};
use vdd_core::sweep::enumerate_configs;
use vdd_core::{LogitVector, SeededRng, Vocabulary};

use crate::error::{Error, Result};
use crate::samples::{SampleEntry, SamplesFile, SAMPLES_FORMAT};
use crate::trace::write_trace;

pub const TRACE_FILE: &str = "trace.jsonl";
pub const TRACE_SAMPLES_FILE: &str = "trace_samples.json";
pub const SCENARIO_FILE: &str = "scenarios.json";
pub const GRID_FILE: &str = "grid.golden.jsonl";
pub const SCENARIO_SUITE_SIZE: usize = 40;
pub const TRACE_STEPS: usize = 2;

const TRACE_VOCAB: [&str; 11] = [
    "<unk>", "<eos>", "is", "the", "fox", "brown", "?", "yes", "no", "ye", "s",
];

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn words(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// The three trace samples: yes/no questions, the third spelling "yes" as two tokens.
pub fn trace_samples() -> SamplesFile {
    let q = words(&["is", "the", "fox", "brown", "?"]);
    let entry = |id: &str, yes: &[&str], gold: &[&str]| SampleEntry {
        sample: id.to_string(),
        text: q.clone(),
        candidates: Some(vec![words(yes), words(&["no"])]),
        gold: words(gold),
    };
    SamplesFile {
        format: SAMPLES_FORMAT.to_string(),
        samples: vec![
            entry("s0", &["yes"], &["yes"]),
            entry("s1", &["yes"], &["no"]),
            entry("s2", &["ye", "s"], &["ye", "s"]),
        ],
    }
}

/// Recorded-style logits. Each step has a prior leaning towards "yes"; the real
/// row adds evidence for the gold answer that is weaker than that lean, and the
/// degenerate rows add a small per-variant jitter to the prior. Values are
/// rounded to four decimals. Step 1 is recorded along the first candidate.
pub fn trace_fixture(seed: u64) -> TraceSource {
    let vocab = Vocabulary::new(words(&TRACE_VOCAB)).expect("static vocabulary");
    let n = TRACE_VOCAB.len();
    let id = |t: &str| TRACE_VOCAB.iter().position(|w| *w == t).expect("fixture token");
    let mut rng = SeededRng::new(seed ^ 0x7472_6163_6500);
    let mut trace = TraceSource::new(vocab);
    for (sample, gold) in [("s0", "yes"), ("s1", "no"), ("s2", "ye")] {
        for step in 0..TRACE_STEPS {
            let mut prior: Vec<f64> = (0..n).map(|_| rng.uniform(-3.0, -1.0)).collect();
            let mut evidence: Vec<f64> = (0..n).map(|_| rng.uniform(-0.2, 0.2)).collect();
            if step == 0 {
                let base = rng.uniform(0.0, 0.5);
                prior[id("no")] = base;
                prior[id("yes")] = base + 1.5;
                prior[id("ye")] = base + 1.5;
                evidence[id("no")] = 0.0;
                evidence[id("yes")] = 0.0;
                evidence[id("ye")] = 0.0;
                evidence[id(gold)] = 1.2;
            } else {
                prior[id("s")] = 3.0;
                prior[id("<eos>")] = 1.0;
            }
            for variant in Variant::ALL {
                let values: Vec<f64> = match variant {
                    Variant::Real => prior.iter().zip(&evidence).map(|(p, e)| round4(p + e)).collect(),
                    _ => prior.iter().map(|p| round4(p + rng.uniform(-0.05, 0.05))).collect(),
                };
                trace
                    .insert(
                        sample.to_string(),
                        variant,
                        step,
                        LogitVector::new(values).expect("finite"),
                    )
                    .expect("unique keys");
            }
        }
    }
    trace
}

fn write(dir: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn pretty(v: &impl serde::Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

/// Writes every fixture file into `dir` and returns their paths.
pub fn make_fixtures(dir: &Path, seed: u64) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let mut trace_bytes = Vec::new();
    write_trace(&trace_fixture(seed), &mut trace_bytes).map_err(|e| Error::io(dir.join(TRACE_FILE), e))?;
    write(dir, TRACE_FILE, &trace_bytes, &mut written)?;
    write(dir, TRACE_SAMPLES_FILE, &pretty(&trace_samples()), &mut written)?;

    let suite = prior_vs_evidence(&PriorEvidenceParams {
        samples: SCENARIO_SUITE_SIZE,
        seed,
        evidence_margin: 1.0,
        noise_amplitude: vdd_core::source::scenario::DEFAULT_NOISE_AMPLITUDE,
    });
    write(dir, SCENARIO_FILE, &pretty(&suite), &mut written)?;
    write(
        dir,
        GRID_FILE,
        enumerate_configs(&DecodingConfig::default()).to_golden().as_bytes(),
        &mut written,
    )?;

    let trace_source = json!({"trace": {"path": TRACE_FILE, "samples": TRACE_SAMPLES_FILE}});
    let scenario_source = json!({"scenario": {"path": SCENARIO_FILE}});
    let configs = [
        (
            "classify.config.json",
            json!({
                "format": crate::config::CONFIG_FORMAT, "task": "classify", "source": trace_source,
                "debias_variants": ["none", "unk"], "output": "out", "seed": seed, "positive_label": "yes"
            }),
        ),
        (
            "probe.config.json",
            json!({
                "format": crate::config::CONFIG_FORMAT, "task": "probe", "source": trace_source,
                "debias_variants": ["none", "unk", "noise", "zeros", "ones"], "top_n": 15, "output": "out", "seed": seed
            }),
        ),
        (
            "generate.config.json",
            json!({
                "format": crate::config::CONFIG_FORMAT, "task": "generate", "source": scenario_source,
                "decoding": {"strategy": {"kind": "greedy"}, "debias": "vdd_none", "alpha": 1.0, "beta": 0.1, "max_new_tokens": 2},
                "output": "out", "seed": seed
            }),
        ),
        (
            "sweep.config.json",
            json!({
                "format": crate::config::CONFIG_FORMAT, "task": "sweep", "source": scenario_source,
                "decoding": {"debias": "naive", "max_new_tokens": 2},
                "mode": "oracle", "output": "out", "seed": seed
            }),
        ),
    ];
    for (name, cfg) in configs {
        write(dir, name, &pretty(&cfg), &mut written)?;
    }
    Ok(written)
}

//! Parallel batch execution over a shared, immutable logit source.
//!
//! Every task owns an rng stream keyed by `(seed, sample, config index)` and results
//! are collected in task order, so output never depends on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vdd_core::calibration::{classify_debiased, PosthocOptions};
use vdd_core::decoding::{generate, DecodingConfig};
use vdd_core::eval::match_answer;
use vdd_core::source::Variant;
use vdd_core::sweep::{enumerate_configs, run_one, SweepResult, DEFAULT_CONFIG_INDEX};
use vdd_core::{LogitSource, Sample, SeededRng};

use crate::error::{Error, Result};

pub type SharedSource = dyn LogitSource + Send + Sync;

fn pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::config("parallelism", e.to_string()))
}

/// Runs the 49-point grid plus the greedy default for every sample.
pub fn run_sweep(
    source: &SharedSource,
    samples: &[Sample],
    base: &DecodingConfig,
    parallelism: usize,
) -> Result<SweepResult> {
    if samples.is_empty() {
        return Err(vdd_core::Error::BadParam("sweep needs at least one sample".into()).into());
    }
    base.validate()?;
    let grid = enumerate_configs(base);
    let per_sample = grid.len() + 1;
    let tasks: Vec<(usize, usize)> = (0..samples.len())
        .flat_map(|s| (0..per_sample).map(move |c| (s, c)))
        .collect();
    let mut out = pool(parallelism)?.install(|| {
        tasks
            .par_iter()
            .map(|&(s, c)| {
                if c < grid.len() {
                    let p = &grid.points[c];
                    run_one(source, &samples[s], &grid.config(p), p.index, &p.label())
                } else {
                    run_one(
                        source,
                        &samples[s],
                        &grid.default_config(),
                        DEFAULT_CONFIG_INDEX,
                        "default",
                    )
                }
            })
            .collect::<Vec<_>>()
    });
    let mut records = Vec::with_capacity(samples.len() * grid.len());
    let mut defaults = Vec::with_capacity(samples.len());
    for chunk in out.chunks_mut(per_sample) {
        let (grid_part, default_part) = chunk.split_at_mut(grid.len());
        records.extend(grid_part.iter().cloned());
        defaults.push(default_part[0].clone());
    }
    Ok(SweepResult {
        samples: samples.iter().map(|s| s.prompt.sample_id.clone()).collect(),
        grid,
        records,
        defaults,
    })
}

/// One line of classification output. Failed samples carry no distributions and an `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRecord {
    pub sample: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub naive: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub debiased: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub naive_label: Option<usize>,
    pub prior_variants: Vec<Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<usize>,
    #[serde(default)]
    pub no_evidence: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn classify_batch(
    source: &SharedSource,
    samples: &[Sample],
    options: &PosthocOptions,
    parallelism: usize,
) -> Result<Vec<ClassifyRecord>> {
    let vocab = source.vocabulary();
    Ok(pool(parallelism)?.install(|| {
        samples
            .par_iter()
            .map(|s| {
                let candidates = s.prompt.candidates().iter().map(|c| vocab.decode(c)).collect();
                let base = ClassifyRecord {
                    sample: s.prompt.sample_id.clone(),
                    naive: None,
                    debiased: None,
                    label: None,
                    naive_label: None,
                    prior_variants: options.variants.clone(),
                    prior: None,
                    candidates,
                    gold: s.gold_label(),
                    no_evidence: false,
                    error: None,
                };
                match classify_debiased(source, &s.prompt, &s.visual(), options) {
                    Ok(c) => ClassifyRecord {
                        naive_label: Some(c.naive_label()),
                        label: Some(c.label),
                        naive: Some(c.naive.into_inner()),
                        debiased: Some(c.debiased.into_inner()),
                        prior: Some(c.prior.p_prime.into_inner()),
                        no_evidence: c.no_evidence,
                        ..base
                    },
                    Err(e) => ClassifyRecord {
                        error: Some(e.to_string()),
                        ..base
                    },
                }
            })
            .collect()
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDump {
    pub sample: String,
    pub step: usize,
    pub head_size: Option<usize>,
    pub threshold: Option<f64>,
    pub contrast_argmax: Option<u32>,
    pub chosen: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerateRecord {
    pub sample: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub gold: String,
    pub correct: bool,
    pub confidence: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub steps: Vec<StepDump>,
}

pub fn generate_batch(
    source: &SharedSource,
    samples: &[Sample],
    config: &DecodingConfig,
    parallelism: usize,
) -> Result<Vec<GenerateRecord>> {
    config.validate()?;
    let vocab = source.vocabulary();
    Ok(pool(parallelism)?.install(|| {
        samples
            .par_iter()
            .map(|s| {
                let mut rng = SeededRng::for_task(config.seed, &s.prompt.sample_id, 0);
                let gold = vocab.decode(&s.gold);
                match generate(source, &s.prompt, &s.visual(), config, &mut rng) {
                    Ok(g) => {
                        let text = vocab.decode(&g.tokens);
                        GenerateRecord {
                            sample: s.prompt.sample_id.clone(),
                            tokens: Some(vocab.token_strings(&g.tokens)),
                            correct: match_answer(&text, &gold),
                            confidence: g.confidence(),
                            text: Some(text),
                            gold,
                            error: None,
                            steps: g
                                .steps
                                .iter()
                                .map(|st| StepDump {
                                    sample: s.prompt.sample_id.clone(),
                                    step: st.step,
                                    head_size: st.head_size,
                                    threshold: st.threshold,
                                    contrast_argmax: st.contrast_argmax.map(|t| t.0),
                                    chosen: st.chosen.0,
                                })
                                .collect(),
                        }
                    }
                    Err(e) => GenerateRecord {
                        sample: s.prompt.sample_id.clone(),
                        tokens: None,
                        text: None,
                        gold,
                        correct: false,
                        confidence: 0.0,
                        error: Some(e.to_string()),
                        steps: Vec::new(),
                    },
                }
            })
            .collect()
    }))
}

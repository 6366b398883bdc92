//! Table-driven synthetic model: logits are `prior[step] + evidence[step]`, where the
//! evidence row is the sample's real row under a real context and a single shared
//! degenerate row under every degenerate context.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_prefix, LogitSource, Prompt, Sample, VisualContext};
use crate::error::{Error, Result};
use crate::hash::{unit_interval, Fnv1a};
use crate::numeric::LogitVector;
use crate::rng::SeededRng;
use crate::vocab::{TokenId, Vocabulary, UNK_TOKEN};

pub const SCENARIO_FORMAT: &str = "vdd-scenario/1";
pub const DEFAULT_NOISE_AMPLITUDE: f64 = 0.01;

fn default_noise_amplitude() -> f64 {
    DEFAULT_NOISE_AMPLITUDE
}

/// Serialized form of a scenario suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub format: String,
    pub vocab: Vec<String>,
    /// Amplitude of the seeded jitter added under the Noise context.
    #[serde(default = "default_noise_amplitude")]
    pub noise_amplitude: f64,
    pub samples: Vec<ScenarioSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSample {
    pub sample: String,
    pub text: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<Vec<String>>>,
    pub gold: Vec<String>,
    /// `prior[step][token]`.
    pub prior: Vec<Vec<f64>>,
    pub evidence: Evidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Evidence {
    pub real: Vec<Vec<f64>>,
    pub degenerate: Vec<Vec<f64>>,
}

struct Rows {
    prior: Vec<Vec<f64>>,
    real: Vec<Vec<f64>>,
    degenerate: Vec<Vec<f64>>,
}

/// A validated [`ScenarioSpec`] ready to be queried.
pub struct ScenarioSource {
    vocab: Vocabulary,
    noise_amplitude: f64,
    samples: Vec<Sample>,
    rows: BTreeMap<String, Rows>,
}

impl ScenarioSource {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        if spec.format != SCENARIO_FORMAT {
            return Err(Error::BadScenario(alloc::format!(
                "format must be {SCENARIO_FORMAT:?}, got {:?}",
                spec.format
            )));
        }
        if !(spec.noise_amplitude.is_finite() && spec.noise_amplitude >= 0.0) {
            return Err(Error::BadScenario(
                "noise_amplitude must be finite and >= 0".to_string(),
            ));
        }
        let vocab = Vocabulary::new(spec.vocab)?;
        let mut samples = Vec::with_capacity(spec.samples.len());
        let mut rows = BTreeMap::new();
        for s in spec.samples {
            let steps = s.prior.len();
            if steps == 0 {
                return Err(Error::BadScenario(alloc::format!("sample {:?} has no steps", s.sample)));
            }
            if s.evidence.real.len() != steps || s.evidence.degenerate.len() != steps {
                return Err(Error::BadScenario(alloc::format!(
                    "sample {:?}: prior and evidence step counts differ",
                    s.sample
                )));
            }
            for row in s.prior.iter().chain(&s.evidence.real).chain(&s.evidence.degenerate) {
                if row.len() != vocab.len() {
                    return Err(Error::VocabMismatch {
                        expected: vocab.len(),
                        found: row.len(),
                    });
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::BadScenario(alloc::format!(
                        "sample {:?} has a non-finite logit",
                        s.sample
                    )));
                }
            }
            let candidates = match &s.candidates {
                Some(c) => Some(c.iter().map(|c| vocab.encode(c)).collect::<Result<Vec<_>>>()?),
                None => None,
            };
            let prompt = Prompt::new(s.sample.clone(), vocab.encode(&s.text)?, candidates)?;
            let gold = vocab.encode(&s.gold)?;
            let r = Rows {
                prior: s.prior,
                real: s.evidence.real,
                degenerate: s.evidence.degenerate,
            };
            if rows.insert(s.sample.clone(), r).is_some() {
                return Err(Error::BadScenario(alloc::format!("duplicate sample {:?}", s.sample)));
            }
            samples.push(Sample { prompt, gold });
        }
        Ok(Self {
            vocab,
            noise_amplitude: spec.noise_amplitude,
            samples,
            rows,
        })
    }

    /// Samples in file order.
    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn noise_amplitude(&self) -> f64 {
        self.noise_amplitude
    }
}

/// Jitter added under `Noise { seed }` at `(step, token)`: `amplitude * U[-1, 1]`
/// of FNV-1a over `seed | step | token` (all u64 LE).
pub fn noise_jitter(seed: u64, step: usize, token: usize) -> f64 {
    unit_interval(
        Fnv1a::new()
            .write_u64(seed)
            .write_u64(step as u64)
            .write_u64(token as u64)
            .finish(),
    )
}

impl LogitSource for ScenarioSource {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn query(&self, prompt: &Prompt, visual: &VisualContext, prefix: &[TokenId]) -> Result<LogitVector> {
        check_prefix(&self.vocab, prefix)?;
        let step = prefix.len();
        let miss = || Error::TraceMiss {
            sample: prompt.sample_id.clone(),
            variant: visual.variant(),
            step,
        };
        let rows = self.rows.get(&prompt.sample_id).ok_or_else(miss)?;
        let prior = rows.prior.get(step).ok_or_else(miss)?;
        let evidence = match visual {
            VisualContext::Real { .. } => &rows.real[step],
            _ => &rows.degenerate[step],
        };
        let mut out: Vec<f64> = prior.iter().zip(evidence).map(|(p, e)| p + e).collect();
        if let VisualContext::Noise { seed } = visual {
            for (tok, v) in out.iter_mut().enumerate() {
                *v += self.noise_amplitude * noise_jitter(*seed, step, tok);
            }
        }
        LogitVector::new(out)
    }
}

/// Parameters of the synthetic prior-versus-evidence benchmark.
///
/// Each sample has two single-token candidates. The language prior favours the
/// wrong one by a margin drawn from the open interval `(evidence_margin,
/// 2 * evidence_margin)`; the real-image evidence favours the gold one by
/// `evidence_margin`. Step 1 ends the answer with `<eos>`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorEvidenceParams {
    pub samples: usize,
    pub seed: u64,
    pub evidence_margin: f64,
    pub noise_amplitude: f64,
}

impl Default for PriorEvidenceParams {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 0,
            evidence_margin: 1.0,
            noise_amplitude: 0.0,
        }
    }
}

pub const EOS_TOKEN: &str = "<eos>";

const ANSWERS: [&str; 12] = [
    "yes", "no", "red", "blue", "green", "brown", "cat", "dog", "one", "two", "three", "four",
];
const FILLER: [&str; 6] = ["is", "the", "there", "a", "what", "?"];

/// Token list of the benchmark vocabulary: `<unk>`, `<eos>`, filler, answers.
pub fn benchmark_vocab() -> Vec<String> {
    [UNK_TOKEN, EOS_TOKEN]
        .iter()
        .chain(FILLER.iter())
        .chain(ANSWERS.iter())
        .map(|s| s.to_string())
        .collect()
}

/// Generates the prior-versus-evidence scenario suite.
pub fn prior_vs_evidence(params: &PriorEvidenceParams) -> ScenarioSpec {
    let vocab = benchmark_vocab();
    let n = vocab.len();
    let answer_base = 2 + FILLER.len();
    let eos = 1;
    let delta = params.evidence_margin;
    let mut rng = SeededRng::new(params.seed);
    let mut samples = Vec::with_capacity(params.samples);
    for i in 0..params.samples {
        let gold = answer_base + rng.below(ANSWERS.len() as u64) as usize;
        let other = loop {
            let o = answer_base + rng.below(ANSWERS.len() as u64) as usize;
            if o != gold {
                break o;
            }
        };
        let margin = loop {
            let m = rng.uniform(delta, 2.0 * delta);
            if m > delta {
                break m;
            }
        };
        let offset = rng.uniform(-1.0, 1.0);
        let gold_first = rng.below(2) == 0;

        let mut prior0: Vec<f64> = (0..n).map(|_| rng.uniform(-4.5, -3.5)).collect();
        prior0[0] = -8.0;
        prior0[eos] = -6.0;
        prior0[gold] = offset;
        prior0[other] = offset + margin;
        let mut real0 = vec![0.0; n];
        real0[gold] = delta;

        let mut prior1: Vec<f64> = (0..n).map(|_| rng.uniform(-5.5, -4.5)).collect();
        prior1[eos] = 5.0;

        let word = |t: usize| vec![vocab[t].clone()];
        let candidates = if gold_first {
            vec![word(gold), word(other)]
        } else {
            vec![word(other), word(gold)]
        };
        let question = rng.below(FILLER.len() as u64 - 1) as usize;
        samples.push(ScenarioSample {
            sample: alloc::format!("pe{i:04}"),
            text: vec![FILLER[question].to_string(), FILLER[FILLER.len() - 1].to_string()],
            candidates: Some(candidates),
            gold: word(gold),
            prior: vec![prior0, prior1],
            evidence: Evidence {
                real: vec![real0, vec![0.0; n]],
                degenerate: vec![vec![0.0; n]; 2],
            },
        });
    }
    ScenarioSpec {
        format: SCENARIO_FORMAT.to_string(),
        vocab,
        noise_amplitude: params.noise_amplitude,
        samples,
    }
}

//! Post-hoc debiasing of candidate-label distributions.
//!
//! The model's candidate distribution under a degenerate visual context estimates
//! its language prior `p'`. Scaling the real-image distribution by `diag(p')^-1`
//! and re-normalising with softmax yields uniform scores whenever the image
//! carries no information.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric::{log_softmax, softmax, LogitVector, ProbVector};
use crate::source::{degrade_visual, LogitSource, Prompt, Variant, VisualContext};
use crate::vocab::TokenId;

pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Degenerate variants averaged into the prior when none are requested.
pub const DEFAULT_PRIOR_VARIANTS: [Variant; 2] = [Variant::NoneCtx, Variant::Unk];

/// How a multi-token candidate's log-probabilities are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidateScoring {
    /// Chain-rule sum of per-token log-probabilities.
    #[default]
    Sum,
    /// Sum divided by the candidate length.
    LengthNormalized,
}

/// Diagonal weights `w` and bias `b` of the affine correction `softmax(w * p + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationParams {
    w: Vec<f64>,
    b: Vec<f64>,
}

impl CalibrationParams {
    pub fn new(w: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if w.len() != b.len() {
            return Err(Error::ShapeMismatch {
                expected: w.len(),
                found: b.len(),
            });
        }
        if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::BadParam(
                "calibration weights must be finite and > 0".to_string(),
            ));
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::BadParam("calibration bias must be finite".to_string()));
        }
        Ok(Self { w, b })
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// The language-prior estimate over candidates and the variants it was averaged from.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorEstimate {
    pub p_prime: ProbVector,
    pub variants_used: Vec<Variant>,
}

/// Teacher-forced log-score of every candidate label.
pub fn candidate_log_scores(
    source: &dyn LogitSource,
    prompt: &Prompt,
    visual: &VisualContext,
    scoring: CandidateScoring,
) -> Result<Vec<f64>> {
    let candidates = prompt.candidates();
    if candidates.len() < 2 {
        return Err(Error::BadParam(alloc::format!(
            "prompt {:?} needs at least two candidate labels",
            prompt.sample_id
        )));
    }
    let vocab = source.vocabulary();
    for (i, c) in candidates.iter().enumerate() {
        if let Some(t) = c.iter().find(|t| !vocab.contains(**t)) {
            return Err(Error::BadCandidate(alloc::format!(
                "candidate {i} of {:?} has token {t} outside the vocabulary",
                prompt.sample_id
            )));
        }
    }
    // Candidates sharing a prefix share the query.
    let mut cache: BTreeMap<&[TokenId], LogitVector> = BTreeMap::new();
    let mut scores = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let mut total = 0.0;
        for j in 0..cand.len() {
            let prefix = &cand[..j];
            if !cache.contains_key(prefix) {
                let logits = source.query(prompt, visual, prefix)?;
                if logits.len() != vocab.len() {
                    return Err(Error::VocabMismatch {
                        expected: vocab.len(),
                        found: logits.len(),
                    });
                }
                cache.insert(prefix, log_softmax(&logits)?);
            }
            total += cache[prefix].as_slice()[cand[j].index()];
        }
        scores.push(match scoring {
            CandidateScoring::Sum => total,
            CandidateScoring::LengthNormalized => total / cand.len() as f64,
        });
    }
    Ok(scores)
}

/// Candidate distribution: `exp(score)` renormalised over the candidate set.
pub fn score_candidates(source: &dyn LogitSource, prompt: &Prompt, visual: &VisualContext) -> Result<ProbVector> {
    score_candidates_with(source, prompt, visual, CandidateScoring::Sum)
}

pub fn score_candidates_with(
    source: &dyn LogitSource,
    prompt: &Prompt,
    visual: &VisualContext,
    scoring: CandidateScoring,
) -> Result<ProbVector> {
    let scores = candidate_log_scores(source, prompt, visual, scoring)?;
    softmax(&LogitVector::new(scores)?)
}

/// Averages the candidate distributions under each degenerate context (in probability space).
pub fn prior_distribution(
    source: &dyn LogitSource,
    prompt: &Prompt,
    variants: &[VisualContext],
    scoring: CandidateScoring,
) -> Result<PriorEstimate> {
    if variants.is_empty() {
        return Err(Error::BadParam(
            "at least one degenerate variant is required".to_string(),
        ));
    }
    if let Some(v) = variants.iter().find(|v| !v.is_degenerate()) {
        return Err(Error::InvalidDegradation(alloc::format!(
            "prior variants must be degenerate, got {}",
            v.variant()
        )));
    }
    let mut sum: Vec<f64> = Vec::new();
    for v in variants {
        let p = score_candidates_with(source, prompt, v, scoring)?;
        if sum.is_empty() {
            sum = vec![0.0; p.len()];
        }
        for (s, x) in sum.iter_mut().zip(p.as_slice()) {
            *s += x;
        }
    }
    let n = variants.len() as f64;
    Ok(PriorEstimate {
        p_prime: ProbVector::normalize(sum.into_iter().map(|s| s / n).collect())?,
        variants_used: variants.iter().map(VisualContext::variant).collect(),
    })
}

/// `w_i = 1 / max(p'_i, epsilon)`, `b = 0`.
pub fn calibration_params(prior: &PriorEstimate, epsilon: f64) -> Result<CalibrationParams> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::BadParam("epsilon must be finite and > 0".to_string()));
    }
    let w = prior
        .p_prime
        .as_slice()
        .iter()
        .map(|&p| 1.0 / p.max(epsilon))
        .collect::<Vec<_>>();
    let b = vec![0.0; w.len()];
    CalibrationParams::new(w, b)
}

/// `softmax(w * p + b)`.
pub fn apply_posthoc_debias(p: &ProbVector, params: &CalibrationParams) -> Result<ProbVector> {
    if p.len() != params.len() {
        return Err(Error::ShapeMismatch {
            expected: params.len(),
            found: p.len(),
        });
    }
    let z = p
        .as_slice()
        .iter()
        .zip(params.weights())
        .zip(params.bias())
        .map(|((p, w), b)| w * p + b)
        .collect();
    softmax(&LogitVector::new(z)?)
}

/// Knobs of the end-to-end post-hoc pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PosthocOptions {
    pub variants: Vec<Variant>,
    pub epsilon: f64,
    pub scoring: CandidateScoring,
    /// Global seed used to derive the Noise context, when requested.
    pub seed: u64,
}

impl Default for PosthocOptions {
    fn default() -> Self {
        Self {
            variants: DEFAULT_PRIOR_VARIANTS.to_vec(),
            epsilon: DEFAULT_EPSILON,
            scoring: CandidateScoring::Sum,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    /// Argmax of the debiased distribution, lowest index on ties.
    pub label: usize,
    pub naive: ProbVector,
    pub debiased: ProbVector,
    pub prior: PriorEstimate,
    /// The real image moved nothing: naive and prior agree within 1e-12.
    pub no_evidence: bool,
}

impl Classification {
    pub fn naive_label(&self) -> usize {
        self.naive.argmax().index()
    }
}

/// score → prior → params → debias, for one prompt under its real visual context.
pub fn classify_debiased(
    source: &dyn LogitSource,
    prompt: &Prompt,
    visual: &VisualContext,
    options: &PosthocOptions,
) -> Result<Classification> {
    if visual.is_degenerate() {
        return Err(Error::InvalidDegradation(
            "classification needs the real visual context".to_string(),
        ));
    }
    let naive = score_candidates_with(source, prompt, visual, options.scoring)?;
    let contexts = options
        .variants
        .iter()
        .map(|&v| degrade_visual(visual, v, options.seed))
        .collect::<Result<Vec<_>>>()?;
    let prior = prior_distribution(source, prompt, &contexts, options.scoring)?;
    let params = calibration_params(&prior, options.epsilon)?;
    let debiased = apply_posthoc_debias(&naive, &params)?;
    let no_evidence = naive
        .as_slice()
        .iter()
        .zip(prior.p_prime.as_slice())
        .all(|(a, b)| (a - b).abs() <= 1e-12);
    Ok(Classification {
        label: debiased.argmax().index(),
        naive,
        debiased,
        prior,
        no_evidence,
    })
}

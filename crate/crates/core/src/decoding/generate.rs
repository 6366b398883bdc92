use alloc::vec::Vec;

use super::{
    build_reference_logits, temperature_scale, top_k_filter, top_p_filter, vdd_step, DebiasMode, DecodingConfig,
    Strategy,
};
use crate::error::{Error, Result};
use crate::numeric::{softmax, ProbVector};
use crate::rng::SeededRng;
use crate::source::{LogitSource, Prompt, VisualContext};
use crate::vocab::TokenId;

/// Inverse-CDF draw over tokens in index order.
pub fn sample_token(p: &ProbVector, rng: &mut SeededRng) -> TokenId {
    let u = rng.next_f64();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &pi) in p.as_slice().iter().enumerate() {
        if pi > 0.0 {
            cumulative += pi;
            last_positive = i;
            if u < cumulative {
                return TokenId(i as u32);
            }
        }
    }
    // Rounding left the cumulative sum just under u.
    TokenId(last_positive as u32)
}

/// Lowest-index argmax; greedy decoding never touches the rng.
pub fn greedy_token(p: &ProbVector) -> TokenId {
    p.argmax()
}

/// One decoding step, as dumped by the per-step debug output.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// The decided distribution before the sampling transform.
    pub distribution: ProbVector,
    pub head_size: Option<usize>,
    pub threshold: Option<f64>,
    pub contrast_argmax: Option<TokenId>,
    pub chosen: TokenId,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Generation {
    /// Generated tokens, without the stop token.
    pub tokens: Vec<TokenId>,
    pub steps: Vec<StepRecord>,
    pub stopped: bool,
}

impl Generation {
    /// Max probability of the first decided distribution; 0 for an empty generation.
    pub fn confidence(&self) -> f64 {
        self.steps.first().map_or(0.0, |s| s.distribution.max())
    }
}

/// Autoregressive decoding under the real visual context.
///
/// Per step: query the real logits, optionally form the contrastive distribution
/// against the mode's reference logits, apply the configured sampling transform on
/// the log of that distribution, re-normalise and draw.
pub fn generate(
    source: &dyn LogitSource,
    prompt: &Prompt,
    visual: &VisualContext,
    config: &DecodingConfig,
    rng: &mut SeededRng,
) -> Result<Generation> {
    config.validate()?;
    if visual.is_degenerate() {
        return Err(Error::InvalidDegradation(
            "generation needs the real visual context".into(),
        ));
    }
    let vocab_len = source.vocabulary().len();
    let mut out = Generation::default();
    for step in 0..config.max_new_tokens {
        let logits = source.query(prompt, visual, &out.tokens)?;
        if logits.len() != vocab_len {
            return Err(Error::VocabMismatch {
                expected: vocab_len,
                found: logits.len(),
            });
        }
        let (distribution, head_size, threshold, contrast_argmax) = match config.debias {
            DebiasMode::Naive => (softmax(&logits)?, None, None, None),
            mode => {
                let reference = build_reference_logits(source, prompt, &out.tokens, mode)?;
                let s = vdd_step(&logits, &reference, config.alpha, config.beta)?;
                let argmax = s.contrast_argmax();
                (s.probs, Some(s.head.len()), Some(s.head.threshold), Some(argmax))
            }
        };
        let chosen = match config.strategy {
            Strategy::Greedy => greedy_token(&distribution),
            strategy => {
                let log_p = distribution.to_logits();
                let filtered = match strategy {
                    Strategy::Temperature { tau } => temperature_scale(&log_p, tau)?,
                    Strategy::TopK { k } => top_k_filter(&log_p, k)?,
                    Strategy::TopP { p } => top_p_filter(&log_p, p)?,
                    Strategy::Greedy => unreachable!(),
                };
                sample_token(&softmax(&filtered)?, rng)
            }
        };
        out.steps.push(StepRecord {
            step,
            distribution,
            head_size,
            threshold,
            contrast_argmax,
            chosen,
        });
        if config.stop_tokens.contains(&chosen) {
            out.stopped = true;
            break;
        }
        out.tokens.push(chosen);
    }
    Ok(out)
}

//! Contrastive debias distribution: `softmax((1 + alpha) * l - alpha * l_ref)` restricted
//! to the plausibility head `{ i : p(i) >= beta * max p }` of the image-conditioned
//! distribution. Tokens outside the head get probability exactly zero.

use alloc::string::ToString;
use alloc::vec::Vec;

use super::DebiasMode;
use crate::error::{Error, Result};
use crate::numeric::{softmax, LogitVector, ProbVector};
use crate::source::{LogitSource, Prompt, VisualContext};
use crate::vocab::TokenId;

/// Tokens whose image-conditioned probability reaches `threshold = beta * max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlausibilityHead {
    pub allowed: Vec<TokenId>,
    pub threshold: f64,
}

impl PlausibilityHead {
    pub fn len(&self) -> usize {
        self.allowed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty()
    }

    pub fn contains(&self, t: TokenId) -> bool {
        self.allowed.binary_search(&t).is_ok()
    }
}

pub fn plausibility_head(p_image: &ProbVector, beta: f64) -> Result<PlausibilityHead> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::BadParam(alloc::format!("beta {beta} outside [0, 1]")));
    }
    let threshold = beta * p_image.max();
    let allowed = p_image
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= threshold)
        .map(|(i, _)| TokenId(i as u32))
        .collect();
    Ok(PlausibilityHead { allowed, threshold })
}

/// Everything one contrastive step computes.
#[derive(Debug, Clone, PartialEq)]
pub struct VddStep {
    pub probs: ProbVector,
    pub head: PlausibilityHead,
    /// Masked contrast logits (`-inf` outside the head).
    pub contrast: LogitVector,
}

impl VddStep {
    pub fn contrast_argmax(&self) -> TokenId {
        self.contrast.argmax()
    }
}

pub fn vdd_step(logits: &LogitVector, reference: &LogitVector, alpha: f64, beta: f64) -> Result<VddStep> {
    if logits.len() != reference.len() {
        return Err(Error::ShapeMismatch {
            expected: logits.len(),
            found: reference.len(),
        });
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::BadParam(alloc::format!("alpha {alpha} must be >= 0")));
    }
    let head = plausibility_head(&softmax(logits)?, beta)?;
    let mut contrast = alloc::vec![f64::NEG_INFINITY; logits.len()];
    for &t in &head.allowed {
        let i = t.index();
        let l = logits.as_slice()[i];
        if !l.is_finite() {
            // Zero-probability tokens only enter the head when beta = 0; they stay masked.
            continue;
        }
        contrast[i] = if alpha == 0.0 {
            l
        } else {
            let r = reference.as_slice()[i];
            if !r.is_finite() {
                return Err(Error::BadParam(alloc::format!(
                    "reference logit of head token {i} is masked"
                )));
            }
            (1.0 + alpha) * l - alpha * r
        };
    }
    let contrast = LogitVector::new(contrast)?;
    Ok(VddStep {
        probs: softmax(&contrast)?,
        head,
        contrast,
    })
}

/// The debiased next-token distribution.
pub fn vdd_distribution(logits: &LogitVector, reference: &LogitVector, alpha: f64, beta: f64) -> Result<ProbVector> {
    vdd_step(logits, reference, alpha, beta).map(|s| s.probs)
}

/// Reference logits under the image-free context(s) of a VDD mode.
pub fn build_reference_logits(
    source: &dyn LogitSource,
    prompt: &Prompt,
    prefix: &[TokenId],
    mode: DebiasMode,
) -> Result<LogitVector> {
    match mode {
        DebiasMode::Naive => Err(Error::BadParam("naive decoding has no reference logits".to_string())),
        DebiasMode::VddNone => source.query(prompt, &VisualContext::NoneCtx, prefix),
        DebiasMode::VddUnk => source.query(prompt, &VisualContext::Unk, prefix),
        DebiasMode::VddBoth => {
            let none = source.query(prompt, &VisualContext::NoneCtx, prefix)?;
            let unk = source.query(prompt, &VisualContext::Unk, prefix)?;
            if none.len() != unk.len() {
                return Err(Error::ShapeMismatch {
                    expected: none.len(),
                    found: unk.len(),
                });
            }
            LogitVector::new(
                none.as_slice()
                    .iter()
                    .zip(unk.as_slice())
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect(),
            )
        }
    }
}

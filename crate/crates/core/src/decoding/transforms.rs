use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric::{softmax, LogitVector};

/// Absolute slack on the top-p cumulative threshold, so decimal thresholds are not
/// defeated by float summation (`0.6 + 0.3 < 0.9` in binary64).
pub const TOP_P_SLACK: f64 = 1e-12;

/// Divides every finite logit by `tau`; masked entries stay `-inf`.
pub fn temperature_scale(logits: &LogitVector, tau: f64) -> Result<LogitVector> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::BadParam(alloc::format!("temperature {tau} must be > 0")));
    }
    LogitVector::new(logits.as_slice().iter().map(|&v| v / tau).collect())
}

/// Finite token indices ordered by descending score, lowest index first on ties.
fn ranked(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| scores[i].is_finite()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

fn keep_only(logits: &LogitVector, keep: &[usize]) -> Result<LogitVector> {
    let mut out = alloc::vec![f64::NEG_INFINITY; logits.len()];
    for &i in keep {
        out[i] = logits.as_slice()[i];
    }
    LogitVector::new(out)
}

/// Keeps the `k` highest logits; boundary ties go to the lower token index.
pub fn top_k_filter(logits: &LogitVector, k: usize) -> Result<LogitVector> {
    if k < 1 {
        return Err(Error::BadParam("top-k needs k >= 1".to_string()));
    }
    if k >= logits.support_size() {
        return Ok(logits.clone());
    }
    let order = ranked(logits.as_slice());
    keep_only(logits, &order[..k])
}

/// Keeps the shortest probability-sorted prefix whose cumulative mass reaches `p`.
pub fn top_p_filter(logits: &LogitVector, p: f64) -> Result<LogitVector> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::BadParam(alloc::format!("top-p {p} outside (0, 1]")));
    }
    if p == 1.0 {
        return Ok(logits.clone());
    }
    let probs = softmax(logits)?;
    let order = ranked(probs.as_slice());
    let mut cumulative = 0.0;
    let mut cut = order.len();
    for (n, &i) in order.iter().enumerate() {
        cumulative += probs.as_slice()[i];
        if cumulative >= p - TOP_P_SLACK {
            cut = n + 1;
            break;
        }
    }
    keep_only(logits, &order[..cut])
}

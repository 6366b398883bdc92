//! Logit and probability vectors and the stable softmax kernels.
//!
//! Masked logits are exact `-inf` and map to probability exactly `0`. All
//! arithmetic is `f64`; `exp`/`ln` come from `libm` so results are bit-identical
//! across platforms.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::vocab::TokenId;

/// Tolerance on the unit-sum invariant checked when a [`ProbVector`] is built.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// Real-valued scores over a vocabulary. Entries are finite or exactly `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    /// Rejects NaN and `+inf`, and vectors without any finite entry.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let mut any_finite = false;
        for (index, &v) in values.iter().enumerate() {
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::NonFinite { index });
            }
            any_finite |= v.is_finite();
        }
        if !any_finite {
            return Err(Error::EmptySupport);
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Lowest-index argmax.
    pub fn argmax(&self) -> TokenId {
        TokenId(argmax(&self.0) as u32)
    }

    /// Number of entries that are not masked.
    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|v| v.is_finite()).count()
    }

    /// Largest finite entry.
    pub fn max_finite(&self) -> f64 {
        self.0
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Non-negative weights summing to one (within [`PROB_SUM_TOLERANCE`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let mut sum = 0.0;
        for (i, &v) in values.iter().enumerate() {
            if !(0.0..=1.0 + PROB_SUM_TOLERANCE).contains(&v) {
                return Err(Error::InvalidProbability(alloc::format!(
                    "entry {i} = {v} outside [0, 1]"
                )));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidProbability(alloc::format!("entries sum to {sum}")));
        }
        Ok(Self(values))
    }

    /// Divides non-negative weights by their sum.
    pub fn normalize(weights: Vec<f64>) -> Result<Self> {
        let mut sum = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidProbability(alloc::format!(
                    "weight {i} = {w} is not a finite non-negative number"
                )));
            }
            sum += w;
        }
        if sum <= 0.0 {
            return Err(Error::EmptySupport);
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    /// The uniform distribution over `len` entries.
    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptySupport);
        }
        Self::new(alloc::vec![1.0 / len as f64; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn argmax(&self) -> TokenId {
        TokenId(argmax(&self.0) as u32)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    /// Elementwise natural log; zero entries become `-inf`.
    pub fn to_logits(&self) -> LogitVector {
        LogitVector(self.0.iter().map(|&p| ln(p)).collect())
    }
}

/// Lowest-index argmax over a slice; `-inf` entries only win if everything is `-inf`.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn ln(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        libm::log(x)
    }
}

/// `log(sum(exp(values)))` over the finite entries, with max-subtraction.
fn log_sum_exp(values: &[f64]) -> Result<(f64, f64)> {
    let max = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::EmptySupport);
    }
    let sum: f64 = values.iter().filter(|v| v.is_finite()).map(|&v| exp(v - max)).sum();
    Ok((max, ln(sum)))
}

/// Numerically stable softmax. Masked (`-inf`) entries get probability exactly 0.
pub fn softmax(logits: &LogitVector) -> Result<ProbVector> {
    let values = logits.as_slice();
    let (max, _) = log_sum_exp(values)?;
    let shifted: Vec<f64> = values
        .iter()
        .map(|&v| if v.is_finite() { exp(v - max) } else { 0.0 })
        .collect();
    let sum: f64 = shifted.iter().sum();
    Ok(ProbVector(shifted.into_iter().map(|e| e / sum).collect()))
}

/// Log-probabilities of [`softmax`]; masked entries stay `-inf`.
pub fn log_softmax(logits: &LogitVector) -> Result<LogitVector> {
    let values = logits.as_slice();
    let (max, lse) = log_sum_exp(values)?;
    Ok(LogitVector(
        values
            .iter()
            .map(|&v| {
                if v.is_finite() {
                    v - max - lse
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect(),
    ))
}

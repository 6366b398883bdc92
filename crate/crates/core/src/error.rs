use alloc::string::String;

use crate::source::Variant;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Every entry of a logit vector is masked.
    #[error("EmptySupport: logit vector has no finite entry")]
    EmptySupport,
    #[error("NonFinite: logit vector contains NaN or +inf at index {index}")]
    NonFinite { index: usize },
    #[error("InvalidProbability: {0}")]
    InvalidProbability(String),
    #[error("TraceMiss: no record for sample {sample:?}, variant {variant}, step {step}")]
    TraceMiss {
        sample: String,
        variant: Variant,
        step: usize,
    },
    #[error("InvalidDegradation: {0}")]
    InvalidDegradation(String),
    #[error("VocabMismatch: expected {expected} logits, found {found}")]
    VocabMismatch { expected: usize, found: usize },
    #[error("DuplicateRecord: sample {sample:?}, variant {variant}, step {step}")]
    DuplicateRecord {
        sample: String,
        variant: Variant,
        step: usize,
    },
    #[error("BadCandidate: {0}")]
    BadCandidate(String),
    #[error("ShapeMismatch: expected length {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("BadParam: {0}")]
    BadParam(String),
    #[error("NotBinary: {0}")]
    NotBinary(String),
    #[error("BadVocabulary: {0}")]
    BadVocabulary(String),
    #[error("UnknownToken: {0:?}")]
    UnknownToken(String),
    #[error("BadScenario: {0}")]
    BadScenario(String),
}

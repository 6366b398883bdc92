//! Providers of next-token logits conditioned on a prompt, a visual context and
//! a generated prefix.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::Fnv1a;
use crate::numeric::LogitVector;
use crate::vocab::{TokenId, Vocabulary};

pub mod procedural;
pub mod scenario;
pub mod trace;

pub use procedural::{ProceduralModel, ProceduralModelSpec};
pub use scenario::{ScenarioSample, ScenarioSource, ScenarioSpec};
pub use trace::TraceSource;

/// Tag of a [`VisualContext`], as written in trace and scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Real,
    #[serde(rename = "none")]
    NoneCtx,
    Unk,
    Noise,
    Zeros,
    Ones,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Real,
        Variant::NoneCtx,
        Variant::Unk,
        Variant::Noise,
        Variant::Zeros,
        Variant::Ones,
    ];

    pub const DEGENERATE: [Variant; 5] = [
        Variant::NoneCtx,
        Variant::Unk,
        Variant::Noise,
        Variant::Zeros,
        Variant::Ones,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Real => "real",
            Variant::NoneCtx => "none",
            Variant::Unk => "unk",
            Variant::Noise => "noise",
            Variant::Zeros => "zeros",
            Variant::Ones => "ones",
        }
    }

    pub fn is_degenerate(self) -> bool {
        self != Variant::Real
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::BadParam(alloc::format!("unknown visual variant {s:?}")))
    }
}

/// The visual input a query is conditioned on.
///
/// `Real` names a context resolvable by the source; every other variant is
/// degenerate and carries no image content (`Noise` only carries the seed of its
/// perturbation).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum VisualContext {
    Real { id: String },
    NoneCtx,
    Unk,
    Noise { seed: u64 },
    Zeros,
    Ones,
}

impl VisualContext {
    pub fn real(id: impl Into<String>) -> Self {
        VisualContext::Real { id: id.into() }
    }

    pub fn variant(&self) -> Variant {
        match self {
            VisualContext::Real { .. } => Variant::Real,
            VisualContext::NoneCtx => Variant::NoneCtx,
            VisualContext::Unk => Variant::Unk,
            VisualContext::Noise { .. } => Variant::Noise,
            VisualContext::Zeros => Variant::Zeros,
            VisualContext::Ones => Variant::Ones,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.variant().is_degenerate()
    }
}

/// Seed of the Noise context derived for a sample: FNV-1a over
/// `global_seed (u64 LE) | len(id) (u64 LE) | id bytes`.
pub fn noise_seed(global_seed: u64, sample_id: &str) -> u64 {
    Fnv1a::new().write_u64(global_seed).write_str(sample_id).finish()
}

/// Replaces a real visual context with a degenerate one.
pub fn degrade_visual(v: &VisualContext, target: Variant, global_seed: u64) -> Result<VisualContext> {
    let VisualContext::Real { id } = v else {
        return Err(Error::InvalidDegradation(alloc::format!(
            "source context must be real, got {}",
            v.variant()
        )));
    };
    Ok(match target {
        Variant::Real => {
            return Err(Error::InvalidDegradation(
                "target variant must be degenerate".to_string(),
            ))
        }
        Variant::NoneCtx => VisualContext::NoneCtx,
        Variant::Unk => VisualContext::Unk,
        Variant::Noise => VisualContext::Noise {
            seed: noise_seed(global_seed, id),
        },
        Variant::Zeros => VisualContext::Zeros,
        Variant::Ones => VisualContext::Ones,
    })
}

/// A text prompt and, for classification, its candidate label sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Prompt {
    pub sample_id: String,
    pub text: Vec<TokenId>,
    pub candidates: Option<Vec<Vec<TokenId>>>,
}

impl Prompt {
    pub fn new(
        sample_id: impl Into<String>,
        text: Vec<TokenId>,
        candidates: Option<Vec<Vec<TokenId>>>,
    ) -> Result<Self> {
        let sample_id = sample_id.into();
        if text.is_empty() {
            return Err(Error::BadParam(alloc::format!("prompt {sample_id:?} has empty text")));
        }
        if let Some(cands) = &candidates {
            for (i, c) in cands.iter().enumerate() {
                if c.is_empty() {
                    return Err(Error::BadCandidate(alloc::format!(
                        "candidate {i} of {sample_id:?} is empty"
                    )));
                }
                if cands[..i].contains(c) {
                    return Err(Error::BadCandidate(alloc::format!(
                        "candidate {i} of {sample_id:?} is a duplicate"
                    )));
                }
            }
        }
        Ok(Self {
            sample_id,
            text,
            candidates,
        })
    }

    pub fn candidates(&self) -> &[Vec<TokenId>] {
        self.candidates.as_deref().unwrap_or(&[])
    }
}

/// A prompt paired with its gold answer token sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub prompt: Prompt,
    pub gold: Vec<TokenId>,
}

impl Sample {
    /// Position of the gold answer among the candidates, if present.
    pub fn gold_label(&self) -> Option<usize> {
        self.prompt.candidates().iter().position(|c| *c == self.gold)
    }

    /// The real visual context of this sample.
    pub fn visual(&self) -> VisualContext {
        VisualContext::real(self.prompt.sample_id.clone())
    }
}

/// Anything that maps `(prompt, visual context, prefix)` to next-token logits.
///
/// Implementations must be deterministic: identical arguments give identical vectors.
pub trait LogitSource {
    fn vocabulary(&self) -> &Vocabulary;

    fn query(&self, prompt: &Prompt, visual: &VisualContext, prefix: &[TokenId]) -> Result<LogitVector>;
}

impl<S: LogitSource + ?Sized> LogitSource for &S {
    fn vocabulary(&self) -> &Vocabulary {
        (**self).vocabulary()
    }

    fn query(&self, prompt: &Prompt, visual: &VisualContext, prefix: &[TokenId]) -> Result<LogitVector> {
        (**self).query(prompt, visual, prefix)
    }
}

pub(crate) fn check_prefix(vocab: &Vocabulary, prefix: &[TokenId]) -> Result<()> {
    match prefix.iter().find(|t| !vocab.contains(**t)) {
        Some(t) => Err(Error::BadParam(alloc::format!(
            "prefix token {t} outside vocabulary of size {}",
            vocab.len()
        ))),
        None => Ok(()),
    }
}

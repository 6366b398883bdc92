//! Hash-driven stand-in for a multimodal model, scalable to any vocabulary size.
//!
//! For token `c` the logit is
//! `prior_strength * U(seed, sample_id, "prior", prefix, c)
//!  + visual_strength * U(seed, key, tag, prefix, c)`
//! where `U` maps FNV-1a to `[-1, 1]`, `tag` is the variant name (`"real"`, `"none"`, ...),
//! and `key` is the sample id for `Real` and the empty string for degenerate contexts,
//! which therefore carry no sample-specific evidence. `Noise` additionally hashes its
//! seed after the tag. Byte layout:
//! `seed u64 LE | len u64 LE | key | len u64 LE | tag | [noise seed u64 LE] | prefix count u64 LE | prefix ids u32 LE... | c u32 LE`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_prefix, LogitSource, Prompt, VisualContext};
use crate::error::{Error, Result};
use crate::hash::{unit_interval, Fnv1a};
use crate::numeric::LogitVector;
use crate::vocab::{TokenId, Vocabulary, UNK_TOKEN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProceduralModelSpec {
    pub vocab_size: usize,
    pub prior_strength: f64,
    pub visual_strength: f64,
    pub hash_seed: u64,
}

pub struct ProceduralModel {
    spec: ProceduralModelSpec,
    vocab: Vocabulary,
}

impl ProceduralModel {
    /// Vocabulary is `<unk>`, `<eos>`, then `w2`, `w3`, ...
    pub fn new(spec: ProceduralModelSpec) -> Result<Self> {
        if spec.vocab_size < 2 {
            return Err(Error::BadParam("procedural vocab_size must be >= 2".to_string()));
        }
        for (name, v) in [
            ("prior_strength", spec.prior_strength),
            ("visual_strength", spec.visual_strength),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::BadParam(format!("{name} must be finite and >= 0")));
            }
        }
        let tokens = (0..spec.vocab_size)
            .map(|i| match i {
                0 => UNK_TOKEN.to_string(),
                1 => "<eos>".to_string(),
                _ => format!("w{i}"),
            })
            .collect();
        Ok(Self {
            vocab: Vocabulary::new(tokens)?,
            spec,
        })
    }

    pub fn spec(&self) -> &ProceduralModelSpec {
        &self.spec
    }

    fn term(&self, key: &str, tag: &str, noise: Option<u64>, prefix: &[TokenId]) -> Fnv1a {
        let mut h = Fnv1a::new();
        h.write_u64(self.spec.hash_seed).write_str(key).write_str(tag);
        if let Some(seed) = noise {
            h.write_u64(seed);
        }
        h.write_u64(prefix.len() as u64);
        for t in prefix {
            h.write_u32(t.0);
        }
        h
    }
}

impl LogitSource for ProceduralModel {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn query(&self, prompt: &Prompt, visual: &VisualContext, prefix: &[TokenId]) -> Result<LogitVector> {
        check_prefix(&self.vocab, prefix)?;
        let prior = self.term(&prompt.sample_id, "prior", None, prefix);
        let key: String = match visual {
            VisualContext::Real { .. } => prompt.sample_id.clone(),
            _ => String::new(),
        };
        let noise = match visual {
            VisualContext::Noise { seed } => Some(*seed),
            _ => None,
        };
        let visual_h = self.term(&key, visual.variant().as_str(), noise, prefix);
        let values: Vec<f64> = (0..self.spec.vocab_size as u32)
            .map(|c| {
                let p = unit_interval(prior.clone().write_u32(c).finish());
                let v = unit_interval(visual_h.clone().write_u32(c).finish());
                self.spec.prior_strength * p + self.spec.visual_strength * v
            })
            .collect();
        LogitVector::new(values)
    }
}

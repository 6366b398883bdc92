//! In-memory index of recorded logits keyed by `(sample, variant, step)`.
//!
//! A trace stores one teacher-forced path per sample: the row for step `t` is
//! returned for any prefix of length `t`. Reading and writing the JSON Lines
//! format lives in the `vdd` crate.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::{check_prefix, LogitSource, Prompt, Variant, VisualContext};
use crate::error::{Error, Result};
use crate::numeric::LogitVector;
use crate::vocab::{TokenId, Vocabulary};

pub const TRACE_FORMAT: &str = "vdd-trace/1";

pub type TraceKey = (String, Variant, usize);

#[derive(Debug, Clone)]
pub struct TraceSource {
    vocab: Vocabulary,
    records: BTreeMap<TraceKey, LogitVector>,
}

impl TraceSource {
    pub fn new(vocab: Vocabulary) -> Self {
        Self {
            vocab,
            records: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, sample: String, variant: Variant, step: usize, logits: LogitVector) -> Result<()> {
        if logits.len() != self.vocab.len() {
            return Err(Error::VocabMismatch {
                expected: self.vocab.len(),
                found: logits.len(),
            });
        }
        let key = (sample, variant, step);
        if self.records.contains_key(&key) {
            let (sample, variant, step) = key;
            return Err(Error::DuplicateRecord { sample, variant, step });
        }
        self.records.insert(key, logits);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in key order.
    pub fn records(&self) -> impl Iterator<Item = (&TraceKey, &LogitVector)> {
        self.records.iter()
    }

    pub fn sample_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.records.keys().map(|k| k.0.as_str()).collect();
        ids.dedup();
        ids
    }

    pub fn get(&self, sample: &str, variant: Variant, step: usize) -> Result<&LogitVector> {
        // BTreeMap needs an owned key; the lookup allocates one small string.
        self.records
            .get(&(String::from(sample), variant, step))
            .ok_or_else(|| Error::TraceMiss {
                sample: String::from(sample),
                variant,
                step,
            })
    }
}

impl LogitSource for TraceSource {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn query(&self, prompt: &Prompt, visual: &VisualContext, prefix: &[TokenId]) -> Result<LogitVector> {
        check_prefix(&self.vocab, prefix)?;
        self.get(&prompt.sample_id, visual.variant(), prefix.len()).cloned()
    }
}

//! Prompt/answer files for sources that carry no prompts of their own (traces and
//! the procedural model): `{"format":"vdd-samples/1","samples":[{"sample","text","candidates","gold"}]}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vdd_core::source::scenario::ScenarioSpec;
use vdd_core::source::ScenarioSource;
use vdd_core::{Prompt, Sample, Vocabulary};

use crate::error::{Error, Result};

pub const SAMPLES_FORMAT: &str = "vdd-samples/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleEntry {
    pub sample: String,
    pub text: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<Vec<String>>>,
    pub gold: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplesFile {
    pub format: String,
    pub samples: Vec<SampleEntry>,
}

impl SampleEntry {
    pub fn resolve(&self, vocab: &Vocabulary) -> vdd_core::Result<Sample> {
        let candidates = match &self.candidates {
            Some(c) => Some(
                c.iter()
                    .map(|c| vocab.encode(c))
                    .collect::<vdd_core::Result<Vec<_>>>()?,
            ),
            None => None,
        };
        Ok(Sample {
            prompt: Prompt::new(self.sample.clone(), vocab.encode(&self.text)?, candidates)?,
            gold: vocab.encode(&self.gold)?,
        })
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn json_err(path: &Path, e: serde_json::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    }
}

pub fn load_samples(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Vec<Sample>> {
    let path = path.as_ref();
    let file: SamplesFile = serde_json::from_str(&read(path)?).map_err(|e| json_err(path, e))?;
    if file.format != SAMPLES_FORMAT {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("format must be {SAMPLES_FORMAT:?}, got {:?}", file.format),
        });
    }
    file.samples
        .iter()
        .map(|s| s.resolve(vocab).map_err(Error::from))
        .collect()
}

pub fn load_scenario_spec(path: impl AsRef<Path>) -> Result<ScenarioSpec> {
    let path = path.as_ref();
    serde_json::from_str(&read(path)?).map_err(|e| json_err(path, e))
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioSource> {
    Ok(ScenarioSource::new(load_scenario_spec(path)?)?)
}

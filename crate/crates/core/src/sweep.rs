//! The 49-configuration decoding grid and best-of selection over it.
//!
//! Temperatures and nucleus thresholds are stored as integer hundredths so the
//! grid is exact; they only become `f64` when handed to the decoder.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decoding::{generate, DecodingConfig, Strategy};
use crate::error::{Error, Result};
use crate::eval::match_answer;
use crate::rng::SeededRng;
use crate::source::{LogitSource, Sample};

pub const TEMPERATURE_HUNDREDTHS: core::ops::RangeInclusive<u32> = 1..=20;
pub const TOP_K_VALUES: [u32; 9] = [1, 2, 5, 10, 20, 50, 100, 200, 500];
pub const GRID_SIZE: usize = 49;
/// Stream index of the greedy baseline run next to the grid.
pub const DEFAULT_CONFIG_INDEX: usize = GRID_SIZE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Temp,
    TopP,
    TopK,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Temp => "temp",
            Group::TopP => "top_p",
            Group::TopK => "top_k",
        }
    }
}

/// One grid point. `value` is hundredths for `Temp`/`TopP` and `k` for `TopK`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPoint {
    pub index: usize,
    pub group: Group,
    pub value: u32,
}

impl GridPoint {
    pub fn strategy(&self) -> Strategy {
        match self.group {
            Group::Temp => Strategy::Temperature {
                tau: self.value as f64 / 100.0,
            },
            Group::TopP => Strategy::TopP {
                p: self.value as f64 / 100.0,
            },
            Group::TopK => Strategy::TopK { k: self.value as usize },
        }
    }

    /// Exact decimal rendering of the parameter: `0.05`, `1.00`, `500`.
    pub fn value_str(&self) -> String {
        match self.group {
            Group::TopK => self.value.to_string(),
            _ => alloc::format!("{}.{:02}", self.value / 100, self.value % 100),
        }
    }

    pub fn label(&self) -> String {
        alloc::format!("{}={}", self.group.as_str(), self.value_str())
    }
}

/// The enumerated grid plus the base config every point inherits from.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigGrid {
    pub base: DecodingConfig,
    pub points: Vec<GridPoint>,
}

impl ConfigGrid {
    pub fn group(&self, group: Group) -> impl Iterator<Item = &GridPoint> {
        self.points.iter().filter(move |p| p.group == group)
    }

    pub fn temperature_configs(&self) -> Vec<GridPoint> {
        self.group(Group::Temp).copied().collect()
    }

    pub fn top_k_configs(&self) -> Vec<GridPoint> {
        self.group(Group::TopK).copied().collect()
    }

    pub fn top_p_configs(&self) -> Vec<GridPoint> {
        self.group(Group::TopP).copied().collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Decoding config of a grid point: the base with its strategy replaced.
    pub fn config(&self, point: &GridPoint) -> DecodingConfig {
        DecodingConfig {
            strategy: point.strategy(),
            ..self.base.clone()
        }
    }

    /// The greedy baseline run alongside the grid.
    pub fn default_config(&self) -> DecodingConfig {
        DecodingConfig {
            strategy: Strategy::Greedy,
            ..self.base.clone()
        }
    }

    /// One JSON object per line: `{"index":0,"group":"temp","value":0.05}`.
    pub fn to_golden(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            out.push_str(&alloc::format!(
                "{{\"index\":{},\"group\":\"{}\",\"value\":{}}}\n",
                p.index,
                p.group.as_str(),
                p.value_str()
            ));
        }
        out
    }
}

/// Temperature 0.05..=1.00 step 0.05, then top-k over [`TOP_K_VALUES`], then top-p 0.05..=1.00.
pub fn enumerate_configs(base: &DecodingConfig) -> ConfigGrid {
    let mut points = Vec::with_capacity(GRID_SIZE);
    let mut push = |group, value| {
        let index = points.len();
        points.push(GridPoint { index, group, value });
    };
    for h in TEMPERATURE_HUNDREDTHS {
        push(Group::Temp, h * 5);
    }
    for k in TOP_K_VALUES {
        push(Group::TopK, k);
    }
    for h in TEMPERATURE_HUNDREDTHS {
        push(Group::TopP, h * 5);
    }
    ConfigGrid {
        base: base.clone(),
        points,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Response {
    pub tokens: Vec<String>,
    pub text: String,
    pub correct: bool,
    pub confidence: f64,
}

/// Outcome of one `(sample, config)` run. Exactly one of `response` / `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub sample: String,
    pub config_index: usize,
    pub config: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<Response>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn is_correct(&self) -> bool {
        self.response.as_ref().is_some_and(|r| r.correct)
    }
}

/// Decodes one sample under one config on its own `(seed, sample, config_index)` stream.
/// Errors become part of the record.
pub fn run_one(
    source: &dyn LogitSource,
    sample: &Sample,
    config: &DecodingConfig,
    config_index: usize,
    label: &str,
) -> SweepRecord {
    let mut rng = SeededRng::for_task(config.seed, &sample.prompt.sample_id, config_index as u64);
    let vocab = source.vocabulary();
    let gold = vocab.decode(&sample.gold);
    let outcome = generate(source, &sample.prompt, &sample.visual(), config, &mut rng);
    let (response, error) = match outcome {
        Ok(g) => {
            let text = vocab.decode(&g.tokens);
            (
                Some(Response {
                    tokens: vocab.token_strings(&g.tokens),
                    correct: match_answer(&text, &gold),
                    confidence: g.confidence(),
                    text,
                }),
                None,
            )
        }
        Err(e) => (None, Some(e.to_string())),
    };
    SweepRecord {
        sample: sample.prompt.sample_id.clone(),
        config_index,
        config: label.to_string(),
        response,
        error,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub grid: ConfigGrid,
    pub samples: Vec<String>,
    /// Sample-major, config index ascending; `samples.len() * 49` entries.
    pub records: Vec<SweepRecord>,
    /// Greedy baseline, one per sample.
    pub defaults: Vec<SweepRecord>,
}

impl SweepResult {
    fn records_of(&self, sample: usize) -> &[SweepRecord] {
        let n = self.grid.len();
        &self.records[sample * n..(sample + 1) * n]
    }

    pub fn default_accuracy(&self) -> f64 {
        if self.defaults.is_empty() {
            return 0.0;
        }
        self.defaults.iter().filter(|r| r.is_correct()).count() as f64 / self.defaults.len() as f64
    }
}

/// Runs the grid plus the greedy default over every sample, one task at a time.
pub fn run_sweep_sequential(
    source: &dyn LogitSource,
    samples: &[Sample],
    base: &DecodingConfig,
) -> Result<SweepResult> {
    if samples.is_empty() {
        return Err(Error::BadParam("sweep needs at least one sample".to_string()));
    }
    base.validate()?;
    let grid = enumerate_configs(base);
    let mut records = Vec::with_capacity(samples.len() * grid.len());
    let mut defaults = Vec::with_capacity(samples.len());
    for sample in samples {
        for p in &grid.points {
            records.push(run_one(source, sample, &grid.config(p), p.index, &p.label()));
        }
        defaults.push(run_one(
            source,
            sample,
            &grid.default_config(),
            DEFAULT_CONFIG_INDEX,
            "default",
        ));
    }
    Ok(SweepResult {
        samples: samples.iter().map(|s| s.prompt.sample_id.clone()).collect(),
        grid,
        records,
        defaults,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Temp,
    TopP,
    TopK,
    Overall,
}

impl Grouping {
    pub const ALL: [Grouping; 4] = [Grouping::Temp, Grouping::TopP, Grouping::TopK, Grouping::Overall];

    fn admits(self, group: Group) -> bool {
        match self {
            Grouping::Temp => group == Group::Temp,
            Grouping::TopP => group == Group::TopP,
            Grouping::TopK => group == Group::TopK,
            Grouping::Overall => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Grouping::Temp => "temp",
            Grouping::TopP => "top_p",
            Grouping::TopK => "top_k",
            Grouping::Overall => "overall",
        }
    }
}

impl FromStr for Grouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Grouping::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::BadParam(alloc::format!("unknown grouping {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// A sample counts as correct if any config in the group answered correctly.
    /// Uses ground truth per sample: an upper bound, not a deployable decoder.
    Oracle,
    /// The single config with the best accuracy over all samples.
    Fixed,
}

impl FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(SelectionMode::Oracle),
            "fixed" => Ok(SelectionMode::Fixed),
            other => Err(Error::BadParam(alloc::format!("unknown selection mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub grouping: Grouping,
    pub mode: SelectionMode,
    pub score: f64,
    /// Fixed mode: the winning config label.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_config: Option<String>,
    /// Oracle mode: per sample, the first config in the group that answered correctly.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub per_sample: Vec<Option<String>>,
}

pub fn select_best(result: &SweepResult, grouping: Grouping, mode: SelectionMode) -> Selection {
    let members: Vec<&GridPoint> = result.grid.points.iter().filter(|p| grouping.admits(p.group)).collect();
    let n = result.samples.len().max(1) as f64;
    match mode {
        SelectionMode::Oracle => {
            let per_sample: Vec<Option<String>> = (0..result.samples.len())
                .map(|s| {
                    let recs = result.records_of(s);
                    members.iter().find(|p| recs[p.index].is_correct()).map(|p| p.label())
                })
                .collect();
            Selection {
                grouping,
                mode,
                score: per_sample.iter().filter(|c| c.is_some()).count() as f64 / n,
                fixed_config: None,
                per_sample,
            }
        }
        SelectionMode::Fixed => {
            let mut best: Option<(&GridPoint, usize)> = None;
            for p in &members {
                let hits = (0..result.samples.len())
                    .filter(|&s| result.records_of(s)[p.index].is_correct())
                    .count();
                if best.is_none_or(|(_, b)| hits > b) {
                    best = Some((p, hits));
                }
            }
            Selection {
                grouping,
                mode,
                score: best.map_or(0.0, |(_, h)| h as f64 / n),
                fixed_config: best.map(|(p, _)| p.label()),
                per_sample: Vec::new(),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupScores {
    pub temp: f64,
    pub top_p: f64,
    pub top_k: f64,
    pub overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub mode: SelectionMode,
    pub samples: usize,
    pub records: usize,
    pub errors: usize,
    pub groups: GroupScores,
    pub default: f64,
    pub chosen_configs: Vec<Selection>,
}

pub fn summarize(result: &SweepResult, mode: SelectionMode) -> SweepSummary {
    let sel: Vec<Selection> = Grouping::ALL.iter().map(|&g| select_best(result, g, mode)).collect();
    SweepSummary {
        mode,
        samples: result.samples.len(),
        records: result.records.len(),
        errors: result
            .records
            .iter()
            .chain(&result.defaults)
            .filter(|r| r.error.is_some())
            .count(),
        groups: GroupScores {
            temp: sel[0].score,
            top_p: sel[1].score,
            top_k: sel[2].score,
            overall: sel[3].score,
        },
        default: result.default_accuracy(),
        chosen_configs: sel,
    }
}

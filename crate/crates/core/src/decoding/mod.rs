//! Token-level generation: sampling transforms, the contrastive debias
//! distribution with its plausibility head, and the autoregressive loop.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::TokenId;

mod contrast;
mod generate;
mod transforms;

pub use contrast::{build_reference_logits, plausibility_head, vdd_distribution, vdd_step, PlausibilityHead, VddStep};
pub use generate::{generate, greedy_token, sample_token, Generation, StepRecord};
pub use transforms::{temperature_scale, top_k_filter, top_p_filter, TOP_P_SLACK};

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 0.1;

/// How the next token is drawn from the decided distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    Greedy,
    Temperature { tau: f64 },
    TopK { k: usize },
    TopP { p: f64 },
}

impl Strategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Strategy::Greedy => Ok(()),
            Strategy::Temperature { tau } if tau > 0.0 && tau.is_finite() => Ok(()),
            Strategy::Temperature { tau } => Err(Error::BadParam(alloc::format!("temperature {tau} must be > 0"))),
            Strategy::TopK { k } if k >= 1 => Ok(()),
            Strategy::TopK { .. } => Err(Error::BadParam("top-k needs k >= 1".to_string())),
            Strategy::TopP { p } if p > 0.0 && p <= 1.0 => Ok(()),
            Strategy::TopP { p } => Err(Error::BadParam(alloc::format!("top-p {p} outside (0, 1]"))),
        }
    }
}

/// Which reference logits, if any, the contrastive step subtracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DebiasMode {
    #[default]
    Naive,
    VddNone,
    VddUnk,
    VddBoth,
}

impl DebiasMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DebiasMode::Naive => "naive",
            DebiasMode::VddNone => "vdd_none",
            DebiasMode::VddUnk => "vdd_unk",
            DebiasMode::VddBoth => "vdd_both",
        }
    }
}

impl fmt::Display for DebiasMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DebiasMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(DebiasMode::Naive),
            "vdd_none" | "none" => Ok(DebiasMode::VddNone),
            "vdd_unk" | "unk" => Ok(DebiasMode::VddUnk),
            "vdd_both" | "both" => Ok(DebiasMode::VddBoth),
            other => Err(Error::BadParam(alloc::format!("unknown debias mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodingConfig {
    pub strategy: Strategy,
    #[serde(default)]
    pub debias: DebiasMode,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub max_new_tokens: usize,
    #[serde(default)]
    pub stop_tokens: Vec<TokenId>,
    #[serde(default)]
    pub seed: u64,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

impl Default for DecodingConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Greedy,
            debias: DebiasMode::Naive,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            max_new_tokens: 16,
            stop_tokens: Vec::new(),
            seed: 0,
        }
    }
}

impl DecodingConfig {
    pub fn validate(&self) -> Result<()> {
        self.strategy.validate()?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::BadParam(alloc::format!("alpha {} must be >= 0", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::BadParam(alloc::format!("beta {} outside [0, 1]", self.beta)));
        }
        Ok(())
    }
}

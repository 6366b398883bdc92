//! Core kernels for debiasing multimodal model outputs against their language prior.
//!
//! The crate is `no_std` (with `alloc`) and contains every numeric routine:
//!
//! * [`numeric`]: stable softmax / log-softmax over [`LogitVector`]s.
//! * [`source`]: the [`LogitSource`] abstraction plus scenario, procedural and trace sources.
//! * [`calibration`]: post-hoc affine debiasing of candidate-label distributions.
//! * [`decoding`]: temperature / top-k / top-p transforms, the contrastive debias
//!   distribution with its plausibility head, and the autoregressive loop.
//! * [`sweep`]: the 49-configuration decoding grid and best-of selection.
//! * [`eval`]: answer matching, classification metrics, confidence bins, prior probes.
//!
//! File formats, parallel batch runners and the command line live in the `vdd` crate.
#![no_std]

extern crate alloc;

pub mod calibration;
pub mod decoding;
pub mod error;
pub mod eval;
pub mod hash;
pub mod numeric;
pub mod rng;
pub mod source;
pub mod sweep;
pub mod vocab;

pub use error::{Error, Result};
pub use numeric::{log_softmax, softmax, LogitVector, ProbVector};
pub use rng::SeededRng;
pub use source::{LogitSource, Prompt, Sample, Variant, VisualContext};
pub use vocab::{TokenId, Vocabulary};

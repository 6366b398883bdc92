//! JSON Lines trace format.
//!
//! Line 1 is the header `{"format":"vdd-trace/1","vocab":[...]}`; every other line is
//! `{"sample":"<id>","variant":"real|none|unk|noise|zeros|ones","step":<int>,"logits":[...]}`.
//! A masked logit (negative infinity) is written as `null`. Blank lines are ignored.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use vdd_core::source::trace::TRACE_FORMAT;
use vdd_core::source::{TraceSource, Variant};
use vdd_core::{LogitSource, LogitVector, Vocabulary};

use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    vocab: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    sample: String,
    variant: Variant,
    step: usize,
    logits: Vec<Option<f64>>,
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<TraceSource> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_trace(BufReader::new(file), path)
}

/// Parses a trace; `origin` only labels error messages.
pub fn parse_trace(reader: impl BufRead, origin: &Path) -> Result<TraceSource> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(parse_err(1, "missing header line".into())),
            Some((i, line)) => {
                let line = line.map_err(|e| Error::io(origin, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let h: Header =
                    serde_json::from_str(&line).map_err(|e| parse_err(i + 1, format!("bad header: {e}")))?;
                if h.format != TRACE_FORMAT {
                    return Err(parse_err(
                        i + 1,
                        format!("format must be {TRACE_FORMAT:?}, got {:?}", h.format),
                    ));
                }
                break h;
            }
        }
    };
    let vocab = Vocabulary::new(header.vocab).map_err(|e| parse_err(1, e.to_string()))?;
    let mut trace = TraceSource::new(vocab);
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| parse_err(i + 1, e.to_string()))?;
        let values = rec.logits.into_iter().map(|x| x.unwrap_or(f64::NEG_INFINITY)).collect();
        let logits = LogitVector::new(values).map_err(|e| parse_err(i + 1, e.to_string()))?;
        trace
            .insert(rec.sample, rec.variant, rec.step, logits)
            .map_err(|e| parse_err(i + 1, e.to_string()))?;
    }
    Ok(trace)
}

/// Writes the header and every record in `(sample, variant, step)` order.
pub fn write_trace(trace: &TraceSource, mut out: impl Write) -> std::io::Result<()> {
    let header = Header {
        format: TRACE_FORMAT.to_string(),
        vocab: trace.vocabulary().tokens().to_vec(),
    };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    for ((sample, variant, step), logits) in trace.records() {
        let rec = Record {
            sample: sample.clone(),
            variant: *variant,
            step: *step,
            logits: logits.as_slice().iter().map(|&x| x.is_finite().then_some(x)).collect(),
        };
        writeln!(out, "{}", serde_json::to_string(&rec)?)?;
    }
    Ok(())
}

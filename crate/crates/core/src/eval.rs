//! Answer matching, binary classification metrics, confidence-binned accuracy and
//! the degenerate-context prior probe.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::calibration::{score_candidates_with, CandidateScoring};
use crate::error::{Error, Result};
use crate::source::{LogitSource, Prompt, Variant, VisualContext};

/// Case-folds, trims whitespace and strips trailing punctuation.
pub fn normalize_answer(s: &str) -> String {
    s.trim()
        .trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .trim()
        .to_lowercase()
}

pub fn match_answer(predicted: &str, gold: &str) -> bool {
    normalize_answer(predicted) == normalize_answer(gold)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub sample_id: String,
    pub predicted: String,
    pub gold: String,
    /// Max probability of the decided distribution.
    pub confidence: f64,
    pub correct: bool,
}

impl EvalRecord {
    pub fn new(
        sample_id: impl Into<String>,
        predicted: impl Into<String>,
        gold: impl Into<String>,
        confidence: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::BadParam(alloc::format!(
                "confidence {confidence} outside [0, 1]"
            )));
        }
        let predicted = predicted.into();
        let gold = gold.into();
        Ok(Self {
            sample_id: sample_id.into(),
            correct: match_answer(&predicted, &gold),
            predicted,
            gold,
            confidence,
        })
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub positive_label: String,
    pub confusion: Confusion,
    /// Set when a zero denominator forced a metric to 0.
    pub warnings: Vec<String>,
}

impl Confusion {
    pub fn report(&self, positive_label: &str) -> MetricReport {
        let mut warnings = Vec::new();
        let ratio = |num: usize, den: usize, name: &str, warnings: &mut Vec<String>| {
            if den == 0 {
                warnings.push(alloc::format!("{name}: zero denominator, reported as 0"));
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let total = self.tp + self.fp + self.fn_ + self.tn;
        let accuracy = ratio(self.tp + self.tn, total, "accuracy", &mut warnings);
        let precision = ratio(self.tp, self.tp + self.fp, "precision", &mut warnings);
        let recall = ratio(self.tp, self.tp + self.fn_, "recall", &mut warnings);
        MetricReport {
            accuracy,
            precision,
            recall,
            f1: f1_score(precision, recall),
            positive_label: positive_label.to_string(),
            confusion: *self,
            warnings,
        }
    }
}

/// Accuracy, precision, recall and F1 with `positive_label` as the positive class.
pub fn classification_metrics(records: &[EvalRecord], positive_label: &str) -> Result<MetricReport> {
    if records.is_empty() {
        return Err(Error::BadParam("no records to evaluate".to_string()));
    }
    let positive = normalize_answer(positive_label);
    let mut labels: Vec<String> = Vec::new();
    let mut c = Confusion::default();
    for r in records {
        let pred = normalize_answer(&r.predicted);
        let gold = normalize_answer(&r.gold);
        for l in [&pred, &gold] {
            if !labels.contains(l) {
                labels.push(l.clone());
            }
        }
        match (pred == positive, gold == positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    if labels.len() > 2 {
        return Err(Error::NotBinary(alloc::format!(
            "{} distinct labels: {labels:?}",
            labels.len()
        )));
    }
    let mut report = c.report(&positive);
    report.accuracy = records.iter().filter(|r| r.correct).count() as f64 / records.len() as f64;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub correct: usize,
    /// `None` for empty bins.
    pub accuracy: Option<f64>,
}

/// Index of the equal-width bin holding `confidence`; the top bin is closed on the right.
pub fn bin_index(confidence: f64, bin_count: usize) -> usize {
    let i = (confidence * bin_count as f64) as usize;
    i.min(bin_count - 1)
}

pub fn confidence_bins(records: &[EvalRecord], bin_count: usize) -> Result<Vec<ConfidenceBin>> {
    if bin_count < 1 {
        return Err(Error::BadParam("bin_count must be >= 1".to_string()));
    }
    let mut counts = vec![(0usize, 0usize); bin_count];
    for r in records {
        let b = &mut counts[bin_index(r.confidence, bin_count)];
        b.0 += 1;
        b.1 += usize::from(r.correct);
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, (count, correct))| ConfidenceBin {
            lower: i as f64 / bin_count as f64,
            upper: (i + 1) as f64 / bin_count as f64,
            count,
            correct,
            accuracy: (count > 0).then(|| correct as f64 / count as f64),
        })
        .collect())
}

/// Count-weighted mean of per-bin accuracies (equals overall accuracy).
pub fn weighted_bin_accuracy(bins: &[ConfidenceBin]) -> Option<f64> {
    let total: usize = bins.iter().map(|b| b.count).sum();
    (total > 0).then(|| {
        bins.iter()
            .filter_map(|b| b.accuracy.map(|a| a * b.count as f64))
            .sum::<f64>()
            / total as f64
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub rank: usize,
    pub answer: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeTable {
    pub variant: Variant,
    pub rows: Vec<ProbeRow>,
}

/// Average candidate distribution under each degenerate context, ranked and truncated.
///
/// Answers are keyed by their decoded text; prompts lacking an answer contribute 0
/// to it. Ties keep first-seen order.
pub fn probe_report(
    source: &dyn LogitSource,
    prompts: &[Prompt],
    variants: &[VisualContext],
    top_n: usize,
) -> Result<Vec<ProbeTable>> {
    probe_report_with(source, prompts, variants, top_n, CandidateScoring::Sum)
}

pub fn probe_report_with(
    source: &dyn LogitSource,
    prompts: &[Prompt],
    variants: &[VisualContext],
    top_n: usize,
    scoring: CandidateScoring,
) -> Result<Vec<ProbeTable>> {
    if top_n < 1 {
        return Err(Error::BadParam("top_n must be >= 1".to_string()));
    }
    if prompts.is_empty() {
        return Err(Error::BadParam("probe needs at least one prompt".to_string()));
    }
    let vocab = source.vocabulary();
    let mut tables = Vec::with_capacity(variants.len());
    for v in variants {
        if !v.is_degenerate() {
            return Err(Error::InvalidDegradation(
                "probe variants must be degenerate".to_string(),
            ));
        }
        let mut totals: Vec<(String, f64)> = Vec::new();
        for prompt in prompts {
            let p = score_candidates_with(source, prompt, v, scoring)?;
            for (cand, &pi) in prompt.candidates().iter().zip(p.as_slice()) {
                let answer = vocab.decode(cand);
                match totals.iter_mut().find(|(a, _)| *a == answer) {
                    Some((_, t)) => *t += pi,
                    None => totals.push((answer, pi)),
                }
            }
        }
        let n = prompts.len() as f64;
        let mut order: Vec<usize> = (0..totals.len()).collect();
        order.sort_by(|&a, &b| totals[b].1.total_cmp(&totals[a].1).then(a.cmp(&b)));
        let rows = order
            .into_iter()
            .take(top_n)
            .enumerate()
            .map(|(rank, i)| ProbeRow {
                rank: rank + 1,
                answer: totals[i].0.clone(),
                probability: totals[i].1 / n,
            })
            .collect();
        tables.push(ProbeTable {
            variant: v.variant(),
            rows,
        });
    }
    Ok(tables)
}

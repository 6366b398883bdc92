//! Metrics over classification records: naive and debiased side by side.

use serde::Serialize;
use vdd_core::eval::{
    classification_metrics, confidence_bins, weighted_bin_accuracy, ConfidenceBin, EvalRecord, MetricReport,
};

use crate::error::Result;
use crate::runner::ClassifyRecord;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmReport {
    pub evaluated: usize,
    pub accuracy: f64,
    /// Absent when the label space is not binary.
    pub metrics: Option<MetricReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics_note: Option<String>,
    pub bins: Vec<ConfidenceBin>,
    pub binned_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub samples: usize,
    pub errors: usize,
    pub no_evidence: usize,
    pub positive_label: Option<String>,
    pub naive: ArmReport,
    pub debiased: ArmReport,
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max).clamp(0.0, 1.0)
}

/// Evaluation records for one arm; samples without a gold label or with an error are skipped.
pub fn eval_records(records: &[ClassifyRecord], debiased: bool) -> Result<Vec<EvalRecord>> {
    let mut out = Vec::new();
    for r in records {
        let (Some(gold), Some(naive), Some(deb), Some(label), Some(naive_label)) =
            (r.gold, &r.naive, &r.debiased, r.label, r.naive_label)
        else {
            continue;
        };
        let (pred, dist) = if debiased { (label, deb) } else { (naive_label, naive) };
        out.push(EvalRecord::new(
            r.sample.clone(),
            r.candidates[pred].clone(),
            r.candidates[gold].clone(),
            max_of(dist),
        )?);
    }
    Ok(out)
}

fn arm(records: &[EvalRecord], positive: Option<&str>, bins: usize) -> Result<ArmReport> {
    let accuracy = if records.is_empty() {
        0.0
    } else {
        records.iter().filter(|r| r.correct).count() as f64 / records.len() as f64
    };
    let (metrics, metrics_note) = match (positive, records.is_empty()) {
        (_, true) => (None, Some("no evaluable records".to_string())),
        (None, false) => (None, Some("no positive label".to_string())),
        (Some(p), false) => match classification_metrics(records, p) {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(e.to_string())),
        },
    };
    let bins = confidence_bins(records, bins)?;
    Ok(ArmReport {
        evaluated: records.len(),
        accuracy,
        metrics,
        metrics_note,
        binned_accuracy: weighted_bin_accuracy(&bins),
        bins,
    })
}

/// Positive label defaults to the first candidate of the first record.
pub fn classification_report(
    records: &[ClassifyRecord],
    positive_label: Option<&str>,
    bins: usize,
) -> Result<ClassificationReport> {
    let positive = positive_label
        .map(str::to_string)
        .or_else(|| records.iter().find_map(|r| r.candidates.first().cloned()));
    Ok(ClassificationReport {
        samples: records.len(),
        errors: records.iter().filter(|r| r.error.is_some()).count(),
        no_evidence: records.iter().filter(|r| r.no_evidence).count(),
        naive: arm(&eval_records(records, false)?, positive.as_deref(), bins)?,
        debiased: arm(&eval_records(records, true)?, positive.as_deref(), bins)?,
        positive_label: positive,
    })
}

/// CSV of per-bin counts and accuracies, naive and debiased side by side.
pub fn bins_csv(report: &ClassificationReport) -> String {
    let mut out = String::from("bin_lower,bin_upper,naive_count,naive_accuracy,debiased_count,debiased_accuracy\n");
    let acc = |a: Option<f64>| a.map(|a| a.to_string()).unwrap_or_default();
    for (n, d) in report.naive.bins.iter().zip(&report.debiased.bins) {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            n.lower,
            n.upper,
            n.count,
            acc(n.accuracy),
            d.count,
            acc(d.accuracy)
        ));
    }
    out
}

//! Evaluation reports (`report.json`).

use std::path::Path;

use gaborset_core::classify::Verdict;
use gaborset_core::metrics::reference::{self, RowConsistency};
use gaborset_core::metrics::{compute, ConfusionCounts, MetricsReport};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formats::{DecisionRow, LabelIndex};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    /// Number of classified images.
    pub images: usize,
    pub matched: usize,
    pub unmatched: usize,
    /// Files that could not be decoded and were left out.
    pub skipped: usize,
    pub zero_images: bool,
    /// Present when ground-truth labels were available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<ConfusionCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_consistency: Option<PublishedConsistency>,
}

/// Recomputation of the published landmark tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PublishedConsistency {
    pub tolerance: f64,
    pub landmarks: Vec<RowConsistency>,
    pub aggregates: Vec<AggregateCheck>,
    /// Rows whose printed F1 disagrees with 2tp/(2tp+fp+fn).
    pub f1_inconsistent: Vec<&'static str>,
    /// Rows whose printed image total differs from tp+fn+fp+tn.
    pub total_mismatch: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateCheck {
    pub row: RowConsistency,
    /// Sum of the per-landmark counts with the same number of features.
    pub summed_counts: ConfusionCounts,
    pub sum_matches: bool,
}

pub fn published_consistency() -> PublishedConsistency {
    let landmarks: Vec<_> = reference::LANDMARKS.iter().map(reference::check).collect();
    let aggregates: Vec<_> = reference::AGGREGATES
        .iter()
        .map(|r| {
            let summed = reference::aggregate(r.features);
            AggregateCheck { row: reference::check(r), summed_counts: summed, sum_matches: summed == r.counts }
        })
        .collect();
    let all_rows = || landmarks.iter().chain(aggregates.iter().map(|a| &a.row));
    let f1_inconsistent = all_rows().filter(|r| !r.f1.consistent).map(|r| r.name).collect();
    let total_mismatch = landmarks.iter().filter(|r| !r.total_matches_counts).map(|r| r.name).collect();
    PublishedConsistency {
        tolerance: reference::TOLERANCE,
        landmarks,
        aggregates,
        f1_inconsistent,
        total_mismatch,
    }
}

/// Summarizes decisions, scoring them when `labels` are given.
pub fn evaluate(
    decisions: &[DecisionRow],
    labels: Option<&LabelIndex>,
    skipped: usize,
) -> Result<EvaluationReport> {
    let matched = decisions.iter().filter(|d| d.verdict.is_matched()).count();
    let mut report = EvaluationReport {
        images: decisions.len(),
        matched,
        unmatched: decisions.len() - matched,
        skipped,
        zero_images: decisions.is_empty(),
        counts: None,
        metrics: None,
        paper_consistency: None,
    };
    let Some(labels) = labels else { return Ok(report) };
    let mut counts = ConfusionCounts::default();
    for d in decisions {
        let landmark = labels
            .get(Path::new(&d.path))
            .ok_or_else(|| Error::Core(gaborset_core::Error::MissingLabel(d.path.clone())))?
            .is_landmark();
        match (d.verdict, landmark) {
            (Verdict::Matched, true) => counts.tp += 1,
            (Verdict::Matched, false) => counts.fp += 1,
            (Verdict::Unmatched, true) => counts.fn_ += 1,
            (Verdict::Unmatched, false) => counts.tn += 1,
        }
    }
    report.counts = Some(counts);
    if counts.total() > 0 {
        report.metrics = Some(compute(&counts)?);
    }
    Ok(report)
}

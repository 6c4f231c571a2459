//! Confusion counts and the derived precision, recall, accuracy and F1.
//!
//! Any metric whose denominator is zero is reported as 0 and flagged.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use core::iter::Sum;
use core::ops::Add;

use serde::{Deserialize, Serialize};

use crate::classify::Verdict;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub const fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        Self { tp, fn_, fp, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// Counts with the ground truth inverted.
    pub fn flipped_labels(&self) -> Self {
        Self { tp: self.fn_, fn_: self.tp, fp: self.tn, tn: self.fp }
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self::new(self.tp + o.tp, self.fn_ + o.fn_, self.fp + o.fp, self.tn + o.tn)
    }
}

impl Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DegenerateFlags {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
}

impl DegenerateFlags {
    pub fn any(&self) -> bool {
        self.precision || self.recall || self.f1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub degenerate: DegenerateFlags,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// precision `tp/(tp+fp)`, recall `tp/(tp+fn)`,
/// accuracy `(tp+tn)/(tp+tn+fp+fn)`, F1 `2tp/(2tp+fp+fn)`.
pub fn compute(c: &ConfusionCounts) -> Result<MetricsReport> {
    if c.total() == 0 {
        return Err(Error::DegenerateCounts);
    }
    let (precision, dp) = ratio(c.tp, c.tp + c.fp);
    let (recall, dr) = ratio(c.tp, c.tp + c.fn_);
    let (accuracy, _) = ratio(c.tp + c.tn, c.total());
    let (f1, df) = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    Ok(MetricsReport {
        precision,
        recall,
        accuracy,
        f1,
        degenerate: DegenerateFlags { precision: dp, recall: dr, f1: df },
    })
}

/// Tallies verdicts against ground truth (`true` = landmark image).
pub fn confusion_from_run<'a, I>(decisions: I, labels: &BTreeMap<alloc::string::String, bool>) -> Result<ConfusionCounts>
where
    I: IntoIterator<Item = (&'a str, Verdict)>,
{
    let mut c = ConfusionCounts::default();
    for (path, verdict) in decisions {
        let landmark = *labels.get(path).ok_or_else(|| Error::MissingLabel(path.to_string()))?;
        match (verdict.is_matched(), landmark) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Published landmark results: confusion counts as tabulated together with
/// the metric values printed for them.
pub mod reference {
    use super::{compute, ConfusionCounts};
    use serde::Serialize;

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct PublishedRow {
        pub name: &'static str,
        /// Number of candidate features used for the landmark.
        pub features: u8,
        pub total_images: u64,
        pub counts: ConfusionCounts,
        pub precision: f64,
        pub recall: f64,
        pub accuracy: f64,
        pub f1: f64,
    }

    const fn row(
        name: &'static str,
        features: u8,
        total_images: u64,
        counts: [u64; 4],
        metrics: [f64; 4],
    ) -> PublishedRow {
        PublishedRow {
            name,
            features,
            total_images,
            counts: ConfusionCounts::new(counts[0], counts[1], counts[2], counts[3]),
            precision: metrics[0],
            recall: metrics[1],
            accuracy: metrics[2],
            f1: metrics[3],
        }
    }

    /// Per-landmark rows, counts ordered tp, fn, fp, tn.
    pub const LANDMARKS: [PublishedRow; 5] = [
        row("Coliseum", 1, 1520, [532, 301, 412, 188], [0.563559322, 0.638655462, 0.502442428, 0.598761958]),
        row("Dome", 1, 1313, [491, 333, 407, 169], [0.546770601, 0.595873786, 0.471428571, 0.570267131]),
        row("Eiffel", 2, 1630, [805, 325, 236, 129], [0.773294909, 0.712389381, 0.624749164, 0.741593736]),
        row("Pyramid", 2, 1330, [612, 455, 285, 113], [0.682274247, 0.573570759, 0.494880546, 0.623217923]),
        row("Statue", 3, 2219, [1569, 331, 216, 103], [0.878991597, 0.825789474, 0.753492564, 1.482986767]),
    ];

    /// Rows aggregated by number of candidate features.
    pub const AGGREGATES: [PublishedRow; 3] = [
        row("One Feature", 1, 2833, [1023, 634, 819, 357], [0.555374593, 0.617380809, 0.487116131, 0.584738497]),
        row("Two Features", 2, 2960, [1417, 780, 521, 242], [0.731166151, 0.644970414, 0.560472973, 1.04267844]),
        row("Three Features", 3, 2219, [1569, 331, 216, 103], [0.878991597, 0.825789474, 0.753492564, 1.482986767]),
    ];

    /// Agreement threshold between a printed and a recomputed metric.
    pub const TOLERANCE: f64 = 1e-6;

    #[derive(Debug, Clone, PartialEq, Serialize)]
    pub struct MetricCheck {
        pub published: f64,
        pub computed: f64,
        pub delta: f64,
        pub consistent: bool,
    }

    impl MetricCheck {
        fn new(published: f64, computed: f64) -> Self {
            let delta = computed - published;
            Self { published, computed, delta, consistent: delta.abs() <= TOLERANCE }
        }
    }

    #[derive(Debug, Clone, PartialEq, Serialize)]
    pub struct RowConsistency {
        pub name: &'static str,
        pub counts: ConfusionCounts,
        pub total_images: u64,
        pub counts_sum: u64,
        pub total_matches_counts: bool,
        pub precision: MetricCheck,
        pub recall: MetricCheck,
        pub accuracy: MetricCheck,
        pub f1: MetricCheck,
        /// A printed F1 above 1 cannot be a harmonic mean of two ratios.
        pub f1_out_of_range: bool,
    }

    impl RowConsistency {
        pub fn all_consistent(&self) -> bool {
            self.precision.consistent
                && self.recall.consistent
                && self.accuracy.consistent
                && self.f1.consistent
        }
    }

    pub fn check(row: &PublishedRow) -> RowConsistency {
        let m = compute(&row.counts).expect("published counts are nonzero");
        RowConsistency {
            name: row.name,
            counts: row.counts,
            total_images: row.total_images,
            counts_sum: row.counts.total(),
            total_matches_counts: row.counts.total() == row.total_images,
            precision: MetricCheck::new(row.precision, m.precision),
            recall: MetricCheck::new(row.recall, m.recall),
            accuracy: MetricCheck::new(row.accuracy, m.accuracy),
            f1: MetricCheck::new(row.f1, m.f1),
            f1_out_of_range: row.f1 > 1.0,
        }
    }

    /// Sum of the per-landmark counts using `features` candidate features.
    pub fn aggregate(features: u8) -> ConfusionCounts {
        LANDMARKS.iter().filter(|r| r.features == features).map(|r| r.counts).sum()
    }
}

//! Matched/unmatched verdicts from network outputs.
//!
//! Each output neuron stands for one candidate feature. A neuron whose output
//! reaches the threshold sets its detection factor to 1; the overall matching
//! factor is the product of all detection factors, and the image is matched
//! only when that product is 1.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::features::BankFilter;
use crate::gabor::GaborBank;
use crate::network::MlpModel;
use crate::preprocess::{preprocess, PreprocessParams, RawImage};
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.8;

/// Outputs at or below this level are reported as a confident absence.
/// Diagnostic only; verdicts never depend on it.
pub const ABSENCE_LEVEL: f64 = -0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Matched,
    Unmatched,
}

impl Verdict {
    pub fn is_matched(self) -> bool {
        self == Verdict::Matched
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationDecision {
    pub outputs: Vec<f64>,
    pub detection_factors: Vec<u8>,
    pub overall_matching: u8,
    pub verdict: Verdict,
    pub threshold: f64,
    pub confident_absence: Vec<bool>,
}

pub fn decide(outputs: &[f64], threshold: f64) -> Result<ClassificationDecision> {
    if outputs.is_empty() {
        return Err(Error::NoCandidateFeatures);
    }
    if outputs.iter().any(|v| !v.is_finite()) || !threshold.is_finite() {
        return Err(Error::NonFinite("network outputs"));
    }
    let detection_factors: Vec<u8> = outputs.iter().map(|&o| u8::from(o >= threshold)).collect();
    let overall_matching = detection_factors.iter().product();
    let verdict = if overall_matching == 1 { Verdict::Matched } else { Verdict::Unmatched };
    Ok(ClassificationDecision {
        outputs: outputs.to_vec(),
        detection_factors,
        overall_matching,
        verdict,
        threshold,
        confident_absence: outputs.iter().map(|&o| o <= ABSENCE_LEVEL).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    /// Whole image only.
    #[default]
    Off,
    /// Whole image, four quadrants and the centre crop; per-neuron maximum.
    Grid3,
}

/// Crops visited by [`ScanMode::Grid3`], as `(x, y, w, h)` fractions.
pub const GRID3_WINDOWS: [(f64, f64, f64, f64); 6] = [
    (0.0, 0.0, 1.0, 1.0),
    (0.0, 0.0, 0.5, 0.5),
    (0.5, 0.0, 0.5, 0.5),
    (0.0, 0.5, 0.5, 0.5),
    (0.5, 0.5, 0.5, 0.5),
    (0.25, 0.25, 0.5, 0.5),
];

/// Preprocess → features → network → [`decide`] for decoded images.
#[derive(Debug, Clone)]
pub struct Classifier {
    model: MlpModel,
    filter: BankFilter,
    params: PreprocessParams,
    threshold: f64,
    scan: ScanMode,
}

impl Classifier {
    pub fn new(
        model: MlpModel,
        bank: &GaborBank,
        params: PreprocessParams,
        threshold: f64,
        scan: ScanMode,
    ) -> Result<Self> {
        model.validate()?;
        params.validate()?;
        if model.inputs != bank.feature_len() {
            return Err(Error::ShapeError { expected: bank.feature_len(), got: model.inputs });
        }
        let filter = BankFilter::new(bank, params.size)?;
        Ok(Self { model, filter, params, threshold, scan })
    }

    pub fn model(&self) -> &MlpModel {
        &self.model
    }

    pub fn filter(&self) -> &BankFilter {
        &self.filter
    }

    fn outputs_for(&self, img: &RawImage) -> Result<Vec<f64>> {
        let gray = preprocess(img, &self.params)?;
        let features = self.filter.extract(&gray)?;
        self.model.forward(features.as_slice())
    }

    /// Network outputs for `img` under the configured scan mode.
    pub fn outputs(&self, img: &RawImage) -> Result<Vec<f64>> {
        match self.scan {
            ScanMode::Off => self.outputs_for(img),
            ScanMode::Grid3 => {
                let mut best = alloc::vec![f64::NEG_INFINITY; self.model.outputs];
                for (x, y, w, h) in GRID3_WINDOWS {
                    let crop = img.crop_fraction(x, y, w, h)?;
                    for (b, o) in best.iter_mut().zip(self.outputs_for(&crop)?) {
                        *b = b.max(o);
                    }
                }
                Ok(best)
            }
        }
    }

    pub fn classify(&self, img: &RawImage) -> Result<ClassificationDecision> {
        decide(&self.outputs(img)?, self.threshold)
    }
}

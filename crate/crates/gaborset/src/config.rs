//! Landmark configuration file (JSON).
//!
//! ```json
//! {
//!   "name": "eiffel",
//!   "candidate_features": [
//!     { "x": 0.30, "y": 0.05, "w": 0.40, "h": 0.35, "feature_index": 0 },
//!     { "x": 0.20, "y": 0.55, "w": 0.60, "h": 0.40, "feature_index": 1 }
//!   ],
//!   "bank": { "frequencies": [0.05, 0.08, 0.125, 0.2, 0.3], "orientations": 10,
//!             "kernel_size": 31, "envelope_ratio": 1.0 },
//!   "preprocess": { "size": 128,
//!                   "ahe": { "tiles_x": 8, "tiles_y": 8, "clip_limit": 0.01, "bins": 256 } },
//!   "train": { "max_epochs": 300, "mse_goal": 0.0003, "grad_goal": 1e-6, "reg_gamma": 0.9,
//!              "hidden": 25, "seed": 1, "sigma0": 1e-5, "lambda0": 1e-7 },
//!   "threshold": 0.8,
//!   "scan": "off"
//! }
//! ```
//!
//! Every section except `name` and `candidate_features` may be omitted and
//! falls back to the defaults above.

use std::path::Path;

use gaborset_core::classify::{ScanMode, DEFAULT_THRESHOLD};
use gaborset_core::gabor::{
    make_bank, uniform_orientations, GaborBank, DEFAULT_ENVELOPE_RATIO, DEFAULT_FREQUENCIES,
    DEFAULT_KERNEL_SIZE, DEFAULT_ORIENTATIONS,
};
use gaborset_core::network::TrainConfig;
use gaborset_core::preprocess::PreprocessParams;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable overriding `train.seed`.
pub const SEED_ENV: &str = "GABORSET_SEED";

pub const MAX_CANDIDATE_FEATURES: usize = 8;

/// A candidate feature region, in fractions of the image size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiSpec {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    /// Output neuron that detects this feature.
    pub feature_index: usize,
}

impl RoiSpec {
    pub fn full(feature_index: usize) -> Self {
        Self { x: 0.0, y: 0.0, w: 1.0, h: 1.0, feature_index }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite());
        let eps = 1e-12;
        if !finite
            || self.x < 0.0
            || self.y < 0.0
            || self.w <= 0.0
            || self.h <= 0.0
            || self.x + self.w > 1.0 + eps
            || self.y + self.h > 1.0 + eps
        {
            return Err(Error::Config(format!("ROI {self:?} is not inside the unit square")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BankConfig {
    pub frequencies: Vec<f64>,
    /// Number of orientations spread uniformly over `[0, π)`.
    pub orientations: usize,
    pub kernel_size: usize,
    pub envelope_ratio: f64,
}

impl Default for BankConfig {
    fn default() -> Self {
        Self {
            frequencies: DEFAULT_FREQUENCIES.to_vec(),
            orientations: DEFAULT_ORIENTATIONS,
            kernel_size: DEFAULT_KERNEL_SIZE,
            envelope_ratio: DEFAULT_ENVELOPE_RATIO,
        }
    }
}

impl BankConfig {
    pub fn build(&self) -> Result<GaborBank> {
        Ok(make_bank(
            &self.frequencies,
            &uniform_orientations(self.orientations),
            self.kernel_size,
            self.envelope_ratio,
        )?)
    }

    pub fn feature_len(&self) -> usize {
        2 * self.frequencies.len() * self.orientations
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkConfig {
    pub name: String,
    pub candidate_features: Vec<RoiSpec>,
    #[serde(default)]
    pub bank: BankConfig,
    #[serde(default)]
    pub preprocess: PreprocessParams,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub scan: ScanMode,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl LandmarkConfig {
    /// Default settings with one whole-image candidate feature per index.
    pub fn with_features(name: &str, candidate_features: Vec<RoiSpec>) -> Self {
        Self {
            name: name.to_string(),
            candidate_features,
            bank: BankConfig::default(),
            preprocess: PreprocessParams::default(),
            train: TrainConfig::default(),
            threshold: DEFAULT_THRESHOLD,
            scan: ScanMode::Off,
        }
    }

    pub fn outputs(&self) -> usize {
        self.candidate_features.len()
    }

    /// ROI for output neuron `feature_index`.
    pub fn roi(&self, feature_index: usize) -> Option<&RoiSpec> {
        self.candidate_features.iter().find(|r| r.feature_index == feature_index)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.candidate_features.len();
        if n == 0 || n > MAX_CANDIDATE_FEATURES {
            return Err(Error::Config(format!(
                "need 1..={MAX_CANDIDATE_FEATURES} candidate features, got {n}"
            )));
        }
        let mut seen = vec![false; n];
        for roi in &self.candidate_features {
            roi.validate()?;
            match seen.get_mut(roi.feature_index) {
                Some(s) if !*s => *s = true,
                _ => {
                    return Err(Error::Config(format!(
                        "feature indices must be 0..{n} without repeats, got {}",
                        roi.feature_index
                    )))
                }
            }
        }
        if !self.threshold.is_finite() {
            return Err(Error::Config("threshold must be finite".into()));
        }
        self.preprocess.validate()?;
        self.train.validate()?;
        if self.bank.kernel_size > self.preprocess.size {
            return Err(Error::Config(format!(
                "kernel size {} exceeds common size {}",
                self.bank.kernel_size, self.preprocess.size
            )));
        }
        self.bank.build()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Reads and validates a config file, applying the seed override from
    /// [`SEED_ENV`] when set.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.apply_seed_override(std::env::var(SEED_ENV).ok().as_deref())?;
        Ok(cfg)
    }

    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.train.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={v} is not an unsigned integer")))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_feature() -> LandmarkConfig {
        LandmarkConfig::with_features(
            "eiffel",
            vec![
                RoiSpec { x: 0.3, y: 0.05, w: 0.4, h: 0.35, feature_index: 0 },
                RoiSpec { x: 0.2, y: 0.55, w: 0.6, h: 0.4, feature_index: 1 },
            ],
        )
    }

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = LandmarkConfig::from_json(
            r#"{"name":"x","candidate_features":[{"x":0,"y":0,"w":1,"h":1,"feature_index":0}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.bank, BankConfig::default());
        assert_eq!(cfg.bank.feature_len(), 100);
        assert_eq!(cfg.train.max_epochs, 300);
        assert_eq!(cfg.threshold, 0.8);
        assert_eq!(cfg.scan, ScanMode::Off);
    }

    #[test]
    fn rejects_bad_rois_and_indices() {
        let mut cfg = two_feature();
        cfg.candidate_features[0].w = 0.8;
        assert!(cfg.validate().is_err());

        let mut cfg = two_feature();
        cfg.candidate_features[1].feature_index = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = two_feature();
        cfg.candidate_features.clear();
        assert!(cfg.validate().is_err());

        let mut cfg = two_feature();
        cfg.preprocess.size = 16;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn seed_override() {
        let mut cfg = two_feature();
        cfg.apply_seed_override(Some("77")).unwrap();
        assert_eq!(cfg.train.seed, 77);
        assert!(cfg.apply_seed_override(Some("abc")).is_err());
        cfg.apply_seed_override(None).unwrap();
        assert_eq!(cfg.train.seed, 77);
    }

    proptest! {
        #[test]
        fn json_round_trip(
            x in 0.0f64..0.5, y in 0.0f64..0.5, w in 0.01f64..0.5, h in 0.01f64..0.5,
            gamma in 0.0f64..=1.0, seed in any::<u64>(), ratio in 0.1f64..4.0,
            threshold in -1.0f64..1.0, grid in any::<bool>(),
        ) {
            let mut cfg = LandmarkConfig::with_features("p", vec![RoiSpec { x, y, w, h, feature_index: 0 }]);
            cfg.train.reg_gamma = gamma;
            cfg.train.seed = seed;
            cfg.bank.envelope_ratio = ratio;
            cfg.threshold = threshold;
            cfg.scan = if grid { ScanMode::Grid3 } else { ScanMode::Off };
            prop_assert_eq!(LandmarkConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        }
    }
}

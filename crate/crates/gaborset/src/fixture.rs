//! Synthetic two-feature landmark dataset.
//!
//! Candidate feature `i` is an oriented sinusoid grating filling its ROI:
//! feature 0 sits in the top-left quadrant, feature 1 in the bottom-right.
//! Everything outside a grating is Gaussian pixel noise. Landmark test
//! images carry both gratings; non-landmark images are pure noise.
//!
//! Layout written by [`write_fixture`]:
//!
//! ```text
//! config.json  manifest.json  train_labels.csv  test_labels.csv
//! features/feature_0/*.png  features/feature_1/*.png
//! nonfeature/*.png  test/*.png
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use gaborset_core::classify::ScanMode;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::config::{LandmarkConfig, RoiSpec};
use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::formats::{write_labels, Label};
use crate::imageio::{ensure_dir, save_gray_u8};

/// One grating, in cycles per pixel of the full image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grating {
    pub frequency: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureSpec {
    pub size: usize,
    pub positives_per_feature: usize,
    pub negatives: usize,
    /// Held-out images; the first half (before shuffling) are landmarks.
    pub test_images: usize,
    pub seed: u64,
    pub gratings: [Grating; 2],
    pub rois: [RoiSpec; 2],
    pub amplitude: f64,
    pub grating_noise: f64,
    pub background_noise: f64,
    /// Relative frequency and absolute orientation (radians) jitter.
    pub frequency_jitter: f64,
    pub theta_jitter: f64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            size: 128,
            positives_per_feature: 120,
            negatives: 50,
            test_images: 100,
            seed: 7,
            gratings: [
                Grating { frequency: 0.16, theta: 0.0 },
                Grating { frequency: 0.25, theta: PI / 2.0 },
            ],
            rois: [
                RoiSpec { x: 0.0, y: 0.0, w: 0.5, h: 0.5, feature_index: 0 },
                RoiSpec { x: 0.5, y: 0.5, w: 0.5, h: 0.5, feature_index: 1 },
            ],
            amplitude: 70.0,
            grating_noise: 20.0,
            background_noise: 40.0,
            frequency_jitter: 0.05,
            theta_jitter: 0.05,
        }
    }
}

impl FixtureSpec {
    /// Config matching the fixture: its ROIs, default bank and training
    /// settings, and the grid scan that revisits the quadrant crops.
    pub fn config(&self) -> LandmarkConfig {
        let mut cfg = LandmarkConfig::with_features("synthetic", self.rois.to_vec());
        cfg.preprocess.size = self.size;
        cfg.scan = ScanMode::Grid3;
        cfg
    }

    fn render(&self, rng: &mut ChaCha8Rng, gratings: &[(usize, bool)]) -> Vec<u8> {
        let s = self.size;
        let background = Normal::new(128.0, self.background_noise).expect("valid sigma");
        let in_grating = Normal::new(0.0, self.grating_noise).expect("valid sigma");
        let mut px: Vec<f64> = (0..s * s).map(|_| background.sample(rng)).collect();
        for &(i, present) in gratings {
            if !present {
                continue;
            }
            let g = self.gratings[i];
            let f = g.frequency * (1.0 + rng.random_range(-self.frequency_jitter..=self.frequency_jitter));
            let theta = g.theta + rng.random_range(-self.theta_jitter..=self.theta_jitter);
            let phase = rng.random_range(0.0..2.0 * PI);
            let (sin_t, cos_t) = theta.sin_cos();
            let roi = self.rois[i];
            let x0 = (roi.x * s as f64).round() as usize;
            let y0 = (roi.y * s as f64).round() as usize;
            let x1 = ((roi.x + roi.w) * s as f64).round() as usize;
            let y1 = ((roi.y + roi.h) * s as f64).round() as usize;
            for y in y0..y1.min(s) {
                for x in x0..x1.min(s) {
                    let u = x as f64 * cos_t + y as f64 * sin_t;
                    px[y * s + x] = 128.0
                        + self.amplitude * (2.0 * PI * f * u + phase).sin()
                        + in_grating.sample(rng);
                }
            }
        }
        px.into_iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect()
    }
}

#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub root: PathBuf,
    pub config: PathBuf,
    pub manifest: PathBuf,
    pub train_labels: PathBuf,
    pub test_labels: PathBuf,
}

/// Writes the dataset, its config and manifest under `root`.
pub fn write_fixture(root: &Path, spec: &FixtureSpec) -> Result<FixturePaths> {
    if spec.size < 16 || spec.positives_per_feature == 0 || spec.test_images < 2 {
        return Err(Error::Config("fixture needs size >= 16, positives and >= 2 test images".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let s = spec.size;
    let save = |dir: &Path, name: String, pixels: Vec<u8>| -> Result<String> {
        ensure_dir(dir)?;
        save_gray_u8(&dir.join(&name), s, s, pixels)?;
        Ok(name)
    };

    let mut train_labels = Vec::new();
    let mut feature_dirs = Vec::new();
    for i in 0..2 {
        let rel = PathBuf::from("features").join(format!("feature_{i}"));
        let dir = root.join(&rel);
        for k in 0..spec.positives_per_feature {
            let layout = [(0, i == 0), (1, i == 1)];
            let pixels = spec.render(&mut rng, &layout);
            let name = save(&dir, format!("f{i}_{k:03}.png"), pixels)?;
            train_labels.push((rel.join(name).display().to_string(), Label::Feature(i)));
        }
        feature_dirs.push(rel);
    }
    let neg_dir = root.join("nonfeature");
    ensure_dir(&neg_dir)?;
    for k in 0..spec.negatives {
        let pixels = spec.render(&mut rng, &[]);
        let name = save(&neg_dir, format!("n_{k:03}.png"), pixels)?;
        train_labels.push((Path::new("nonfeature").join(name).display().to_string(), Label::None));
    }

    let test_dir = root.join("test");
    ensure_dir(&test_dir)?;
    let mut kinds: Vec<bool> = (0..spec.test_images).map(|k| k < spec.test_images / 2).collect();
    kinds.shuffle(&mut rng);
    let mut test_labels = Vec::new();
    for (k, landmark) in kinds.into_iter().enumerate() {
        let layout = [(0, landmark), (1, landmark)];
        let pixels = spec.render(&mut rng, &layout);
        let name = save(&test_dir, format!("t_{k:03}.png"), pixels)?;
        let label = if landmark { Label::Landmark } else { Label::None };
        test_labels.push((Path::new("test").join(name).display().to_string(), label));
    }

    let paths = FixturePaths {
        root: root.to_path_buf(),
        config: root.join("config.json"),
        manifest: root.join("manifest.json"),
        train_labels: root.join("train_labels.csv"),
        test_labels: root.join("test_labels.csv"),
    };
    write_labels(&paths.train_labels, &train_labels)?;
    write_labels(&paths.test_labels, &test_labels)?;
    spec.config().save(&paths.config)?;
    DatasetManifest {
        feature_dirs,
        nonfeature_dir: "nonfeature".into(),
        test_dir: "test".into(),
        test_labels: Some("test_labels.csv".into()),
    }
    .save(&paths.manifest)?;
    Ok(paths)
}

//! Dataset manifest and training-set ingestion.
//!
//! ```json
//! {
//!   "feature_dirs": ["features/feature_0", "features/feature_1"],
//!   "nonfeature_dir": "nonfeature",
//!   "test_dir": "test",
//!   "test_labels": "test_labels.csv"
//! }
//! ```
//!
//! Relative paths are resolved against the manifest's directory.
//! `feature_dirs[i]` holds the training positives of candidate feature `i`.

use std::path::{Path, PathBuf};

use gaborset_core::features::{BankFilter, FeatureVector};
use gaborset_core::network::TrainingSet;
use gaborset_core::preprocess::{preprocess, PreprocessParams, RawImage};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{LandmarkConfig, RoiSpec};
use crate::error::{Error, Result};
use crate::imageio::{list_images, load_image};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub feature_dirs: Vec<PathBuf>,
    pub nonfeature_dir: PathBuf,
    pub test_dir: PathBuf,
    /// Optional ground truth for the test set (`labels.csv` format).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_labels: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: Self = serde_json::from_str(&text)
            .map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new(""));
        m.resolve(base);
        Ok(m)
    }

    /// Makes every relative path relative to `base`.
    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.feature_dirs.iter_mut().for_each(fix);
        fix(&mut self.nonfeature_dir);
        fix(&mut self.test_dir);
        if let Some(p) = self.test_labels.as_mut() {
            fix(p);
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::formats::write_json(path, self)
    }

    /// Checks the manifest against the config: one feature directory per
    /// candidate feature, and every directory present.
    pub fn validate(&self, config: &LandmarkConfig) -> Result<()> {
        if self.feature_dirs.len() != config.outputs() {
            return Err(Error::Config(format!(
                "manifest lists {} feature directories, config has {} candidate features",
                self.feature_dirs.len(),
                config.outputs()
            )));
        }
        for dir in self.feature_dirs.iter().chain([&self.nonfeature_dir, &self.test_dir]) {
            if !dir.is_dir() {
                return Err(Error::Data(format!("{} is not a directory", dir.display())));
            }
        }
        Ok(())
    }
}

/// Preprocessing plus Gabor features with a precomputed filter bank.
#[derive(Debug, Clone)]
pub struct Featurizer {
    filter: BankFilter,
    params: PreprocessParams,
}

impl Featurizer {
    pub fn new(config: &LandmarkConfig) -> Result<Self> {
        let bank = config.bank.build()?;
        Ok(Self { filter: BankFilter::new(&bank, config.preprocess.size)?, params: config.preprocess })
    }

    pub fn features(&self, raw: &RawImage) -> Result<FeatureVector> {
        Ok(self.filter.extract(&preprocess(raw, &self.params)?)?)
    }

    /// Crops to `roi` (if any) before featurizing.
    pub fn features_in(&self, raw: &RawImage, roi: Option<&RoiSpec>) -> Result<FeatureVector> {
        match roi {
            Some(r) => self.features(&raw.crop_fraction(r.x, r.y, r.w, r.h)?),
            None => self.features(raw),
        }
    }

    /// Loads and featurizes every path in parallel; the result keeps input
    /// order. Unreadable files come back as `Err` for the caller to skip.
    pub fn features_for_paths(
        &self,
        jobs: &[(PathBuf, Option<RoiSpec>)],
    ) -> Vec<Result<FeatureVector>> {
        jobs.par_iter()
            .map(|(path, roi)| self.features_in(&load_image(path)?, roi.as_ref()))
            .collect()
    }
}

/// Training patterns with their provenance.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub set: TrainingSet,
    pub paths: Vec<PathBuf>,
    /// `Some(i)` for positives of feature `i`, `None` for negatives.
    pub labels: Vec<Option<usize>>,
    pub skipped: Vec<PathBuf>,
}

/// Builds the training set: feature images cropped to their feature's ROI,
/// non-feature images whole. Order is feature 0, 1, … then negatives, each
/// directory sorted by path.
pub fn ingest(config: &LandmarkConfig, manifest: &DatasetManifest) -> Result<Ingested> {
    manifest.validate(config)?;
    let featurizer = Featurizer::new(config)?;
    let mut jobs = Vec::new();
    let mut labels = Vec::new();
    for (i, dir) in manifest.feature_dirs.iter().enumerate() {
        let roi = *config.roi(i).expect("validated config has every feature index");
        let images = list_images(dir)?;
        if images.is_empty() {
            return Err(Error::Core(gaborset_core::Error::InvalidTrainingSet(format!(
                "no images in feature directory {}",
                dir.display()
            ))));
        }
        for p in images {
            jobs.push((p, Some(roi)));
            labels.push(Some(i));
        }
    }
    for p in list_images(&manifest.nonfeature_dir)? {
        jobs.push((p, None));
        labels.push(None);
    }
    info!("ingesting {} training images", jobs.len());

    let results = featurizer.features_for_paths(&jobs);
    let mut patterns = Vec::new();
    let mut kept_paths = Vec::new();
    let mut kept_labels = Vec::new();
    let mut skipped = Vec::new();
    for (((path, _), label), result) in jobs.into_iter().zip(labels).zip(results) {
        match result {
            Ok(f) => {
                patterns.push(f.into_vec());
                kept_paths.push(path);
                kept_labels.push(label);
            }
            Err(e) => {
                warn!("skipping {}: {e}", path.display());
                skipped.push(path);
            }
        }
    }
    for i in 0..config.outputs() {
        if !kept_labels.contains(&Some(i)) {
            return Err(Error::Core(gaborset_core::Error::InvalidTrainingSet(format!(
                "no readable images for candidate feature {i}"
            ))));
        }
    }
    let set = TrainingSet::from_labels(patterns, &kept_labels, config.outputs())?;
    Ok(Ingested { set, paths: kept_paths, labels: kept_labels, skipped })
}

//! Batch classification into matched/unmatched folders and the end-to-end
//! train → classify → evaluate run.

use std::path::{Path, PathBuf};

use gaborset_core::classify::{ClassificationDecision, Classifier};
use gaborset_core::network::{scg_train, TrainReport};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::LandmarkConfig;
use crate::dataset::{ingest, DatasetManifest};
use crate::error::{Error, Result, StageExt};
use crate::formats::{read_labels, write_decisions, write_json, DecisionRow, ModelFile};
use crate::imageio::{ensure_dir, list_images, load_image};
use crate::report::{evaluate, EvaluationReport};

#[derive(Debug, Clone)]
pub struct ClassifyOutcome {
    pub decisions: Vec<(PathBuf, ClassificationDecision)>,
    pub skipped: Vec<PathBuf>,
}

impl ClassifyOutcome {
    pub fn rows(&self) -> Vec<DecisionRow> {
        self.decisions
            .iter()
            .map(|(p, d)| DecisionRow::new(p.display().to_string(), d))
            .collect()
    }
}

/// Output folders must start empty so that they hold exactly one run.
fn prepare_output_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        let mut entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        if entries.next().is_some() {
            return Err(Error::Config(format!("output directory {} is not empty", dir.display())));
        }
    }
    ensure_dir(dir)
}

/// Classifies every image in `in_dir` and copies it (never moves) into
/// `matched` or `unmatched`. Unreadable files are logged and skipped.
/// Decisions are returned in sorted path order.
pub fn classify_dir(
    classifier: &Classifier,
    in_dir: &Path,
    matched: &Path,
    unmatched: &Path,
) -> Result<ClassifyOutcome> {
    let paths = list_images(in_dir)?;
    for dir in [matched, unmatched] {
        prepare_output_dir(dir)?;
    }
    info!("classifying {} images from {}", paths.len(), in_dir.display());
    let results: Vec<_> = paths
        .par_iter()
        .map(|p| load_image(p).and_then(|img| Ok(classifier.classify(&img)?)))
        .collect();

    let mut outcome = ClassifyOutcome { decisions: Vec::new(), skipped: Vec::new() };
    for (path, result) in paths.into_iter().zip(results) {
        match result {
            Ok(d) => {
                let dest_dir = if d.verdict.is_matched() { matched } else { unmatched };
                let dest = dest_dir.join(path.file_name().expect("listed files have names"));
                std::fs::copy(&path, &dest).map_err(|e| Error::io(&dest, e))?;
                outcome.decisions.push((path, d));
            }
            Err(e) => {
                warn!("skipping {}: {e}", path.display());
                outcome.skipped.push(path);
            }
        }
    }
    Ok(outcome)
}

pub fn build_classifier(config: &LandmarkConfig, model: ModelFile) -> Result<Classifier> {
    let bank = config.bank.build()?;
    let model = model.to_model()?;
    Ok(Classifier::new(model, &bank, config.preprocess, config.threshold, config.scan)?)
}

/// File names written by [`run_pipeline`] inside its output directory.
pub const MODEL_FILE: &str = "model.json";
pub const DECISIONS_FILE: &str = "decisions.csv";
pub const REPORT_FILE: &str = "report.json";
pub const MATCHED_DIR: &str = "matched";
pub const UNMATCHED_DIR: &str = "unmatched";

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub training_images: usize,
    pub training_skipped: usize,
    pub train_report: TrainReport,
    pub report: EvaluationReport,
}

/// Removes what a failed run created, leaving pre-existing content alone.
struct Cleanup {
    created: Vec<PathBuf>,
    armed: bool,
}

impl Cleanup {
    fn track(&mut self, path: PathBuf) -> PathBuf {
        if !path.exists() {
            self.created.push(path.clone());
        }
        path
    }
}

impl Drop for Cleanup {
    fn drop(&mut self) {
        if !self.armed {
            return;
        }
        for p in self.created.iter().rev() {
            let removed =
                if p.is_dir() { std::fs::remove_dir_all(p) } else { std::fs::remove_file(p) };
            if let Err(e) = removed {
                warn!("could not remove partial output {}: {e}", p.display());
            }
        }
    }
}

/// ingest → train → classify the test set → write outputs → evaluate.
///
/// Writes `model.json`, `matched/`, `unmatched/`, `decisions.csv` and
/// `report.json` into `out`. On error every output created so far is
/// removed and the error names the failing stage.
pub fn run_pipeline(config: &LandmarkConfig, manifest: &DatasetManifest, out: &Path) -> Result<RunSummary> {
    let mut cleanup = Cleanup { created: Vec::new(), armed: true };
    let out = cleanup.track(out.to_path_buf());
    ensure_dir(&out).stage("output")?;
    let model_path = cleanup.track(out.join(MODEL_FILE));
    let matched = cleanup.track(out.join(MATCHED_DIR));
    let unmatched = cleanup.track(out.join(UNMATCHED_DIR));
    let decisions_path = cleanup.track(out.join(DECISIONS_FILE));
    let report_path = cleanup.track(out.join(REPORT_FILE));
    for p in [&model_path, &decisions_path, &report_path] {
        if p.exists() {
            return Err(Error::Config(format!("{} already exists", p.display())).in_stage("output"));
        }
    }

    let ingested = ingest(config, manifest).stage("ingest")?;
    info!(
        "training on {} patterns ({} skipped)",
        ingested.set.len(),
        ingested.skipped.len()
    );
    let (model, train_report) = scg_train(&ingested.set, &config.train).stage("train")?;
    info!(
        "training stopped after {} epochs ({:?}), perf {:.3e}",
        train_report.epochs_run, train_report.stop_reason, train_report.final_perf
    );
    let model_file = ModelFile::new(&model, Some(train_report.clone()));
    model_file.save(&model_path).stage("train")?;

    let classifier = build_classifier(config, model_file).stage("classify")?;
    let outcome =
        classify_dir(&classifier, &manifest.test_dir, &matched, &unmatched).stage("classify")?;
    let rows = outcome.rows();
    write_decisions(&decisions_path, &rows).stage("classify")?;

    let labels = manifest.test_labels.as_deref().map(read_labels).transpose().stage("evaluate")?;
    let report = evaluate(&rows, labels.as_ref(), outcome.skipped.len()).stage("evaluate")?;
    write_json(&report_path, &report).stage("evaluate")?;

    cleanup.armed = false;
    Ok(RunSummary {
        training_images: ingested.set.len(),
        training_skipped: ingested.skipped.len(),
        train_report,
        report,
    })
}

//! On-disk formats: feature CSV, label CSV, decision CSV and model JSON.
//!
//! * `features.csv`: header `path,f0,…,f{n-1}`, one row per image.
//! * `labels.csv`: header `path,label`; `label` is a candidate-feature index
//!   (`0`, `1`, …), `landmark`, or `none` for non-landmark images.
//! * `decisions.csv`: header `path,outputs,factors,overall,verdict`; list
//!   columns are `;`-separated.
//! * `model.json`: network shape, activation, seed, row-major weights and the
//!   training report.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gaborset_core::classify::{ClassificationDecision, Verdict};
use gaborset_core::network::{MlpModel, TrainReport};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

fn data_err(path: &Path, msg: impl fmt::Display) -> Error {
    Error::Data(format!("{}: {msg}", path.display()))
}

// ---------------------------------------------------------------- features

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub path: String,
    pub values: Vec<f64>,
}

pub fn write_features(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    let width = rows.first().map_or(0, |r| r.values.len());
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let header: Vec<String> =
        std::iter::once("path".to_string()).chain((0..width).map(|i| format!("f{i}"))).collect();
    w.write_record(&header).map_err(csv_err(path))?;
    for row in rows {
        if row.values.len() != width {
            return Err(data_err(path, "feature rows differ in length"));
        }
        let record: Vec<String> = std::iter::once(row.path.clone())
            .chain(row.values.iter().map(|v| v.to_string()))
            .collect();
        w.write_record(&record).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_err(path))?;
        let mut fields = record.iter();
        let p = fields.next().ok_or_else(|| data_err(path, "empty row"))?.to_string();
        let values = fields
            .map(|f| f.trim().parse::<f64>().map_err(|e| data_err(path, format!("{p}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(FeatureRow { path: p, values });
    }
    Ok(rows)
}

// ---------------------------------------------------------------- labels

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    /// Training positive for the candidate feature with this index.
    Feature(usize),
    /// Landmark image (positive ground truth for evaluation).
    Landmark,
    /// Non-landmark image.
    None,
}

impl Label {
    pub fn is_landmark(self) -> bool {
        !matches!(self, Label::None)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Feature(i) => write!(f, "{i}"),
            Label::Landmark => f.write_str("landmark"),
            Label::None => f.write_str("none"),
        }
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "landmark" => Ok(Label::Landmark),
            "none" | "nonlandmark" | "non-landmark" => Ok(Label::None),
            other => other
                .parse()
                .map(Label::Feature)
                .map_err(|_| format!("unknown label {s:?} (expected index, landmark or none)")),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRecord {
    path: String,
    label: String,
}

pub fn write_labels(path: &Path, labels: &[(String, Label)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for (p, label) in labels {
        w.serialize(LabelRecord { path: p.clone(), label: label.to_string() })
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_labels(path: &Path) -> Result<LabelIndex> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut entries = Vec::new();
    for record in r.deserialize::<LabelRecord>() {
        let record = record.map_err(csv_err(path))?;
        let label = record.label.parse().map_err(|e| data_err(path, e))?;
        entries.push((PathBuf::from(record.path), label));
    }
    LabelIndex::new(entries).map_err(|e| data_err(path, e))
}

/// Labels keyed by path. Lookup tries the exact path first, then a unique
/// entry whose path is a component-wise suffix of the query (or vice versa),
/// so labels written relative to a dataset root match absolute paths.
#[derive(Debug, Clone, Default)]
pub struct LabelIndex {
    entries: BTreeMap<PathBuf, Label>,
}

impl LabelIndex {
    pub fn new(entries: Vec<(PathBuf, Label)>) -> std::result::Result<Self, String> {
        let mut map = BTreeMap::new();
        for (p, l) in entries {
            if map.insert(p.clone(), l).is_some() {
                return Err(format!("duplicate label for {}", p.display()));
            }
        }
        Ok(Self { entries: map })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, query: &Path) -> Option<Label> {
        if let Some(l) = self.entries.get(query) {
            return Some(*l);
        }
        let mut found = None;
        for (p, l) in &self.entries {
            if query.ends_with(p) || p.ends_with(query) {
                if found.is_some() {
                    return None;
                }
                found = Some(*l);
            }
        }
        found
    }
}

// ---------------------------------------------------------------- decisions

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRow {
    pub path: String,
    pub outputs: Vec<f64>,
    pub factors: Vec<u8>,
    pub overall: u8,
    pub verdict: Verdict,
}

impl DecisionRow {
    pub fn new(path: String, d: &ClassificationDecision) -> Self {
        Self {
            path,
            outputs: d.outputs.clone(),
            factors: d.detection_factors.clone(),
            overall: d.overall_matching,
            verdict: d.verdict,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DecisionRecord {
    path: String,
    outputs: String,
    factors: String,
    overall: u8,
    verdict: Verdict,
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

fn split<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, T::Err> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(|v| v.trim().parse()).collect()
}

pub fn write_decisions(path: &Path, rows: &[DecisionRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    if rows.is_empty() {
        w.write_record(["path", "outputs", "factors", "overall", "verdict"])
            .map_err(csv_err(path))?;
    }
    for row in rows {
        w.serialize(DecisionRecord {
            path: row.path.clone(),
            outputs: join(&row.outputs),
            factors: join(&row.factors),
            overall: row.overall,
            verdict: row.verdict,
        })
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_decisions(path: &Path) -> Result<Vec<DecisionRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut rows = Vec::new();
    for record in r.deserialize::<DecisionRecord>() {
        let rec = record.map_err(csv_err(path))?;
        let bad = |e: &dyn fmt::Display| data_err(path, format!("{}: {e}", rec.path));
        rows.push(DecisionRow {
            outputs: split(&rec.outputs).map_err(|e| bad(&e))?,
            factors: split(&rec.factors).map_err(|e| bad(&e))?,
            overall: rec.overall,
            verdict: rec.verdict,
            path: rec.path,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------- model

pub const ACTIVATION: &str = "tanh";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub input: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub activation: String,
    pub seed: u64,
    /// `hidden × input`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `outputs × hidden`, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_report: Option<TrainReport>,
}

impl ModelFile {
    pub fn new(model: &MlpModel, report: Option<TrainReport>) -> Self {
        Self {
            input: model.inputs,
            hidden: model.hidden,
            outputs: model.outputs,
            activation: ACTIVATION.to_string(),
            seed: model.seed,
            w1: model.w1.clone(),
            b1: model.b1.clone(),
            w2: model.w2.clone(),
            b2: model.b2.clone(),
            train_report: report,
        }
    }

    pub fn to_model(&self) -> Result<MlpModel> {
        if self.activation != ACTIVATION {
            return Err(Error::Data(format!("unsupported activation {:?}", self.activation)));
        }
        let model = MlpModel {
            inputs: self.input,
            hidden: self.hidden,
            outputs: self.outputs,
            seed: self.seed,
            w1: self.w1.clone(),
            b1: self.b1.clone(),
            w2: self.w2.clone(),
            b2: self.b2.clone(),
        };
        model.validate().map_err(|e| Error::Data(e.to_string()))?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("model serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| data_err(path, e))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

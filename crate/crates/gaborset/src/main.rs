use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gaborset::config::{BankConfig, LandmarkConfig};
use gaborset::dataset::{DatasetManifest, Featurizer};
use gaborset::error::{Error, Result, StageExt};
use gaborset::fixture::{write_fixture, FixtureSpec};
use gaborset::formats::{
    read_decisions, read_features, read_labels, write_decisions, write_features, write_json,
    FeatureRow, Label, LabelIndex, ModelFile,
};
use gaborset::imageio::{ensure_dir, list_images, load_image, save_gray_u8, save_scaled_png};
use gaborset::pipeline::{build_classifier, classify_dir, run_pipeline};
use gaborset::report::{evaluate, published_consistency};
use gaborset_core::classify::ScanMode;
use gaborset_core::features::BankFilter;
use gaborset_core::network::{scg_train, TrainingSet};
use gaborset_core::preprocess::{preprocess, AheParams, PreprocessParams};
use log::{info, warn};

#[derive(Parser)]
#[command(name = "gaborset", version, about = "Select landmark images from a batch with Gabor features and a trained network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanArg {
    Off,
    Grid3,
}

impl From<ScanArg> for ScanMode {
    fn from(s: ScanArg) -> Self {
        match s {
            ScanArg::Off => ScanMode::Off,
            ScanArg::Grid3 => ScanMode::Grid3,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Grayscale, resize, AHE and normalize every image; write PNG previews.
    Preprocess {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(long, default_value_t = 8)]
        tiles: usize,
        #[arg(long, default_value_t = 0.01)]
        clip: f64,
    },
    /// Dump real part, imaginary part and magnitude of every bank kernel.
    GenKernels {
        #[arg(long)]
        out: PathBuf,
        /// Landmark config whose bank to use (default bank otherwise).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compute feature vectors for every image in a directory.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        /// Landmark config providing the bank and preprocessing settings.
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Crop images labeled with a feature index to that feature's ROI.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Write per-kernel magnitude maps as PNGs.
        #[arg(long)]
        dump_maps: Option<PathBuf>,
    },
    /// Train the network on extracted features.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sort images into matched and unmatched folders (files are copied).
    Classify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Landmark config providing the bank and preprocessing settings.
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        matched: PathBuf,
        #[arg(long)]
        unmatched: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_enum)]
        scan: Option<ScanArg>,
        #[arg(long, default_value = "decisions.csv")]
        decisions: PathBuf,
    },
    /// Score decisions against labels and/or recompute the published tables.
    Evaluate {
        #[arg(long, requires = "labels")]
        decisions: Option<PathBuf>,
        #[arg(long, requires = "decisions")]
        labels: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Add a consistency check of the published landmark tables.
        #[arg(long)]
        published_tables: bool,
    },
    /// Ingest, train, classify the test set and evaluate.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the synthetic two-feature dataset with config and manifest.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = FixtureSpec::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = FixtureSpec::default().positives_per_feature)]
        positives: usize,
        #[arg(long, default_value_t = FixtureSpec::default().negatives)]
        negatives: usize,
        #[arg(long, default_value_t = FixtureSpec::default().test_images)]
        test: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Preprocess { input, out, size, tiles, clip } => {
            let params = PreprocessParams {
                size,
                ahe: AheParams { tiles_x: tiles, tiles_y: tiles, clip_limit: clip, ..Default::default() },
            };
            params.validate().map_err(|e| Error::Config(e.to_string()))?;
            cmd_preprocess(&input, &out, &params)
        }
        Command::GenKernels { out, config } => {
            let bank = match config {
                Some(p) => LandmarkConfig::load(&p)?.bank,
                None => BankConfig::default(),
            };
            cmd_gen_kernels(&bank, &out)
        }
        Command::Extract { input, bank, out, labels, dump_maps } => {
            let config = LandmarkConfig::load(&bank)?;
            let labels = labels.as_deref().map(read_labels).transpose()?;
            cmd_extract(&config, &input, &out, labels.as_ref(), dump_maps.as_deref())
        }
        Command::Train { features, labels, config, out } => {
            let config = LandmarkConfig::load(&config)?;
            cmd_train(&config, &features, &labels, &out)
        }
        Command::Classify { input, model, bank, matched, unmatched, threshold, scan, decisions } => {
            let mut config = LandmarkConfig::load(&bank)?;
            if let Some(t) = threshold {
                config.threshold = t;
            }
            if let Some(s) = scan {
                config.scan = s.into();
            }
            config.validate()?;
            let classifier = build_classifier(&config, ModelFile::load(&model)?)?;
            let outcome = classify_dir(&classifier, &input, &matched, &unmatched)?;
            write_decisions(&decisions, &outcome.rows())?;
            let matched_count = outcome.decisions.iter().filter(|(_, d)| d.verdict.is_matched()).count();
            info!(
                "{} matched, {} unmatched, {} skipped",
                matched_count,
                outcome.decisions.len() - matched_count,
                outcome.skipped.len()
            );
            Ok(())
        }
        Command::Evaluate { decisions, labels, report, published_tables } => {
            if decisions.is_none() && !published_tables {
                return Err(Error::Config(
                    "evaluate needs --decisions/--labels or --published-tables".into(),
                ));
            }
            let mut rep = match (decisions, labels) {
                (Some(d), Some(l)) => evaluate(&read_decisions(&d)?, Some(&read_labels(&l)?), 0)?,
                _ => evaluate(&[], None, 0)?,
            };
            if published_tables {
                rep.paper_consistency = Some(published_consistency());
            }
            write_json(&report, &rep)?;
            if let Some(m) = &rep.metrics {
                info!(
                    "precision {:.6} recall {:.6} accuracy {:.6} f1 {:.6}",
                    m.precision, m.recall, m.accuracy, m.f1
                );
            }
            Ok(())
        }
        Command::Run { config, manifest, out } => {
            let config = LandmarkConfig::load(&config)?;
            let manifest = DatasetManifest::load(&manifest)?;
            let summary = run_pipeline(&config, &manifest, &out)?;
            let r = &summary.report;
            info!("{} images: {} matched, {} unmatched", r.images, r.matched, r.unmatched);
            if let Some(m) = &r.metrics {
                info!("accuracy {:.4}, f1 {:.4}", m.accuracy, m.f1);
            }
            Ok(())
        }
        Command::Fixture { out, seed, positives, negatives, test } => {
            let spec = FixtureSpec {
                seed,
                positives_per_feature: positives,
                negatives,
                test_images: test,
                ..FixtureSpec::default()
            };
            let paths = write_fixture(&out, &spec)?;
            info!("fixture written; run with --config {} --manifest {}", paths.config.display(), paths.manifest.display());
            Ok(())
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cmd_preprocess(input: &Path, out: &Path, params: &PreprocessParams) -> Result<()> {
    ensure_dir(out)?;
    for path in list_images(input)? {
        let gray = match load_image(&path).and_then(|raw| Ok(preprocess(&raw, params)?)) {
            Ok(g) => g,
            Err(e) => {
                warn!("skipping {}: {e}", path.display());
                continue;
            }
        };
        // [-1, 1] -> [0, 255]
        let data = gray.data().iter().map(|v| ((v + 1.0) * 127.5).round() as u8).collect();
        save_gray_u8(&out.join(format!("{}.png", stem(&path))), gray.side(), gray.side(), data)?;
    }
    Ok(())
}

fn cmd_gen_kernels(bank: &BankConfig, out: &Path) -> Result<()> {
    let bank = bank.build()?;
    ensure_dir(out)?;
    let n_orient = bank.orientations().len();
    for (k, kernel) in bank.kernels().iter().enumerate() {
        let (fi, oi) = (k / n_orient, k % n_orient);
        let side = kernel.size();
        let parts: [(&str, Vec<f64>); 3] = [
            ("re", kernel.data().iter().map(|c| c.re).collect()),
            ("im", kernel.data().iter().map(|c| c.im).collect()),
            ("mag", kernel.data().iter().map(|c| c.norm()).collect()),
        ];
        for (name, values) in parts {
            save_scaled_png(&out.join(format!("kernel_f{fi}_o{oi}_{name}.png")), side, &values)?;
        }
    }
    info!("wrote {} kernels to {}", bank.len(), out.display());
    Ok(())
}

fn cmd_extract(
    config: &LandmarkConfig,
    input: &Path,
    out: &Path,
    labels: Option<&LabelIndex>,
    dump_maps: Option<&Path>,
) -> Result<()> {
    let featurizer = Featurizer::new(config)?;
    let jobs: Vec<_> = list_images(input)?
        .into_iter()
        .map(|p| {
            let roi = match labels.and_then(|l| l.get(&p)) {
                Some(Label::Feature(i)) => Some(*config.roi(i).ok_or_else(|| {
                    Error::Data(format!("{}: feature index {i} not in config", p.display()))
                })?),
                _ => None,
            };
            Ok((p, roi))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for ((path, _), result) in jobs.iter().zip(featurizer.features_for_paths(&jobs)) {
        match result {
            Ok(f) => rows.push(FeatureRow { path: path.display().to_string(), values: f.into_vec() }),
            Err(e) => warn!("skipping {}: {e}", path.display()),
        }
    }
    write_features(out, &rows)?;
    info!("wrote {} feature rows to {}", rows.len(), out.display());

    if let Some(dir) = dump_maps {
        ensure_dir(dir)?;
        let filter = BankFilter::new(&config.bank.build()?, config.preprocess.size)?;
        for (path, roi) in &jobs {
            let Ok(raw) = load_image(path) else { continue };
            let raw = match roi {
                Some(r) => raw.crop_fraction(r.x, r.y, r.w, r.h)?,
                None => raw,
            };
            let gray = preprocess(&raw, &config.preprocess)?;
            for map in filter.responses(&gray)? {
                let name = format!("{}_k{:02}.png", stem(path), map.kernel_index());
                save_scaled_png(&dir.join(name), map.side(), &map.magnitudes())?;
            }
        }
    }
    Ok(())
}

fn cmd_train(config: &LandmarkConfig, features: &Path, labels: &Path, out: &Path) -> Result<()> {
    let rows = read_features(features)?;
    let labels = read_labels(labels)?;
    let n = config.outputs();
    let mut patterns = Vec::with_capacity(rows.len());
    let mut targets = Vec::with_capacity(rows.len());
    for row in rows {
        let label = labels
            .get(Path::new(&row.path))
            .ok_or_else(|| Error::Core(gaborset_core::Error::MissingLabel(row.path.clone())))?;
        let target = match label {
            Label::Feature(i) => Some(i),
            Label::Landmark if n == 1 => Some(0),
            Label::Landmark => {
                return Err(Error::Data(format!(
                    "{}: label `landmark` is ambiguous with {n} candidate features; use a feature index",
                    row.path
                )))
            }
            Label::None => None,
        };
        patterns.push(row.values);
        targets.push(target);
    }
    let set = TrainingSet::from_labels(patterns, &targets, n).stage("train")?;
    let (model, report) = scg_train(&set, &config.train).stage("train")?;
    info!(
        "stopped after {} epochs ({:?}), perf {:.3e}",
        report.epochs_run, report.stop_reason, report.final_perf
    );
    ModelFile::new(&model, Some(report)).save(out)
}

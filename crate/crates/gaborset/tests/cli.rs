//! End-to-end checks of the command-line surface on a small synthetic set.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gaborset::config::SEED_ENV;
use gaborset::fixture::{write_fixture, FixturePaths, FixtureSpec};
use gaborset::formats::{read_decisions, ModelFile};
use serde_json::Value;
use tempfile::TempDir;

fn small_spec() -> FixtureSpec {
    FixtureSpec { size: 64, positives_per_feature: 12, negatives: 8, test_images: 6, ..FixtureSpec::default() }
}

fn small_fixture() -> (TempDir, FixturePaths) {
    let dir = tempfile::tempdir().unwrap();
    let paths = write_fixture(&dir.path().join("data"), &small_spec()).unwrap();
    (dir, paths)
}

fn gaborset(args: &[&str]) -> Output {
    gaborset_env(args, None)
}

fn gaborset_env(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gaborset"));
    cmd.args(args).env("RUST_LOG", "warn").env_remove(SEED_ENV);
    if let Some(s) = seed {
        cmd.env(SEED_ENV, s);
    }
    cmd.output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn names(dir: &Path) -> BTreeSet<String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_is_deterministic_and_partitions_the_test_set() {
    let (dir, fx) = small_fixture();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        assert_code(&gaborset(&["run", "--config", s(&fx.config), "--manifest", s(&fx.manifest), "--out", s(out)]), 0);
    }
    for file in ["model.json", "decisions.csv", "report.json"] {
        assert_eq!(
            std::fs::read(out_a.join(file)).unwrap(),
            std::fs::read(out_b.join(file)).unwrap(),
            "{file} differs between runs"
        );
    }
    let matched = names(&out_a.join("matched"));
    let unmatched = names(&out_a.join("unmatched"));
    assert!(matched.is_disjoint(&unmatched));
    let all: BTreeSet<_> = matched.union(&unmatched).cloned().collect();
    assert_eq!(all, names(&fx.root.join("test")));
    // Copies, not moves.
    assert_eq!(names(&fx.root.join("test")).len(), 6);

    let model = json(&out_a.join("model.json"));
    assert_eq!(model["input"], 100);
    assert_eq!(model["outputs"], 2);
    assert_eq!(model["activation"], "tanh");
    assert!(model["train_report"]["perf_history"].is_array());
    let report = json(&out_a.join("report.json"));
    assert_eq!(report["images"], 6);
    assert!(report["metrics"]["accuracy"].is_number());
}

#[test]
fn seed_environment_variable_overrides_config() {
    let (dir, fx) = small_fixture();
    let out = dir.path().join("seeded");
    let result = gaborset_env(
        &["run", "--config", s(&fx.config), "--manifest", s(&fx.manifest), "--out", s(&out)],
        Some("4242"),
    );
    assert_code(&result, 0);
    assert_eq!(ModelFile::load(&out.join("model.json")).unwrap().seed, 4242);

    let bad = gaborset_env(
        &["run", "--config", s(&fx.config), "--manifest", s(&fx.manifest), "--out", s(&dir.path().join("x"))],
        Some("not-a-number"),
    );
    assert_code(&bad, 2);
}

#[test]
fn config_errors_exit_with_two() {
    let (dir, fx) = small_fixture();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"name":"x","candidate_features":[{"x":0.8,"y":0,"w":0.5,"h":1,"feature_index":0}]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let result = gaborset(&["run", "--config", s(&cfg), "--manifest", s(&fx.manifest), "--out", s(&out)]);
    assert_code(&result, 2);
    assert!(!out.exists());

    std::fs::write(&cfg, "{ not json").unwrap();
    assert_code(&gaborset(&["gen-kernels", "--out", s(&out), "--config", s(&cfg)]), 2);
}

#[test]
fn failed_stage_removes_partial_outputs() {
    let (dir, fx) = small_fixture();
    // Drop one test label so evaluation (the last stage) fails.
    let labels = std::fs::read_to_string(&fx.test_labels).unwrap();
    let trimmed: Vec<&str> = labels.lines().take(labels.lines().count() - 1).collect();
    std::fs::write(&fx.test_labels, trimmed.join("\n") + "\n").unwrap();
    let out = dir.path().join("out");
    let result = gaborset(&["run", "--config", s(&fx.config), "--manifest", s(&fx.manifest), "--out", s(&out)]);
    assert_code(&result, 3);
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("evaluate"), "{stderr}");
    assert!(!out.exists(), "partial outputs left behind");
    assert_eq!(names(&fx.root.join("test")).len(), 6);
}

#[test]
fn empty_test_directory_reports_zero_images() {
    let (dir, fx) = small_fixture();
    for entry in std::fs::read_dir(fx.root.join("test")).unwrap() {
        std::fs::remove_file(entry.unwrap().path()).unwrap();
    }
    let out = dir.path().join("out");
    assert_code(&gaborset(&["run", "--config", s(&fx.config), "--manifest", s(&fx.manifest), "--out", s(&out)]), 0);
    let report = json(&out.join("report.json"));
    assert_eq!(report["zero_images"], true);
    assert_eq!(report["images"], 0);
    assert!(read_decisions(&out.join("decisions.csv")).unwrap().is_empty());
}

#[test]
fn staged_commands_chain_and_skip_corrupt_files() {
    let (dir, fx) = small_fixture();
    let d = dir.path();
    let features = d.join("features.csv");
    let train_dir = d.join("train_images");
    std::fs::create_dir(&train_dir).unwrap();
    // Gather every training image into one folder, as `extract` reads one directory.
    let mut label_lines = vec!["path,label".to_string()];
    let labels = std::fs::read_to_string(&fx.train_labels).unwrap();
    for line in labels.lines().skip(1) {
        let (path, label) = line.split_once(',').unwrap();
        let src = fx.root.join(path);
        let dst = train_dir.join(src.file_name().unwrap());
        std::fs::copy(&src, &dst).unwrap();
        label_lines.push(format!("{},{label}", dst.display()));
    }
    let train_labels = d.join("train_labels.csv");
    std::fs::write(&train_labels, label_lines.join("\n")).unwrap();

    assert_code(
        &gaborset(&[
            "extract", "--in", s(&train_dir), "--bank", s(&fx.config), "--out", s(&features),
            "--labels", s(&train_labels),
        ]),
        0,
    );
    let model = d.join("model.json");
    assert_code(
        &gaborset(&[
            "train", "--features", s(&features), "--labels", s(&train_labels), "--config", s(&fx.config),
            "--out", s(&model),
        ]),
        0,
    );

    let test_dir = fx.root.join("test");
    std::fs::write(test_dir.join("zz_corrupt.png"), b"definitely not a png").unwrap();
    let (matched, unmatched, decisions) = (d.join("m"), d.join("u"), d.join("decisions.csv"));
    assert_code(
        &gaborset(&[
            "classify", "--in", s(&test_dir), "--model", s(&model), "--bank", s(&fx.config),
            "--matched", s(&matched), "--unmatched", s(&unmatched), "--decisions", s(&decisions),
        ]),
        0,
    );
    let rows = read_decisions(&decisions).unwrap();
    assert_eq!(rows.len(), 6, "corrupt file must be skipped");
    assert_eq!(names(&matched).len() + names(&unmatched).len(), 6);
    assert!(rows.iter().all(|r| r.outputs.len() == 2 && r.factors.len() == 2));

    let report = d.join("report.json");
    assert_code(
        &gaborset(&[
            "evaluate", "--decisions", s(&decisions), "--labels", s(&fx.test_labels), "--report", s(&report),
        ]),
        0,
    );
    let r = json(&report);
    let c = &r["counts"];
    let total: u64 = ["tp", "fn", "fp", "tn"].iter().map(|k| c[k].as_u64().unwrap()).sum();
    assert_eq!(total, 6);
    assert!(r.get("paper_consistency").is_none());

    // Threshold above tanh's range: nothing can match.
    let (m2, u2) = (d.join("m2"), d.join("u2"));
    assert_code(
        &gaborset(&[
            "classify", "--in", s(&test_dir), "--model", s(&model), "--bank", s(&fx.config),
            "--matched", s(&m2), "--unmatched", s(&u2), "--decisions", s(&d.join("d2.csv")),
            "--threshold", "1.5", "--scan", "off",
        ]),
        0,
    );
    assert!(names(&m2).is_empty());
    assert_eq!(names(&u2).len(), 6);
}

#[test]
fn missing_model_is_a_data_error() {
    let (dir, fx) = small_fixture();
    let d = dir.path();
    let result = gaborset(&[
        "classify", "--in", s(&fx.root.join("test")), "--model", s(&d.join("nope.json")),
        "--bank", s(&fx.config), "--matched", s(&d.join("m")), "--unmatched", s(&d.join("u")),
    ]);
    assert_code(&result, 3);
}

#[test]
fn evaluate_published_tables() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    assert_code(&gaborset(&["evaluate", "--published-tables", "--report", s(&report)]), 0);
    let r = json(&report);
    let pc = &r["paper_consistency"];
    let statue = pc["landmarks"].as_array().unwrap().iter().find(|row| row["name"] == "Statue").unwrap();
    assert!((statue["f1"]["computed"].as_f64().unwrap() - 3138.0 / 3685.0).abs() < 1e-12);
    assert_eq!(statue["f1"]["consistent"], false);
    assert_eq!(statue["f1_out_of_range"], true);
    assert!(pc["aggregates"].as_array().unwrap().iter().all(|a| a["sum_matches"] == true));
    assert_code(&gaborset(&["evaluate", "--report", s(&report)]), 2);
}

#[test]
fn preprocess_and_kernel_dumps() {
    let (dir, fx) = small_fixture();
    let d = dir.path();
    let kernels = d.join("kernels");
    assert_code(&gaborset(&["gen-kernels", "--out", s(&kernels)]), 0);
    let k = names(&kernels);
    assert_eq!(k.len(), 150);
    assert!(k.contains("kernel_f4_o9_mag.png"));

    let pre = d.join("pre");
    assert_code(
        &gaborset(&["preprocess", "--in", s(&fx.root.join("test")), "--out", s(&pre), "--size", "32"]),
        0,
    );
    assert_eq!(names(&pre).len(), 6);
    let img = gaborset::imageio::load_image(&pre.join("t_000.png")).unwrap();
    assert_eq!((img.width(), img.height()), (32, 32));
    assert_eq!(*img.data().iter().min().unwrap(), 0);
    assert_eq!(*img.data().iter().max().unwrap(), 255);

    assert_code(&gaborset(&["preprocess", "--in", s(&fx.root), "--out", s(&pre), "--size", "4"]), 2);
}

#[test]
fn extract_dumps_magnitude_maps() {
    let (dir, fx) = small_fixture();
    let d = dir.path();
    let only = d.join("one");
    std::fs::create_dir(&only).unwrap();
    std::fs::copy(fx.root.join("test/t_000.png"), only.join("t_000.png")).unwrap();
    let maps: PathBuf = d.join("maps");
    let features = d.join("f.csv");
    assert_code(
        &gaborset(&[
            "extract", "--in", s(&only), "--bank", s(&fx.config), "--out", s(&features), "--dump-maps", s(&maps),
        ]),
        0,
    );
    assert_eq!(names(&maps).len(), 50);
    let rows = gaborset::formats::read_features(&features).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].values.len(), 100);
}

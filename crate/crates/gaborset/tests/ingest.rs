use gaborset::config::{LandmarkConfig, RoiSpec};
use gaborset::dataset::{ingest, DatasetManifest};
use gaborset::fixture::{write_fixture, FixtureSpec};

fn spec() -> FixtureSpec {
    FixtureSpec { size: 32, positives_per_feature: 5, negatives: 4, test_images: 2, ..FixtureSpec::default() }
}

fn small_bank(cfg: &mut LandmarkConfig) {
    cfg.bank.kernel_size = 15;
    cfg.preprocess.size = 32;
}

#[test]
fn two_features_give_one_hot_targets_in_sorted_order() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path(), &spec()).unwrap();
    let mut cfg = LandmarkConfig::load(&fx.config).unwrap();
    small_bank(&mut cfg);
    let manifest = DatasetManifest::load(&fx.manifest).unwrap();
    let a = ingest(&cfg, &manifest).unwrap();
    assert_eq!(a.set.len(), 14);
    assert_eq!(a.set.outputs(), 2);
    assert_eq!(a.set.inputs(), 100);
    assert_eq!(a.set.targets()[0], vec![1.0, -1.0]);
    assert_eq!(a.set.targets()[5], vec![-1.0, 1.0]);
    assert_eq!(a.set.targets()[13], vec![-1.0, -1.0]);
    let feature0: Vec<_> = a.paths[..5].to_vec();
    let mut sorted = feature0.clone();
    sorted.sort();
    assert_eq!(feature0, sorted);

    let b = ingest(&cfg, &manifest).unwrap();
    assert_eq!(a.set.patterns(), b.set.patterns());
    assert_eq!(a.paths, b.paths);
}

#[test]
fn single_feature_targets_are_scalars() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path(), &spec()).unwrap();
    let mut cfg = LandmarkConfig::with_features("one", vec![RoiSpec::full(0)]);
    small_bank(&mut cfg);
    let mut manifest = DatasetManifest::load(&fx.manifest).unwrap();
    manifest.feature_dirs.truncate(1);
    let got = ingest(&cfg, &manifest).unwrap();
    assert_eq!(got.set.outputs(), 1);
    assert!(got.set.targets().iter().all(|t| t.len() == 1 && t[0].abs() == 1.0));
}

#[test]
fn empty_positive_directory_is_rejected_and_corrupt_files_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path(), &spec()).unwrap();
    let mut cfg = LandmarkConfig::load(&fx.config).unwrap();
    small_bank(&mut cfg);
    let manifest = DatasetManifest::load(&fx.manifest).unwrap();

    std::fs::write(manifest.nonfeature_dir.join("broken.png"), b"garbage").unwrap();
    let got = ingest(&cfg, &manifest).unwrap();
    assert_eq!(got.skipped.len(), 1);
    assert_eq!(got.set.len(), 14);

    for entry in std::fs::read_dir(&manifest.feature_dirs[1]).unwrap() {
        std::fs::remove_file(entry.unwrap().path()).unwrap();
    }
    let err = ingest(&cfg, &manifest).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("feature directory"), "{err}");
}

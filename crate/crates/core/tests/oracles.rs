//! Independent reference computations checked against the library paths.

use std::f64::consts::PI;

use gaborset_core::classify::{decide, Verdict};
use gaborset_core::features::{extract_features, fft_convolve, wrap_kernel, BankFilter};
use gaborset_core::fft::Fft2d;
use gaborset_core::gabor::{
    default_bank, kernel_value, make_bank, make_kernel, uniform_orientations, GaborKernel,
    GaborParams,
};
use gaborset_core::network::{
    gradient, mse, perf, scg_train, scg_train_from, MlpModel, StopReason, TrainConfig,
    TrainingSet,
};
use gaborset_core::preprocess::{equalize_adaptive, AheParams, GrayImage};
use gaborset_core::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_image(rng: &mut ChaCha8Rng, side: usize) -> GrayImage {
    GrayImage::from_fn(side, |_, _| rng.random_range(-1.0..1.0)).unwrap()
}

fn random_kernel(rng: &mut ChaCha8Rng, size: usize) -> GaborKernel {
    let p = GaborParams::new(
        rng.random_range(0.01..0.5),
        rng.random_range(0.0..PI),
        rng.random_range(0.05..1.0),
        rng.random_range(0.05..1.0),
    )
    .unwrap();
    make_kernel(&p, size).unwrap()
}

/// O(N²K²) circular convolution straight from the definition.
fn direct_circular(img: &GrayImage, k: &GaborKernel) -> Vec<Complex> {
    let n = img.side() as isize;
    let r = k.radius() as isize;
    let mut out = vec![Complex::new(0.0, 0.0); (n * n) as usize];
    for y in 0..n {
        for x in 0..n {
            let mut acc = Complex::new(0.0, 0.0);
            for dy in -r..=r {
                for dx in -r..=r {
                    let sx = (x - dx).rem_euclid(n) as usize;
                    let sy = (y - dy).rem_euclid(n) as usize;
                    acc += k.at(dx, dy) * img.get(sx, sy);
                }
            }
            out[(y * n + x) as usize] = acc;
        }
    }
    out
}

#[test]
fn fft_convolution_matches_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let ksize = 2 * rng.random_range(1..=4) + 1;
        let side = rng.random_range(ksize..=32);
        let img = random_image(&mut rng, side);
        let k = random_kernel(&mut rng, ksize);
        let fast = fft_convolve(&img, &k).unwrap();
        let slow = direct_circular(&img, &k);
        let err = fast.data().iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "side {side} kernel {ksize}: {err}");
    }
}

#[test]
fn fft_convolution_every_small_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for side in 3..=32 {
        let img = random_image(&mut rng, side);
        let k = random_kernel(&mut rng, 3);
        let fast = fft_convolve(&img, &k).unwrap();
        let slow = direct_circular(&img, &k);
        for (a, b) in fast.data().iter().zip(&slow) {
            assert!((a - b).norm() < 1e-9);
        }
    }
}

#[test]
fn parseval_holds_for_responses() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for side in [9, 16, 20, 32] {
        let img = random_image(&mut rng, side);
        let k = random_kernel(&mut rng, 7);
        let response = fft_convolve(&img, &k).unwrap();
        let plan = Fft2d::square(side);
        let mut ks = wrap_kernel(&k, side).unwrap();
        plan.forward(&mut ks);
        let mut is: Vec<Complex> = img.data().iter().map(|&v| Complex::new(v, 0.0)).collect();
        plan.forward(&mut is);
        let spectral: f64 =
            ks.iter().zip(&is).map(|(a, b)| (a * b).norm_sqr()).sum::<f64>() / (side * side) as f64;
        let spatial: f64 = response.data().iter().map(|v| v.norm_sqr()).sum();
        assert!((spatial - spectral).abs() / spectral < 1e-9);
    }
}

#[test]
fn kernel_properties_on_random_parameterizations() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..100 {
        let size = 2 * rng.random_range(1..=10) + 1;
        let k = random_kernel(&mut rng, size);
        let p = *k.params();
        assert_eq!(k.at(0, 0), Complex::new(1.0, 0.0));
        let r = k.radius() as isize;
        for dy in -r..=r {
            for dx in -r..=r {
                let g = k.at(dx, dy);
                assert!((g.norm() - p.envelope(dx as f64, dy as f64)).abs() < 1e-12);
                assert_eq!(k.at(-dx, -dy), g.conj());
            }
        }
    }
}

#[test]
fn continuous_point_values() {
    let p = GaborParams::new(0.3, 0.2, 0.4, 0.1).unwrap();
    for (x, y) in [(0.5, -1.25), (2.0, 3.0)] {
        assert_eq!(kernel_value(&p, -x, -y), kernel_value(&p, x, y).conj());
    }
}

/// `cos(2π f (x cosθ + y sinθ))` on a `side × side` grid.
fn grating(side: usize, f: f64, theta: f64) -> GrayImage {
    GrayImage::from_fn(side, |x, y| {
        (2.0 * PI * f * (x as f64 * theta.cos() + y as f64 * theta.sin())).cos()
    })
    .unwrap()
}

#[test]
fn grating_excites_matching_orientation_most() {
    let bank = default_bank();
    let filter = BankFilter::new(&bank, 128).unwrap();
    let orientations = uniform_orientations(10);
    for (fi, &f) in bank.frequencies().iter().enumerate() {
        for oi in [0, 3, 7] {
            let img = grating(128, f, orientations[oi]);
            let features = filter.extract(&img).unwrap();
            let target = features.mean_slot(bank.index_of(fi, oi));
            for other in (0..10).filter(|&o| o != oi) {
                assert!(
                    target > features.mean_slot(bank.index_of(fi, other)),
                    "f={f} orientation {oi} vs {other}"
                );
            }
        }
    }
}

#[test]
fn circular_shift_leaves_statistics_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let bank = make_bank(&[0.08, 0.2], &uniform_orientations(4), 9, 1.0).unwrap();
    let img = random_image(&mut rng, 32);
    let shifted = GrayImage::from_fn(32, |x, y| img.get((x + 5) % 32, (y + 29) % 32)).unwrap();
    let a = extract_features(&img, &bank).unwrap();
    let b = extract_features(&shifted, &bank).unwrap();
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn bank_permutation_permutes_slots() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let bank = make_bank(&[0.1, 0.3], &uniform_orientations(3), 7, 1.0).unwrap();
    let order = [4, 0, 5, 2, 1, 3];
    let permuted = bank.permuted(&order).unwrap();
    let img = random_image(&mut rng, 24);
    let a = extract_features(&img, &bank).unwrap();
    let b = extract_features(&img, &permuted).unwrap();
    for (slot, &src) in order.iter().enumerate() {
        assert_eq!(b.mean_slot(slot), a.mean_slot(src));
        assert_eq!(b.std_slot(slot), a.std_slot(src));
    }
}

#[test]
fn default_bank_yields_hundred_features() {
    let img = GrayImage::from_vec(128, vec![0.0; 128 * 128]).unwrap();
    let f = extract_features(&img, &default_bank()).unwrap();
    assert_eq!(f.len(), 100);
    assert!(f.as_slice().iter().all(|v| v.is_finite()));
}

/// Global histogram equalization by ranking every pixel value directly.
fn global_equalization(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let cdf_min = values.iter().filter(|&&v| v <= min).count() as f64;
    values
        .iter()
        .map(|&v| {
            let rank = values.iter().filter(|&&u| u <= v).count() as f64;
            255.0 * (rank - cdf_min) / (n - cdf_min)
        })
        .collect()
}

#[test]
fn single_tile_unclipped_ahe_is_global_equalization() {
    // Ramp with repeated levels so the rank mapping is non-trivial.
    let img = GrayImage::from_fn(64, |x, y| ((x + y) / 2) as f64 * 255.0 / 63.0)
        .unwrap();
    let img = GrayImage::from_vec(64, img.data().iter().map(|v| v.floor()).collect()).unwrap();
    let p = AheParams { tiles_x: 1, tiles_y: 1, clip_limit: 1.0, bins: 256 };
    let out = equalize_adaptive(&img, &p).unwrap();
    let oracle = global_equalization(img.data());
    for (a, b) in out.data().iter().zip(&oracle) {
        assert!((a - b).abs() <= 1.0, "{a} vs {b}");
    }
}

fn random_set(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize, n: usize) -> TrainingSet {
    let patterns = (0..n).map(|_| (0..inputs).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut targets: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..outputs).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect())
        .collect();
    targets[0][0] = 1.0;
    targets[1][0] = -1.0;
    TrainingSet::new(patterns, targets).unwrap()
}

fn finite_difference(m: &MlpModel, set: &TrainingSet, gamma: f64, h: f64) -> Vec<f64> {
    let base = m.params();
    let mut probe = m.clone();
    (0..base.len())
        .map(|i| {
            let mut w = base.clone();
            w[i] = base[i] + h;
            probe.set_params(&w);
            let up = perf(&probe, set, gamma).unwrap();
            w[i] = base[i] - h;
            probe.set_params(&w);
            let down = perf(&probe, set, gamma).unwrap();
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for probe in 0..100 {
        let inputs = rng.random_range(1..8);
        let hidden = rng.random_range(1..6);
        let outputs = rng.random_range(1..4);
        let patterns = rng.random_range(2..6);
        let set = random_set(&mut rng, inputs, outputs, patterns);
        let m = MlpModel::random(inputs, hidden, outputs, probe);
        let gamma = rng.random_range(0.0..=1.0);
        let analytic = gradient(&m, &set, gamma).unwrap();
        let numeric = finite_difference(&m, &set, gamma, 1e-5);
        let err = relative_error(&analytic, &numeric);
        assert!(err <= 1e-4, "probe {probe}: {err}");
    }
}

/// Two well separated blobs in 100-d, class A targets (+1, -1), class B (-1, +1).
fn blob_set() -> TrainingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let centres: Vec<Vec<f64>> =
        (0..2).map(|_| (0..100).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut patterns = Vec::new();
    let mut labels = Vec::new();
    for i in 0..40 {
        let class = i % 2;
        patterns.push(centres[class].iter().map(|c| c + 0.1 * (rng.random::<f64>() - 0.5)).collect());
        labels.push(Some(class));
    }
    TrainingSet::from_labels(patterns, &labels, 2).unwrap()
}

#[test]
fn plain_gradient_descent_separates_blobs() {
    // Oracle: the toy set is separable by this architecture at all.
    let set = blob_set();
    let mut m = MlpModel::random(100, 5, 2, 1);
    for _ in 0..2000 {
        let g = gradient(&m, &set, 1.0).unwrap();
        let w: Vec<f64> = m.params().iter().zip(&g).map(|(w, g)| w - 0.05 * g).collect();
        m.set_params(&w);
    }
    assert!(mse(&m, &set).unwrap() < 1e-2);
}

#[test]
fn scg_reaches_low_performance_on_blobs() {
    let set = blob_set();
    let cfg = TrainConfig { hidden: 5, seed: 1, ..TrainConfig::default() };
    let (model, report) = scg_train(&set, &cfg).unwrap();
    assert!(report.final_perf <= 1e-2, "{report:?}");
    assert!(report.epochs_run <= 300);
    for w in report.perf_history.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert_eq!(report.perf_history.len(), report.epochs_run + 1);
    assert!(model.validate().is_ok());
    let again = scg_train(&set, &cfg).unwrap();
    assert_eq!(again.0, model);
    assert_eq!(again.1, report);
}

#[test]
fn zero_epochs_returns_initial_model() {
    let set = blob_set();
    let cfg = TrainConfig { max_epochs: 0, hidden: 3, seed: 4, ..TrainConfig::default() };
    let (model, report) = scg_train(&set, &cfg).unwrap();
    assert_eq!(model, MlpModel::random(100, 3, 2, 4));
    assert_eq!(report.stop_reason, StopReason::Epochs);
    assert_eq!(report.epochs_run, 0);
}

#[test]
fn already_good_model_stops_on_performance_goal() {
    let set = TrainingSet::new(vec![vec![0.0], vec![1.0]], vec![vec![1.0], vec![-1.0]]).unwrap();
    let mut m = MlpModel::zeros(1, 1, 1);
    m.w1[0] = -40.0;
    m.b1[0] = 20.0;
    m.w2[0] = 40.0;
    let cfg = TrainConfig { reg_gamma: 1.0, hidden: 1, ..TrainConfig::default() };
    let (out, report) = scg_train_from(m.clone(), &set, &cfg).unwrap();
    assert_eq!(report.stop_reason, StopReason::MseGoal);
    assert_eq!(report.epochs_run, 0);
    assert_eq!(out, m);
}

#[test]
fn degenerate_training_sets_rejected() {
    assert!(TrainingSet::new(vec![vec![0.0]; 3], vec![vec![-1.0]; 3]).is_err());
    assert!(TrainingSet::new(vec![], vec![]).is_err());
}

/// Literal transcription of the per-neuron loop.
fn loop_semantics(outputs: &[f64], threshold: f64) -> bool {
    let mut detection = vec![0u8; outputs.len()];
    let mut overall = 1u8;
    let mut neuron = 0;
    while neuron < outputs.len() {
        if outputs[neuron] >= threshold {
            detection[neuron] = 1;
        }
        overall *= detection[neuron];
        neuron += 1;
    }
    overall == 1
}

#[test]
fn decide_agrees_with_loop_on_full_grid() {
    let grid = [-1.0, -0.5, 0.0, 0.79, 0.8, 0.9, 1.0];
    for n in 1..=3u32 {
        let mut cases = 0;
        for code in 0..7usize.pow(n) {
            let outputs: Vec<f64> =
                (0..n).map(|i| grid[code / 7usize.pow(i) % 7]).collect();
            let d = decide(&outputs, 0.8).unwrap();
            assert_eq!(d.verdict == Verdict::Matched, loop_semantics(&outputs, 0.8), "{outputs:?}");
            cases += 1;
        }
        assert_eq!(cases, 7usize.pow(n));
    }
}

#[test]
fn raising_an_output_never_unmatches() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..1000 {
        let n = rng.random_range(1..4);
        let outputs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t = rng.random_range(-1.0..1.0);
        let before = decide(&outputs, t).unwrap().verdict;
        let mut raised = outputs.clone();
        let i = rng.random_range(0..n);
        raised[i] += rng.random_range(0.0..1.0);
        let after = decide(&raised, t).unwrap().verdict;
        if before == Verdict::Matched {
            assert_eq!(after, Verdict::Matched);
        }
        if outputs.iter().any(|&o| o < t) {
            assert_eq!(before, Verdict::Unmatched);
        }
    }
}

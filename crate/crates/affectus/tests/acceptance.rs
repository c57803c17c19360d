//! Acceptance checks for the whole pipeline, one numbered criterion per
//! test. Each test prints a single `criterion N (...): PASS|FAIL` line
//! (shown with `--nocapture`; the test name carries the same number so
//! the default harness output also reads as one line per criterion).
//!
//! Criteria 6 and 7 share one full-size synthetic sweep, executed once
//! behind a `OnceLock`: criterion 6 judges lag recovery, model quality,
//! and runtime; criterion 7 judges byte-level reproducibility of a rerun
//! with the same seed.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use affectus::alignment::shift_labels;
use affectus::experiment::{
    run_experiment, ChannelConfig, DataConfig, ExperimentConfig, MiSettings, OutputConfig,
    RunOptions, SweepConfig,
};
use affectus::functionals::{
    binary_functionals, continuous_functionals, extract_features, WindowPlan, BINARY_FUNCTIONALS,
    CONTINUOUS_FUNCTIONALS,
};
use affectus::ingest::{
    AnnotationTrack, ChannelKind, ChannelSpec, Dimension, Partition, RecordingSeries,
};
use affectus::metrics::ccc;
use affectus::model::{self, ModelConfig};
use affectus::selection::{estimate_mi, MiReport};
use affectus::synth::{generate_corpus, CorpusPaths, SynthSpec};
use affectus::wavelet::{dwt, idwt, max_levels, WaveletConfig};
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Prints the criterion's one-line verdict, then fails the test with
/// `detail` if the check did not hold.
fn verdict(label: &str, ok: bool, detail: &str) {
    println!("criterion {label}: {}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {label}: {detail}");
}

// --- criterion 1: windowed functionals against a naive oracle ---------

#[test]
fn criterion_1_functionals_match_naive_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut problems: Vec<String> = Vec::new();
    let mut max_err = 0.0f64;
    let rates = [25u32, 30, 50];

    for case in 0..1000 {
        let len = rng.random_range(2..=400);
        let fps = rates[rng.random_range(0..rates.len())];
        if case % 5 < 3 {
            // Continuous window; every 25th is constant to hit the
            // zero-variance branches of skewness and kurtosis.
            let window: Vec<f64> = if case % 25 == 0 {
                vec![rng.random_range(-3.0..3.0); len]
            } else {
                let scale = 10f64.powf(rng.random_range(-2.0..2.0));
                let offset = rng.random_range(-5.0..5.0);
                (0..len).map(|_| offset + scale * rng.random_range(-1.0..1.0)).collect()
            };
            let got = continuous_functionals(&window, fps).expect("finite window is accepted");
            let want = common::oracle_continuous(&window, fps);
            for (name, (g, w)) in CONTINUOUS_FUNCTIONALS.iter().zip(got.iter().zip(&want)) {
                let err = common::rel_err(*g, *w);
                max_err = max_err.max(err);
                if err > 1e-9 {
                    problems.push(format!(
                        "continuous {name} on a window of {len} at {fps} fps: got {g}, oracle {w}"
                    ));
                }
            }
        } else {
            let p = rng.random_range(0.0..=1.0);
            let window: Vec<f64> =
                (0..len).map(|_| if rng.random_bool(p) { 1.0 } else { 0.0 }).collect();
            let got = binary_functionals(&window, fps).expect("0/1 window is accepted");
            let want = common::oracle_binary(&window, fps);
            for (name, (g, w)) in BINARY_FUNCTIONALS.iter().zip(got.iter().zip(&want)) {
                let err = common::rel_err(*g, *w);
                max_err = max_err.max(err);
                if err > 1e-9 {
                    problems.push(format!(
                        "binary {name} on a window of {len} at {fps} fps: got {g}, oracle {w}"
                    ));
                }
            }
        }
    }

    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(30) {
        problems.push(format!("took {elapsed:.2?}, budget is 30 s"));
    }
    verdict(
        &format!("1 (functionals vs naive oracle, 1000 windows, max rel err {max_err:.2e}, {elapsed:.2?})"),
        problems.is_empty(),
        &problems.join("; "),
    );
}

// --- criterion 2: wavelet reconstruction and level bookkeeping --------

#[test]
fn criterion_2_wavelet_reconstruction_and_level_caps() {
    let config = WaveletConfig::default();
    let filter_len = 2 * config.vanishing_moments;
    let mut problems: Vec<String> = Vec::new();

    for (frames, want) in [(200usize, 3usize), (150, 2), (100, 2)] {
        let got = max_levels(frames, filter_len).expect("window longer than filter");
        if got != want {
            problems.push(format!("max_levels({frames}, {filter_len}) = {got}, want {want}"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        for n in [100usize, 150, 200] {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let levels = max_levels(n, filter_len).unwrap();
            let rec = idwt(&dwt(&x, levels, &config).unwrap()).unwrap();
            let err = x
                .iter()
                .zip(&rec)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(err);
            if err > 1e-9 {
                problems.push(format!("reconstruction error {err:.3e} on {n} samples"));
            }
        }
    }

    // A constant signal has no detail content at any level.
    for n in [100usize, 150, 200] {
        let levels = max_levels(n, filter_len).unwrap();
        let decomp = dwt(&vec![0.7; n], levels, &config).unwrap();
        for (level, band) in decomp.details.iter().enumerate() {
            let peak = band.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if peak > 1e-9 {
                problems.push(format!(
                    "constant input leaks {peak:.3e} into detail level {level} at {n} samples"
                ));
            }
        }
    }

    verdict(
        &format!("2 (wavelet reconstruction 300 signals, worst {worst:.2e}; level caps; constant details)"),
        problems.is_empty(),
        &problems.join("; "),
    );
}

// --- criterion 3: concordance golden values and invariances -----------

#[test]
fn criterion_3_ccc_golden_values_and_affine_invariance() {
    let mut problems: Vec<String> = Vec::new();

    let golden = ccc(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
    let want = 8.0 / 22.0;
    if (golden - want).abs() > 1e-12 {
        problems.push(format!("ccc([1,2,3],[2,4,6]) = {golden}, want {want}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for i in 0..100 {
        let n = rng.random_range(3..=300);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
        let self_agreement = ccc(&x, &x).unwrap();
        if self_agreement != 1.0 {
            problems.push(format!(
                "ccc(x,x) = {self_agreement} (not exactly 1) on random vector {i} of {n}"
            ));
        }
    }

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(10..=200);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| 0.7 * v + rng.random_range(-1.0..1.0))
            .collect();
        let a = rng.random_range(0.1..4.0);
        let b = rng.random_range(-5.0..5.0);
        let plain = ccc(&x, &y).unwrap();
        let mapped = ccc(
            &x.iter().map(|v| a * v + b).collect::<Vec<_>>(),
            &y.iter().map(|v| a * v + b).collect::<Vec<_>>(),
        )
        .unwrap();
        let dev = (plain - mapped).abs();
        worst = worst.max(dev);
        if dev > 1e-12 {
            problems.push(format!(
                "shared affine map (a={a:.3}, b={b:.3}) moved ccc by {dev:.3e}"
            ));
        }
    }

    verdict(
        &format!("3 (ccc golden 8/22, exact self-agreement, affine invariance over 1000 pairs, worst {worst:.1e})"),
        problems.is_empty(),
        &problems.join("; "),
    );
}

// --- criterion 4: analytic gradients against finite differences -------

fn sse(pred: &[f64], target: &[f64]) -> f64 {
    pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum()
}

#[test]
fn criterion_4_gradients_match_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut problems: Vec<String> = Vec::new();
    let mut worst = 0.0f64;
    let eps = 1e-5;

    for case in 0..20u64 {
        let input_dim = rng.random_range(1..=3);
        let hidden_sizes = match rng.random_range(0..4) {
            0 => vec![2],
            1 => vec![3],
            2 => vec![2, 2],
            _ => vec![3, 2],
        };
        let steps = rng.random_range(4..=7);
        let config = ModelConfig {
            hidden_sizes: hidden_sizes.clone(),
            seed: 9000 + case,
            ..ModelConfig::new(input_dim)
        };
        let params = model::init(&config).expect("tiny configuration initializes");
        let inputs = Array2::from_shape_fn((steps, input_dim), |_| rng.random_range(-1.0..1.0));
        let targets: Vec<f64> = (0..steps).map(|_| rng.random_range(-1.0..1.0)).collect();

        let analytic = model::gradient(&params, &inputs.view(), &targets)
            .expect("gradient on a valid sequence")
            .flatten();
        let theta = params.weights.flatten();
        let mut probe = params.clone();

        for i in 0..theta.len() {
            let mut bumped = theta.clone();
            bumped[i] += eps;
            probe.weights.load_flat(&bumped);
            let up = sse(&model::forward(&probe, &inputs.view()).unwrap(), &targets);
            bumped[i] = theta[i] - eps;
            probe.weights.load_flat(&bumped);
            let down = sse(&model::forward(&probe, &inputs.view()).unwrap(), &targets);
            let fd = (up - down) / (2.0 * eps);
            let err = (analytic[i] - fd).abs() / f64::max(1.0, f64::max(analytic[i].abs(), fd.abs()));
            worst = worst.max(err);
            if err > 1e-4 {
                problems.push(format!(
                    "weight {i} of case {case} (hidden {hidden_sizes:?}, {steps} steps): analytic {:.6e} vs central difference {fd:.6e}",
                    analytic[i]
                ));
            }
        }
    }

    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        problems.push(format!("took {elapsed:.2?}, budget is 60 s"));
    }
    verdict(
        &format!("4 (gradient vs finite differences, 20 configurations, worst rel err {worst:.2e}, {elapsed:.2?})"),
        problems.is_empty(),
        &problems.join("; "),
    );
}

// --- criterion 5: mutual information calibration ----------------------

#[test]
fn criterion_5_mi_estimator_calibration() {
    let n = 5000;
    let mut self_mi = 0.0;
    let mut indep_mi = 0.0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        self_mi += estimate_mi(&x, &x).expect("self MI estimates");
        indep_mi += estimate_mi(&x, &y).expect("independent MI estimates");
    }
    self_mi /= 10.0;
    indep_mi /= 10.0;

    let mut problems: Vec<String> = Vec::new();
    if self_mi < 1.5 {
        problems.push(format!("mean MI(X,X) = {self_mi:.3} nats, want at least 1.5"));
    }
    if indep_mi.abs() > 0.05 {
        problems.push(format!("mean |MI| of independent pairs = {:.4} nats, want at most 0.05", indep_mi.abs()));
    }

    // Raising the threshold can only shrink the kept set, never reshuffle it.
    let mut rng = ChaCha8Rng::seed_from_u64(555);
    for round in 0..50 {
        let names: Vec<String> = (0..30).map(|i| format!("f{i:02}")).collect();
        let scores: Vec<f64> = (0..30).map(|_| rng.random_range(0.0..0.5)).collect();
        let mut thresholds: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..0.5)).collect();
        thresholds.sort_by(f64::total_cmp);
        let kept_sets: Vec<BTreeSet<String>> = thresholds
            .iter()
            .map(|&t| {
                MiReport::from_scores(names.clone(), scores.clone(), t)
                    .kept
                    .into_iter()
                    .collect()
            })
            .collect();
        for pair in kept_sets.windows(2) {
            if !pair[1].is_subset(&pair[0]) {
                problems.push(format!("kept set grew when the threshold rose (round {round})"));
            }
        }
    }

    verdict(
        &format!("5 (MI calibration at n=5000: self {self_mi:.2} nats, independent {indep_mi:+.4} nats; threshold monotonicity)"),
        problems.is_empty(),
        &problems.join("; "),
    );
}

// --- criteria 6 and 7: full-size synthetic sweep ----------------------

struct SweepArtifacts {
    _dir: tempfile::TempDir,
    spec: SynthSpec,
    elapsed: Duration,
    validation: Vec<(f64, f64)>,
    winner_delay: f64,
    winner_ccc: f64,
    test_delay: f64,
    first_report: Vec<u8>,
    second_report: Vec<u8>,
}

static SWEEP: OnceLock<SweepArtifacts> = OnceLock::new();

fn sweep_config(paths: &CorpusPaths, out: std::path::PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        data: DataConfig {
            recordings_dir: paths.recordings_dir.clone(),
            annotations_dir: paths.annotations_dir.clone(),
            mapping: "canonical".into(),
            frame_rate: 25,
            repair_max_gap_seconds: 0.5,
        },
        partitions: paths.partitions.clone(),
        channels: ChannelConfig::default(),
        modalities: BTreeMap::from([(
            "head_eye".to_string(),
            vec![
                "head_yaw".into(),
                "pupil_diameter".into(),
                "delta_head_yaw".into(),
                "delta_pupil_diameter".into(),
            ],
        )]),
        sweep: SweepConfig {
            window_seconds: vec![4.0],
            delays: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0],
            mi_thresholds: vec![0.1],
            dimensions: vec![Dimension::Arousal],
            modality_sets: vec!["head_eye".to_string()],
        },
        model: ModelConfig {
            hidden_sizes: vec![12, 8],
            learning_rate: 5e-4,
            max_epochs: 12,
            patience: 10,
            ..ModelConfig::new(0)
        },
        mi: MiSettings::default(),
        output: OutputConfig { dir: out },
    }
}

/// Generates the default corpus and runs the delay sweep twice (fresh
/// output directory each time), recording the first run's wall time.
fn sweep() -> &'static SweepArtifacts {
    SWEEP.get_or_init(|| {
        let dir = tempfile::tempdir().expect("temporary corpus directory");
        let spec = SynthSpec::default();

        let started = Instant::now();
        let paths = generate_corpus(&spec, dir.path()).expect("corpus generation succeeds");
        let config = sweep_config(&paths, dir.path().join("first"));
        let options = RunOptions { deterministic: true, jobs: None };
        let report = run_experiment(&config, &options).expect("sweep completes");
        let elapsed = started.elapsed();

        assert!(
            report.failures.is_empty(),
            "sweep tuples failed: {:?}",
            report.failures
        );

        let validation: Vec<(f64, f64)> = report
            .rows
            .iter()
            .filter(|r| r.partition == Partition::Validation)
            .map(|r| (r.delay_s, r.ccc))
            .collect();
        assert_eq!(validation.len(), 11, "one validation row per delay");
        let (winner_delay, winner_ccc) = validation
            .iter()
            .copied()
            .fold((f64::NAN, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
        let test_delay = report
            .rows
            .iter()
            .find(|r| r.partition == Partition::Test)
            .map(|r| r.delay_s)
            .expect("the winner gets one test pass");

        let rerun = sweep_config(&paths, dir.path().join("second"));
        let rerun_report = run_experiment(&rerun, &options).expect("rerun completes");

        let first_report = std::fs::read(&report.report_path).expect("first report readable");
        let second_report =
            std::fs::read(&rerun_report.report_path).expect("second report readable");

        SweepArtifacts {
            _dir: dir,
            spec,
            elapsed,
            validation,
            winner_delay,
            winner_ccc,
            test_delay,
            first_report,
            second_report,
        }
    })
}

#[test]
fn criterion_6_synthetic_lag_recovery() {
    let s = sweep();
    let mut problems: Vec<String> = Vec::new();

    if (s.winner_delay - s.spec.lag_seconds).abs() > 0.2 + 1e-9 {
        problems.push(format!(
            "selected delay {} s is outside {} ± 0.2 s; validation curve {:?}",
            s.winner_delay, s.spec.lag_seconds, s.validation
        ));
    }
    if s.test_delay != s.winner_delay {
        problems.push(format!(
            "test pass ran at {} s instead of the winning {} s",
            s.test_delay, s.winner_delay
        ));
    }
    if s.winner_ccc < 0.7 {
        problems.push(format!(
            "winning validation CCC {:.4} is below 0.7",
            s.winner_ccc
        ));
    }
    if s.elapsed > Duration::from_secs(900) {
        problems.push(format!("took {:.1?}, budget is 15 min", s.elapsed));
    }

    verdict(
        &format!(
            "6 (synthetic lag recovery: winner D={} s, validation CCC {:.4}, {:.1?})",
            s.winner_delay, s.winner_ccc, s.elapsed
        ),
        problems.is_empty(),
        &problems.join("; "),
    );
}

#[test]
fn criterion_7_same_seed_rerun_is_byte_identical() {
    let s = sweep();
    let mut problems: Vec<String> = Vec::new();
    if s.first_report.is_empty() {
        problems.push("first report is empty".into());
    }
    if s.first_report != s.second_report {
        problems.push(format!(
            "reports differ: {} vs {} bytes",
            s.first_report.len(),
            s.second_report.len()
        ));
    }
    verdict(
        &format!(
            "7 (same-seed rerun reproduces the report byte for byte, {} bytes)",
            s.first_report.len()
        ),
        problems.is_empty(),
        &problems.join("; "),
    );
}

// --- criterion 8: row bookkeeping ------------------------------------

#[test]
fn criterion_8_row_count_arithmetic() {
    let frames = 7500;
    let mut series = RecordingSeries::new("S99", 25);
    series
        .add_channel(
            ChannelSpec {
                name: "head_yaw".into(),
                kind: ChannelKind::Continuous,
                units: "radians".into(),
            },
            (0..frames).map(|t| (t as f64 * 0.017).sin()).collect(),
        )
        .expect("channel accepted");
    let plan = WindowPlan::new(4.0, 25);
    let features = extract_features(&series, &plan, None).expect("extraction succeeds");
    let labels = AnnotationTrack {
        subject_id: "S99".into(),
        dimension: Dimension::Arousal,
        values: (0..frames).map(|t| (t as f64 * 0.005).cos()).collect(),
    };
    let (shifted, paired) = shift_labels(&features, &labels, 0.2).expect("0.2 s is frame aligned");

    let mut problems: Vec<String> = Vec::new();
    if features.n_rows() != 7401 {
        problems.push(format!("7500 frames gave {} feature rows, want 7401", features.n_rows()));
    }
    if shifted.n_rows() != 7396 || paired.len() != 7396 {
        problems.push(format!(
            "0.2 s shift gave {} rows and {} labels, want 7396 each",
            shifted.n_rows(),
            paired.len()
        ));
    }

    verdict(
        &format!(
            "8 (row arithmetic: 7500 frames -> {} windows -> {} shifted pairs)",
            features.n_rows(),
            paired.len()
        ),
        problems.is_empty(),
        &problems.join("; "),
    );
}

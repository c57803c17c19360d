//! Run a miniature end-to-end sweep on a generated corpus.
//!
//! Generates a small synthetic corpus whose annotations trail the
//! behavior by exactly one second, then sweeps the ground-truth backward
//! time-shift over {0.0, 0.4, 1.0, 1.6} seconds. Each tuple goes through
//! the whole pipeline — windowed features, MI selection fitted on train,
//! label shift, standardization, BLSTM training, validation scoring — and
//! the best tuple gets the single test pass. With everything downsized
//! for speed the validation CCCs are modest, but the shape of the curve
//! already favors delays near the true lag.

use affectus::experiment::{run_experiment, ExperimentConfig, RunOptions};
use affectus::ingest::Partition;
use affectus::synth::{generate_corpus, partition_spec, SynthSpec};
use std::collections::BTreeMap;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let spec = SynthSpec {
        n_train: 3,
        n_validation: 2,
        n_test: 1,
        n_frames: 1500, // one minute per subject
        ..SynthSpec::default()
    };
    let paths = generate_corpus(&spec, dir.path())?;
    println!(
        "corpus: {} subjects x {} frames, true lag {} s",
        spec.n_subjects(),
        spec.n_frames,
        spec.lag_seconds
    );

    let config = ExperimentConfig {
        data: affectus::experiment::DataConfig {
            recordings_dir: paths.recordings_dir.clone(),
            annotations_dir: paths.annotations_dir.clone(),
            mapping: "canonical".into(),
            frame_rate: 25,
            repair_max_gap_seconds: 0.5,
        },
        partitions: partition_spec(&spec),
        channels: affectus::experiment::ChannelConfig {
            wavelet: false, // keep the demo quick
            ..Default::default()
        },
        modalities: BTreeMap::from([(
            "head_eye".to_string(),
            vec!["head_yaw".into(), "pupil_diameter".into(), "delta_head_yaw".into()],
        )]),
        sweep: affectus::experiment::SweepConfig {
            window_seconds: vec![4.0],
            delays: vec![0.0, 0.4, 1.0, 1.6],
            mi_thresholds: vec![0.05],
            dimensions: vec![affectus::ingest::Dimension::Arousal],
            modality_sets: vec!["head_eye".to_string()],
        },
        model: affectus::model::ModelConfig {
            hidden_sizes: vec![10],
            learning_rate: 5e-4,
            max_epochs: 10,
            patience: 4,
            ..affectus::model::ModelConfig::new(0)
        },
        mi: affectus::experiment::MiSettings { max_samples: Some(800), ..Default::default() },
        output: affectus::experiment::OutputConfig { dir: dir.path().join("out") },
    };

    let report = run_experiment(&config, &RunOptions::default())?;
    println!("\ndelay sweep (validation):");
    for row in report.rows.iter().filter(|r| r.partition == Partition::Validation) {
        println!(
            "  D = {:>3} s  ->  CCC {:+.3}  ({} features kept)",
            row.delay_s, row.ccc, row.n_features
        );
    }

    let test = report
        .rows
        .iter()
        .find(|r| r.partition == Partition::Test)
        .expect("the winner gets one test pass");
    println!(
        "\nwinner: D = {} s, test CCC {:+.3} (report at {})",
        test.delay_s,
        test.ccc,
        report.report_path.display()
    );
    Ok(())
}

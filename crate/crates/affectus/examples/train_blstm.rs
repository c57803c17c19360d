//! Train a small bidirectional LSTM on a toy sequence-regression task.
//!
//! The target at each step is a delayed, scaled copy of one input
//! channel, which a bidirectional network can learn quickly. The run
//! shows the pieces the full sweep uses: standardize on train statistics,
//! add per-epoch input noise, update with SGD + momentum after every
//! sequence, and stop early when validation error stops improving.

use affectus::alignment::Standardizer;
use affectus::model::{predict, train, ModelConfig, Sequence, StopReason};
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// One synthetic sequence: two smooth input channels; the target copies
/// channel 0 from three steps earlier, scaled by 0.8.
fn make_sequence(seed: u64, len: usize) -> (Array2<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (f0, f1) = (rng.random_range(0.02..0.06), rng.random_range(0.02..0.06));
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let inputs = Array2::from_shape_fn((len, 2), |(t, c)| {
        let f = if c == 0 { f0 } else { f1 };
        (t as f64 * f + phase + c as f64).sin()
    });
    let target: Vec<f64> =
        (0..len).map(|t| 0.8 * inputs[(t.saturating_sub(3), 0)]).collect();
    (inputs, target)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let train_raw: Vec<_> = (0..6).map(|s| make_sequence(s, 300)).collect();
    let validation_raw: Vec<_> = (100..102).map(|s| make_sequence(s, 300)).collect();

    let feature_views: Vec<_> = train_raw.iter().map(|(x, _)| x.view()).collect();
    let label_slices: Vec<&[f64]> = train_raw.iter().map(|(_, y)| y.as_slice()).collect();
    let standardizer = Standardizer::fit(&feature_views, &label_slices)?;

    let standardize = |set: &[(Array2<f64>, Vec<f64>)]| -> Vec<Sequence> {
        set.iter()
            .map(|(x, y)| {
                (standardizer.apply_features(&x.view()).unwrap(), standardizer.apply_target(y))
            })
            .collect()
    };
    let train_set = standardize(&train_raw);
    let validation_set = standardize(&validation_raw);

    let config = ModelConfig {
        hidden_sizes: vec![12, 8],
        learning_rate: 2e-3,
        max_epochs: 40,
        patience: 5,
        ..ModelConfig::new(2)
    };
    let (params, log) = train(&config, &train_set, &validation_set)?;

    println!("epoch  train_sse  validation_sse");
    for stats in log.epochs.iter().step_by(4).chain(std::iter::once(log.epochs.last().unwrap())) {
        println!("{:>5}  {:>9.1}  {:>14.1}", stats.epoch, stats.train_sse, stats.validation_sse);
    }
    println!(
        "stopped after {} epochs ({}), best epoch {}",
        log.epochs.len(),
        match log.stop_reason {
            StopReason::EarlyStop => "no improvement within patience",
            StopReason::MaxEpochs => "epoch budget exhausted",
        },
        log.best_epoch
    );

    let first = log.epochs.first().unwrap().validation_sse;
    let best = log.epochs.iter().map(|e| e.validation_sse).fold(f64::INFINITY, f64::min);
    assert!(best < first * 0.5, "training should at least halve validation error");

    // Predictions come back in label units (the standardizer inverts).
    let params = params.with_standardizer(standardizer);
    let (x, y) = make_sequence(777, 300);
    let pred = predict(&params, &x.view())?;
    let sse: f64 = pred.iter().zip(&y).map(|(p, t)| (p - t) * (p - t)).sum();
    println!("held-out sequence: sse {sse:.2} over {} steps", y.len());
    Ok(())
}

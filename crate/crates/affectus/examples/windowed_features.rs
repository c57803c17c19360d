//! Turn per-frame channels into windowed statistical features.
//!
//! A sliding window (hop: one frame) summarizes each channel with 16
//! statistics on the raw samples (static view) and on their first
//! differences (dynamic view); binary channels get 5 run-length
//! statistics. With N frames and a W-frame window there are N - W + 1
//! rows, each labeled by its end frame.

use affectus::functionals::{extract_features, WindowPlan, CONTINUOUS_FUNCTIONALS};
use affectus::ingest::{ChannelSpec, RecordingSeries};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 500;
    let mut series = RecordingSeries::new("demo", 25);
    series.add_channel(
        ChannelSpec::continuous("head_yaw", "rad"),
        (0..n).map(|t| (t as f64 * 0.04).sin() * 0.4 + rng.random_range(-0.02..0.02)).collect(),
    )?;
    series.add_channel(
        ChannelSpec::binary("blink_logical"),
        (0..n).map(|t| f64::from(t % 40 < 3)).collect(),
    )?;

    let plan = WindowPlan::new(4.0, 25); // 100-frame windows
    let features = extract_features(&series, &plan, None)?;
    println!(
        "{} frames -> {} rows x {} columns",
        n,
        features.n_rows(),
        features.n_cols()
    );
    assert_eq!(features.n_rows(), n - 100 + 1);
    println!("row 0 covers frames 0..=99, last row ends at frame {}", features.end_frame(features.n_rows() - 1)?);

    println!("\nthe 16 continuous functionals: {CONTINUOUS_FUNCTIONALS:?}");

    // One column picked from each view.
    for name in ["head_yaw.static.mean", "head_yaw.dynamic.std", "blink_logical.static.ratio"] {
        let col = features.column_index(name).expect("column exists");
        let values = features.data.column(col);
        println!(
            "{name:<28} first rows: {:?}",
            values.iter().take(3).map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        );
    }

    // Blink statistics are in seconds: 3-frame blinks at 25 fps last 0.12 s.
    let col = features.column_index("blink_logical.static.time_max").expect("column exists");
    println!(
        "longest blink inside the first window: {} s",
        features.data[(0, col)]
    );
    Ok(())
}

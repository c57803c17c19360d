//! Derive displacement and event channels from raw tracker streams.
//!
//! On top of each raw channel the pipeline adds per-frame deltas and four
//! binary event channels: pupil dilation/constriction (sign of the pupil
//! delta) and eye fixation / gaze approach (small gaze displacement,
//! shrinking gaze distance).

use affectus::ingest::{channel_names, ChannelSpec, RecordingSeries};
use affectus::lld::{augmented_series, derive_channels, event_names, DeriveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 200;
    let mut series = RecordingSeries::new("demo", 25);
    // A slow pupil oscillation and a gaze that drifts, then locks still.
    series.add_channel(
        ChannelSpec::continuous(channel_names::PUPIL_DIAMETER, "mm"),
        (0..n).map(|t| 4.0 + 0.3 * (t as f64 * 0.05).sin()).collect(),
    )?;
    series.add_channel(
        ChannelSpec::continuous(channel_names::GAZE_X, "rad"),
        (0..n).map(|t| if t < 100 { t as f64 * 0.03 } else { 3.0 }).collect(),
    )?;
    series.add_channel(
        ChannelSpec::continuous(channel_names::GAZE_Y, "rad"),
        vec![0.0; n],
    )?;
    series.add_channel(
        ChannelSpec::continuous(channel_names::GAZE_DISTANCE, "mm"),
        (0..n).map(|t| 700.0 - t as f64).collect(),
    )?;

    let derived = derive_channels(
        &series,
        &[channel_names::PUPIL_DIAMETER, channel_names::GAZE_X],
        &DeriveOptions::default(),
    )?;
    println!("derived channels: {:?}", derived.names());

    let dilation = derived.values(event_names::PUPIL_DILATION)?;
    let constriction = derived.values(event_names::PUPIL_CONSTRICTION)?;
    println!(
        "pupil dilation frames: {}, constriction frames: {}",
        dilation.iter().sum::<f64>(),
        constriction.iter().sum::<f64>()
    );

    // The gaze drifts for the first half (0.03 rad/frame > the 0.02
    // threshold) and is perfectly still for the second.
    let fixation = derived.values(event_names::EYE_FIXATION)?;
    let (first, second) = fixation.split_at(100);
    println!(
        "fixation ratio: first half {:.2}, second half {:.2}",
        first.iter().sum::<f64>() / 100.0,
        second.iter().sum::<f64>() / 100.0
    );

    // Gaze distance shrinks every frame, so approach fires everywhere
    // except the undefined first frame.
    let approach = derived.values(event_names::GAZE_APPROACH)?;
    println!("gaze approach frames: {} of {}", approach.iter().sum::<f64>(), n);

    let full = augmented_series(&series, &derived);
    println!(
        "augmented series: {} channels ({} raw + {} derived)",
        full.channels().len(),
        series.channels().len(),
        derived.names().len()
    );
    Ok(())
}

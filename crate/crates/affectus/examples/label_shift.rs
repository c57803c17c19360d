//! Compensate annotator reaction lag with a backward time-shift.
//!
//! Continuous annotations trail the behavior that caused them, so before
//! training, the label paired with a feature row is taken from `delay`
//! seconds after the row's end frame. This example walks the row
//! arithmetic on a full-size recording: 7500 frames with 4-second windows
//! give 7401 feature rows, and a 0.2-second shift leaves 7396 usable
//! pairs (the last 5 rows have no label to borrow from).

use affectus::alignment::{delay_to_frames, shift_labels};
use affectus::functionals::{extract_features, WindowPlan};
use affectus::synth::{generate_recording, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SynthSpec::default(); // 7500 frames at 25 fps
    let (series, arousal, _) = generate_recording(&spec, 0)?;
    println!("recording: {} frames at {} fps", series.n_frames(), series.frame_rate);

    let plan = WindowPlan::new(4.0, series.frame_rate);
    let features = extract_features(&series, &plan, None)?;
    println!("4 s windows -> {} feature rows", features.n_rows());
    assert_eq!(features.n_rows(), 7401);

    for delay in [0.0, 0.2, 1.0] {
        let k = delay_to_frames(delay, series.frame_rate)?;
        let (shifted, labels) = shift_labels(&features, &arousal, delay)?;
        println!(
            "delay {delay} s = {k} frames: {} rows paired with labels[{}..{}]",
            shifted.n_rows(),
            99 + k,
            99 + k + shifted.n_rows()
        );
        if delay == 0.2 {
            assert_eq!(shifted.n_rows(), 7396);
        }
        // Row r ends at frame r + 99; its label comes k frames later.
        let r = 1234;
        assert_eq!(labels[r], arousal.values[r + 99 + k]);
    }

    // Delays that are not whole frames are rejected up front.
    let err = delay_to_frames(0.03, series.frame_rate).unwrap_err();
    println!("\n0.03 s at 25 fps: {err}");
    Ok(())
}

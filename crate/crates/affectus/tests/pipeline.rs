//! Row bookkeeping through the real extraction and alignment code: a
//! full-length recording in, windowed rows out, shifted pairs out.

use affectus::alignment::shift_labels;
use affectus::functionals::{extract_features, WindowPlan};
use affectus::ingest::{AnnotationTrack, ChannelKind, ChannelSpec, Dimension, RecordingSeries};
use affectus::wavelet::WaveletConfig;

const FRAMES: usize = 7500;
const FPS: u32 = 25;

fn full_length_series() -> RecordingSeries {
    let mut series = RecordingSeries::new("S99", FPS);
    let wave: Vec<f64> = (0..FRAMES)
        .map(|t| (t as f64 * 0.013).sin() + 0.2 * (t as f64 * 0.071).cos())
        .collect();
    series
        .add_channel(
            ChannelSpec {
                name: "head_yaw".into(),
                kind: ChannelKind::Continuous,
                units: "radians".into(),
            },
            wave,
        )
        .expect("continuous channel accepted");
    let gate: Vec<f64> = (0..FRAMES).map(|t| if t % 40 < 6 { 1.0 } else { 0.0 }).collect();
    series
        .add_channel(
            ChannelSpec {
                name: "blink_logical".into(),
                kind: ChannelKind::Binary,
                units: "logical".into(),
            },
            gate,
        )
        .expect("binary channel accepted");
    series
}

#[test]
fn four_second_windows_of_7500_frames_make_7401_rows() {
    let series = full_length_series();
    let plan = WindowPlan::new(4.0, FPS);
    let features = extract_features(&series, &plan, Some(&WaveletConfig::default()))
        .expect("extraction succeeds");
    assert_eq!(
        features.n_rows(),
        7401,
        "hop-1 windowing of {} frames with a {}-frame window should produce N - W + 1 rows",
        FRAMES,
        plan.window_frames().unwrap()
    );
    // First row ends at the last frame of the first window; last row at
    // the final frame.
    assert_eq!(features.end_frame(0).unwrap(), 99);
    assert_eq!(features.end_frame(7400).unwrap(), 7499);
}

#[test]
fn shifting_labels_by_200ms_leaves_7396_pairs() {
    let series = full_length_series();
    let plan = WindowPlan::new(4.0, FPS);
    let features = extract_features(&series, &plan, None).expect("extraction succeeds");
    let labels = AnnotationTrack {
        subject_id: "S99".into(),
        dimension: Dimension::Arousal,
        values: (0..FRAMES).map(|t| (t as f64 * 0.01).sin()).collect(),
    };
    let (shifted, paired) = shift_labels(&features, &labels, 0.2).expect("0.2 s is frame aligned");
    assert_eq!(shifted.n_rows(), 7396, "a 5-frame shift should drop 5 of 7401 rows");
    assert_eq!(paired.len(), 7396);
    // Row r covers frames [r, r+99]; its paired label sits 5 frames past
    // the window end.
    assert_eq!(paired[0], labels.values[104]);
    assert_eq!(paired[7395], labels.values[7499]);
}

#[test]
fn zero_delay_keeps_every_row() {
    let series = full_length_series();
    let plan = WindowPlan::new(4.0, FPS);
    let features = extract_features(&series, &plan, None).expect("extraction succeeds");
    let labels = AnnotationTrack {
        subject_id: "S99".into(),
        dimension: Dimension::Valence,
        values: vec![0.25; FRAMES],
    };
    let (shifted, paired) = shift_labels(&features, &labels, 0.0).expect("zero delay is aligned");
    assert_eq!(shifted.n_rows(), 7401);
    assert_eq!(paired.len(), 7401);
    assert_eq!(paired[0], labels.values[99], "row 0 pairs the label at its window end");
}

//! Derived low-level descriptors: frame-wise deltas of continuous channels
//! and binary eye-event channels (fixation, gaze approach, pupil dilation,
//! pupil constriction), plus attachment of human-annotated direct gaze.
//!
//! Every derived series has the same length as its source. The first frame
//! has no predecessor, so all delta and event channels are 0 there, and
//! ties (equal consecutive values) produce 0 — events fire on strict
//! inequalities only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{ChannelKind, ChannelSpec, RecordingSeries};

/// Errors from derived-descriptor computation.
#[derive(Debug, Error, PartialEq)]
pub enum LldError {
    /// A named source channel does not exist.
    #[error("unknown channel {0:?}")]
    UnknownChannel(String),
    /// Deltas are defined for continuous channels only.
    #[error("binary channel not allowed: {0:?} is {{0,1}}-valued, deltas apply to continuous channels")]
    BinaryChannelNotAllowed(String),
    /// Input series lengths disagree.
    #[error("length mismatch: {left} frames vs {right} frames")]
    LengthMismatch { left: usize, right: usize },
    /// A supposedly binary annotation holds a value outside {0, 1}.
    #[error("non-binary value at frame {frame}: {value}")]
    NonBinaryValue { frame: usize, value: f64 },
}

/// Names of the derived binary event channels.
pub mod event_names {
    pub const EYE_FIXATION: &str = "eye_fixation";
    pub const GAZE_APPROACH: &str = "gaze_approach";
    pub const PUPIL_DILATION: &str = "pupil_dilation";
    pub const PUPIL_CONSTRICTION: &str = "pupil_constriction";
}

/// Default fixation threshold: angular gaze displacement below this many
/// radians per frame counts as fixating.
pub const DEFAULT_FIXATION_THRESHOLD: f64 = 0.02;

/// Derived channels for one recording: displacement (delta) series per
/// requested continuous channel, and binary event series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DerivedChannelSet {
    /// `(spec, values)` pairs; delta channels are continuous and named
    /// `delta_<source>`, event channels are binary.
    channels: Vec<(ChannelSpec, Vec<f64>)>,
}

impl DerivedChannelSet {
    pub fn channels(&self) -> &[(ChannelSpec, Vec<f64>)] {
        &self.channels
    }

    pub fn names(&self) -> Vec<&str> {
        self.channels.iter().map(|(spec, _)| spec.name.as_str()).collect()
    }

    pub fn values(&self, name: &str) -> Result<&[f64], LldError> {
        self.channels
            .iter()
            .find(|(spec, _)| spec.name == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| LldError::UnknownChannel(name.to_string()))
    }

    fn push(&mut self, spec: ChannelSpec, values: Vec<f64>) {
        debug_assert!(
            self.channels.iter().all(|(s, _)| s.name != spec.name),
            "derived channel {} already present",
            spec.name
        );
        self.channels.push((spec, values));
    }
}

/// Options controlling which derived channels are computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeriveOptions {
    /// Threshold in radians/frame below which gaze counts as fixating.
    pub fixation_threshold: f64,
}

impl Default for DeriveOptions {
    fn default() -> Self {
        Self { fixation_threshold: DEFAULT_FIXATION_THRESHOLD }
    }
}

fn frame_deltas(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    out.push(0.0);
    for t in 1..values.len() {
        out.push(values[t] - values[t - 1]);
    }
    out
}

/// Displacement series for the named continuous channels:
/// `delta[t] = value[t] - value[t-1]`, with `delta[0] = 0`.
pub fn compute_deltas(
    series: &RecordingSeries,
    channels: &[&str],
) -> Result<DerivedChannelSet, LldError> {
    let mut out = DerivedChannelSet::default();
    for &name in channels {
        let spec = series
            .channel_spec(name)
            .ok_or_else(|| LldError::UnknownChannel(name.to_string()))?;
        if spec.kind == ChannelKind::Binary {
            return Err(LldError::BinaryChannelNotAllowed(name.to_string()));
        }
        let values = series.values(name).expect("spec lookup succeeded");
        out.push(
            ChannelSpec::continuous(&format!("delta_{name}"), &spec.units),
            frame_deltas(values),
        );
    }
    Ok(out)
}

/// Pupil dilation and constriction events: dilation fires when the
/// diameter is strictly larger than at the immediately preceding frame,
/// constriction when strictly smaller. Both are 0 at the first frame and
/// on ties.
pub fn pupil_events(pupil_diameter: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = pupil_diameter.len();
    let mut dilation = vec![0.0; n];
    let mut constriction = vec![0.0; n];
    for t in 1..n {
        if pupil_diameter[t] > pupil_diameter[t - 1] {
            dilation[t] = 1.0;
        } else if pupil_diameter[t] < pupil_diameter[t - 1] {
            constriction[t] = 1.0;
        }
    }
    (dilation, constriction)
}

/// Eye fixation and gaze approach events.
///
/// Fixation fires when the angular gaze displacement magnitude
/// `sqrt(dx^2 + dy^2)` is strictly below `fixation_threshold` (radians per
/// frame). Approach fires when the camera-coordinate gaze distance
/// strictly decreases. Both are 0 at the first frame.
pub fn gaze_events(
    gaze_x: &[f64],
    gaze_y: &[f64],
    gaze_distance: &[f64],
    fixation_threshold: f64,
) -> Result<(Vec<f64>, Vec<f64>), LldError> {
    assert!(fixation_threshold > 0.0, "fixation_threshold must be positive");
    if gaze_x.len() != gaze_y.len() {
        return Err(LldError::LengthMismatch { left: gaze_x.len(), right: gaze_y.len() });
    }
    if gaze_x.len() != gaze_distance.len() {
        return Err(LldError::LengthMismatch { left: gaze_x.len(), right: gaze_distance.len() });
    }
    let n = gaze_x.len();
    let mut fixation = vec![0.0; n];
    let mut approach = vec![0.0; n];
    for t in 1..n {
        let dx = gaze_x[t] - gaze_x[t - 1];
        let dy = gaze_y[t] - gaze_y[t - 1];
        if (dx * dx + dy * dy).sqrt() < fixation_threshold {
            fixation[t] = 1.0;
        }
        if gaze_distance[t] < gaze_distance[t - 1] {
            approach[t] = 1.0;
        }
    }
    Ok((fixation, approach))
}

/// Adds the human-annotated `direct_gaze` binary channel to a series.
pub fn attach_direct_gaze(
    series: &RecordingSeries,
    annotation: &[f64],
) -> Result<RecordingSeries, LldError> {
    if annotation.len() != series.n_frames() {
        return Err(LldError::LengthMismatch {
            left: series.n_frames(),
            right: annotation.len(),
        });
    }
    for (frame, &v) in annotation.iter().enumerate() {
        if v != 0.0 && v != 1.0 {
            return Err(LldError::NonBinaryValue { frame, value: v });
        }
    }
    let mut out = series.clone();
    out.add_channel(
        ChannelSpec::binary(crate::ingest::channel_names::DIRECT_GAZE),
        annotation.to_vec(),
    )
    .map_err(|_| LldError::UnknownChannel(crate::ingest::channel_names::DIRECT_GAZE.into()))?;
    Ok(out)
}

/// Computes the full derived set for a recording: deltas of every named
/// continuous channel, pupil events when `pupil_diameter` is present, and
/// gaze events when `gaze_x`, `gaze_y`, and `gaze_distance` are present.
pub fn derive_channels(
    series: &RecordingSeries,
    delta_channels: &[&str],
    options: &DeriveOptions,
) -> Result<DerivedChannelSet, LldError> {
    use crate::ingest::channel_names::*;
    let mut out = compute_deltas(series, delta_channels)?;
    if let Ok(pupil) = series.values(PUPIL_DIAMETER) {
        let (dilation, constriction) = pupil_events(pupil);
        out.push(ChannelSpec::binary(event_names::PUPIL_DILATION), dilation);
        out.push(ChannelSpec::binary(event_names::PUPIL_CONSTRICTION), constriction);
    }
    if let (Ok(gx), Ok(gy), Ok(gd)) =
        (series.values(GAZE_X), series.values(GAZE_Y), series.values(GAZE_DISTANCE))
    {
        let (fixation, approach) = gaze_events(gx, gy, gd, options.fixation_threshold)?;
        out.push(ChannelSpec::binary(event_names::EYE_FIXATION), fixation);
        out.push(ChannelSpec::binary(event_names::GAZE_APPROACH), approach);
    }
    Ok(out)
}

/// Merges raw and derived channels into one series for feature extraction.
pub fn augmented_series(
    series: &RecordingSeries,
    derived: &DerivedChannelSet,
) -> RecordingSeries {
    let mut out = series.clone();
    for (spec, values) in derived.channels() {
        out.add_channel(spec.clone(), values.clone())
            .expect("derived channel names are distinct from raw channel names");
    }
    out
}

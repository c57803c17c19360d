//! Synthetic tracker corpus with a known annotation lag.
//!
//! Real affect corpora are license-gated, so end-to-end validation runs on
//! generated data where the ground truth is known by construction. Each
//! subject gets twelve channels of smooth random motion (sinusoid mixtures
//! with per-subject random frequencies, phases, and amplitudes, plus a
//! little measurement noise) and two binary event channels. The annotation
//! tracks are a bounded smooth function — a tanh-squashed mixture — of two
//! of the continuous channels, evaluated `lag_seconds` in the past, so a
//! delay sweep should recover the configured lag and a trained model
//! should predict the target well.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::ingest::{
    channel_names as names, write_annotation_csv, write_tracker_csv, AnnotationTrack, ChannelSpec,
    Dimension, IngestError, PartitionSpec, RecordingSeries,
};
use crate::stream_seed;

/// Random-stream namespace for corpus synthesis (one sub-stream per
/// subject, further split per channel).
const SYNTH_STREAM_BASE: u64 = 3 << 32;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("could not serialize corpus metadata: {0}")]
    Metadata(String),
}

/// Size, seed, and lag of a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub n_frames: usize,
    pub frame_rate: u32,
    /// How far the annotation trails the behavior, in seconds.
    pub lag_seconds: f64,
    /// Span of the trailing average the annotation integrates before the
    /// lag is applied. Mimics how annotators summarize recent behavior
    /// rather than reacting to single frames; matching it to the sweep's
    /// analysis window makes the true lag recoverable by a delay sweep.
    pub smoothing_seconds: f64,
    pub seed: u64,
    /// White measurement noise added to each continuous channel, as a
    /// fraction of the channel's scale.
    pub channel_noise: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_train: 8,
            n_validation: 8,
            n_test: 7,
            n_frames: 7500,
            frame_rate: 25,
            lag_seconds: 1.0,
            smoothing_seconds: 4.0,
            seed: crate::model::DEFAULT_SEED,
            channel_noise: 0.005,
        }
    }
}

impl SynthSpec {
    pub fn n_subjects(&self) -> usize {
        self.n_train + self.n_validation + self.n_test
    }

    pub fn lag_frames(&self) -> Result<usize, SynthError> {
        let frames = self.lag_seconds * self.frame_rate as f64;
        let rounded = frames.round();
        if (frames - rounded).abs() > 1e-6 || rounded < 0.0 {
            return Err(SynthError::InvalidSpec(format!(
                "lag {} s is not a whole number of frames at {} fps",
                self.lag_seconds, self.frame_rate
            )));
        }
        Ok(rounded as usize)
    }

    // Negated comparisons double as NaN rejection.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_train == 0 || self.n_validation == 0 || self.n_test == 0 {
            return Err(SynthError::InvalidSpec("every partition needs at least one subject".into()));
        }
        if self.n_frames < 2 * self.frame_rate as usize {
            return Err(SynthError::InvalidSpec(format!(
                "recordings of {} frames are too short to window",
                self.n_frames
            )));
        }
        if !(self.channel_noise >= 0.0) {
            return Err(SynthError::InvalidSpec("channel_noise must be non-negative".into()));
        }
        if !(self.smoothing_seconds >= 0.0) {
            return Err(SynthError::InvalidSpec("smoothing_seconds must be non-negative".into()));
        }
        self.lag_frames()?;
        Ok(())
    }

    /// Trailing-average span in frames, at least one.
    pub fn smoothing_frames(&self) -> usize {
        ((self.smoothing_seconds * self.frame_rate as f64).round() as usize).max(1)
    }
}

/// The channels whose (lagged, noise-free) mixture defines arousal.
pub const AROUSAL_SOURCES: [&str; 2] = [names::HEAD_YAW, names::PUPIL_DIAMETER];
/// The channels whose (lagged, noise-free) mixture defines valence.
pub const VALENCE_SOURCES: [&str; 2] = [names::HEAD_LOC_X, names::GAZE_DISTANCE];

/// Scale/offset pairs that put each channel in a plausible unit range.
/// The twelve entries are the canonical set minus blink intensity.
fn channel_layout() -> Vec<(ChannelSpec, f64, f64)> {
    vec![
        (ChannelSpec::continuous(names::HEAD_LOC_X, "mm"), 20.0, 0.0),
        (ChannelSpec::continuous(names::HEAD_LOC_Y, "mm"), 15.0, 0.0),
        (ChannelSpec::continuous(names::HEAD_LOC_Z, "mm"), 25.0, 650.0),
        (ChannelSpec::continuous(names::HEAD_YAW, "rad"), 0.3, 0.0),
        (ChannelSpec::continuous(names::HEAD_PITCH, "rad"), 0.25, 0.0),
        (ChannelSpec::continuous(names::HEAD_ROLL, "rad"), 0.2, 0.0),
        (ChannelSpec::continuous(names::PUPIL_DIAMETER, "mm"), 0.5, 4.0),
        (ChannelSpec::continuous(names::GAZE_X, "rad"), 0.4, 0.0),
        (ChannelSpec::continuous(names::GAZE_Y, "rad"), 0.3, 0.0),
        (ChannelSpec::continuous(names::GAZE_DISTANCE, "mm"), 80.0, 600.0),
        (ChannelSpec::binary(names::BLINK_LOGICAL), 0.0, 0.0),
        (ChannelSpec::binary(names::DIRECT_GAZE), 0.0, 0.0),
    ]
}

/// Names of the twelve generated channels.
pub fn channel_set() -> Vec<String> {
    channel_layout().into_iter().map(|(spec, _, _)| spec.name).collect()
}

/// Unit-variance smooth signal: four sinusoids with random frequencies in
/// 0.02–0.25 Hz, random phases, and random amplitudes.
fn smooth_signal(rng: &mut ChaCha8Rng, n: usize, fps: f64) -> Vec<f64> {
    const COMPONENTS: usize = 4;
    let mut freq = [0.0; COMPONENTS];
    let mut phase = [0.0; COMPONENTS];
    let mut amp = [0.0; COMPONENTS];
    let mut power = 0.0f64;
    for m in 0..COMPONENTS {
        freq[m] = rng.random_range(0.02..0.25);
        phase[m] = rng.random_range(0.0..TAU);
        amp[m] = rng.random_range(0.5..1.0);
        power += amp[m] * amp[m] / 2.0;
    }
    let norm = power.sqrt();
    (0..n)
        .map(|t| {
            let time = t as f64 / fps;
            let mut v = 0.0;
            for m in 0..COMPONENTS {
                v += amp[m] * (TAU * freq[m] * time + phase[m]).sin();
            }
            v / norm
        })
        .collect()
}

/// Blink indicator: short 2–5 frame closures starting with probability
/// 0.01 per open frame (about 15 blinks per minute at 25 fps).
fn blink_signal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let mut t = 0;
    while t < n {
        if rng.random_bool(0.01) {
            let len = rng.random_range(2..=5usize);
            for v in out.iter_mut().skip(t).take(len) {
                *v = 1.0;
            }
            t += len;
        } else {
            t += 1;
        }
    }
    out
}

/// Camera-gaze indicator: alternating dwell runs of 1–5 seconds.
fn dwell_signal(rng: &mut ChaCha8Rng, n: usize, fps: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let mut state = rng.random_bool(0.5);
    let mut t = 0;
    while t < n {
        let run = (rng.random_range(1.0..5.0) * fps).round() as usize;
        for v in out.iter_mut().skip(t).take(run) {
            *v = if state { 1.0 } else { 0.0 };
        }
        state = !state;
        t += run;
    }
    out
}

/// Trailing average over the `window` frames ending at each position
/// (shorter at the start), rescaled back to unit variance.
fn trailing_mean_normalized(values: &[f64], window: usize) -> Vec<f64> {
    let mut prefix = vec![0.0];
    for &v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    let mut out: Vec<f64> = (0..values.len())
        .map(|t| {
            let start = (t + 1).saturating_sub(window);
            (prefix[t + 1] - prefix[start]) / (t + 1 - start) as f64
        })
        .collect();
    let mean = out.iter().sum::<f64>() / out.len() as f64;
    let var = out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / out.len() as f64;
    if var > 0.0 {
        let inv = 1.0 / var.sqrt();
        for v in &mut out {
            *v = (*v - mean) * inv;
        }
    }
    out
}

/// Bounded smooth target: each driver is integrated by a trailing
/// average, then the tanh-squashed mixture is evaluated `lag` frames in
/// the past (clamped at the recording start).
fn lagged_target(driver_a: &[f64], driver_b: &[f64], lag: usize, smoothing: usize) -> Vec<f64> {
    let a = trailing_mean_normalized(driver_a, smoothing);
    let b = trailing_mean_normalized(driver_b, smoothing);
    (0..a.len())
        .map(|t| {
            let s = t.saturating_sub(lag);
            0.85 * (0.75 * a[s] + 0.75 * b[s]).tanh()
        })
        .collect()
}

/// One subject's recording and both annotation tracks. `subject_index`
/// is 0-based; generation is deterministic per (spec.seed, index).
pub fn generate_recording(
    spec: &SynthSpec,
    subject_index: usize,
) -> Result<(RecordingSeries, AnnotationTrack, AnnotationTrack), SynthError> {
    spec.validate()?;
    if subject_index >= spec.n_subjects() {
        return Err(SynthError::InvalidSpec(format!(
            "subject index {subject_index} out of range for {} subjects",
            spec.n_subjects()
        )));
    }
    let subject_id = subject_ids(spec)[subject_index].clone();
    let fps = spec.frame_rate as f64;
    let n = spec.n_frames;
    let lag = spec.lag_frames()?;
    let subject_seed = stream_seed(spec.seed, SYNTH_STREAM_BASE | subject_index as u64);

    let mut series = RecordingSeries::new(subject_id.clone(), spec.frame_rate);
    let mut drivers: Vec<(String, Vec<f64>)> = Vec::new();
    for (channel_index, (chan_spec, scale, offset)) in channel_layout().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(subject_seed, channel_index as u64));
        let values = match chan_spec.name.as_str() {
            n_ if n_ == names::BLINK_LOGICAL => blink_signal(&mut rng, n),
            n_ if n_ == names::DIRECT_GAZE => dwell_signal(&mut rng, n, fps),
            name => {
                let unit = smooth_signal(&mut rng, n, fps);
                if AROUSAL_SOURCES.contains(&name) || VALENCE_SOURCES.contains(&name) {
                    drivers.push((name.to_string(), unit.clone()));
                }
                unit.iter()
                    .map(|&u| {
                        let noise: f64 = rng.random_range(-1.0..1.0);
                        offset + scale * (u + spec.channel_noise * noise)
                    })
                    .collect()
            }
        };
        series.add_channel(chan_spec, values)?;
    }

    let driver = |name: &str| -> &[f64] {
        &drivers
            .iter()
            .find(|(n_, _)| n_ == name)
            .expect("driver channels are generated above")
            .1
    };
    let smoothing = spec.smoothing_frames();
    let arousal = AnnotationTrack {
        subject_id: subject_id.clone(),
        dimension: Dimension::Arousal,
        values: lagged_target(
            driver(AROUSAL_SOURCES[0]),
            driver(AROUSAL_SOURCES[1]),
            lag,
            smoothing,
        ),
    };
    let valence = AnnotationTrack {
        subject_id,
        dimension: Dimension::Valence,
        values: lagged_target(
            driver(VALENCE_SOURCES[0]),
            driver(VALENCE_SOURCES[1]),
            lag,
            smoothing,
        ),
    };
    Ok((series, arousal, valence))
}

/// `S01`, `S02`, ... in partition order (train, then validation, then
/// test).
pub fn subject_ids(spec: &SynthSpec) -> Vec<String> {
    (1..=spec.n_subjects()).map(|i| format!("S{i:02}")).collect()
}

/// The corpus partition layout implied by the sizes in `spec`.
pub fn partition_spec(spec: &SynthSpec) -> PartitionSpec {
    let ids = subject_ids(spec);
    PartitionSpec {
        train: ids[..spec.n_train].to_vec(),
        validation: ids[spec.n_train..spec.n_train + spec.n_validation].to_vec(),
        test: ids[spec.n_train + spec.n_validation..].to_vec(),
    }
}

/// Everything a generated corpus directory contains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMetadata {
    pub true_lag_seconds: f64,
    pub smoothing_seconds: f64,
    pub seed: u64,
    pub frame_rate: u32,
    pub n_frames: usize,
    pub channel_noise: f64,
    pub arousal_source_channels: Vec<String>,
    pub valence_source_channels: Vec<String>,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

/// Paths of a written corpus.
#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub root: PathBuf,
    pub recordings_dir: PathBuf,
    pub annotations_dir: PathBuf,
    pub metadata_path: PathBuf,
    pub partitions: PartitionSpec,
}

/// Writes `recordings/<id>.csv`, `annotations/<id>.csv`, and
/// `metadata.toml` under `out_dir`. Same spec (and seed) twice gives
/// byte-identical files.
pub fn generate_corpus(spec: &SynthSpec, out_dir: &Path) -> Result<CorpusPaths, SynthError> {
    spec.validate()?;
    let recordings_dir = out_dir.join("recordings");
    let annotations_dir = out_dir.join("annotations");
    std::fs::create_dir_all(&recordings_dir)?;
    std::fs::create_dir_all(&annotations_dir)?;

    for index in 0..spec.n_subjects() {
        let (series, arousal, valence) = generate_recording(spec, index)?;
        write_tracker_csv(&series, &recordings_dir.join(format!("{}.csv", arousal.subject_id)))?;
        write_annotation_csv(
            &arousal,
            &valence,
            &annotations_dir.join(format!("{}.csv", arousal.subject_id)),
        )?;
    }

    let partitions = partition_spec(spec);
    let metadata = CorpusMetadata {
        true_lag_seconds: spec.lag_seconds,
        smoothing_seconds: spec.smoothing_seconds,
        seed: spec.seed,
        frame_rate: spec.frame_rate,
        n_frames: spec.n_frames,
        channel_noise: spec.channel_noise,
        arousal_source_channels: AROUSAL_SOURCES.iter().map(|s| s.to_string()).collect(),
        valence_source_channels: VALENCE_SOURCES.iter().map(|s| s.to_string()).collect(),
        train: partitions.train.clone(),
        validation: partitions.validation.clone(),
        test: partitions.test.clone(),
    };
    let metadata_path = out_dir.join("metadata.toml");
    let text = toml::to_string_pretty(&metadata).map_err(|e| SynthError::Metadata(e.to_string()))?;
    std::fs::write(&metadata_path, text)?;

    Ok(CorpusPaths {
        root: out_dir.to_path_buf(),
        recordings_dir,
        annotations_dir,
        metadata_path,
        partitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::pearson;

    fn small_spec() -> SynthSpec {
        SynthSpec {
            n_train: 2,
            n_validation: 1,
            n_test: 1,
            n_frames: 800,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn default_spec_matches_corpus_shape() {
        let spec = SynthSpec::default();
        assert_eq!(spec.n_subjects(), 23);
        assert_eq!(spec.lag_frames().unwrap(), 25);
        let parts = partition_spec(&spec);
        assert_eq!(parts.train.len(), 8);
        assert_eq!(parts.validation.len(), 8);
        assert_eq!(parts.test.len(), 7);
        assert_eq!(parts.train[0], "S01");
        assert_eq!(parts.test[6], "S23");
        parts.validate().unwrap();
    }

    #[test]
    fn recording_has_twelve_channels_and_bounded_annotations() {
        let spec = small_spec();
        let (series, arousal, valence) = generate_recording(&spec, 0).unwrap();
        assert_eq!(series.channels().len(), 12);
        assert_eq!(series.n_frames(), 800);
        series.validate_binary().unwrap();
        assert_eq!(arousal.values.len(), 800);
        assert!(arousal.values.iter().chain(&valence.values).all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn continuous_channels_are_smooth() {
        let spec = small_spec();
        let (series, _, _) = generate_recording(&spec, 1).unwrap();
        let yaw = series.values(names::HEAD_YAW).unwrap();
        // 0.25 Hz at unit amplitude moves at most ~2*pi*0.25/25 ~ 0.063
        // unit-signal per frame; scaled by 0.3 rad and with noise this
        // stays well under 0.1 rad per frame.
        let max_step = yaw.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(max_step < 0.1, "head yaw jumps by {max_step} rad in one frame");
    }

    #[test]
    fn annotations_follow_drivers_at_the_configured_lag() {
        let spec = small_spec();
        let (series, arousal, _) = generate_recording(&spec, 0).unwrap();
        let lag = spec.lag_frames().unwrap();
        let window = spec.smoothing_frames();
        let n = series.n_frames();

        // Independent oracle for the annotation's driver summary: the
        // trailing average of the (noisy, scaled) yaw channel. The noise
        // and the second driver keep it from being exact, but backing the
        // labels up by the true lag must clearly beat no shift.
        let yaw = series.values(names::HEAD_YAW).unwrap();
        let summarized: Vec<f64> = (0..n)
            .map(|t| {
                let start = (t + 1).saturating_sub(window);
                yaw[start..=t].iter().sum::<f64>() / (t + 1 - start) as f64
            })
            .collect();
        let aligned = pearson(&summarized[..n - lag], &arousal.values[lag..]).unwrap();
        let unaligned = pearson(&summarized, &arousal.values).unwrap();
        assert!(
            aligned > 0.4 && aligned > unaligned + 0.05,
            "aligned r {aligned} vs unaligned {unaligned}"
        );
    }

    #[test]
    fn generation_is_deterministic_and_seed_sensitive() {
        let spec = small_spec();
        let (a, ta, _) = generate_recording(&spec, 0).unwrap();
        let (b, tb, _) = generate_recording(&spec, 0).unwrap();
        assert_eq!(a.values(names::PUPIL_DIAMETER).unwrap(), b.values(names::PUPIL_DIAMETER).unwrap());
        assert_eq!(ta.values, tb.values);

        let other = SynthSpec { seed: 9, ..small_spec() };
        let (c, _, _) = generate_recording(&other, 0).unwrap();
        assert_ne!(
            a.values(names::PUPIL_DIAMETER).unwrap(),
            c.values(names::PUPIL_DIAMETER).unwrap()
        );
    }

    #[test]
    fn corpus_directories_are_byte_identical_across_runs() {
        let spec = small_spec();
        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("first");
        let second = dir.path().join("second");
        generate_corpus(&spec, &first).unwrap();
        generate_corpus(&spec, &second).unwrap();
        for sub in ["recordings/S01.csv", "recordings/S04.csv", "annotations/S02.csv", "metadata.toml"] {
            let a = std::fs::read(first.join(sub)).unwrap();
            let b = std::fs::read(second.join(sub)).unwrap();
            assert_eq!(a, b, "{sub} differs between identical runs");
        }
    }

    #[test]
    fn corpus_metadata_echoes_the_true_lag() {
        let spec = SynthSpec { lag_seconds: 1.0, ..small_spec() };
        let dir = tempfile::tempdir().unwrap();
        let paths = generate_corpus(&spec, dir.path()).unwrap();
        let text = std::fs::read_to_string(&paths.metadata_path).unwrap();
        let meta: CorpusMetadata = toml::from_str(&text).unwrap();
        assert_eq!(meta.true_lag_seconds, 1.0);
        assert_eq!(meta.train.len(), 2);
        assert_eq!(meta.arousal_source_channels, vec!["head_yaw", "pupil_diameter"]);
    }

    #[test]
    fn requested_counts_produce_that_many_files() {
        let spec = small_spec();
        let dir = tempfile::tempdir().unwrap();
        let paths = generate_corpus(&spec, dir.path()).unwrap();
        let recordings: Vec<_> = std::fs::read_dir(&paths.recordings_dir).unwrap().collect();
        assert_eq!(recordings.len(), 4);
        let text = std::fs::read_to_string(paths.recordings_dir.join("S03.csv")).unwrap();
        assert_eq!(text.lines().count(), 801); // header + one row per frame
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(SynthSpec { n_test: 0, ..small_spec() }.validate().is_err());
        assert!(SynthSpec { lag_seconds: 0.03, ..small_spec() }.validate().is_err());
        assert!(SynthSpec { n_frames: 10, ..small_spec() }.validate().is_err());
    }
}

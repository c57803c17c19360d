//! Continuous affect prediction from head and eye tracker time series.
//!
//! The pipeline turns per-frame tracker output into continuous arousal or
//! valence predictions:
//!
//! 1. [`ingest`] — parse tracker CSV and annotation files, repair dropouts,
//!    manage subject partitions.
//! 2. [`lld`] — derive low-level descriptors: frame deltas and binary eye
//!    events (fixation, gaze approach, pupil dilation/constriction).
//! 3. [`functionals`] + [`wavelet`] — slide temporal windows over every
//!    channel and summarise each window with statistical functionals and
//!    Daubechies wavelet band features.
//! 4. [`alignment`] — shift ground truth back in time to compensate for
//!    annotator reaction lag, and z-standardise with training statistics.
//! 5. [`selection`] — drop features with low mutual information to the
//!    regression target.
//! 6. [`model`] — bidirectional LSTM sequence regressor trained with SSE,
//!    input noise, and early stopping.
//! 7. [`metrics`] — concordance correlation coefficient, SSE, Pearson r.
//! 8. [`experiment`] + [`synth`] — batch sweeps over window size, annotation
//!    delay, and MI threshold, with CSV reports and a synthetic corpus
//!    generator for end-to-end validation.
//!
//! The `examples/` directory has one runnable program per stage; the
//! `affectus` binary exposes the batch interface (`synth`, `extract`,
//! `explore`, `run`, `report`).

pub mod alignment;
pub mod experiment;
pub mod functionals;
pub mod ingest;
pub mod lld;
pub mod metrics;
pub mod model;
pub mod selection;
pub mod synth;
pub mod wavelet;




pub use ingest::{AnnotationTrack, ChannelKind, ChannelSpec, Partition, PartitionSpec, RecordingSeries};
pub use lld::DerivedChannelSet;
pub use metrics::EvalResult;

/// Mixes a base seed with a stream identifier so that independent random
/// streams (weight init, per-epoch noise, per-column jitter, per-subject
/// synthesis) never overlap. SplitMix64 finalizer.
pub(crate) fn stream_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

//! Batch experiment orchestration: config parsing, pipeline wiring, the
//! hyperparameter sweep over (window, delay, MI threshold, modality set),
//! and report emission.
//!
//! A sweep enumerates the full cross-product of the configured windows,
//! delays, thresholds, and modality sets, trains one model per tuple per
//! affect dimension, evaluates it on the validation partition, and gives
//! the best validation-CCC configuration per (modality set, dimension) a
//! single test-set pass. Every computation is value-deterministic for a
//! fixed config and seed, so reruns reproduce the report byte for byte.

use ndarray::{s, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::alignment::{delay_to_frames, shifted_ranges, AlignmentError, ShiftGrid, Standardizer};
use crate::functionals::{
    extract_features, FunctionalsError, View, WindowPlan, WindowedFeatureMatrix,
};
use crate::ingest::{
    canonical_channels, channel_names, parse_annotation_csv, parse_tracker_csv, repair_missing,
    AnnotationTrack, ChannelKind, ColumnMapping, Dimension, IngestError, Partition, PartitionSpec,
    RecordingSeries,
};
use crate::lld::{augmented_series, derive_channels, event_names, DeriveOptions, LldError};
use crate::metrics::{evaluate, EvalResult, MetricError};
use crate::model::{self, ModelConfig, ModelError, ModelParameters, Sequence};
use crate::selection::{decimate_indices, mi_scores, MiConfig, MiReport, SelectionError};
use crate::wavelet::WaveletConfig;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("modality set {0:?} is not defined under [modalities]")]
    UnknownModality(String),
    #[error("channel {channel:?} in modality {modality:?} is not a canonical, delta, or event channel")]
    UnknownChannel { channel: String, modality: String },
    #[error("while {context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<ExperimentError>,
    },
    #[error("could not parse config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Lld(#[from] LldError),
    #[error(transparent)]
    Functionals(#[from] FunctionalsError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

fn with_context<T>(
    result: Result<T, ExperimentError>,
    context: impl FnOnce() -> String,
) -> Result<T, ExperimentError> {
    result.map_err(|e| ExperimentError::Context { context: context(), source: Box::new(e) })
}

/// Where the corpus lives and how its files map onto channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    /// Directory of `<subject>.csv` tracker exports.
    pub recordings_dir: PathBuf,
    /// Directory of `<subject>.csv` annotation files (arousal + valence columns).
    pub annotations_dir: PathBuf,
    /// Column mapping preset: `canonical` (headers already use channel
    /// names) or `openface` (OpenFace 2.x export headers).
    #[serde(default = "default_mapping")]
    pub mapping: String,
    #[serde(default = "default_frame_rate")]
    pub frame_rate: u32,
    /// Longest tracker dropout (seconds) repaired by interpolation.
    #[serde(default = "default_max_gap")]
    pub repair_max_gap_seconds: f64,
}

fn default_mapping() -> String {
    "canonical".to_string()
}

fn default_frame_rate() -> u32 {
    25
}

fn default_max_gap() -> f64 {
    crate::ingest::DEFAULT_MAX_GAP_SECONDS
}

/// Which derived channels to compute on top of the raw tracker channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Continuous channels that get a `delta_<name>` displacement series.
    /// Deltas named directly inside a modality set are derived regardless.
    #[serde(default)]
    pub delta_channels: Vec<String>,
    /// Gaze displacement (radians/frame) below which a frame counts as
    /// fixating.
    #[serde(default = "default_fixation")]
    pub fixation_threshold: f64,
    /// Whether windowed features include the wavelet band summaries.
    #[serde(default = "default_true")]
    pub wavelet: bool,
}

fn default_fixation() -> f64 {
    crate::lld::DEFAULT_FIXATION_THRESHOLD
}

fn default_true() -> bool {
    true
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            delta_channels: Vec::new(),
            fixation_threshold: default_fixation(),
            wavelet: true,
        }
    }
}

/// The sweep grid. Every combination of window, delay, and threshold is
/// trained for every listed modality set and dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub window_seconds: Vec<f64>,
    /// Ground-truth backward shifts in seconds; must be frame-aligned.
    pub delays: Vec<f64>,
    pub mi_thresholds: Vec<f64>,
    #[serde(default = "default_dimensions")]
    pub dimensions: Vec<Dimension>,
    /// Names into the `[modalities]` table, swept in this order.
    pub modality_sets: Vec<String>,
}

fn default_dimensions() -> Vec<Dimension> {
    Dimension::ALL.to_vec()
}

/// Mutual-information estimator settings. The estimator seed is tied to
/// the model seed so one config key controls all randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiSettings {
    #[serde(default = "default_neighbors")]
    pub neighbors: usize,
    /// Per-sweep cap on MI sample count, drawn evenly across the train
    /// partition. `None` uses every row.
    #[serde(default = "default_max_samples")]
    pub max_samples: Option<usize>,
}

fn default_neighbors() -> usize {
    crate::selection::DEFAULT_NEIGHBORS
}

fn default_max_samples() -> Option<usize> {
    Some(crate::selection::DEFAULT_MAX_SAMPLES)
}

impl Default for MiSettings {
    fn default() -> Self {
        Self { neighbors: default_neighbors(), max_samples: default_max_samples() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

/// Everything a sweep needs, loadable from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub partitions: PartitionSpec,
    #[serde(default)]
    pub channels: ChannelConfig,
    /// Named channel groups; entries may be raw channels, `delta_<name>`
    /// displacement channels, or derived event channels.
    pub modalities: BTreeMap<String, Vec<String>>,
    pub sweep: SweepConfig,
    /// Network and optimizer settings; `input_dim` is filled per tuple
    /// from the post-selection feature count and may be omitted.
    #[serde(default = "default_model")]
    pub model: ModelConfig,
    #[serde(default)]
    pub mi: MiSettings,
    pub output: OutputConfig,
}

fn default_model() -> ModelConfig {
    ModelConfig::new(0)
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ExperimentError::Config(format!("could not read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    /// Structural validation: partitions, grids, modality references, and
    /// model settings. Data-dependent checks (missing file columns) happen
    /// on load, before any training starts.
    // Negated comparisons double as NaN rejection.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.partitions.validate()?;
        if !matches!(self.data.mapping.as_str(), "canonical" | "openface") {
            return Err(ExperimentError::Config(format!(
                "unknown mapping preset {:?} (expected \"canonical\" or \"openface\")",
                self.data.mapping
            )));
        }
        if self.data.frame_rate == 0 {
            return Err(ExperimentError::Config("frame_rate must be positive".into()));
        }
        if self.sweep.window_seconds.is_empty() {
            return Err(ExperimentError::Config("sweep.window_seconds is empty".into()));
        }
        for &w in &self.sweep.window_seconds {
            WindowPlan::new(w, self.data.frame_rate).window_frames()?;
        }
        ShiftGrid { delays: self.sweep.delays.clone() }.validate(self.data.frame_rate)?;
        if self.sweep.mi_thresholds.is_empty() {
            return Err(ExperimentError::Config("sweep.mi_thresholds is empty".into()));
        }
        if self.sweep.mi_thresholds.iter().any(|&t| !(t > 0.0)) {
            return Err(ExperimentError::Config("MI thresholds must be positive".into()));
        }
        if self.sweep.dimensions.is_empty() {
            return Err(ExperimentError::Config("sweep.dimensions is empty".into()));
        }
        if self.sweep.modality_sets.is_empty() {
            return Err(ExperimentError::Config("sweep.modality_sets is empty".into()));
        }
        for set in &self.sweep.modality_sets {
            let channels = self
                .modalities
                .get(set)
                .ok_or_else(|| ExperimentError::UnknownModality(set.clone()))?;
            if channels.is_empty() {
                return Err(ExperimentError::Config(format!("modality set {set:?} is empty")));
            }
            for channel in channels {
                self.resolve_channel(channel, set)?;
            }
        }
        for name in &self.channels.delta_channels {
            if !is_canonical_continuous(name) {
                return Err(ExperimentError::Config(format!(
                    "delta source {name:?} is not a continuous canonical channel"
                )));
            }
        }
        if self.mi.neighbors == 0 {
            return Err(ExperimentError::Config("mi.neighbors must be at least 1".into()));
        }
        let mut model = self.model.clone();
        model.input_dim = 1; // placeholder; the real width is data-dependent
        model.validate()?;
        Ok(())
    }

    /// The raw channels that must come out of ingestion for `channel` to
    /// be computable. Errors when the name is not canonical, a delta of a
    /// continuous canonical channel, or a derived event.
    fn resolve_channel(
        &self,
        channel: &str,
        modality: &str,
    ) -> Result<Vec<&'static str>, ExperimentError> {
        use channel_names::*;
        let unknown = || ExperimentError::UnknownChannel {
            channel: channel.to_string(),
            modality: modality.to_string(),
        };
        if let Some(source) = channel.strip_prefix("delta_") {
            if !is_canonical_continuous(source) {
                return Err(unknown());
            }
            return Ok(vec![canonical_name(source).expect("checked continuous above")]);
        }
        match channel {
            n if n == event_names::PUPIL_DILATION || n == event_names::PUPIL_CONSTRICTION => {
                Ok(vec![PUPIL_DIAMETER])
            }
            n if n == event_names::EYE_FIXATION => Ok(vec![GAZE_X, GAZE_Y]),
            n if n == event_names::GAZE_APPROACH => Ok(vec![GAZE_DISTANCE]),
            n => canonical_name(n).map(|c| vec![c]).ok_or_else(unknown),
        }
    }

    /// Union of raw channels needed by the swept modality sets, in
    /// canonical order.
    fn required_base_channels(&self) -> Result<Vec<&'static str>, ExperimentError> {
        let mut needed: BTreeSet<&'static str> = BTreeSet::new();
        for set in &self.sweep.modality_sets {
            for channel in &self.modalities[set] {
                needed.extend(self.resolve_channel(channel, set)?);
            }
        }
        for name in &self.channels.delta_channels {
            needed.insert(canonical_name(name).expect("validated continuous canonical"));
        }
        Ok(canonical_channels()
            .iter()
            .filter_map(|spec| canonical_name(&spec.name))
            .filter(|n| needed.contains(n))
            .collect())
    }

    /// Delta source channels: the configured list plus every channel a
    /// modality set references through a `delta_` name.
    fn delta_sources(&self) -> Vec<String> {
        let mut sources: BTreeSet<String> = self.channels.delta_channels.iter().cloned().collect();
        for set in &self.sweep.modality_sets {
            for channel in &self.modalities[set] {
                if let Some(source) = channel.strip_prefix("delta_") {
                    sources.insert(source.to_string());
                }
            }
        }
        sources.into_iter().collect()
    }

    fn column_mapping(&self) -> Result<ColumnMapping, ExperimentError> {
        match self.data.mapping.as_str() {
            "canonical" => Ok(ColumnMapping::canonical_subset(&self.required_base_channels()?)),
            "openface" => {
                let mapping = ColumnMapping::openface();
                for needed in self.required_base_channels()? {
                    if !mapping.rules.iter().any(|r| r.channel.name == needed) {
                        return Err(ExperimentError::Config(format!(
                            "the openface mapping does not provide channel {needed:?}"
                        )));
                    }
                }
                Ok(mapping)
            }
            other => Err(ExperimentError::Config(format!("unknown mapping preset {other:?}"))),
        }
    }

    fn wavelet_config(&self) -> Option<WaveletConfig> {
        self.channels.wavelet.then(WaveletConfig::default)
    }

    fn mi_config(&self) -> MiConfig {
        MiConfig {
            neighbors: self.mi.neighbors,
            seed: self.model.seed,
            // Decimation happens here, stratified across train subjects.
            max_samples: None,
        }
    }
}

fn canonical_name(name: &str) -> Option<&'static str> {
    use channel_names::*;
    [
        HEAD_LOC_X,
        HEAD_LOC_Y,
        HEAD_LOC_Z,
        HEAD_YAW,
        HEAD_PITCH,
        HEAD_ROLL,
        PUPIL_DIAMETER,
        GAZE_X,
        GAZE_Y,
        GAZE_DISTANCE,
        BLINK_LOGICAL,
        BLINK_INTENSITY,
        DIRECT_GAZE,
    ]
    .into_iter()
    .find(|&c| c == name)
}

fn is_canonical_continuous(name: &str) -> bool {
    canonical_channels()
        .iter()
        .any(|spec| spec.name == name && spec.kind == ChannelKind::Continuous)
}

/// One subject's repaired recording (raw plus derived channels) and both
/// annotation tracks.
#[derive(Debug, Clone)]
pub struct LoadedSubject {
    pub subject_id: String,
    pub partition: Partition,
    pub series: RecordingSeries,
    pub arousal: AnnotationTrack,
    pub valence: AnnotationTrack,
}

impl LoadedSubject {
    pub fn labels(&self, dimension: Dimension) -> &AnnotationTrack {
        match dimension {
            Dimension::Arousal => &self.arousal,
            Dimension::Valence => &self.valence,
        }
    }
}

/// The whole corpus in partition order (train, validation, test).
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub subjects: Vec<LoadedSubject>,
}

impl LoadedCorpus {
    pub fn partition_indices(&self, partition: Partition) -> Vec<usize> {
        self.subjects
            .iter()
            .enumerate()
            .filter(|(_, s)| s.partition == partition)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Parses, repairs, and derives every subject named by the partitions.
/// Fails before any training when a required channel or file is missing.
pub fn load_corpus(config: &ExperimentConfig) -> Result<LoadedCorpus, ExperimentError> {
    config.validate()?;
    let mapping = config.column_mapping()?;
    let delta_sources = config.delta_sources();
    let delta_refs: Vec<&str> = delta_sources.iter().map(String::as_str).collect();
    let options = DeriveOptions { fixation_threshold: config.channels.fixation_threshold };

    let mut subjects = Vec::new();
    for partition in [Partition::Train, Partition::Validation, Partition::Test] {
        for id in config.partitions.subjects_of(partition) {
            let load = || -> Result<LoadedSubject, ExperimentError> {
                let recording = config.data.recordings_dir.join(format!("{id}.csv"));
                let raw =
                    parse_tracker_csv(&recording, id.clone(), config.data.frame_rate, &mapping)?;
                let repaired = repair_missing(&raw, config.data.repair_max_gap_seconds)?;
                let derived = derive_channels(&repaired, &delta_refs, &options)?;
                let series = augmented_series(&repaired, &derived);

                let annotation = config.data.annotations_dir.join(format!("{id}.csv"));
                let arousal = parse_annotation_csv(&annotation, id, Dimension::Arousal)?;
                let valence = parse_annotation_csv(&annotation, id, Dimension::Valence)?;
                for track in [&arousal, &valence] {
                    if track.values.len() != series.n_frames() {
                        return Err(ExperimentError::Config(format!(
                            "subject {id}: {} annotation has {} frames but the recording has {}",
                            track.dimension,
                            track.values.len(),
                            series.n_frames()
                        )));
                    }
                }
                Ok(LoadedSubject {
                    subject_id: id.clone(),
                    partition,
                    series,
                    arousal,
                    valence,
                })
            };
            subjects.push(with_context(load(), || format!("loading subject {id}"))?);
        }
    }

    let corpus = LoadedCorpus { subjects };
    for set in &config.sweep.modality_sets {
        for channel in &config.modalities[set] {
            let subject = &corpus.subjects[0];
            if subject.series.values(channel).is_err() {
                return Err(ExperimentError::UnknownChannel {
                    channel: channel.clone(),
                    modality: set.clone(),
                });
            }
        }
    }
    Ok(corpus)
}

/// A copy of the subject's series restricted to one modality's channels,
/// in the modality's configured order.
fn modality_series(subject: &LoadedSubject, channels: &[String]) -> RecordingSeries {
    let mut out =
        RecordingSeries::new(subject.subject_id.clone(), subject.series.frame_rate);
    for name in channels {
        let spec = subject.series.channel_spec(name).expect("validated on load").clone();
        let values = subject.series.values(name).expect("validated on load").to_vec();
        out.add_channel(spec, values).expect("modality channel names are unique");
    }
    out
}

/// How the sweep executes. All values are deterministic for a fixed config
/// regardless of these options; `deterministic` is recorded so callers can
/// assert byte-identical artifacts, and `jobs` only caps parallelism.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub deterministic: bool,
    pub jobs: Option<usize>,
}

/// One line of the sweep report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub system: String,
    pub dimension: Dimension,
    pub partition: Partition,
    pub window_s: f64,
    pub delay_s: f64,
    pub mi_threshold: f64,
    pub n_features: usize,
    pub sse: f64,
    pub ccc: f64,
}

pub const REPORT_HEADER: &str =
    "system,dimension,partition,window_s,delay_s,mi_threshold,n_features,sse,ccc";

/// Writes rows under the fixed report header. Floats use shortest
/// round-trip formatting, so equal values always print identically.
pub fn write_report(rows: &[ReportRow], path: &Path) -> Result<(), ExperimentError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "{REPORT_HEADER}")?;
    for row in rows {
        writeln!(
            file,
            "{},{},{},{:?},{:?},{:?},{},{:?},{:?}",
            row.system,
            row.dimension,
            row.partition,
            row.window_s,
            row.delay_s,
            row.mi_threshold,
            row.n_features,
            row.sse,
            row.ccc
        )?;
    }
    file.flush()?;
    Ok(())
}

/// Everything `run_experiment` produces besides the files on disk.
#[derive(Debug)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub report_path: PathBuf,
    /// One entry per failed tuple, with configuration context. Failed
    /// tuples contribute no rows; the rest of the sweep continues.
    pub failures: Vec<String>,
}

/// What one MI threshold produced: its report plus either the trained
/// candidate with its validation row, or the failure that stopped it.
type ThresholdOutcome = (f64, Result<(MiReport, Candidate, ReportRow), ExperimentError>);

/// A trained tuple that might become its (modality, dimension) winner.
struct Candidate {
    window_s: f64,
    delay_s: f64,
    mi_threshold: f64,
    kept: Vec<usize>,
    params: ModelParameters,
    validation_ccc: f64,
}

/// Feature rows paired with shifted labels for one subject, as borrowed
/// views into the per-(modality, window) cache.
struct ShiftedViews<'a> {
    features: ArrayView2<'a, f64>,
    labels: &'a [f64],
}

fn shifted_views<'a>(
    matrix: &'a WindowedFeatureMatrix,
    labels: &'a AnnotationTrack,
    delay: f64,
) -> Result<ShiftedViews<'a>, ExperimentError> {
    let k = delay_to_frames(delay, matrix.plan.frame_rate)?;
    let w = matrix.plan.window_frames()?;
    let (feature_rows, label_range) = shifted_ranges(matrix.n_rows(), w, k)?;
    Ok(ShiftedViews {
        features: matrix.data.slice(s![feature_rows.start..feature_rows.end, ..]),
        labels: &labels.values[label_range],
    })
}

/// MI sample drawn evenly within each train subject (at most
/// `max_samples` rows in total), keeping the estimate deterministic and
/// every subject represented.
fn mi_sample(
    shifted: &[ShiftedViews<'_>],
    train: &[usize],
    max_samples: Option<usize>,
) -> (Array2<f64>, Vec<f64>) {
    let total: usize = train.iter().map(|&i| shifted[i].features.nrows()).sum();
    let cap = max_samples.unwrap_or(total).min(total);
    let base = cap / train.len();
    let extra = cap % train.len();

    let n_cols = shifted[train[0]].features.ncols();
    let mut data = Array2::zeros((0, n_cols));
    let mut target = Vec::with_capacity(cap);
    for (slot, &i) in train.iter().enumerate() {
        let quota = base + usize::from(slot < extra);
        let rows = decimate_indices(shifted[i].features.nrows(), quota);
        data.append(Axis(0), shifted[i].features.select(Axis(0), &rows).view())
            .expect("sampled rows share the cached column count");
        target.extend(rows.iter().map(|&r| shifted[i].labels[r]));
    }
    (data, target)
}

/// Trains one configuration tuple and evaluates it on validation.
#[allow(clippy::too_many_arguments)]
fn train_tuple(
    config: &ExperimentConfig,
    cache: &[WindowedFeatureMatrix],
    corpus: &LoadedCorpus,
    dimension: Dimension,
    delay: f64,
    kept: &[usize],
    train_idx: &[usize],
    validation_idx: &[usize],
) -> Result<(ModelParameters, EvalResult), ExperimentError> {
    let selected: Vec<WindowedFeatureMatrix> =
        cache.iter().map(|m| m.select_columns(kept)).collect();
    let shifted: Vec<ShiftedViews<'_>> = selected
        .iter()
        .zip(&corpus.subjects)
        .map(|(m, s)| shifted_views(m, s.labels(dimension), delay))
        .collect::<Result<_, _>>()?;

    let train_features: Vec<ArrayView2<'_, f64>> =
        train_idx.iter().map(|&i| shifted[i].features).collect();
    let train_labels: Vec<&[f64]> = train_idx.iter().map(|&i| shifted[i].labels).collect();
    let standardizer = Standardizer::fit(&train_features, &train_labels)?;

    let standardize = |idx: &[usize]| -> Result<Vec<Sequence>, ExperimentError> {
        idx.iter()
            .map(|&i| {
                let z = standardizer.apply_features(&shifted[i].features)?;
                let t = standardizer.apply_target(shifted[i].labels);
                Ok((z, t))
            })
            .collect()
    };
    let train_set = standardize(train_idx)?;
    let validation_set = standardize(validation_idx)?;

    let mut model_config = config.model.clone();
    model_config.input_dim = kept.len();
    let (params, _log) = model::train(&model_config, &train_set, &validation_set)?;
    let params = params.with_standardizer(standardizer);

    let validation = evaluate_partition(&params, &shifted, validation_idx)?;
    Ok((params, validation))
}

/// Pooled evaluation: predictions for each subject are concatenated in
/// partition order and scored as one long trace, in label units.
fn evaluate_partition(
    params: &ModelParameters,
    shifted: &[ShiftedViews<'_>],
    idx: &[usize],
) -> Result<EvalResult, ExperimentError> {
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    for &i in idx {
        pred.extend(model::predict(params, &shifted[i].features)?);
        truth.extend_from_slice(shifted[i].labels);
    }
    Ok(evaluate(&pred, &truth)?)
}

/// File stem identifying one tuple, safe for file names.
fn tuple_stem(set: &str, dimension: Dimension, window: f64, delay: f64, threshold: f64) -> String {
    let clean = |v: f64| format!("{v:?}").replace('.', "p").replace('-', "m");
    format!("{set}_{dimension}_w{}_d{}_t{}", clean(window), clean(delay), clean(threshold))
}

fn mi_stem(set: &str, dimension: Dimension, window: f64, delay: f64) -> String {
    let clean = |v: f64| format!("{v:?}").replace('.', "p").replace('-', "m");
    format!("{set}_{dimension}_w{}_d{}", clean(window), clean(delay))
}

/// Runs the full sweep and writes `report.csv`, per-tuple model JSON
/// under `models/`, and per-(tuple, dimension) MI rankings under `mi/`.
///
/// The report gets one validation row per configuration tuple per
/// dimension, in config enumeration order (modality set, window, delay,
/// dimension, threshold), followed by one test row per (modality set,
/// dimension) for the best-validation-CCC tuple. Only winning tuples
/// touch the test partition. A failing tuple is recorded in `failures`
/// (and `failures.log`) and the sweep moves on; the report keeps every
/// successful row.
pub fn run_experiment(
    config: &ExperimentConfig,
    options: &RunOptions,
) -> Result<ExperimentReport, ExperimentError> {
    let _ = options.deterministic; // results are value-deterministic either way
    config.validate()?;
    let out = &config.output.dir;
    let models_dir = out.join("models");
    let mi_dir = out.join("mi");
    std::fs::create_dir_all(&models_dir)?;
    std::fs::create_dir_all(&mi_dir)?;
    let report_path = out.join("report.csv");

    let corpus = load_corpus(config)?;
    let train_idx = corpus.partition_indices(Partition::Train);
    let validation_idx = corpus.partition_indices(Partition::Validation);
    let test_idx = corpus.partition_indices(Partition::Test);
    let wavelet = config.wavelet_config();

    let mut rows: Vec<ReportRow> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    let mut winners: BTreeMap<(String, String), Candidate> = BTreeMap::new();

    for set in &config.sweep.modality_sets {
        let channels = &config.modalities[set];
        for &window_s in &config.sweep.window_seconds {
            let plan = WindowPlan::new(window_s, config.data.frame_rate);
            // The expensive step: windowed features for every subject at
            // this (modality, window), cached across the delay/threshold
            // sweep below. Extraction is already row-parallel.
            let cache: Vec<WindowedFeatureMatrix> = corpus
                .subjects
                .iter()
                .map(|s| {
                    with_context(
                        extract_features(&modality_series(s, channels), &plan, wavelet.as_ref())
                            .map_err(ExperimentError::from),
                        || format!("extracting {set} features for {}", s.subject_id),
                    )
                })
                .collect::<Result<_, _>>()?;
            let names = cache[0].column_names();

            for &delay_s in &config.sweep.delays {
                for &dimension in &config.sweep.dimensions {
                    let context = || {
                        format!("modality {set}, {dimension}, window {window_s} s, delay {delay_s} s")
                    };
                    // MI is estimated once per (modality, window, delay,
                    // dimension) and shared by every threshold.
                    let scores = (|| {
                        let shifted: Vec<ShiftedViews<'_>> = cache
                            .iter()
                            .zip(&corpus.subjects)
                            .map(|(m, s)| shifted_views(m, s.labels(dimension), delay_s))
                            .collect::<Result<_, _>>()?;
                        let (sample, target) =
                            mi_sample(&shifted, &train_idx, config.mi.max_samples);
                        Ok(mi_scores(&sample.view(), &target, &config.mi_config())?)
                    })();
                    let scores: Vec<f64> = match with_context(scores, context) {
                        Ok(s) => s,
                        Err(e) => {
                            failures.push(e.to_string());
                            continue;
                        }
                    };

                    let outcomes: Vec<ThresholdOutcome> =
                        config
                            .sweep
                            .mi_thresholds
                            .par_iter()
                            .map(|&threshold| {
                                let result = (|| {
                                    let report = MiReport::from_scores(
                                        names.clone(),
                                        scores.clone(),
                                        threshold,
                                    );
                                    let kept = report.kept_indices();
                                    if kept.is_empty() {
                                        return Err(SelectionError::AllFeaturesDropped {
                                            threshold,
                                        }
                                        .into());
                                    }
                                    let (params, validation) = train_tuple(
                                        config,
                                        &cache,
                                        &corpus,
                                        dimension,
                                        delay_s,
                                        &kept,
                                        &train_idx,
                                        &validation_idx,
                                    )?;
                                    let row = ReportRow {
                                        system: set.clone(),
                                        dimension,
                                        partition: Partition::Validation,
                                        window_s,
                                        delay_s,
                                        mi_threshold: threshold,
                                        n_features: kept.len(),
                                        sse: validation.sse,
                                        ccc: validation.ccc,
                                    };
                                    let candidate = Candidate {
                                        window_s,
                                        delay_s,
                                        mi_threshold: threshold,
                                        kept,
                                        params,
                                        validation_ccc: validation.ccc,
                                    };
                                    Ok((report, candidate, row))
                                })();
                                (threshold, with_context(result, context))
                            })
                            .collect();

                    for (threshold, outcome) in outcomes {
                        match outcome {
                            Ok((mi_report, candidate, row)) => {
                                mi_report.write_csv(
                                    mi_dir
                                        .join(format!("{}.csv", mi_stem(set, dimension, window_s, delay_s))),
                                )?;
                                candidate.params.save_json(models_dir.join(format!(
                                    "{}.json",
                                    tuple_stem(set, dimension, window_s, delay_s, threshold)
                                )))?;
                                rows.push(row);
                                let key = (set.clone(), dimension.to_string());
                                let better = winners
                                    .get(&key)
                                    .is_none_or(|w| candidate.validation_ccc > w.validation_ccc);
                                if better {
                                    winners.insert(key, candidate);
                                }
                            }
                            Err(e) => failures.push(format!("{e} (threshold {threshold})")),
                        }
                    }
                    // Keep whatever finished so far readable even if a
                    // later tuple takes the process down.
                    write_report(&rows, &report_path)?;
                }
            }
        }
    }

    // Single test pass for each (modality set, dimension) winner, in
    // report order.
    for set in &config.sweep.modality_sets {
        for &dimension in &config.sweep.dimensions {
            let Some(winner) = winners.get(&(set.clone(), dimension.to_string())) else {
                failures.push(format!(
                    "modality {set}, {dimension}: no tuple finished, skipping the test pass"
                ));
                continue;
            };
            let result = (|| {
                let plan = WindowPlan::new(winner.window_s, config.data.frame_rate);
                let mut pred = Vec::new();
                let mut truth = Vec::new();
                for &i in &test_idx {
                    let subject = &corpus.subjects[i];
                    let matrix = extract_features(
                        &modality_series(subject, &config.modalities[set]),
                        &plan,
                        wavelet.as_ref(),
                    )?
                    .select_columns(&winner.kept);
                    let views =
                        shifted_views(&matrix, subject.labels(dimension), winner.delay_s)?;
                    pred.extend(model::predict(&winner.params, &views.features)?);
                    truth.extend_from_slice(views.labels);
                }
                Ok(evaluate(&pred, &truth)?)
            })();
            match with_context(result, || format!("test pass for modality {set}, {dimension}")) {
                Ok(test) => rows.push(ReportRow {
                    system: set.clone(),
                    dimension,
                    partition: Partition::Test,
                    window_s: winner.window_s,
                    delay_s: winner.delay_s,
                    mi_threshold: winner.mi_threshold,
                    n_features: winner.kept.len(),
                    sse: test.sse,
                    ccc: test.ccc,
                }),
                Err(e) => failures.push(e.to_string()),
            }
        }
    }

    write_report(&rows, &report_path)?;
    if !failures.is_empty() {
        std::fs::write(out.join("failures.log"), failures.join("\n") + "\n")?;
    }
    Ok(ExperimentReport { rows, report_path, failures })
}

/// One feature's correlation with one shifted target.
#[derive(Debug, Clone, PartialEq)]
pub struct ExploreRow {
    pub dimension: Dimension,
    pub rank: usize,
    pub feature: String,
    pub pearson_r: f64,
}

#[derive(Debug)]
pub struct ExploreReport {
    pub rows: Vec<ExploreRow>,
    pub path: PathBuf,
}

/// Ranks every windowed-average descriptor (the `static.mean` of each
/// continuous channel and the `static.ratio` of each binary channel,
/// derived channels included) by Pearson correlation with each shifted
/// target over the train partition, using the first configured window and
/// delay. Degenerate (constant) pairs score 0 and rank last. The report
/// at `<output>/explore.csv` has one row per (feature, dimension).
pub fn explore_lld(config: &ExperimentConfig) -> Result<ExploreReport, ExperimentError> {
    config.validate()?;
    let corpus = load_corpus(config)?;
    let train_idx = corpus.partition_indices(Partition::Train);
    let window_s = config.sweep.window_seconds[0];
    let delay_s = config.sweep.delays[0];
    let plan = WindowPlan::new(window_s, config.data.frame_rate);

    // Windowed means only, so the wavelet stage stays off.
    let cache: Vec<WindowedFeatureMatrix> = corpus
        .subjects
        .iter()
        .map(|s| Ok(extract_features(&s.series, &plan, None)?))
        .collect::<Result<_, ExperimentError>>()?;
    let mean_columns: Vec<usize> = cache[0]
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            c.view == View::Static && (c.functional == "mean" || c.functional == "ratio")
        })
        .map(|(i, _)| i)
        .collect();
    let features: Vec<String> =
        mean_columns.iter().map(|&i| cache[0].columns[i].name()).collect();

    let mut rows = Vec::new();
    for &dimension in &config.sweep.dimensions {
        let shifted: Vec<ShiftedViews<'_>> = cache
            .iter()
            .zip(&corpus.subjects)
            .map(|(m, s)| shifted_views(m, s.labels(dimension), delay_s))
            .collect::<Result<_, _>>()?;
        let mut scored: Vec<(String, f64)> = mean_columns
            .iter()
            .zip(&features)
            .map(|(&col, name)| {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for &i in &train_idx {
                    xs.extend(shifted[i].features.column(col).iter().copied());
                    ys.extend_from_slice(shifted[i].labels);
                }
                let r = crate::metrics::pearson(&xs, &ys).unwrap_or(0.0);
                (name.clone(), r)
            })
            .collect();
        scored.sort_by(|a, b| {
            b.1.abs().partial_cmp(&a.1.abs()).expect("finite correlations").then_with(|| {
                a.0.cmp(&b.0)
            })
        });
        for (rank, (feature, r)) in scored.into_iter().enumerate() {
            rows.push(ExploreRow { dimension, rank: rank + 1, feature, pearson_r: r });
        }
    }

    std::fs::create_dir_all(&config.output.dir)?;
    let path = config.output.dir.join("explore.csv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(file, "dimension,rank,feature,pearson_r")?;
    for row in &rows {
        writeln!(file, "{},{},{},{:?}", row.dimension, row.rank, row.feature, row.pearson_r)?;
    }
    file.flush()?;
    Ok(ExploreReport { rows, path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_corpus, SynthSpec};
    use std::path::Path;

    fn corpus_config(dir: &Path, out: &Path) -> String {
        format!(
            r#"
[data]
recordings_dir = "{rec}"
annotations_dir = "{ann}"

[partitions]
train = ["S01", "S02"]
validation = ["S03"]
test = ["S04"]

[channels]
wavelet = false

[modalities]
head = ["head_yaw", "pupil_diameter"]

[sweep]
window_seconds = [2.0]
delays = [0.0, 0.2]
mi_thresholds = [0.02]
dimensions = ["arousal"]
modality_sets = ["head"]

[model]
hidden_sizes = [4]
learning_rate = 1e-4
max_epochs = 2
patience = 1

[mi]
max_samples = 400

[output]
dir = "{out}"
"#,
            rec = dir.join("recordings").display(),
            ann = dir.join("annotations").display(),
            out = out.display(),
        )
    }

    fn small_corpus(dir: &Path) {
        let spec = SynthSpec {
            n_train: 2,
            n_validation: 1,
            n_test: 1,
            n_frames: 600,
            ..SynthSpec::default()
        };
        generate_corpus(&spec, dir).unwrap();
    }

    #[test]
    fn toml_defaults_fill_in() {
        let dir = tempfile::tempdir().unwrap();
        let text = corpus_config(dir.path(), &dir.path().join("out"));
        let config = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(config.data.mapping, "canonical");
        assert_eq!(config.data.frame_rate, 25);
        assert_eq!(config.data.repair_max_gap_seconds, 0.5);
        assert_eq!(config.channels.fixation_threshold, 0.02);
        assert!(!config.channels.wavelet);
        assert_eq!(config.model.hidden_sizes, vec![4]);
        assert_eq!(config.model.momentum, 0.9);
        assert_eq!(config.mi.neighbors, 3);
        assert_eq!(config.mi.max_samples, Some(400));
        assert_eq!(config.sweep.dimensions, vec![Dimension::Arousal]);
    }

    #[test]
    fn default_dimensions_cover_both() {
        let dir = tempfile::tempdir().unwrap();
        let text = corpus_config(dir.path(), &dir.path().join("out"))
            .replace("dimensions = [\"arousal\"]\n", "");
        let config = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(config.sweep.dimensions, vec![Dimension::Arousal, Dimension::Valence]);
    }

    #[test]
    fn structural_validation_rejects_bad_configs() {
        let dir = tempfile::tempdir().unwrap();
        let base = corpus_config(dir.path(), &dir.path().join("out"));

        let unknown_set = base.replace("modality_sets = [\"head\"]", "modality_sets = [\"ears\"]");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&unknown_set),
            Err(ExperimentError::UnknownModality(name)) if name == "ears"
        ));

        let unknown_channel =
            base.replace("\"pupil_diameter\"", "\"heart_rate\"");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&unknown_channel),
            Err(ExperimentError::UnknownChannel { channel, .. }) if channel == "heart_rate"
        ));

        let misaligned = base.replace("delays = [0.0, 0.2]", "delays = [0.0, 0.03]");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&misaligned),
            Err(ExperimentError::Alignment(_))
        ));

        let no_thresholds = base.replace("mi_thresholds = [0.02]", "mi_thresholds = []");
        assert!(ExperimentConfig::from_toml_str(&no_thresholds).is_err());

        let delta_of_binary = base
            .replace("\"pupil_diameter\"", "\"delta_blink_logical\"");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&delta_of_binary),
            Err(ExperimentError::UnknownChannel { channel, .. }) if channel == "delta_blink_logical"
        ));
    }

    #[test]
    fn delta_and_event_channels_resolve_to_sources() {
        let dir = tempfile::tempdir().unwrap();
        let text = corpus_config(dir.path(), &dir.path().join("out")).replace(
            "head = [\"head_yaw\", \"pupil_diameter\"]",
            "head = [\"delta_head_yaw\", \"eye_fixation\", \"pupil_dilation\"]",
        );
        let config = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(
            config.required_base_channels().unwrap(),
            vec!["head_yaw", "pupil_diameter", "gaze_x", "gaze_y"]
        );
        assert_eq!(config.delta_sources(), vec!["head_yaw".to_string()]);
    }

    #[test]
    fn missing_channel_fails_before_training() {
        let dir = tempfile::tempdir().unwrap();
        small_corpus(dir.path());
        let out = dir.path().join("out");
        // The generated corpus has no blink_intensity column, so loading
        // must fail at parse time, before any model exists.
        let text = corpus_config(dir.path(), &out)
            .replace("\"pupil_diameter\"", "\"blink_intensity\"");
        let config = ExperimentConfig::from_toml_str(&text).unwrap();
        let err = run_experiment(&config, &RunOptions::default()).unwrap_err();
        assert!(
            err.to_string().contains("blink_intensity"),
            "unexpected error: {err}"
        );
        assert!(
            !out.join("report.csv").exists()
                || std::fs::read_to_string(out.join("report.csv")).unwrap().lines().count() == 1,
            "no tuple may have trained"
        );
    }

    #[test]
    fn sweep_produces_one_row_per_tuple_plus_test() {
        let dir = tempfile::tempdir().unwrap();
        small_corpus(dir.path());
        let out = dir.path().join("out");
        let config =
            ExperimentConfig::from_toml_str(&corpus_config(dir.path(), &out)).unwrap();
        let report = run_experiment(&config, &RunOptions::default()).unwrap();
        assert_eq!(report.failures, Vec::<String>::new());

        // 1 modality x 1 window x 2 delays x 1 threshold x 1 dimension
        // validation rows, plus 1 test row.
        assert_eq!(report.rows.len(), 3);
        assert!(report.rows[..2].iter().all(|r| r.partition == Partition::Validation));
        let test_row = &report.rows[2];
        assert_eq!(test_row.partition, Partition::Test);
        let winner_ccc =
            report.rows[..2].iter().map(|r| r.ccc).fold(f64::NEG_INFINITY, f64::max);
        let winner = report.rows[..2].iter().find(|r| r.ccc == winner_ccc).unwrap();
        assert_eq!(test_row.delay_s, winner.delay_s);
        assert_eq!(test_row.n_features, winner.n_features);

        let text = std::fs::read_to_string(&report.report_path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(REPORT_HEADER));
        assert_eq!(lines.count(), 3);

        // Two trained models (one per tuple) and one MI ranking per
        // (delay, dimension) were persisted.
        let models = std::fs::read_dir(out.join("models")).unwrap().count();
        assert_eq!(models, 2);
        let rankings = std::fs::read_dir(out.join("mi")).unwrap().count();
        assert_eq!(rankings, 2);
    }

    #[test]
    fn rerunning_the_sweep_reproduces_the_report_bytes() {
        let dir = tempfile::tempdir().unwrap();
        small_corpus(dir.path());
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        let config_a =
            ExperimentConfig::from_toml_str(&corpus_config(dir.path(), &out_a)).unwrap();
        let config_b =
            ExperimentConfig::from_toml_str(&corpus_config(dir.path(), &out_b)).unwrap();
        let options = RunOptions { deterministic: true, jobs: None };
        let report_a = run_experiment(&config_a, &options).unwrap();
        let report_b = run_experiment(&config_b, &options).unwrap();
        assert_eq!(
            std::fs::read(&report_a.report_path).unwrap(),
            std::fs::read(&report_b.report_path).unwrap(),
            "same config and seed must reproduce the report byte for byte"
        );
    }

    #[test]
    fn all_features_dropped_preserves_other_tuples() {
        let dir = tempfile::tempdir().unwrap();
        small_corpus(dir.path());
        let out = dir.path().join("out");
        let text = corpus_config(dir.path(), &out)
            .replace("mi_thresholds = [0.02]", "mi_thresholds = [0.02, 50.0]");
        let config = ExperimentConfig::from_toml_str(&text).unwrap();
        let report = run_experiment(&config, &RunOptions::default()).unwrap();

        // The absurd threshold fails both delay tuples; the workable one
        // still yields 2 validation rows and the test pass.
        assert_eq!(report.rows.len(), 3);
        assert_eq!(report.failures.len(), 2);
        assert!(report.failures.iter().all(|f| f.contains("threshold")));
        assert!(out.join("failures.log").exists());
    }

    /// Corpus where arousal IS the trailing windowed mean of head yaw, so
    /// the explore ranking has a known exact answer.
    fn mean_labeled_corpus(dir: &Path, window_frames: usize) {
        use crate::ingest::{write_annotation_csv, ChannelSpec};
        std::fs::create_dir_all(dir.join("recordings")).unwrap();
        std::fs::create_dir_all(dir.join("annotations")).unwrap();
        for (s, seed) in [("S01", 7u64), ("S02", 8), ("S03", 9), ("S04", 10)] {
            let n = 400;
            let wobble = |k: u64| {
                (0..n)
                    .map(|t| ((t as f64 * 0.013 * (seed + k) as f64).sin()) * 0.2)
                    .collect::<Vec<f64>>()
            };
            let yaw = wobble(1);
            let pitch = wobble(5);
            let mut series = RecordingSeries::new(s, 25);
            series
                .add_channel(ChannelSpec::continuous("head_yaw", "rad"), yaw.clone())
                .unwrap();
            series
                .add_channel(ChannelSpec::continuous("head_pitch", "rad"), pitch)
                .unwrap();
            crate::ingest::write_tracker_csv(&series, &dir.join(format!("recordings/{s}.csv")))
                .unwrap();

            let mean_of_trailing_window = |t: usize| {
                let start = (t + 1).saturating_sub(window_frames);
                let w = &yaw[start..=t];
                w.iter().sum::<f64>() / w.len() as f64
            };
            let arousal = AnnotationTrack {
                subject_id: s.to_string(),
                dimension: Dimension::Arousal,
                values: (0..n).map(mean_of_trailing_window).collect(),
            };
            let valence = AnnotationTrack {
                subject_id: s.to_string(),
                dimension: Dimension::Valence,
                values: vec![0.0; n],
            };
            write_annotation_csv(&arousal, &valence, &dir.join(format!("annotations/{s}.csv")))
                .unwrap();
        }
    }

    #[test]
    fn explore_ranks_the_constructed_mean_feature_first() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        mean_labeled_corpus(dir.path(), 50); // 2 s at 25 fps
        let text = corpus_config(dir.path(), &out).replace(
            "head = [\"head_yaw\", \"pupil_diameter\"]",
            "head = [\"head_yaw\", \"head_pitch\"]",
        );
        let config = ExperimentConfig::from_toml_str(&text).unwrap();
        let report = explore_lld(&config).unwrap();

        // 2 mean features x 1 dimension (arousal only in this config).
        assert_eq!(report.rows.len(), 2);
        let top = &report.rows[0];
        assert_eq!(top.rank, 1);
        assert_eq!(top.feature, "head_yaw.static.mean");
        assert!(
            (top.pearson_r - 1.0).abs() < 1e-9,
            "label is that exact windowed mean, got r = {}",
            top.pearson_r
        );
        assert!(report.rows[1].pearson_r.abs() < 0.5);

        let text = std::fs::read_to_string(&report.path).unwrap();
        assert!(text.starts_with("dimension,rank,feature,pearson_r\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn explore_row_count_is_features_times_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        mean_labeled_corpus(dir.path(), 50);
        let text = corpus_config(dir.path(), &out)
            .replace(
                "head = [\"head_yaw\", \"pupil_diameter\"]",
                "head = [\"head_yaw\", \"head_pitch\", \"delta_head_yaw\"]",
            )
            .replace("dimensions = [\"arousal\"]\n", "");
        let config = ExperimentConfig::from_toml_str(&text).unwrap();
        let report = explore_lld(&config).unwrap();
        // 3 continuous channels (2 raw + 1 delta) x 2 dimensions. The
        // constant valence target correlates with nothing and scores 0.
        assert_eq!(report.rows.len(), 6);
        assert!(report
            .rows
            .iter()
            .filter(|r| r.dimension == Dimension::Valence)
            .all(|r| r.pearson_r == 0.0));
    }
}

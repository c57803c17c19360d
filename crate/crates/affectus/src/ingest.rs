//! Parse tracker CSV and annotation files into validated in-memory series,
//! repair tracker dropouts, and manage subject partitions.
//!
//! A recording is one subject's uniformly sampled multi-channel frame
//! series. Channels are either continuous (positions, angles, diameters,
//! intensities) or binary event flags ({0,1}-valued). Input files are plain
//! UTF-8 CSV with a header row and one row per frame; a [`ColumnMapping`]
//! names which file columns become which channels, so arbitrary tracker
//! exports (or precomputed feature columns) can be ingested without code
//! changes.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while loading, validating, or repairing recordings.
#[derive(Debug, Error)]
pub enum IngestError {
    /// The column mapping references a header name the file does not have.
    #[error("missing column: file has no column named {0:?}")]
    MissingColumn(String),
    /// A data row has a different number of cells than the header.
    #[error("row length mismatch at data row {row}: expected {expected} cells, found {found}")]
    RowLengthMismatch { row: usize, expected: usize, found: usize },
    /// A mapped cell is empty or not parseable as a decimal number.
    #[error("non-numeric cell at data row {row}, column {column:?}: {cell:?}")]
    NonNumericCell { row: usize, column: String, cell: String },
    /// The file has no data rows.
    #[error("empty file: {0} has a header but no data rows (or is empty)")]
    EmptyFile(String),
    /// Every frame of a channel is invalid; repair has nothing to anchor on.
    #[error("all frames invalid in channel {0:?}: no finite, confident value to repair from")]
    AllFramesInvalid(String),
    /// A subject id is not listed in any partition.
    #[error("unknown subject {0:?}: not listed in train, validation, or test")]
    UnknownSubject(String),
    /// A named channel does not exist in the series.
    #[error("unknown channel {0:?}")]
    UnknownChannel(String),
    /// A binary channel holds a value outside {0, 1}.
    #[error("non-binary value in channel {channel:?} at frame {frame}: {value}")]
    NonBinaryValue { channel: String, frame: usize, value: f64 },
    /// An annotation value is outside [-1, +1] or non-finite.
    #[error("annotation value out of range at data row {row}: {value} (must be in [-1, +1])")]
    AnnotationOutOfRange { row: usize, value: f64 },
    /// Partition lists overlap or one of them is empty.
    #[error("invalid partition spec: {0}")]
    PartitionSpecInvalid(String),
    /// Two channels were mapped to the same name.
    #[error("duplicate channel name {0:?}")]
    DuplicateChannel(String),
    /// Channel data pushed into a series does not match its frame count.
    #[error("channel {channel:?} has {got} frames but the series has {expected}")]
    ChannelLengthMismatch { channel: String, got: usize, expected: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Whether a channel carries continuous measurements or a {0,1} event flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Continuous,
    Binary,
}

/// Name, kind, and units of one channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub name: String,
    pub kind: ChannelKind,
    /// Free-text units, e.g. "millimeters", "radians", "logical".
    #[serde(default)]
    pub units: String,
}

impl ChannelSpec {
    pub fn continuous(name: &str, units: &str) -> Self {
        Self { name: name.to_string(), kind: ChannelKind::Continuous, units: units.to_string() }
    }

    pub fn binary(name: &str) -> Self {
        Self { name: name.to_string(), kind: ChannelKind::Binary, units: "logical".to_string() }
    }
}

/// One mapping rule: one or more source columns feed one channel. Multiple
/// sources are averaged per frame, which is how per-eye measurements (left
/// and right pupil, per-eye gaze) reduce to a single channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRule {
    pub sources: Vec<String>,
    pub channel: ChannelSpec,
}

impl ColumnRule {
    pub fn direct(source: &str, channel: ChannelSpec) -> Self {
        Self { sources: vec![source.to_string()], channel }
    }

    pub fn averaged(sources: &[&str], channel: ChannelSpec) -> Self {
        Self { sources: sources.iter().map(|s| s.to_string()).collect(), channel }
    }
}

/// Maps file columns to channels. Unmapped columns are ignored.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub rules: Vec<ColumnRule>,
    /// Optional per-frame tracker confidence column in [0, 1]; frames below
    /// the confidence threshold are treated as dropouts during repair.
    #[serde(default)]
    pub confidence: Option<String>,
}

/// The canonical channel names used throughout the pipeline.
pub mod channel_names {
    pub const HEAD_LOC_X: &str = "head_loc_x";
    pub const HEAD_LOC_Y: &str = "head_loc_y";
    pub const HEAD_LOC_Z: &str = "head_loc_z";
    pub const HEAD_YAW: &str = "head_yaw";
    pub const HEAD_PITCH: &str = "head_pitch";
    pub const HEAD_ROLL: &str = "head_roll";
    pub const PUPIL_DIAMETER: &str = "pupil_diameter";
    pub const GAZE_X: &str = "gaze_x";
    pub const GAZE_Y: &str = "gaze_y";
    pub const GAZE_DISTANCE: &str = "gaze_distance";
    pub const BLINK_LOGICAL: &str = "blink_logical";
    pub const BLINK_INTENSITY: &str = "blink_intensity";
    pub const DIRECT_GAZE: &str = "direct_gaze";
}

/// The canonical channel set: six head pose channels, pupillometry, gaze
/// angles and distance, blink flag and intensity, and the human-annotated
/// direct-gaze flag.
pub fn canonical_channels() -> Vec<ChannelSpec> {
    use channel_names::*;
    vec![
        ChannelSpec::continuous(HEAD_LOC_X, "millimeters"),
        ChannelSpec::continuous(HEAD_LOC_Y, "millimeters"),
        ChannelSpec::continuous(HEAD_LOC_Z, "millimeters"),
        ChannelSpec::continuous(HEAD_YAW, "radians"),
        ChannelSpec::continuous(HEAD_PITCH, "radians"),
        ChannelSpec::continuous(HEAD_ROLL, "radians"),
        ChannelSpec::continuous(PUPIL_DIAMETER, "millimeters"),
        ChannelSpec::continuous(GAZE_X, "radians"),
        ChannelSpec::continuous(GAZE_Y, "radians"),
        ChannelSpec::continuous(GAZE_DISTANCE, "millimeters"),
        ChannelSpec::binary(BLINK_LOGICAL),
        ChannelSpec::continuous(BLINK_INTENSITY, "intensity"),
        ChannelSpec::binary(DIRECT_GAZE),
    ]
}

impl ColumnMapping {
    /// Identity mapping for files whose headers already use the canonical
    /// channel names. Only channels present in the file are required if
    /// built through [`ColumnMapping::canonical_subset`].
    pub fn canonical() -> Self {
        Self {
            rules: canonical_channels()
                .into_iter()
                .map(|spec| ColumnRule { sources: vec![spec.name.clone()], channel: spec })
                .collect(),
            confidence: Some("confidence".to_string()),
        }
    }

    /// Identity mapping restricted to the named canonical channels.
    pub fn canonical_subset(names: &[&str]) -> Self {
        let wanted: HashSet<&str> = names.iter().copied().collect();
        let mut mapping = Self::canonical();
        mapping.rules.retain(|r| wanted.contains(r.channel.name.as_str()));
        mapping
    }

    /// Mapping preset for OpenFace 2.x CSV exports: head pose from
    /// `pose_Tx..pose_Rz` (Rx=pitch, Ry=yaw, Rz=roll), gaze angles from
    /// `gaze_angle_x/y`, blink flag and intensity from `AU45_c`/`AU45_r`,
    /// and per-eye pupil and eye-distance columns averaged into single
    /// channels. Per-frame `confidence` marks dropouts.
    pub fn openface() -> Self {
        use channel_names::*;
        Self {
            rules: vec![
                ColumnRule::direct("pose_Tx", ChannelSpec::continuous(HEAD_LOC_X, "millimeters")),
                ColumnRule::direct("pose_Ty", ChannelSpec::continuous(HEAD_LOC_Y, "millimeters")),
                ColumnRule::direct("pose_Tz", ChannelSpec::continuous(HEAD_LOC_Z, "millimeters")),
                ColumnRule::direct("pose_Ry", ChannelSpec::continuous(HEAD_YAW, "radians")),
                ColumnRule::direct("pose_Rx", ChannelSpec::continuous(HEAD_PITCH, "radians")),
                ColumnRule::direct("pose_Rz", ChannelSpec::continuous(HEAD_ROLL, "radians")),
                ColumnRule::averaged(
                    &["pupil_diameter_left", "pupil_diameter_right"],
                    ChannelSpec::continuous(PUPIL_DIAMETER, "millimeters"),
                ),
                ColumnRule::direct("gaze_angle_x", ChannelSpec::continuous(GAZE_X, "radians")),
                ColumnRule::direct("gaze_angle_y", ChannelSpec::continuous(GAZE_Y, "radians")),
                ColumnRule::averaged(
                    &["eye_distance_left", "eye_distance_right"],
                    ChannelSpec::continuous(GAZE_DISTANCE, "millimeters"),
                ),
                ColumnRule::direct("AU45_c", ChannelSpec::binary(BLINK_LOGICAL)),
                ColumnRule::direct("AU45_r", ChannelSpec::continuous(BLINK_INTENSITY, "intensity")),
            ],
            confidence: Some("confidence".to_string()),
        }
    }
}

/// Uniformly sampled multi-channel frame series for one subject recording.
///
/// All channels have the same length. Values may be non-finite between
/// parsing and [`repair_missing`]; after repair every value is finite and
/// binary channels hold only 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingSeries {
    pub subject_id: String,
    /// Frames per second; 25 for the corpora this pipeline targets.
    pub frame_rate: u32,
    channels: Vec<ChannelSpec>,
    data: Vec<Vec<f64>>,
    /// Optional per-frame tracker confidence in [0, 1].
    pub confidence: Option<Vec<f64>>,
}

impl RecordingSeries {
    pub fn new(subject_id: impl Into<String>, frame_rate: u32) -> Self {
        assert!(frame_rate > 0, "frame_rate must be positive");
        Self {
            subject_id: subject_id.into(),
            frame_rate,
            channels: Vec::new(),
            data: Vec::new(),
            confidence: None,
        }
    }

    /// Number of frames (0 while no channel has been added).
    pub fn n_frames(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn channels(&self) -> &[ChannelSpec] {
        &self.channels
    }

    pub fn channel_spec(&self, name: &str) -> Option<&ChannelSpec> {
        self.channels.iter().find(|c| c.name == name)
    }

    /// Values of a named channel.
    pub fn values(&self, name: &str) -> Result<&[f64], IngestError> {
        self.channels
            .iter()
            .position(|c| c.name == name)
            .map(|i| self.data[i].as_slice())
            .ok_or_else(|| IngestError::UnknownChannel(name.to_string()))
    }

    /// Appends a channel, enforcing unique names and equal lengths.
    pub fn add_channel(&mut self, spec: ChannelSpec, values: Vec<f64>) -> Result<(), IngestError> {
        if self.channel_spec(&spec.name).is_some() {
            return Err(IngestError::DuplicateChannel(spec.name));
        }
        if !self.data.is_empty() && values.len() != self.n_frames() {
            return Err(IngestError::ChannelLengthMismatch {
                channel: spec.name,
                got: values.len(),
                expected: self.n_frames(),
            });
        }
        self.channels.push(spec);
        self.data.push(values);
        Ok(())
    }

    /// Checks that every binary channel holds only 0 or 1.
    pub fn validate_binary(&self) -> Result<(), IngestError> {
        for (spec, values) in self.channels.iter().zip(&self.data) {
            if spec.kind != ChannelKind::Binary {
                continue;
            }
            for (frame, &v) in values.iter().enumerate() {
                if v != 0.0 && v != 1.0 {
                    return Err(IngestError::NonBinaryValue {
                        channel: spec.name.clone(),
                        frame,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }
}

/// An affect dimension with continuous per-frame annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Arousal,
    Valence,
}

impl Dimension {
    pub const ALL: [Dimension; 2] = [Dimension::Arousal, Dimension::Valence];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Arousal => "arousal",
            Dimension::Valence => "valence",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-frame ground truth in [-1, +1] for one affect dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationTrack {
    pub subject_id: String,
    pub dimension: Dimension,
    pub values: Vec<f64>,
}

/// Which partition a subject belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Validation,
    Test,
}

impl Partition {
    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Validation => "validation",
            Partition::Test => "test",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Disjoint train/validation/test subject lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl PartitionSpec {
    /// Checks the three lists are non-empty and pairwise disjoint.
    pub fn validate(&self) -> Result<(), IngestError> {
        for (name, list) in
            [("train", &self.train), ("validation", &self.validation), ("test", &self.test)]
        {
            if list.is_empty() {
                return Err(IngestError::PartitionSpecInvalid(format!(
                    "{name} partition is empty"
                )));
            }
        }
        let mut seen: HashSet<&str> = HashSet::new();
        for id in self.train.iter().chain(&self.validation).chain(&self.test) {
            if !seen.insert(id) {
                return Err(IngestError::PartitionSpecInvalid(format!(
                    "subject {id:?} appears in more than one partition"
                )));
            }
        }
        Ok(())
    }

    /// All subjects in deterministic order: train, then validation, then test.
    pub fn all_subjects(&self) -> Vec<&str> {
        self.train
            .iter()
            .chain(&self.validation)
            .chain(&self.test)
            .map(String::as_str)
            .collect()
    }

    pub fn subjects_of(&self, partition: Partition) -> &[String] {
        match partition {
            Partition::Train => &self.train,
            Partition::Validation => &self.validation,
            Partition::Test => &self.test,
        }
    }
}

/// Returns the partition containing `subject_id`.
pub fn assign_partition(subject_id: &str, spec: &PartitionSpec) -> Result<Partition, IngestError> {
    if spec.train.iter().any(|s| s == subject_id) {
        Ok(Partition::Train)
    } else if spec.validation.iter().any(|s| s == subject_id) {
        Ok(Partition::Validation)
    } else if spec.test.iter().any(|s| s == subject_id) {
        Ok(Partition::Test)
    } else {
        Err(IngestError::UnknownSubject(subject_id.to_string()))
    }
}

fn read_csv_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> =
        reader.headers()?.iter().map(|h| h.to_string()).collect();
    if header.is_empty() {
        return Err(IngestError::EmptyFile(path.display().to_string()));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(IngestError::RowLengthMismatch {
                row: i + 1,
                expected: header.len(),
                found: record.len(),
            });
        }
        rows.push(record.iter().map(|c| c.to_string()).collect());
    }
    if rows.is_empty() {
        return Err(IngestError::EmptyFile(path.display().to_string()));
    }
    Ok((header, rows))
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64, IngestError> {
    cell.parse::<f64>().map_err(|_| IngestError::NonNumericCell {
        row,
        column: column.to_string(),
        cell: cell.to_string(),
    })
}

/// Parses a tracker CSV into a [`RecordingSeries`] with exactly the mapped
/// channels, in mapping order. Unmapped file columns are ignored. Cells
/// spelled `nan`/`NaN` parse as non-finite values and are left for
/// [`repair_missing`]; empty or non-numeric cells are errors.
///
/// Data rows are numbered from 1 (the header is row 0) in error messages.
pub fn parse_tracker_csv(
    path: &Path,
    subject_id: impl Into<String>,
    frame_rate: u32,
    mapping: &ColumnMapping,
) -> Result<RecordingSeries, IngestError> {
    let (header, rows) = read_csv_table(path)?;
    let col_index = |name: &str| -> Result<usize, IngestError> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };

    let mut source_indices: Vec<Vec<usize>> = Vec::with_capacity(mapping.rules.len());
    for rule in &mapping.rules {
        let mut idx = Vec::with_capacity(rule.sources.len());
        for s in &rule.sources {
            idx.push(col_index(s)?);
        }
        source_indices.push(idx);
    }
    let confidence_index = match &mapping.confidence {
        // A declared confidence column is used when present but is not
        // required: many exports simply do not carry one.
        Some(name) => header.iter().position(|h| h == name),
        None => None,
    };

    let mut series = RecordingSeries::new(subject_id, frame_rate);
    for (rule, indices) in mapping.rules.iter().zip(&source_indices) {
        let mut values = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            let mut acc = 0.0;
            for &i in indices {
                acc += parse_cell(&row[i], r + 1, &header[i])?;
            }
            values.push(acc / indices.len() as f64);
        }
        series.add_channel(rule.channel.clone(), values)?;
    }
    if let Some(ci) = confidence_index {
        let mut conf = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            conf.push(parse_cell(&row[ci], r + 1, &header[ci])?);
        }
        series.confidence = Some(conf);
    }
    Ok(series)
}

/// Writes a series back to CSV with canonical headers (plus `confidence`
/// when present). Values are written in shortest round-trip form, so
/// re-parsing reproduces them exactly.
pub fn write_tracker_csv(series: &RecordingSeries, path: &Path) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = series.channels.iter().map(|c| c.name.as_str()).collect();
    if series.confidence.is_some() {
        header.push("confidence");
    }
    writer.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for t in 0..series.n_frames() {
        row.clear();
        for ch in &series.data {
            row.push(format_value(ch[t]));
        }
        if let Some(conf) = &series.confidence {
            row.push(format_value(conf[t]));
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        // Shortest representation that parses back to the same f64.
        let mut buf = ryu_format(v);
        if buf.ends_with(".0") {
            buf.truncate(buf.len() - 2);
        }
        buf
    }
}

fn ryu_format(v: f64) -> String {
    let mut s = format!("{v}");
    if s.parse::<f64>() != Ok(v) {
        s = format!("{v:?}");
    }
    s
}

/// Parses one dimension's annotation track from a CSV with a column named
/// after the dimension (`arousal` or `valence`). Values must be finite and
/// in [-1, +1].
pub fn parse_annotation_csv(
    path: &Path,
    subject_id: impl Into<String>,
    dimension: Dimension,
) -> Result<AnnotationTrack, IngestError> {
    let (header, rows) = read_csv_table(path)?;
    let col = header
        .iter()
        .position(|h| h == dimension.as_str())
        .ok_or_else(|| IngestError::MissingColumn(dimension.as_str().to_string()))?;
    let mut values = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let v = parse_cell(&row[col], r + 1, &header[col])?;
        if !(-1.0..=1.0).contains(&v) {
            return Err(IngestError::AnnotationOutOfRange { row: r + 1, value: v });
        }
        values.push(v);
    }
    Ok(AnnotationTrack { subject_id: subject_id.into(), dimension, values })
}

/// Writes arousal and valence tracks side by side for one subject.
pub fn write_annotation_csv(
    arousal: &AnnotationTrack,
    valence: &AnnotationTrack,
    path: &Path,
) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["arousal", "valence"])?;
    for (a, v) in arousal.values.iter().zip(&valence.values) {
        writer.write_record([format_value(*a), format_value(*v)])?;
    }
    writer.flush()?;
    Ok(())
}

/// Confidence below this marks a frame as a dropout.
pub const CONFIDENCE_THRESHOLD: f64 = 0.5;

/// Default maximum repairable gap in seconds (blink-scale dropouts).
pub const DEFAULT_MAX_GAP_SECONDS: f64 = 0.5;

/// Repairs tracker dropouts. A frame is invalid when its value is
/// non-finite or the tracker confidence is below 0.5. Invalid runs no
/// longer than `max_gap_seconds` are linearly interpolated on continuous
/// channels and held from the previous value on binary channels; longer
/// runs (and runs with no following valid frame) are held from the last
/// valid value; leading invalid frames are back-filled from the first valid
/// value. Validity is judged against the original data, so repairing twice
/// gives the same result as repairing once.
// The negated confidence comparison marks NaN confidence as invalid.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn repair_missing(
    series: &RecordingSeries,
    max_gap_seconds: f64,
) -> Result<RecordingSeries, IngestError> {
    assert!(max_gap_seconds >= 0.0, "max_gap_seconds must be non-negative");
    let n = series.n_frames();
    let max_gap_frames = (max_gap_seconds * series.frame_rate as f64).floor() as usize;
    let low_confidence: Vec<bool> = match &series.confidence {
        Some(conf) => conf.iter().map(|&c| !(c >= CONFIDENCE_THRESHOLD)).collect(),
        None => vec![false; n],
    };

    let mut repaired = series.clone();
    for (spec, values) in repaired.channels.iter().zip(repaired.data.iter_mut()) {
        let invalid: Vec<bool> = values
            .iter()
            .zip(&low_confidence)
            .map(|(v, &low)| !v.is_finite() || low)
            .collect();
        if invalid.iter().all(|&b| b) {
            return Err(IngestError::AllFramesInvalid(spec.name.clone()));
        }
        repair_channel(values, &invalid, spec.kind, max_gap_frames);
    }
    repaired.validate_binary()?;
    Ok(repaired)
}

fn repair_channel(values: &mut [f64], invalid: &[bool], kind: ChannelKind, max_gap: usize) {
    let n = values.len();
    let mut t = 0;
    while t < n {
        if !invalid[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < n && invalid[t] {
            t += 1;
        }
        let end = t; // run is [start, end)
        let prev = start.checked_sub(1);
        let next = if end < n { Some(end) } else { None };
        match (prev, next) {
            (None, Some(next)) => {
                // Leading run: back-fill from the first valid value.
                let fill = values[next];
                values[..end].fill(fill);
            }
            (Some(prev), next) => {
                let run_len = end - start;
                let interpolate = kind == ChannelKind::Continuous
                    && run_len <= max_gap
                    && next.is_some();
                if interpolate {
                    let next = next.unwrap();
                    let (a, b) = (values[prev], values[next]);
                    let span = (next - prev) as f64;
                    for (k, v) in values[start..end].iter_mut().enumerate() {
                        let w = (start + k - prev) as f64 / span;
                        *v = a + (b - a) * w;
                    }
                } else {
                    // Hold from the last valid value (binary channels
                    // always hold; long or tail runs hold too).
                    let fill = values[prev];
                    values[start..end].fill(fill);
                }
            }
            (None, None) => unreachable!("all-invalid channels are rejected before repair"),
        }
    }
}

//! Sliding-window high-level features: statistical functionals over
//! static and lagged-difference views of every channel, plus wavelet band
//! features for continuous channels.
//!
//! Windows advance one frame at a time and rows are end-aligned: the row
//! for window `r` covers frames `[r, r + W)` and is indexed by its final
//! frame, which is what makes pairing rows with (possibly time-shifted)
//! per-frame labels straightforward.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

use crate::ingest::{ChannelKind, RecordingSeries};
use crate::wavelet::{self, WaveletConfig};

/// Errors from windowed feature extraction.
#[derive(Debug, Error)]
pub enum FunctionalsError {
    /// Window has fewer samples than a functional needs.
    #[error("window too short: {got} samples, need at least {need}")]
    WindowTooShort { got: usize, need: usize },
    /// A recording is shorter than one window.
    #[error("series too short: {n_frames} frames < window of {window_frames} frames")]
    SeriesTooShort { n_frames: usize, window_frames: usize },
    /// A supposedly binary window holds a value outside {0, 1}.
    #[error("non-binary value at window offset {index}: {value}")]
    NonBinaryValue { index: usize, value: f64 },
    /// Window length in seconds does not land on a whole number of frames.
    #[error("window of {window_seconds} s is not a whole number of frames at {frame_rate} fps")]
    WindowNotFrameAligned { window_seconds: f64, frame_rate: u32 },
    /// A window sample is NaN or infinite (repair must run first).
    #[error("non-finite input at window offset {index}")]
    NonFiniteInput { index: usize },
    /// A computed feature is NaN or infinite.
    #[error("non-finite feature {column:?} at row {row}")]
    NonFiniteFeature { column: String, row: usize },
    #[error(transparent)]
    Wavelet(#[from] wavelet::WaveletError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed feature csv: {0}")]
    MalformedFeatureCsv(String),
}

/// Window geometry: length in seconds at a frame rate, advancing one frame
/// per row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub window_seconds: f64,
    pub frame_rate: u32,
}

/// Windows always advance by one frame.
pub const HOP_FRAMES: usize = 1;

impl WindowPlan {
    pub fn new(window_seconds: f64, frame_rate: u32) -> Self {
        Self { window_seconds, frame_rate }
    }

    /// Window length in frames; errors unless `window_seconds * frame_rate`
    /// is a whole number of at least 2 frames.
    pub fn window_frames(&self) -> Result<usize, FunctionalsError> {
        let exact = self.window_seconds * self.frame_rate as f64;
        let rounded = exact.round();
        if (exact - rounded).abs() > 1e-6 || !rounded.is_finite() {
            return Err(FunctionalsError::WindowNotFrameAligned {
                window_seconds: self.window_seconds,
                frame_rate: self.frame_rate,
            });
        }
        let frames = rounded as usize;
        if frames < 2 {
            return Err(FunctionalsError::WindowTooShort { got: frames, need: 2 });
        }
        Ok(frames)
    }

    /// Feature rows produced from an `n_frames`-long recording.
    pub fn n_rows(&self, n_frames: usize) -> Result<usize, FunctionalsError> {
        let w = self.window_frames()?;
        if n_frames < w {
            return Err(FunctionalsError::SeriesTooShort { n_frames, window_frames: w });
        }
        Ok(n_frames - w + 1)
    }
}

/// Names of the continuous functionals, in output order.
pub const CONTINUOUS_FUNCTIONALS: [&str; 16] = [
    "min",
    "max",
    "mean",
    "median",
    "quartile1",
    "quartile3",
    "skewness",
    "kurtosis",
    "std",
    "iqr",
    "iqr_lower",
    "iqr_upper",
    "linreg_slope",
    "linreg_intercept",
    "rms",
    "zero_crossing_rate",
];

/// Names of the binary functionals, in output order.
pub const BINARY_FUNCTIONALS: [&str; 5] =
    ["ratio", "time_min", "time_mean", "time_max", "time_total"];

/// Linear interpolation between order statistics (the widespread "type 7"
/// quantile rule). `sorted` must be ascending.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= n {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// The 16 statistical functionals of one continuous window, in the order
/// of [`CONTINUOUS_FUNCTIONALS`].
///
/// Conventions: population variance; Fisher-Pearson skewness `g1` and
/// excess kurtosis `g2`, both 0 for zero-variance windows; quartiles by
/// linear interpolation; regression slope in units per second against time
/// from the window start; zero crossings counted on mean-centered samples
/// with strict sign changes (exact zeros never count), divided by `W - 1`.
pub fn continuous_functionals(
    window: &[f64],
    frame_rate: u32,
) -> Result<[f64; 16], FunctionalsError> {
    let w = window.len();
    if w < 2 {
        return Err(FunctionalsError::WindowTooShort { got: w, need: 2 });
    }
    if let Some(index) = window.iter().position(|v| !v.is_finite()) {
        return Err(FunctionalsError::NonFiniteInput { index });
    }

    let mut sorted = window.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    let min = sorted[0];
    let max = sorted[w - 1];
    let median = quantile_sorted(&sorted, 0.5);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);

    let n = w as f64;
    let mean = window.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4, mut sum_sq) = (0.0, 0.0, 0.0, 0.0);
    for &v in window {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        sum_sq += v * v;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let std = m2.sqrt();
    let (skewness, kurtosis) = if m2 == 0.0 {
        (0.0, 0.0)
    } else {
        (m3 / (m2 * std), m4 / (m2 * m2) - 3.0)
    };

    // Least squares of value against time t_i = i / frame_rate seconds.
    // mean(t) and var(t) have closed forms for the uniform grid.
    let fps = frame_rate as f64;
    let mean_t = (n - 1.0) / (2.0 * fps);
    let var_t = (n * n - 1.0) / 12.0 / (fps * fps);
    let mut cov_tx = 0.0;
    for (i, &v) in window.iter().enumerate() {
        cov_tx += (i as f64 / fps - mean_t) * (v - mean);
    }
    cov_tx /= n;
    let slope = cov_tx / var_t;
    let intercept = mean - slope * mean_t;

    let rms = (sum_sq / n).sqrt();

    let mut crossings = 0usize;
    for i in 1..w {
        if (window[i - 1] - mean) * (window[i] - mean) < 0.0 {
            crossings += 1;
        }
    }
    let zcr = crossings as f64 / (n - 1.0);

    Ok([
        min,
        max,
        mean,
        median,
        q1,
        q3,
        skewness,
        kurtosis,
        std,
        q3 - q1,
        median - q1,
        q3 - median,
        slope,
        intercept,
        rms,
        zcr,
    ])
}

/// The 5 run-length functionals of one binary window, in the order of
/// [`BINARY_FUNCTIONALS`]: the ratio of ones, and over maximal runs of
/// consecutive ones, the minimum/mean/maximum/total run duration in
/// seconds (all zero when the window has no ones).
pub fn binary_functionals(window: &[f64], frame_rate: u32) -> Result<[f64; 5], FunctionalsError> {
    let w = window.len();
    if w < 2 {
        return Err(FunctionalsError::WindowTooShort { got: w, need: 2 });
    }
    let mut ones = 0usize;
    let mut runs: Vec<usize> = Vec::new();
    let mut current = 0usize;
    for (index, &v) in window.iter().enumerate() {
        if v == 1.0 {
            ones += 1;
            current += 1;
        } else if v == 0.0 {
            if current > 0 {
                runs.push(current);
                current = 0;
            }
        } else {
            return Err(FunctionalsError::NonBinaryValue { index, value: v });
        }
    }
    if current > 0 {
        runs.push(current);
    }

    let ratio = ones as f64 / w as f64;
    let fps = frame_rate as f64;
    let (time_min, time_mean, time_max, time_total) = if runs.is_empty() {
        (0.0, 0.0, 0.0, 0.0)
    } else {
        let total: usize = runs.iter().sum();
        (
            *runs.iter().min().expect("non-empty") as f64 / fps,
            total as f64 / runs.len() as f64 / fps,
            *runs.iter().max().expect("non-empty") as f64 / fps,
            total as f64 / fps,
        )
    };
    Ok([ratio, time_min, time_mean, time_max, time_total])
}

/// Which view of the channel a feature column was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    /// The raw window samples.
    Static,
    /// First-order lagged differences within the window (length `W - 1`).
    Dynamic,
    /// Wavelet band summaries of the raw window samples.
    Wavelet,
}

impl View {
    pub fn as_str(self) -> &'static str {
        match self {
            View::Static => "static",
            View::Dynamic => "dynamic",
            View::Wavelet => "wavelet",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where one feature column came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnProvenance {
    pub channel: String,
    pub view: View,
    pub functional: String,
}

impl ColumnProvenance {
    /// Canonical column name `<channel>.<view>.<functional>`.
    pub fn name(&self) -> String {
        format!("{}.{}.{}", self.channel, self.view, self.functional)
    }
}

/// Windowed feature rows for one recording: one row per window end-frame,
/// one named column per (channel, view, functional).
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedFeatureMatrix {
    pub plan: WindowPlan,
    pub columns: Vec<ColumnProvenance>,
    /// Row-major values, `n_rows x columns.len()`.
    pub data: Array2<f64>,
}

impl WindowedFeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(ColumnProvenance::name).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name() == name)
    }

    /// The end frame (0-based, inclusive) of feature row `row`.
    pub fn end_frame(&self, row: usize) -> Result<usize, FunctionalsError> {
        Ok(row + self.plan.window_frames()? - 1)
    }

    /// Keeps only the columns at `indices`, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> WindowedFeatureMatrix {
        let columns = indices.iter().map(|&i| self.columns[i].clone()).collect();
        let data = self.data.select(ndarray::Axis(1), indices);
        WindowedFeatureMatrix { plan: self.plan, columns, data }
    }

    /// Writes the matrix as CSV with a three-line provenance block
    /// (`#channel`, `#view`, `#functional`) above the column-name header.
    pub fn write_csv(&self, path: &Path) -> Result<(), FunctionalsError> {
        let mut file = std::fs::File::create(path)?;
        let join = |f: &dyn Fn(&ColumnProvenance) -> String| -> String {
            self.columns.iter().map(f).collect::<Vec<_>>().join(",")
        };
        writeln!(file, "#channel,{}", join(&|c| c.channel.clone()))?;
        writeln!(file, "#view,{}", join(&|c| c.view.to_string()))?;
        writeln!(file, "#functional,{}", join(&|c| c.functional.clone()))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(self.column_names())?;
        for row in self.data.rows() {
            writer.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads a matrix written by [`WindowedFeatureMatrix::write_csv`].
    pub fn read_csv(path: &Path, plan: WindowPlan) -> Result<Self, FunctionalsError> {
        let file = std::fs::File::open(path)?;
        let mut lines = std::io::BufReader::new(file).lines();
        let mut prov: Vec<Vec<String>> = Vec::new();
        let mut header_line = None;
        for line in lines.by_ref() {
            let line = line?;
            if let Some(rest) = line.strip_prefix('#') {
                prov.push(rest.split(',').map(str::to_string).collect());
            } else {
                header_line = Some(line);
                break;
            }
        }
        let header_line = header_line
            .ok_or_else(|| FunctionalsError::MalformedFeatureCsv("no header row".into()))?;
        let [channels, views, functionals] = prov.as_slice() else {
            return Err(FunctionalsError::MalformedFeatureCsv(format!(
                "expected 3 provenance lines, found {}",
                prov.len()
            )));
        };
        let n_cols = header_line.split(',').count();
        if channels.len() != n_cols + 1 || views.len() != n_cols + 1 || functionals.len() != n_cols + 1
        {
            return Err(FunctionalsError::MalformedFeatureCsv(
                "provenance width disagrees with header".into(),
            ));
        }
        let columns: Vec<ColumnProvenance> = (0..n_cols)
            .map(|i| -> Result<ColumnProvenance, FunctionalsError> {
                let view = match views[i + 1].as_str() {
                    "static" => View::Static,
                    "dynamic" => View::Dynamic,
                    "wavelet" => View::Wavelet,
                    other => {
                        return Err(FunctionalsError::MalformedFeatureCsv(format!(
                            "unknown view {other:?}"
                        )))
                    }
                };
                Ok(ColumnProvenance {
                    channel: channels[i + 1].clone(),
                    view,
                    functional: functionals[i + 1].clone(),
                })
            })
            .collect::<Result<_, _>>()?;

        let mut values: Vec<f64> = Vec::new();
        let mut n_rows = 0usize;
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != n_cols {
                return Err(FunctionalsError::MalformedFeatureCsv(format!(
                    "row {} has {} cells, expected {n_cols}",
                    n_rows + 1,
                    cells.len()
                )));
            }
            for cell in cells {
                values.push(cell.parse::<f64>().map_err(|_| {
                    FunctionalsError::MalformedFeatureCsv(format!("bad number {cell:?}"))
                })?);
            }
            n_rows += 1;
        }
        let data = Array2::from_shape_vec((n_rows, n_cols), values)
            .expect("row-major shape matches counted rows");
        Ok(Self { plan, columns, data })
    }
}

/// Per-channel feature layout for one window position.
struct ChannelPlan<'a> {
    values: &'a [f64],
    kind: ChannelKind,
}

/// Sliding-window feature extraction over every channel of a series.
///
/// Continuous channels get the 16 functionals on the static view and on
/// the lagged-difference (dynamic) view, plus wavelet band features of the
/// static view when `wavelet_cfg` is given. Binary channels get the 5
/// run-length functionals on the static view only.
pub fn extract_features(
    series: &RecordingSeries,
    plan: &WindowPlan,
    wavelet_cfg: Option<&WaveletConfig>,
) -> Result<WindowedFeatureMatrix, FunctionalsError> {
    let w = plan.window_frames()?;
    let n_rows = plan.n_rows(series.n_frames())?;

    let mut columns: Vec<ColumnProvenance> = Vec::new();
    let mut channel_plans: Vec<ChannelPlan<'_>> = Vec::new();
    let wavelet_levels = match wavelet_cfg {
        Some(cfg) => {
            let levels = wavelet::max_levels(w, cfg.filter_length())?;
            if levels == 0 {
                return Err(wavelet::WaveletError::TooManyLevels {
                    requested: 1,
                    window_frames: w,
                    max: 0,
                }
                .into());
            }
            levels
        }
        None => 0,
    };
    let wavelet_names =
        if wavelet_cfg.is_some() { wavelet::band_feature_names(wavelet_levels) } else { Vec::new() };

    for spec in series.channels() {
        let values = series.values(&spec.name).expect("channel listed by the series");
        channel_plans.push(ChannelPlan { values, kind: spec.kind });
        match spec.kind {
            ChannelKind::Continuous => {
                for functional in CONTINUOUS_FUNCTIONALS {
                    columns.push(ColumnProvenance {
                        channel: spec.name.clone(),
                        view: View::Static,
                        functional: functional.to_string(),
                    });
                }
                for functional in CONTINUOUS_FUNCTIONALS {
                    columns.push(ColumnProvenance {
                        channel: spec.name.clone(),
                        view: View::Dynamic,
                        functional: functional.to_string(),
                    });
                }
                for name in &wavelet_names {
                    columns.push(ColumnProvenance {
                        channel: spec.name.clone(),
                        view: View::Wavelet,
                        functional: name.clone(),
                    });
                }
            }
            ChannelKind::Binary => {
                for functional in BINARY_FUNCTIONALS {
                    columns.push(ColumnProvenance {
                        channel: spec.name.clone(),
                        view: View::Static,
                        functional: functional.to_string(),
                    });
                }
            }
        }
    }

    let n_cols = columns.len();
    let frame_rate = plan.frame_rate;
    let mut data = Array2::<f64>::zeros((n_rows, n_cols));
    let slice = data.as_slice_mut().expect("freshly allocated row-major array");
    slice
        .par_chunks_mut(n_cols)
        .enumerate()
        .try_for_each(|(r, row)| -> Result<(), FunctionalsError> {
            let mut col = 0usize;
            for ch in &channel_plans {
                let window = &ch.values[r..r + w];
                match ch.kind {
                    ChannelKind::Continuous => {
                        let stat = continuous_functionals(window, frame_rate)?;
                        row[col..col + 16].copy_from_slice(&stat);
                        col += 16;
                        let diffs: Vec<f64> =
                            window.windows(2).map(|p| p[1] - p[0]).collect();
                        let dynamic = continuous_functionals(&diffs, frame_rate)?;
                        row[col..col + 16].copy_from_slice(&dynamic);
                        col += 16;
                        if let Some(cfg) = wavelet_cfg {
                            let decomp = wavelet::dwt(window, wavelet_levels, cfg)?;
                            let bands = wavelet::band_features(&decomp);
                            row[col..col + bands.len()].copy_from_slice(&bands);
                            col += bands.len();
                        }
                    }
                    ChannelKind::Binary => {
                        let stat = binary_functionals(window, frame_rate)?;
                        row[col..col + 5].copy_from_slice(&stat);
                        col += 5;
                    }
                }
            }
            debug_assert_eq!(col, n_cols);
            Ok(())
        })?;

    if let Some((index, _)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        let (row, col) = (index / n_cols, index % n_cols);
        return Err(FunctionalsError::NonFiniteFeature { column: columns[col].name(), row });
    }
    Ok(WindowedFeatureMatrix { plan: *plan, columns, data })
}

//! Annotator-lag compensation and train-statistics standardization.
//!
//! Continuous annotations trail the behavior they describe: raters need
//! time to perceive and move the dial. Pairing the feature row that ends
//! at frame `t` with the label at frame `t + k` (k = delay x frame rate)
//! moves the ground truth back in time by the candidate delay; the last
//! `k` rows, whose labels would lie beyond the recording, are dropped.
//!
//! Standardization is strictly train-fitted: per-column mean and standard
//! deviation (population) come from the training partition only and are
//! applied unchanged to validation and test data. The target is
//! standardized with its own mean/std and model outputs are mapped back to
//! label units before any evaluation.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functionals::WindowedFeatureMatrix;
use crate::ingest::AnnotationTrack;

/// Errors from shifting and standardization.
#[derive(Debug, Error, PartialEq)]
pub enum AlignmentError {
    /// A delay does not land on a whole number of frames.
    #[error("delay not frame aligned: {delay} s is {frames} frames at {frame_rate} fps")]
    DelayNotFrameAligned { delay: f64, frame_rate: u32, frames: f64 },
    /// Not enough rows to fit statistics (or to survive a shift).
    #[error("too few rows: {got}, need at least {need}")]
    TooFewRows { got: usize, need: usize },
    /// Applying a standardizer to data of the wrong width.
    #[error("column count mismatch: standardizer has {expected} columns, data has {got}")]
    ColumnCountMismatch { expected: usize, got: usize },
    /// Label track does not match the recording the features came from.
    #[error("label track has {labels} frames but the feature rows imply {expected}")]
    LabelLengthMismatch { labels: usize, expected: usize },
    /// Invalid delay grid.
    #[error("invalid shift grid: {0}")]
    InvalidGrid(String),
}

/// Candidate annotation delays in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftGrid {
    pub delays: Vec<f64>,
}

impl Default for ShiftGrid {
    /// 0.0 to 4.4 seconds in steps of 0.2.
    fn default() -> Self {
        Self { delays: (0..=22).map(|i| i as f64 * 0.2).collect() }
    }
}

impl ShiftGrid {
    /// Checks delays are non-negative, strictly increasing, and
    /// frame-aligned at `frame_rate`.
    pub fn validate(&self, frame_rate: u32) -> Result<(), AlignmentError> {
        if self.delays.is_empty() {
            return Err(AlignmentError::InvalidGrid("no delays".into()));
        }
        let mut prev = f64::NEG_INFINITY;
        for &d in &self.delays {
            if d < 0.0 {
                return Err(AlignmentError::InvalidGrid(format!("negative delay {d}")));
            }
            if d <= prev {
                return Err(AlignmentError::InvalidGrid(format!(
                    "delays not strictly increasing at {d}"
                )));
            }
            delay_to_frames(d, frame_rate)?;
            prev = d;
        }
        Ok(())
    }
}

/// Converts a delay in seconds to a whole number of frames, within 1e-6.
pub fn delay_to_frames(delay: f64, frame_rate: u32) -> Result<usize, AlignmentError> {
    let frames = delay * frame_rate as f64;
    let rounded = frames.round();
    if (frames - rounded).abs() > 1e-6 || rounded < 0.0 {
        return Err(AlignmentError::DelayNotFrameAligned { delay, frame_rate, frames });
    }
    Ok(rounded as usize)
}

/// Pairs feature rows with backward-shifted labels: row ending at frame `t`
/// gets `labels[t + k]`, and the last `k` rows are dropped. Output lengths
/// are equal; delay 0 is the identity pairing.
pub fn shift_labels(
    features: &WindowedFeatureMatrix,
    labels: &AnnotationTrack,
    delay: f64,
) -> Result<(WindowedFeatureMatrix, Vec<f64>), AlignmentError> {
    let k = delay_to_frames(delay, features.plan.frame_rate)?;
    let w = features
        .plan
        .window_frames()
        .map_err(|_| AlignmentError::InvalidGrid("invalid window plan".into()))?;
    let rows = features.n_rows();
    let expected = rows + w - 1;
    if labels.values.len() != expected {
        return Err(AlignmentError::LabelLengthMismatch {
            labels: labels.values.len(),
            expected,
        });
    }
    let (row_range, label_range) = shifted_ranges(rows, w, k)?;
    let data = features.data.slice(ndarray::s![row_range.clone(), ..]).to_owned();
    let shifted = WindowedFeatureMatrix {
        plan: features.plan,
        columns: features.columns.clone(),
        data,
    };
    Ok((shifted, labels.values[label_range].to_vec()))
}

/// The row range kept and the label range paired with it, for `rows`
/// feature rows of window length `w` shifted by `k` frames. Both ranges
/// have length `rows - k`.
pub fn shifted_ranges(
    rows: usize,
    window_frames: usize,
    k: usize,
) -> Result<(std::ops::Range<usize>, std::ops::Range<usize>), AlignmentError> {
    if k >= rows {
        return Err(AlignmentError::TooFewRows { got: rows, need: k + 1 });
    }
    let kept = rows - k;
    let label_start = window_frames - 1 + k;
    Ok((0..kept, label_start..label_start + kept))
}

/// Threshold below which a column's spread counts as zero.
pub const DEGENERATE_STD: f64 = 1e-12;

/// Train-partition standardization parameters for features and target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub feature_mean: Vec<f64>,
    /// Population standard deviation per column; degenerate columns
    /// (std < 1e-12) transform to 0 rather than dividing by noise.
    pub feature_std: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

impl Standardizer {
    /// Fits per-column feature statistics and target statistics over the
    /// concatenation of all given training sequences (population moments,
    /// two passes for accuracy).
    pub fn fit(
        feature_sets: &[ArrayView2<'_, f64>],
        label_sets: &[&[f64]],
    ) -> Result<Self, AlignmentError> {
        assert_eq!(feature_sets.len(), label_sets.len(), "one label set per feature set");
        let n_cols = feature_sets.first().map_or(0, |m| m.ncols());
        let total_rows: usize = feature_sets.iter().map(|m| m.nrows()).sum();
        if total_rows < 2 {
            return Err(AlignmentError::TooFewRows { got: total_rows, need: 2 });
        }
        for m in feature_sets {
            if m.ncols() != n_cols {
                return Err(AlignmentError::ColumnCountMismatch {
                    expected: n_cols,
                    got: m.ncols(),
                });
            }
        }

        let n = total_rows as f64;
        let mut feature_mean = vec![0.0; n_cols];
        for m in feature_sets {
            for row in m.rows() {
                for (acc, &v) in feature_mean.iter_mut().zip(row) {
                    *acc += v;
                }
            }
        }
        for acc in &mut feature_mean {
            *acc /= n;
        }
        let mut feature_var = vec![0.0; n_cols];
        for m in feature_sets {
            for row in m.rows() {
                for ((acc, &mu), &v) in feature_var.iter_mut().zip(&feature_mean).zip(row) {
                    let d = v - mu;
                    *acc += d * d;
                }
            }
        }
        let feature_std: Vec<f64> = feature_var.iter().map(|&v| (v / n).sqrt()).collect();

        let label_n: usize = label_sets.iter().map(|l| l.len()).sum();
        let ln = label_n as f64;
        let target_mean =
            label_sets.iter().flat_map(|l| l.iter()).sum::<f64>() / ln;
        let target_var = label_sets
            .iter()
            .flat_map(|l| l.iter())
            .map(|&v| (v - target_mean) * (v - target_mean))
            .sum::<f64>()
            / ln;
        Ok(Self { feature_mean, feature_std, target_mean, target_std: target_var.sqrt() })
    }

    pub fn n_features(&self) -> usize {
        self.feature_mean.len()
    }

    /// Indices of degenerate (near-constant on train) columns.
    pub fn degenerate_columns(&self) -> Vec<usize> {
        self.feature_std
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < DEGENERATE_STD)
            .map(|(i, _)| i)
            .collect()
    }

    /// `z = (x - mean) / std` per column; degenerate columns map to 0.
    pub fn apply_features(&self, data: &ArrayView2<'_, f64>) -> Result<Array2<f64>, AlignmentError> {
        if data.ncols() != self.n_features() {
            return Err(AlignmentError::ColumnCountMismatch {
                expected: self.n_features(),
                got: data.ncols(),
            });
        }
        let mut out = data.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                let std = self.feature_std[j];
                *v = if std < DEGENERATE_STD { 0.0 } else { (*v - self.feature_mean[j]) / std };
            }
        }
        Ok(out)
    }

    /// Standardizes target values with the training target statistics.
    pub fn apply_target(&self, labels: &[f64]) -> Vec<f64> {
        if self.target_std < DEGENERATE_STD {
            return vec![0.0; labels.len()];
        }
        labels.iter().map(|&v| (v - self.target_mean) / self.target_std).collect()
    }

    /// Maps standardized model outputs back to label units.
    pub fn invert_target(&self, z: &[f64]) -> Vec<f64> {
        if self.target_std < DEGENERATE_STD {
            return vec![self.target_mean; z.len()];
        }
        z.iter().map(|&v| v * self.target_std + self.target_mean).collect()
    }
}

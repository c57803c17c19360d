//! Mutual-information feature filter.
//!
//! Windowed functionals produce hundreds of columns per channel set; many
//! carry no information about the affect target. Each column's mutual
//! information with the (already shifted) target is estimated in nats and
//! columns below a threshold are dropped before training.
//!
//! Continuous columns use the Kraskov k-nearest-neighbor estimator (k = 3,
//! Chebyshev metric on the joint space). Columns whose values are exactly
//! 0/1 use a discrete–continuous variant that finds the k nearest
//! neighbors within each class and counts how many points of the full
//! sample fall inside that radius. Both clamp the estimate at zero.
//!
//! Sliding windows with one-frame hop make adjacent rows nearly identical,
//! so exact ties in neighbor distances are common; a deterministic jitter
//! of 1e-10 x column-std, seeded per column from the experiment seed,
//! breaks them without moving the estimate.

use ndarray::ArrayView2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

use crate::functionals::WindowedFeatureMatrix;
use crate::stream_seed;

/// Errors from mutual-information estimation and filtering.
#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("length mismatch: feature has {feature} samples, target has {target}")]
    LengthMismatch { feature: usize, target: usize },
    #[error("too few samples: {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("every feature fell below the MI threshold {threshold}")]
    AllFeaturesDropped { threshold: f64 },
    #[error("MI threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Minimum paired samples accepted by the estimator.
pub const MIN_SAMPLES: usize = 50;
/// Neighbor count of the kNN estimators.
pub const DEFAULT_NEIGHBORS: usize = 3;
/// Row budget for filtering; O(n^2) neighbor searches stay tractable.
pub const DEFAULT_MAX_SAMPLES: usize = 2500;
/// Tie-breaking jitter, as a fraction of the column's standard deviation.
pub const JITTER_SCALE: f64 = 1e-10;

/// Random-stream namespace for jitter; combined with the column index.
const JITTER_STREAM_BASE: u64 = 2 << 32;
/// Jitter stream for the target column.
const TARGET_JITTER_STREAM: u64 = JITTER_STREAM_BASE | u32::MAX as u64;

/// Estimator settings. `max_samples` decimates rows evenly before
/// estimation (None keeps everything).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiConfig {
    pub neighbors: usize,
    pub seed: u64,
    pub max_samples: Option<usize>,
}

impl Default for MiConfig {
    fn default() -> Self {
        Self {
            neighbors: DEFAULT_NEIGHBORS,
            seed: crate::model::DEFAULT_SEED,
            max_samples: Some(DEFAULT_MAX_SAMPLES),
        }
    }
}

/// Per-column mutual information and the kept/dropped split at a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiReport {
    pub threshold: f64,
    /// All column names, in matrix order.
    pub feature_names: Vec<String>,
    /// MI estimate in nats for each column, same order as `feature_names`.
    pub mi_nats: Vec<f64>,
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
}

impl MiReport {
    /// Builds a report from per-column scores already estimated elsewhere,
    /// partitioning names into kept and dropped at `threshold`.
    pub fn from_scores(names: Vec<String>, mi: Vec<f64>, threshold: f64) -> Self {
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for (name, &v) in names.iter().zip(&mi) {
            if v >= threshold {
                kept.push(name.clone());
            } else {
                dropped.push(name.clone());
            }
        }
        Self { threshold, feature_names: names, mi_nats: mi, kept, dropped }
    }

    /// Indices of kept columns, in matrix order.
    pub fn kept_indices(&self) -> Vec<usize> {
        self.mi_nats
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= self.threshold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Writes `feature,mi_nats,kept` rows, ranked by descending MI.
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<(), SelectionError> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(["feature", "mi_nats", "kept"])?;
        let mut order: Vec<usize> = (0..self.feature_names.len()).collect();
        order.sort_by(|&a, &b| {
            self.mi_nats[b]
                .partial_cmp(&self.mi_nats[a])
                .unwrap()
                .then_with(|| self.feature_names[a].cmp(&self.feature_names[b]))
        });
        for i in order {
            writer.write_record([
                self.feature_names[i].as_str(),
                &format!("{:?}", self.mi_nats[i]),
                if self.mi_nats[i] >= self.threshold { "true" } else { "false" },
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Evenly spread `max` indices over `0..len` (all of them if `len <= max`).
pub fn decimate_indices(len: usize, max: usize) -> Vec<usize> {
    if len <= max {
        (0..len).collect()
    } else {
        (0..max).map(|i| i * len / max).collect()
    }
}

/// Digamma function for positive arguments: recurrence below 10, then the
/// asymptotic series in 1/x^2.
pub fn digamma(x: f64) -> f64 {
    assert!(x > 0.0, "digamma needs a positive argument, got {x}");
    let mut shift = 0.0;
    let mut x = x;
    while x < 10.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    shift + x.ln() - 0.5 * inv - series
}

fn column_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

fn is_binary(values: &[f64]) -> bool {
    values.iter().all(|&v| v == 0.0 || v == 1.0)
}

/// Adds zero-mean Gaussian jitter of `JITTER_SCALE x std` to break exact
/// neighbor-distance ties; deterministic per (seed, stream).
fn jittered(values: &[f64], std: f64, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, stream));
    values
        .iter()
        .map(|&v| {
            let noise: f64 = rng.sample(StandardNormal);
            v + JITTER_SCALE * std * noise
        })
        .collect()
}

/// Count of sorted values strictly inside `(center - eps, center + eps)`.
fn count_open(sorted: &[f64], center: f64, eps: f64) -> usize {
    let hi = sorted.partition_point(|&v| v < center + eps);
    let lo = sorted.partition_point(|&v| v <= center - eps);
    hi - lo
}

/// Chebyshev distance from point `i` to its k-th nearest joint neighbor.
fn kth_joint_distance(x: &[f64], y: &[f64], i: usize, best: &mut [f64]) -> f64 {
    best.fill(f64::INFINITY);
    let k = best.len();
    let (xi, yi) = (x[i], y[i]);
    for j in 0..x.len() {
        if j == i {
            continue;
        }
        let d = (x[j] - xi).abs().max((y[j] - yi).abs());
        if d < best[k - 1] {
            let mut p = k - 1;
            while p > 0 && best[p - 1] > d {
                best[p] = best[p - 1];
                p -= 1;
            }
            best[p] = d;
        }
    }
    best[k - 1]
}

/// Kraskov estimator on jittered (tie-free) continuous pairs.
fn ksg_mi(x: &[f64], y: &[f64], k: usize) -> f64 {
    let n = x.len();
    let mut xs = x.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let mut ys = y.to_vec();
    ys.sort_unstable_by(f64::total_cmp);
    let mut best = vec![f64::INFINITY; k];
    let mut acc = 0.0;
    for i in 0..n {
        let eps = kth_joint_distance(x, y, i, &mut best);
        // Counts include the point itself, which is exactly psi(n_x + 1).
        acc += digamma(count_open(&xs, x[i], eps) as f64)
            + digamma(count_open(&ys, y[i], eps) as f64);
    }
    (digamma(k as f64) + digamma(n as f64) - acc / n as f64).max(0.0)
}

/// Distance from `center` (present exactly once in `sorted`) to its k-th
/// nearest neighbor within `sorted`.
fn kth_nearest_1d(sorted: &[f64], center: f64, k: usize) -> f64 {
    let pos = sorted.partition_point(|&v| v < center);
    let mut lo = pos;
    let mut hi = pos + 1;
    let mut d = 0.0;
    for _ in 0..k {
        let below = if lo > 0 { center - sorted[lo - 1] } else { f64::INFINITY };
        let above = if hi < sorted.len() { sorted[hi] - center } else { f64::INFINITY };
        if below <= above {
            d = below;
            lo -= 1;
        } else {
            d = above;
            hi += 1;
        }
    }
    d
}

/// Discrete–continuous estimator for 0/1-valued features: k nearest
/// neighbors are found within the feature's class, and the count of full-
/// sample points inside that radius replaces the marginal neighbor count.
fn discrete_continuous_mi(x: &[f64], y: &[f64], k: usize) -> f64 {
    let n = x.len();
    let mut classes: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, &v) in x.iter().enumerate() {
        classes.entry(v.to_bits()).or_default().push(i);
    }
    let mut ys = y.to_vec();
    ys.sort_unstable_by(f64::total_cmp);
    let mut acc = 0.0;
    let mut used = 0usize;
    for idxs in classes.values() {
        let nc = idxs.len();
        if nc < 2 {
            continue;
        }
        let ki = k.min(nc - 1);
        let mut class_ys: Vec<f64> = idxs.iter().map(|&i| y[i]).collect();
        class_ys.sort_unstable_by(f64::total_cmp);
        for &i in idxs {
            let d = kth_nearest_1d(&class_ys, y[i], ki);
            // Full-sample count within the class radius, inclusive,
            // excluding the point itself.
            let hi = ys.partition_point(|&v| v <= y[i] + d);
            let lo = ys.partition_point(|&v| v < y[i] - d);
            let m = hi - lo - 1;
            acc += digamma(ki as f64) - digamma(nc as f64) - digamma(m as f64);
            used += 1;
        }
    }
    if used == 0 {
        return 0.0;
    }
    (digamma(n as f64) + acc / used as f64).max(0.0)
}

/// Core estimate for one column against the (shared) target, dispatching
/// on whether the column is 0/1-valued. `column_stream` namespaces the
/// jitter so every column gets an independent deterministic stream.
fn estimate_column(
    cfg: &MiConfig,
    column_stream: u64,
    feature: &[f64],
    target: &[f64],
) -> f64 {
    let fx_std = column_std(feature);
    let ty_std = column_std(target);
    if fx_std < 1e-15 || ty_std < 1e-15 {
        return 0.0;
    }
    let y = jittered(target, ty_std, cfg.seed, TARGET_JITTER_STREAM);
    if is_binary(feature) {
        discrete_continuous_mi(feature, &y, cfg.neighbors)
    } else {
        let x = jittered(feature, fx_std, cfg.seed, JITTER_STREAM_BASE | column_stream);
        ksg_mi(&x, &y, cfg.neighbors)
    }
}

fn check_pair(feature: &[f64], target: &[f64]) -> Result<(), SelectionError> {
    if feature.len() != target.len() {
        return Err(SelectionError::LengthMismatch {
            feature: feature.len(),
            target: target.len(),
        });
    }
    if feature.len() < MIN_SAMPLES {
        return Err(SelectionError::TooFewSamples { got: feature.len(), need: MIN_SAMPLES });
    }
    Ok(())
}

/// Mutual information between one feature column and the target, in nats,
/// clamped at zero. Deterministic given inputs.
pub fn estimate_mi(feature: &[f64], target: &[f64]) -> Result<f64, SelectionError> {
    estimate_mi_with(&MiConfig { max_samples: None, ..MiConfig::default() }, 0, feature, target)
}

/// [`estimate_mi`] with explicit settings and a column index for the
/// jitter stream.
pub fn estimate_mi_with(
    cfg: &MiConfig,
    column_index: u64,
    feature: &[f64],
    target: &[f64],
) -> Result<f64, SelectionError> {
    check_pair(feature, target)?;
    match cfg.max_samples {
        Some(max) if feature.len() > max => {
            let idx = decimate_indices(feature.len(), max);
            let f: Vec<f64> = idx.iter().map(|&i| feature[i]).collect();
            let t: Vec<f64> = idx.iter().map(|&i| target[i]).collect();
            Ok(estimate_column(cfg, column_index, &f, &t))
        }
        _ => Ok(estimate_column(cfg, column_index, feature, target)),
    }
}

/// MI of every column of `data` against `target`, in column order.
/// Columns are estimated in parallel; results are aggregated in index
/// order, so the output is deterministic.
pub fn mi_scores(
    data: &ArrayView2<'_, f64>,
    target: &[f64],
    cfg: &MiConfig,
) -> Result<Vec<f64>, SelectionError> {
    if data.nrows() != target.len() {
        return Err(SelectionError::LengthMismatch { feature: data.nrows(), target: target.len() });
    }
    if data.nrows() < MIN_SAMPLES {
        return Err(SelectionError::TooFewSamples { got: data.nrows(), need: MIN_SAMPLES });
    }
    let idx = match cfg.max_samples {
        Some(max) if data.nrows() > max => decimate_indices(data.nrows(), max),
        _ => (0..data.nrows()).collect(),
    };
    let target_dec: Vec<f64> = idx.iter().map(|&i| target[i]).collect();
    let columns: Vec<Vec<f64>> = (0..data.ncols())
        .map(|j| idx.iter().map(|&i| data[[i, j]]).collect())
        .collect();
    Ok(columns
        .par_iter()
        .enumerate()
        .map(|(j, col)| estimate_column(cfg, j as u64, col, &target_dec))
        .collect())
}

/// Drops every column whose MI with the target falls below `threshold`,
/// preserving survivor order. The target must already be shifted and must
/// come from the training partition only.
pub fn filter_features(
    matrix: &WindowedFeatureMatrix,
    target: &[f64],
    threshold: f64,
    cfg: &MiConfig,
) -> Result<(WindowedFeatureMatrix, MiReport), SelectionError> {
    if threshold <= 0.0 {
        return Err(SelectionError::InvalidThreshold(threshold));
    }
    let mi = mi_scores(&matrix.data.view(), target, cfg)?;
    let names: Vec<String> = matrix.column_names();
    let report = MiReport::from_scores(names, mi, threshold);
    let kept = report.kept_indices();
    if kept.is_empty() {
        return Err(SelectionError::AllFeaturesDropped { threshold });
    }
    Ok((matrix.select_columns(&kept), report))
}

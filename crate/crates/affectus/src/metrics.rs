//! Agreement metrics between predicted and ground-truth affect traces.
//!
//! The headline metric is the concordance correlation coefficient (CCC),
//! which folds precision (Pearson correlation) and accuracy (bias in mean
//! and scale) into a single number in `[-1, 1]`. The sum of squared errors
//! is also exposed because it is the training objective, and Pearson r
//! because it bounds the CCC from above in magnitude.
//!
//! All statistics are population statistics (divide by `n`, not `n - 1`).

use thiserror::Error;

/// Errors from metric computation.
#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    /// Prediction and truth slices differ in length.
    #[error("length mismatch: predictions has {pred} samples but truth has {truth}")]
    LengthMismatch { pred: usize, truth: usize },
    /// Too few samples to form the statistic.
    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },
    /// Pearson correlation is undefined when either input has zero variance.
    #[error("constant input: {side} has zero variance, Pearson r is undefined")]
    ConstantInput { side: &'static str },
}

/// Evaluation summary for one prediction/truth pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    /// Concordance correlation coefficient.
    pub ccc: f64,
    /// Sum of squared errors.
    pub sse: f64,
    /// Pearson correlation, or 0.0 when undefined (constant input).
    pub pearson_r: f64,
    /// Number of samples evaluated.
    pub n: usize,
}

/// How to pool per-subject traces into one partition-level CCC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PartitionPooling {
    /// Concatenate every subject's frames into one long pair of traces and
    /// compute a single CCC over the pool. Subjects with more frames weigh
    /// more, and between-subject bias differences are penalised.
    #[default]
    Concatenated,
    /// Compute one CCC per subject and report the unweighted mean.
    PerSubject,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population covariance with precomputed means. `cov(x, x, m, m)` is used
/// for variances too, so that identical inputs produce bit-identical
/// variance and covariance and `ccc(x, x)` is exactly 1.0.
fn cov(x: &[f64], y: &[f64], mx: f64, my: f64) -> f64 {
    let s: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    s / x.len() as f64
}

fn check_pair(pred: &[f64], truth: &[f64]) -> Result<(), MetricError> {
    if pred.len() != truth.len() {
        return Err(MetricError::LengthMismatch { pred: pred.len(), truth: truth.len() });
    }
    if pred.len() < 2 {
        return Err(MetricError::TooFewSamples { got: pred.len(), need: 2 });
    }
    Ok(())
}

/// Concordance correlation coefficient between two traces:
///
/// `ccc = 2 cov(x, y) / (var(x) + var(y) + (mean(x) - mean(y))^2)`
///
/// Two identical constant traces agree perfectly and return 1.0. A zero
/// covariance with a positive denominator (for example one constant trace
/// against a varying one) returns 0.0.
pub fn ccc(pred: &[f64], truth: &[f64]) -> Result<f64, MetricError> {
    check_pair(pred, truth)?;
    let (mx, my) = (mean(pred), mean(truth));
    let vx = cov(pred, pred, mx, mx);
    let vy = cov(truth, truth, my, my);
    let sxy = cov(pred, truth, mx, my);
    let denom = vx + vy + (mx - my) * (mx - my);
    if denom == 0.0 {
        // Both traces constant with equal means: perfect agreement.
        return Ok(1.0);
    }
    Ok(2.0 * sxy / denom)
}

/// Sum of squared errors, the training objective.
pub fn sse(pred: &[f64], truth: &[f64]) -> Result<f64, MetricError> {
    if pred.len() != truth.len() {
        return Err(MetricError::LengthMismatch { pred: pred.len(), truth: truth.len() });
    }
    if pred.is_empty() {
        return Err(MetricError::TooFewSamples { got: 0, need: 1 });
    }
    Ok(pred.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Pearson correlation coefficient (population form). Errors with
/// [`MetricError::ConstantInput`] when either trace has zero variance.
pub fn pearson(pred: &[f64], truth: &[f64]) -> Result<f64, MetricError> {
    check_pair(pred, truth)?;
    let (mx, my) = (mean(pred), mean(truth));
    let vx = cov(pred, pred, mx, mx);
    let vy = cov(truth, truth, my, my);
    if vx == 0.0 {
        return Err(MetricError::ConstantInput { side: "predictions" });
    }
    if vy == 0.0 {
        return Err(MetricError::ConstantInput { side: "truth" });
    }
    Ok(cov(pred, truth, mx, my) / (vx.sqrt() * vy.sqrt()))
}

/// CCC, SSE, and Pearson r in one pass. Pearson is reported as 0.0 when it
/// is undefined so that a constant predictor still yields a full summary.
pub fn evaluate(pred: &[f64], truth: &[f64]) -> Result<EvalResult, MetricError> {
    let c = ccc(pred, truth)?;
    let s = sse(pred, truth)?;
    let r = match pearson(pred, truth) {
        Ok(r) => r,
        Err(MetricError::ConstantInput { .. }) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(EvalResult { ccc: c, sse: s, pearson_r: r, n: pred.len() })
}

/// Partition-level CCC over several subjects' traces.
///
/// Each element of `segments` is one subject's `(predictions, truth)` pair.
/// Pairs must match in length individually; subjects may differ in length.
pub fn ccc_partition(
    segments: &[(Vec<f64>, Vec<f64>)],
    pooling: PartitionPooling,
) -> Result<f64, MetricError> {
    if segments.is_empty() {
        return Err(MetricError::TooFewSamples { got: 0, need: 1 });
    }
    for (p, t) in segments {
        if p.len() != t.len() {
            return Err(MetricError::LengthMismatch { pred: p.len(), truth: t.len() });
        }
    }
    match pooling {
        PartitionPooling::Concatenated => {
            let mut pred = Vec::new();
            let mut truth = Vec::new();
            for (p, t) in segments {
                pred.extend_from_slice(p);
                truth.extend_from_slice(t);
            }
            ccc(&pred, &truth)
        }
        PartitionPooling::PerSubject => {
            let mut acc = 0.0;
            for (p, t) in segments {
                acc += ccc(p, t)?;
            }
            Ok(acc / segments.len() as f64)
        }
    }
}

//! Naive reference implementations used to cross-check the optimized
//! feature code. Everything here favors obviousness over speed: plain
//! loops, no shared intermediates, no closed forms.

/// Mixed absolute/relative error: absolute below magnitude 1, relative
/// above. Avoids blowing up when the expected value is near zero.
pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / f64::max(1.0, want.abs())
}

/// Linear-interpolation quantile (the "type 7" rule): index p*(n-1)
/// into the sorted samples, interpolating between neighbors.
fn naive_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// The 16 statistical descriptors of a continuous window, computed the
/// slow way, in the same order as `functionals::CONTINUOUS_FUNCTIONALS`:
/// min, max, mean, median, quartile1, quartile3, skewness, kurtosis,
/// std, iqr, iqr_lower, iqr_upper, linreg_slope, linreg_intercept, rms,
/// zero_crossing_rate.
pub fn oracle_continuous(window: &[f64], frame_rate: u32) -> Vec<f64> {
    let n = window.len();
    let nf = n as f64;

    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in window {
        if v < min {
            min = v;
        }
        if v > max {
            max = v;
        }
    }

    let mut sorted = window.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = naive_quantile(&sorted, 0.5);
    let q1 = naive_quantile(&sorted, 0.25);
    let q3 = naive_quantile(&sorted, 0.75);

    let mut sum = 0.0;
    for &v in window {
        sum += v;
    }
    let mean = sum / nf;

    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &v in window {
        let d = v - mean;
        m2 += d.powi(2);
        m3 += d.powi(3);
        m4 += d.powi(4);
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let std = m2.sqrt();
    let skewness = if m2 == 0.0 { 0.0 } else { m3 / m2.powf(1.5) };
    let kurtosis = if m2 == 0.0 { 0.0 } else { m4 / (m2 * m2) - 3.0 };

    // Least squares of value against elapsed seconds, by literal sums.
    let fps = frame_rate as f64;
    let mut t_sum = 0.0;
    for i in 0..n {
        t_sum += i as f64 / fps;
    }
    let t_mean = t_sum / nf;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &v) in window.iter().enumerate() {
        let t = i as f64 / fps - t_mean;
        num += t * (v - mean);
        den += t * t;
    }
    let slope = num / den;
    let intercept = mean - slope * t_mean;

    let mut sum_sq = 0.0;
    for &v in window {
        sum_sq += v * v;
    }
    let rms = (sum_sq / nf).sqrt();

    let mut crossings = 0;
    for i in 1..n {
        let a = window[i - 1] - mean;
        let b = window[i] - mean;
        if (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0) {
            crossings += 1;
        }
    }
    let zcr = crossings as f64 / (nf - 1.0);

    vec![
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
    ]
}

/// The 5 run-length descriptors of a 0/1 window, in the same order as
/// `functionals::BINARY_FUNCTIONALS`: ratio, time_min, time_mean,
/// time_max, time_total (run durations in seconds; zeros when the
/// window has no ones).
pub fn oracle_binary(window: &[f64], frame_rate: u32) -> Vec<f64> {
    let fps = frame_rate as f64;
    let ones = window.iter().filter(|&&v| v == 1.0).count();
    let ratio = ones as f64 / window.len() as f64;

    let mut runs: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < window.len() {
        if window[i] == 1.0 {
            let start = i;
            while i < window.len() && window[i] == 1.0 {
                i += 1;
            }
            runs.push(i - start);
        } else {
            i += 1;
        }
    }

    if runs.is_empty() {
        return vec![ratio, 0.0, 0.0, 0.0, 0.0];
    }
    let shortest = *runs.iter().min().unwrap() as f64 / fps;
    let longest = *runs.iter().max().unwrap() as f64 / fps;
    let total: usize = runs.iter().sum();
    let mean_run = total as f64 / runs.len() as f64 / fps;
    vec![ratio, shortest, mean_run, longest, total as f64 / fps]
}

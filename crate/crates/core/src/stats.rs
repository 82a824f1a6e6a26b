//! Small descriptive-statistics toolkit shared by the estimators.

use serde::{Deserialize, Serialize};

/// Point estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64) -> Self {
        Self { value, std_error }
    }

    /// Absolute deviation from `target` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Sample mean with the plain `s / sqrt(n)` standard error.
pub fn mean_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    Estimate::new(mean(xs), (sample_variance(xs) / n).sqrt())
}

/// Delete-a-group jackknife standard error of `stat`.
///
/// The data are split into `groups` contiguous blocks; `stat` is re-evaluated
/// with each block removed. With `groups == xs.len()` this is the ordinary
/// delete-one jackknife.
pub fn grouped_jackknife<T: Clone, F>(xs: &[T], groups: usize, stat: F) -> f64
where
    F: Fn(&[T]) -> f64,
{
    let n = xs.len();
    let g = groups.min(n);
    if g < 2 {
        return f64::NAN;
    }
    let bounds: Vec<usize> = (0..=g).map(|k| k * n / g).collect();
    let mut leave_out = Vec::with_capacity(g);
    let mut buf: Vec<T> = Vec::with_capacity(n);
    for k in 0..g {
        buf.clear();
        buf.extend_from_slice(&xs[..bounds[k]]);
        buf.extend_from_slice(&xs[bounds[k + 1]..]);
        leave_out.push(stat(&buf));
    }
    let m = mean(&leave_out);
    let ss: f64 = leave_out.iter().map(|v| (v - m) * (v - m)).sum();
    ((g - 1) as f64 / g as f64 * ss).sqrt()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = mean(&lx);
    let my = mean(&ly);
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

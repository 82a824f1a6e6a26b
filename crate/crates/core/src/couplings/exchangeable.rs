use rand::{Rng, RngCore};

use crate::error::{invalid, Result};
use crate::exec::Parallelism;
use crate::perturbative::{CoordinateLaw, IndependentEnvironment};
use crate::seeding::SeedSequence;
use crate::stats::{grouped_jackknife, mean, mean_estimate, sample_variance, Estimate};

/// Joint sampler of an exchangeable pair `(W, W')` with declared `λ`.
pub trait ExchangeablePairSampler: Send + Sync {
    fn sample_pair(&self, rng: &mut dyn RngCore) -> (f64, f64);
    fn lambda(&self) -> f64;
}

/// `W = n^{-1/2} Σ X_j` and `W' = W - X_I/√n + X'_I/√n` with `I` uniform.
#[derive(Debug, Clone)]
pub struct SumPair {
    env: IndependentEnvironment,
}

impl SumPair {
    pub fn new(n: usize, law: CoordinateLaw) -> Result<Self> {
        Ok(Self {
            env: IndependentEnvironment::iid(n, law)?,
        })
    }
}

impl ExchangeablePairSampler for SumPair {
    fn sample_pair(&self, rng: &mut dyn RngCore) -> (f64, f64) {
        let n = self.env.n();
        let norm = (n as f64).sqrt();
        let x = self.env.sample(rng);
        let i = rng.random_range(0..n);
        let replacement = self.env.law(i).sample(rng);
        let w = x.iter().sum::<f64>() / norm;
        (w, w - x[i] / norm + replacement / norm)
    }

    fn lambda(&self) -> f64 {
        1.0 / self.env.n() as f64
    }
}

/// Conditional moments of the increment `W' - W` within one bin of `W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSummary {
    pub count: usize,
    pub w_mean: f64,
    pub increment: Estimate,
    pub squared_increment: Estimate,
}

/// Residuals of the three exchangeable-pair conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeableDiagnostics {
    pub lambda: f64,
    /// Through-origin slope of binned `E(W'-W | W)` against `-λ W`.
    pub slope: Estimate,
    /// `slope - 1`.
    pub slope_deviation: f64,
    /// Binned mean of `(W'-W)^2 / (2λ)`, averaged over bins.
    pub second_moment_ratio: Estimate,
    /// Largest `|binned (W'-W)^2/(2λ) - 1|` over bins.
    pub second_moment_max_deviation: f64,
    /// `E|W'-W|^3 / λ`.
    pub third_moment_ratio: Estimate,
    pub bins: Vec<BinSummary>,
    /// Mean of `sign(W - W')` (zero in expectation for an exchangeable pair).
    pub sign_balance: Estimate,
}

fn binned(pairs: &[(f64, f64)], bins: usize) -> Vec<BinSummary> {
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len();
    (0..bins)
        .map(|k| {
            let chunk = &sorted[k * n / bins..(k + 1) * n / bins];
            let w: Vec<f64> = chunk.iter().map(|p| p.0).collect();
            let d: Vec<f64> = chunk.iter().map(|p| p.1 - p.0).collect();
            let d2: Vec<f64> = d.iter().map(|v| v * v).collect();
            BinSummary {
                count: chunk.len(),
                w_mean: mean(&w),
                increment: mean_estimate(&d),
                squared_increment: mean_estimate(&d2),
            }
        })
        .collect()
}

fn slope_of(pairs: &[(f64, f64)], bins: usize, lambda: f64) -> f64 {
    let b = binned(pairs, bins);
    let sxy: f64 = b.iter().map(|s| -lambda * s.w_mean * s.increment.value).sum();
    let sxx: f64 = b.iter().map(|s| (lambda * s.w_mean).powi(2)).sum();
    sxy / sxx
}

fn second_ratio_of(pairs: &[(f64, f64)], bins: usize, lambda: f64) -> f64 {
    let b = binned(pairs, bins);
    b.iter().map(|s| s.squared_increment.value).sum::<f64>() / (b.len() as f64 * 2.0 * lambda)
}

/// Estimate the three exchangeable-pair conditions by equal-count binning on `W`.
///
/// The conditions are asymptotic, so the output is numeric residuals with
/// standard errors; interpretation is left to the caller.
pub fn exchangeable_pair_diagnostics(
    pair: &dyn ExchangeablePairSampler,
    replicas: usize,
    bins: usize,
    seed: u64,
    parallelism: Parallelism,
) -> Result<ExchangeableDiagnostics> {
    if replicas < 1000 {
        return Err(invalid(format!("need at least 1000 replicas, got {replicas}")));
    }
    if bins < 5 {
        return Err(invalid(format!("need at least 5 bins, got {bins}")));
    }
    let lambda = pair.lambda();
    if !(lambda > 0.0) {
        return Err(invalid("λ must be positive"));
    }
    let seeds = SeedSequence::new(seed);
    let pairs = parallelism.map(replicas, |r| {
        pair.sample_pair(&mut seeds.rng("exchangeable", r as u64))
    });
    let w: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    if sample_variance(&w) == 0.0 {
        return Err(invalid("W is degenerate (zero variance)"));
    }

    let bin_summaries = binned(&pairs, bins);
    let slope = slope_of(&pairs, bins, lambda);
    let slope_se = grouped_jackknife(&pairs, 20, |p| slope_of(p, bins, lambda));
    let second = second_ratio_of(&pairs, bins, lambda);
    let second_se = grouped_jackknife(&pairs, 20, |p| second_ratio_of(p, bins, lambda));
    let second_max_dev = bin_summaries
        .iter()
        .map(|s| (s.squared_increment.value / (2.0 * lambda) - 1.0).abs())
        .fold(0.0, f64::max);
    let third: Vec<f64> = pairs.iter().map(|p| (p.1 - p.0).abs().powi(3) / lambda).collect();
    let signs: Vec<f64> = pairs
        .iter()
        .map(|p| match (p.0 - p.1).partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => 1.0,
            Some(std::cmp::Ordering::Less) => -1.0,
            _ => 0.0,
        })
        .collect();

    Ok(ExchangeableDiagnostics {
        lambda,
        slope: Estimate::new(slope, slope_se),
        slope_deviation: slope - 1.0,
        second_moment_ratio: Estimate::new(second, second_se),
        second_moment_max_deviation: second_max_dev,
        third_moment_ratio: mean_estimate(&third),
        bins: bin_summaries,
        sign_balance: mean_estimate(&signs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Frozen(SumPair);

    impl ExchangeablePairSampler for Frozen {
        fn sample_pair(&self, rng: &mut dyn RngCore) -> (f64, f64) {
            let (w, _) = self.0.sample_pair(rng);
            (w, w)
        }
        fn lambda(&self) -> f64 {
            self.0.lambda()
        }
    }

    #[test]
    fn sum_pair_satisfies_linear_regression_condition() {
        let pair = SumPair::new(50, CoordinateLaw::StandardUniform).unwrap();
        let d = exchangeable_pair_diagnostics(&pair, 100_000, 20, 8, Parallelism::sequential())
            .unwrap();
        assert!(d.slope_deviation.abs() <= 0.1, "{:?}", d.slope);
        assert!(d.sign_balance.z_score(0.0) < 4.0);
    }

    #[test]
    fn rademacher_sum_pair_has_exact_conditional_second_moment() {
        // E((X'-X_I)^2 | W) = 1 + X_I^2 = 2 for ±1 coordinates.
        let n = 50;
        let pair = SumPair::new(n, CoordinateLaw::Rademacher).unwrap();
        let d = exchangeable_pair_diagnostics(&pair, 100_000, 20, 2, Parallelism::sequential())
            .unwrap();
        for bin in &d.bins {
            assert!(bin.squared_increment.z_score(2.0 / n as f64) < 4.0, "{bin:?}");
        }
    }

    #[test]
    fn frozen_pair_has_zero_residuals() {
        let pair = Frozen(SumPair::new(10, CoordinateLaw::StandardNormal).unwrap());
        let d = exchangeable_pair_diagnostics(&pair, 2000, 10, 1, Parallelism::sequential())
            .unwrap();
        assert_eq!(d.slope.value, 0.0);
        assert_eq!(d.second_moment_ratio.value, 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let pair = SumPair::new(10, CoordinateLaw::StandardNormal).unwrap();
        let p = Parallelism::sequential();
        assert!(exchangeable_pair_diagnostics(&pair, 999, 10, 0, p).is_err());
        assert!(exchangeable_pair_diagnostics(&pair, 1000, 4, 0, p).is_err());
        let point = SumPair::new(3, CoordinateLaw::Bernoulli { p: 0.0 }).unwrap();
        assert!(exchangeable_pair_diagnostics(&point, 1000, 5, 0, p).is_err());
    }
}

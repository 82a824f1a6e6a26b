use rand::RngCore;

use crate::error::{invalid, Result};
use crate::exec::Parallelism;
use crate::perturbative::CoordinateLaw;
use crate::seeding::SeedSequence;
use crate::stats::{mean_estimate, Estimate};

/// A non-negative `W` with mean `λ` and a sampler for its size-biased
/// version `W*`, characterized by `E(W g(W)) = λ E g(W*)`.
pub trait SizeBiasPair: Send + Sync {
    fn sample_base(&self, rng: &mut dyn RngCore) -> f64;
    fn sample_biased(&self, rng: &mut dyn RngCore) -> f64;
    fn mean(&self) -> f64;
}

/// `W ~ Bernoulli(p)`, `W* ≡ 1`.
#[derive(Debug, Clone, Copy)]
pub struct BernoulliSizeBias {
    pub p: f64,
}

impl SizeBiasPair for BernoulliSizeBias {
    fn sample_base(&self, rng: &mut dyn RngCore) -> f64 {
        CoordinateLaw::Bernoulli { p: self.p }.sample(rng)
    }

    fn sample_biased(&self, _rng: &mut dyn RngCore) -> f64 {
        1.0
    }

    fn mean(&self) -> f64 {
        self.p
    }
}

/// `W ~ Exponential(1)`, `W* ~ Gamma(2, 1)` (density `x e^{-x}`).
#[derive(Debug, Clone, Copy, Default)]
pub struct ExponentialSizeBias;

impl SizeBiasPair for ExponentialSizeBias {
    fn sample_base(&self, rng: &mut dyn RngCore) -> f64 {
        CoordinateLaw::Exponential { rate: 1.0 }.sample(rng)
    }

    fn sample_biased(&self, rng: &mut dyn RngCore) -> f64 {
        let e = CoordinateLaw::Exponential { rate: 1.0 };
        e.sample(rng) + e.sample(rng)
    }

    fn mean(&self) -> f64 {
        1.0
    }
}

/// `W = X_1 + ... + X_n` with i.i.d. Bernoulli(p) summands and
/// `W* = X_1* + X_2 + ... + X_n`, where `X_1* ≡ 1`.
#[derive(Debug, Clone, Copy)]
pub struct BernoulliSumSizeBias {
    pub n: usize,
    pub p: f64,
}

impl SizeBiasPair for BernoulliSumSizeBias {
    fn sample_base(&self, rng: &mut dyn RngCore) -> f64 {
        let law = CoordinateLaw::Bernoulli { p: self.p };
        (0..self.n).map(|_| law.sample(rng)).sum()
    }

    fn sample_biased(&self, rng: &mut dyn RngCore) -> f64 {
        let law = CoordinateLaw::Bernoulli { p: self.p };
        1.0 + (1..self.n).map(|_| law.sample(rng)).sum::<f64>()
    }

    fn mean(&self) -> f64 {
        self.n as f64 * self.p
    }
}

/// A named bounded test function.
pub struct TestFn<'a> {
    pub name: &'a str,
    pub g: &'a (dyn Fn(f64) -> f64 + Sync),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeBiasRow {
    pub name: String,
    /// Sample mean of `W g(W)`.
    pub lhs: Estimate,
    /// `λ` times the sample mean of `g(W*)`.
    pub rhs: Estimate,
    pub residual: f64,
    /// `|residual|` over the combined standard error.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeBiasReport {
    pub rows: Vec<SizeBiasRow>,
    pub base_mean: Estimate,
    pub max_z: f64,
    pub max_relative_residual: f64,
}

/// Check `E(W g(W)) = λ E g(W*)` for each test function, with independent
/// samples of `W` and `W*`.
pub fn size_bias_identity_check(
    pair: &dyn SizeBiasPair,
    tests: &[TestFn<'_>],
    replicas: usize,
    seed: u64,
    parallelism: Parallelism,
) -> Result<SizeBiasReport> {
    if replicas < 2 {
        return Err(invalid("need at least 2 replicas"));
    }
    let lambda = pair.mean();
    if !(lambda > 0.0) {
        return Err(invalid("size-bias mean λ must be positive"));
    }
    let seeds = SeedSequence::new(seed);
    let draws = parallelism.map(replicas, |r| {
        let mut rng = seeds.rng("size-bias", r as u64);
        (pair.sample_base(&mut rng), pair.sample_biased(&mut rng))
    });
    if let Some((w, _)) = draws.iter().find(|d| d.0 < 0.0) {
        return Err(invalid(format!("size-bias contract violated: W = {w} < 0")));
    }
    if let Some((_, ws)) = draws.iter().find(|d| d.1 < 0.0) {
        return Err(invalid(format!("size-bias contract violated: W* = {ws} < 0")));
    }
    let w: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let mut rows = Vec::with_capacity(tests.len());
    for t in tests {
        let lhs: Vec<f64> = draws.iter().map(|d| d.0 * (t.g)(d.0)).collect();
        let rhs: Vec<f64> = draws.iter().map(|d| (t.g)(d.1)).collect();
        let lhs = mean_estimate(&lhs);
        let rhs = mean_estimate(&rhs);
        let rhs = Estimate::new(lambda * rhs.value, lambda * rhs.std_error);
        let residual = lhs.value - rhs.value;
        let se = (lhs.std_error.powi(2) + rhs.std_error.powi(2)).sqrt();
        let z = if se > 0.0 {
            residual.abs() / se
        } else if residual == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push(SizeBiasRow {
            name: t.name.to_string(),
            lhs,
            rhs,
            residual,
            z,
        });
    }
    let max_z = rows.iter().map(|r| r.z).fold(0.0, f64::max);
    let max_relative_residual = rows
        .iter()
        .map(|r| r.residual.abs() / r.rhs.value.abs().max(r.lhs.value.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(SizeBiasReport {
        rows,
        base_mean: mean_estimate(&w),
        max_z,
        max_relative_residual,
    })
}

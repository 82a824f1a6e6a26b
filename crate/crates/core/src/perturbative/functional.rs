use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::exec::Parallelism;
use crate::perturbative::IndependentEnvironment;
use crate::seeding::SeedSequence;
use crate::stats::{mean, sample_variance};

/// A deterministic map from a configuration vector to a real number.
///
/// Implementations must return the same value for the same configuration;
/// randomized evaluators break every estimator in this module.
pub trait Evaluator: Send + Sync {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F> Evaluator for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// How the centering and scale of a [`Functional`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Standardization {
    /// Known mean and standard deviation.
    Declared,
    /// Plug-in estimates from an independent pilot run.
    Estimated { pilot_replicas: usize, pilot_seed: u64 },
}

/// `f` together with the centering and scale turning it into `W = (f - μ)/σ`.
#[derive(Clone)]
pub struct Functional {
    label: String,
    n: usize,
    evaluator: Arc<dyn Evaluator>,
    centering: f64,
    scale: f64,
    standardization: Standardization,
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Functional")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("centering", &self.centering)
            .field("scale", &self.scale)
            .finish()
    }
}

impl Functional {
    /// Unstandardized functional (`μ = 0`, `σ = 1`).
    pub fn new(label: impl Into<String>, n: usize, evaluator: impl Evaluator + 'static) -> Self {
        Self {
            label: label.into(),
            n,
            evaluator: Arc::new(evaluator),
            centering: 0.0,
            scale: 1.0,
            standardization: Standardization::Declared,
        }
    }

    /// `n^{-1/2} (x_1 + ... + x_n)`.
    pub fn iid_sum(n: usize) -> Self {
        let norm = (n as f64).sqrt();
        Self::new("sum", n, move |x: &[f64]| x.iter().sum::<f64>() / norm)
    }

    pub fn maximum(n: usize) -> Self {
        Self::new("max", n, |x: &[f64]| x.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn product(n: usize) -> Self {
        Self::new("product", n, |x: &[f64]| x.iter().product::<f64>())
    }

    /// Declare the centering `μ` and scale `σ > 0`.
    pub fn standardized(mut self, centering: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) || !centering.is_finite() {
            return Err(invalid(format!(
                "standardization needs finite μ and σ > 0, got μ = {centering}, σ = {scale}"
            )));
        }
        self.centering = centering;
        self.scale = scale;
        self.standardization = Standardization::Declared;
        Ok(self)
    }

    /// Plug-in standardization from `replicas` independent draws of `env`.
    ///
    /// `seed` should differ from the seed of any later estimate so the
    /// standardization does not reuse the samples it is applied to.
    pub fn pilot_standardized(
        self,
        env: &IndependentEnvironment,
        replicas: usize,
        seed: u64,
        parallelism: Parallelism,
    ) -> Result<Self> {
        if replicas < 2 {
            return Err(invalid("pilot run needs at least 2 replicas"));
        }
        let seeds = SeedSequence::new(seed);
        let values = parallelism.try_map(replicas, |r| {
            let mut rng = seeds.rng("pilot", r as u64);
            self.raw(&env.sample(&mut rng))
        })?;
        let sd = sample_variance(&values).sqrt();
        let mut out = self.standardized(mean(&values), sd)?;
        out.standardization = Standardization::Estimated {
            pilot_replicas: replicas,
            pilot_seed: seed,
        };
        Ok(out)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn centering(&self) -> f64 {
        self.centering
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn standardization(&self) -> Standardization {
        self.standardization
    }

    /// `f(x)`, checked for finiteness.
    pub fn raw(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(invalid(format!(
                "configuration has {} coordinates, functional expects {}",
                x.len(),
                self.n
            )));
        }
        let v = self.evaluator.evaluate(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation {
                value: v,
                context: format!("{} at configuration {:?}", self.label, x),
            })
        }
    }

    /// `W = (f(x) - μ) / σ`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok((self.raw(x)? - self.centering) / self.scale)
    }
}

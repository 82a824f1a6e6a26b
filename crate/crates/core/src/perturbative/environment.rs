use std::fmt;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Law of a single real coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum CoordinateLaw {
    /// Uniform on `[lo, hi)`.
    Uniform { lo: f64, hi: f64 },
    /// Uniform on `[-√3, √3)`: mean zero, variance one.
    StandardUniform,
    StandardNormal,
    /// ±1 with probability 1/2 each.
    Rademacher,
    /// `{0, 1}` valued with `P(1) = p`.
    Bernoulli { p: f64 },
    Exponential { rate: f64 },
}

impl CoordinateLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CoordinateLaw::Uniform { lo, hi } if !(lo < hi && lo.is_finite() && hi.is_finite()) => {
                Err(invalid(format!("uniform law needs lo < hi, got [{lo}, {hi}]")))
            }
            CoordinateLaw::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                Err(invalid(format!("bernoulli parameter {p} outside [0, 1]")))
            }
            CoordinateLaw::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                Err(invalid(format!("exponential rate must be positive, got {rate}")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        match *self {
            CoordinateLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            CoordinateLaw::StandardUniform => {
                let r = 3f64.sqrt();
                -r + 2.0 * r * rng.random::<f64>()
            }
            CoordinateLaw::StandardNormal => StandardNormal.sample(rng),
            CoordinateLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            CoordinateLaw::Bernoulli { p } => f64::from(u8::from(rng.random::<f64>() < p)),
            CoordinateLaw::Exponential { rate } => Exp::new(rate)
                .expect("validated rate")
                .sample(rng),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            CoordinateLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            CoordinateLaw::StandardUniform
            | CoordinateLaw::StandardNormal
            | CoordinateLaw::Rademacher => 0.0,
            CoordinateLaw::Bernoulli { p } => p,
            CoordinateLaw::Exponential { rate } => 1.0 / rate,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            CoordinateLaw::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            CoordinateLaw::StandardUniform
            | CoordinateLaw::StandardNormal
            | CoordinateLaw::Rademacher => 1.0,
            CoordinateLaw::Bernoulli { p } => p * (1.0 - p),
            CoordinateLaw::Exponential { rate } => 1.0 / (rate * rate),
        }
    }

    /// Fourth central moment.
    pub fn fourth_central_moment(&self) -> f64 {
        match *self {
            CoordinateLaw::Uniform { lo, hi } => (hi - lo).powi(4) / 80.0,
            CoordinateLaw::StandardUniform => 9.0 / 5.0,
            CoordinateLaw::StandardNormal => 3.0,
            CoordinateLaw::Rademacher => 1.0,
            CoordinateLaw::Bernoulli { p } => {
                let q = 1.0 - p;
                p * q * (1.0 - 3.0 * p * q)
            }
            CoordinateLaw::Exponential { rate } => 9.0 / rate.powi(4),
        }
    }
}

impl fmt::Display for CoordinateLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoordinateLaw::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            CoordinateLaw::StandardUniform => write!(f, "uniform(-sqrt3,sqrt3)"),
            CoordinateLaw::StandardNormal => write!(f, "normal(0,1)"),
            CoordinateLaw::Rademacher => write!(f, "rademacher"),
            CoordinateLaw::Bernoulli { p } => write!(f, "bernoulli({p})"),
            CoordinateLaw::Exponential { rate } => write!(f, "exponential({rate})"),
        }
    }
}

/// `n` independent coordinates `X = (X_1, ..., X_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependentEnvironment {
    laws: Vec<CoordinateLaw>,
}

impl IndependentEnvironment {
    /// `n` coordinates sharing one law.
    pub fn iid(n: usize, law: CoordinateLaw) -> Result<Self> {
        Self::new(vec![law; n])
    }

    pub fn new(laws: Vec<CoordinateLaw>) -> Result<Self> {
        if laws.is_empty() {
            return Err(invalid("environment needs at least one coordinate"));
        }
        for law in &laws {
            law.validate()?;
        }
        Ok(Self { laws })
    }

    pub fn n(&self) -> usize {
        self.laws.len()
    }

    pub fn law(&self, i: usize) -> &CoordinateLaw {
        &self.laws[i]
    }

    /// Human-readable coordinate domain.
    pub fn domain(&self) -> String {
        let first = self.laws[0];
        if self.laws.iter().all(|l| *l == first) {
            format!("{}^{}", first, self.n())
        } else {
            format!("heterogeneous[{}]", self.n())
        }
    }

    /// Fresh configuration, coordinates drawn in index order.
    pub fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.laws.iter().map(|l| l.sample(rng)).collect()
    }

    /// Redraw coordinate `i` only.
    pub fn resample_coordinate(&self, x: &mut [f64], i: usize, rng: &mut dyn RngCore) {
        x[i] = self.laws[i].sample(rng);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn resampling_one_coordinate_leaves_others_bit_identical() {
        let env = IndependentEnvironment::iid(8, CoordinateLaw::StandardNormal).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x = env.sample(&mut rng);
        let mut y = x.clone();
        env.resample_coordinate(&mut y, 3, &mut rng);
        for j in 0..8 {
            if j != 3 {
                assert_eq!(x[j].to_bits(), y[j].to_bits());
            }
        }
        assert_ne!(x[3], y[3]);
    }

    #[test]
    fn moments_match_sampling() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for law in [
            CoordinateLaw::StandardUniform,
            CoordinateLaw::Rademacher,
            CoordinateLaw::Bernoulli { p: 0.3 },
            CoordinateLaw::Exponential { rate: 2.0 },
            CoordinateLaw::Uniform { lo: 1.0, hi: 4.0 },
        ] {
            let v: Vec<f64> = (0..200_000).map(|_| law.sample(&mut rng)).collect();
            let m = crate::stats::mean(&v);
            let var = crate::stats::sample_variance(&v);
            let m4 = crate::stats::mean(&v.iter().map(|x| (x - m).powi(4)).collect::<Vec<_>>());
            assert!((m - law.mean()).abs() < 0.02, "{law}");
            assert!((var / law.variance() - 1.0).abs() < 0.03, "{law}");
            assert!((m4 / law.fourth_central_moment() - 1.0).abs() < 0.1, "{law}");
        }
    }

    #[test]
    fn invalid_laws_rejected() {
        assert!(IndependentEnvironment::iid(0, CoordinateLaw::Rademacher).is_err());
        assert!(IndependentEnvironment::iid(2, CoordinateLaw::Bernoulli { p: 1.5 }).is_err());
        assert!(IndependentEnvironment::iid(2, CoordinateLaw::Uniform { lo: 1.0, hi: 1.0 }).is_err());
    }
}

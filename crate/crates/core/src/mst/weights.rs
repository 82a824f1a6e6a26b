use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mst::lattice::{Edge, LatticeBox};
use crate::seeding::keyed_unit;

/// Continuous edge-weight law on a bounded subset of `(0, ∞)`, sampled by
/// inverse CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum WeightLaw {
    /// Uniform on `(lo, hi)` with `0 <= lo < hi`.
    Uniform { lo: f64, hi: f64 },
    /// `P(ω <= w) = w^exponent` on `(0, 1]`.
    Power { exponent: f64 },
}

impl Default for WeightLaw {
    fn default() -> Self {
        WeightLaw::Uniform { lo: 0.0, hi: 1.0 }
    }
}

impl WeightLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightLaw::Uniform { lo, hi } if lo >= 0.0 && hi > lo && hi.is_finite() => Ok(()),
            WeightLaw::Power { exponent } if exponent > 0.0 && exponent.is_finite() => Ok(()),
            other => Err(invalid(format!("invalid weight law {other}"))),
        }
    }

    /// Upper end of the support.
    pub fn max_weight(&self) -> f64 {
        match *self {
            WeightLaw::Uniform { hi, .. } => hi,
            WeightLaw::Power { .. } => 1.0,
        }
    }

    /// Inverse CDF at `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            WeightLaw::Uniform { lo, hi } => lo + (hi - lo) * u,
            WeightLaw::Power { exponent } => u.powf(1.0 / exponent),
        }
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        // `random` is in [0, 1); reflect to keep the weight strictly positive.
        self.quantile(1.0 - u)
    }
}

impl fmt::Display for WeightLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightLaw::Uniform { lo, hi } => write!(f, "uniform {lo:?} {hi:?}"),
            WeightLaw::Power { exponent } => write!(f, "power {exponent:?}"),
        }
    }
}

impl FromStr for WeightLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|e| invalid(format!("weight law {s:?}: {e}")))
        };
        let law = match parts.as_slice() {
            ["uniform", lo, hi] => WeightLaw::Uniform { lo: num(lo)?, hi: num(hi)? },
            ["power", a] => WeightLaw::Power { exponent: num(a)? },
            _ => return Err(invalid(format!("unknown weight law {s:?}"))),
        };
        law.validate()?;
        Ok(law)
    }
}

/// Weights `ω_e = F^{-1}(H(seed, e))` keyed by canonical edge id, so boxes of
/// every radius built from the same seed agree on shared edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HashedWeights {
    pub seed: u64,
    pub law: WeightLaw,
}

impl HashedWeights {
    pub fn new(seed: u64, law: WeightLaw) -> Result<Self> {
        law.validate()?;
        Ok(Self { seed, law })
    }

    pub fn weight(&self, e: &Edge) -> f64 {
        self.law.quantile(keyed_unit(self.seed, &e.key()))
    }
}

/// Where the weights of an environment came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightSource {
    Hashed(HashedWeights),
    Explicit,
}

/// Weights on every edge of a box, with the edge order by increasing weight
/// computed once.
#[derive(Debug, Clone)]
pub struct WeightEnvironment {
    lattice: LatticeBox,
    weights: Vec<f64>,
    order: Vec<u32>,
    source: WeightSource,
}

impl WeightEnvironment {
    pub fn hashed(lattice: LatticeBox, weights: HashedWeights) -> Result<Self> {
        weights.law.validate()?;
        let values = lattice.edges().iter().map(|e| weights.weight(e)).collect();
        Self::build(lattice, values, WeightSource::Hashed(weights))
    }

    /// Explicit weights indexed like `lattice.edges()`.
    pub fn from_values(lattice: LatticeBox, values: Vec<f64>) -> Result<Self> {
        Self::build(lattice, values, WeightSource::Explicit)
    }

    fn build(lattice: LatticeBox, weights: Vec<f64>, source: WeightSource) -> Result<Self> {
        if weights.len() != lattice.edge_count() {
            return Err(invalid(format!(
                "{} weights supplied for {} edges",
                weights.len(),
                lattice.edge_count()
            )));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
            return Err(invalid(format!("weight of edge {} must be positive and finite, got {w}", lattice.edge(i))));
        }
        let mut order: Vec<u32> = (0..weights.len() as u32).collect();
        order.sort_unstable_by(|&a, &b| weights[a as usize].total_cmp(&weights[b as usize]));
        if let Some(w) = order.windows(2).find(|w| weights[w[0] as usize] == weights[w[1] as usize]) {
            return Err(Error::Fault(format!(
                "tied weights {} on edges {} and {}",
                weights[w[0] as usize],
                lattice.edge(w[0] as usize),
                lattice.edge(w[1] as usize)
            )));
        }
        Ok(Self {
            lattice,
            weights,
            order,
            source,
        })
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights[index]
    }

    pub fn source(&self) -> WeightSource {
        self.source
    }

    /// Edge indices by increasing weight.
    pub fn order(&self) -> impl Iterator<Item = usize> + '_ {
        self.order.iter().map(|&i| i as usize)
    }

    pub fn edge_index(&self, e: &Edge) -> Result<usize> {
        self.lattice
            .edge_index(e)
            .ok_or_else(|| invalid(format!("edge {e} is not in the box of radius {}", self.lattice.radius())))
    }

    /// The same environment with the weight of one edge replaced.
    pub fn with_weight(&self, index: usize, weight: f64) -> Result<Self> {
        let mut values = self.weights.clone();
        values[index] = weight;
        Self::build(self.lattice.clone(), values, WeightSource::Explicit)
    }
}

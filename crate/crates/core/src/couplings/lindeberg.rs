use crate::error::{invalid, Error, Result};
use crate::exec::Parallelism;
use crate::perturbative::CoordinateLaw;
use crate::seeding::SeedSequence;
use crate::stats::{mean_estimate, Estimate};

/// `U^i = (X_1, ..., X_i, Z_{i+1}, ..., Z_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridVector {
    index: usize,
    config: Vec<f64>,
}

impl HybridVector {
    pub fn new(x: &[f64], z: &[f64], index: usize) -> Result<Self> {
        if x.len() != z.len() {
            return Err(invalid("X and Z configurations differ in length"));
        }
        if index > x.len() {
            return Err(invalid(format!("hybrid index {index} exceeds n = {}", x.len())));
        }
        let mut config = z.to_vec();
        config[..index].copy_from_slice(&x[..index]);
        Ok(Self { index, config })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn config(&self) -> &[f64] {
        &self.config
    }

    /// `V^i`: `U^i` with coordinate `i` (1-based) set to zero.
    pub fn zeroed(&self) -> Vec<f64> {
        let mut v = self.config.clone();
        if self.index >= 1 {
            v[self.index - 1] = 0.0;
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindebergReport {
    /// `E h(U^i) - E h(U^{i-1})` for `i = 1..n`.
    pub step_means: Vec<Estimate>,
    /// `E h(X) - E h(Z)`.
    pub total: Estimate,
    /// Largest relative gap between the summed steps and `h(X) - h(Z)` over
    /// all draws.
    pub max_pathwise_error: f64,
}

/// Swap `Z` for `X` one coordinate at a time, with common random numbers
/// across all hybrids of a draw.
pub fn lindeberg_telescope(
    h: &(dyn Fn(&[f64]) -> f64 + Sync),
    x_law: CoordinateLaw,
    z_law: CoordinateLaw,
    n: usize,
    replicas: usize,
    seed: u64,
    parallelism: Parallelism,
) -> Result<LindebergReport> {
    if n == 0 || replicas < 2 {
        return Err(invalid("lindeberg telescope needs n >= 1 and at least 2 replicas"));
    }
    x_law.validate()?;
    z_law.validate()?;
    let seeds = SeedSequence::new(seed);
    let per_draw = parallelism.try_map(replicas, |r| {
        let mut rng = seeds.rng("lindeberg", r as u64);
        let x: Vec<f64> = (0..n).map(|_| x_law.sample(&mut rng)).collect();
        let z: Vec<f64> = (0..n).map(|_| z_law.sample(&mut rng)).collect();
        let values = (0..=n)
            .map(|i| {
                let u = HybridVector::new(&x, &z, i)?;
                let v = h(u.config());
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Evaluation {
                        value: v,
                        context: format!("h at hybrid U^{i}"),
                    })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        let steps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
        let direct = values[n] - values[0];
        let scale = values.iter().fold(f64::MIN_POSITIVE, |a, v| a.max(v.abs()));
        let err = (steps.iter().sum::<f64>() - direct).abs() / scale;
        Ok((steps, direct, err))
    })?;
    let step_means = (0..n)
        .map(|i| mean_estimate(&per_draw.iter().map(|d| d.0[i]).collect::<Vec<_>>()))
        .collect();
    let total = mean_estimate(&per_draw.iter().map(|d| d.1).collect::<Vec<_>>());
    let max_pathwise_error = per_draw.iter().map(|d| d.2).fold(0.0, f64::max);
    Ok(LindebergReport {
        step_means,
        total,
        max_pathwise_error,
    })
}

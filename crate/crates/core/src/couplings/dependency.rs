use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::error::{invalid, Result};
use crate::exec::Parallelism;
use crate::perturbative::CoordinateLaw;
use crate::seeding::SeedSequence;
use crate::stats::{grouped_jackknife, mean_estimate, sample_variance, Estimate};
use crate::stein::kolmogorov_distance_of;

type Sampler = Arc<dyn Fn(&mut dyn RngCore) -> Vec<f64> + Send + Sync>;

/// Centered variables `(X_i)_{i ∈ V}` with a dependency graph given by the
/// closed neighborhoods `N_i` (each containing `i`).
#[derive(Clone)]
pub struct DependencyGraphModel {
    neighborhoods: Vec<Vec<usize>>,
    sampler: Sampler,
}

impl fmt::Debug for DependencyGraphModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DependencyGraphModel")
            .field("vertices", &self.neighborhoods.len())
            .finish()
    }
}

impl DependencyGraphModel {
    /// Validates that every `N_i` contains `i` and that adjacency is symmetric.
    pub fn new(
        neighborhoods: Vec<Vec<usize>>,
        sampler: impl Fn(&mut dyn RngCore) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        let m = neighborhoods.len();
        if m == 0 {
            return Err(invalid("dependency graph has no vertices"));
        }
        let mut neighborhoods = neighborhoods;
        for (i, nb) in neighborhoods.iter_mut().enumerate() {
            nb.sort_unstable();
            nb.dedup();
            if nb.binary_search(&i).is_err() {
                return Err(invalid(format!("neighborhood of {i} must contain {i}")));
            }
            if let Some(j) = nb.iter().find(|&&j| j >= m) {
                return Err(invalid(format!("neighborhood of {i} names unknown vertex {j}")));
            }
        }
        for i in 0..m {
            for &j in &neighborhoods[i] {
                if neighborhoods[j].binary_search(&i).is_err() {
                    return Err(invalid(format!("graph is not symmetric: {j} ∈ N_{i} but {i} ∉ N_{j}")));
                }
            }
        }
        Ok(Self {
            neighborhoods,
            sampler: Arc::new(sampler),
        })
    }

    /// `X_i = n^{-1/2} Y_i Y_{i+1}`, `i = 1..n-1`, with Rademacher `Y` and
    /// edges between consecutive indices.
    pub fn rademacher_chain(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("rademacher chain needs n >= 2"));
        }
        let m = n - 1;
        let neighborhoods = (0..m)
            .map(|i| (i.saturating_sub(1)..=(i + 1).min(m - 1)).collect())
            .collect();
        let norm = (n as f64).sqrt();
        Self::new(neighborhoods, move |rng| {
            let y: Vec<f64> = (0..n).map(|_| CoordinateLaw::Rademacher.sample(rng)).collect();
            y.windows(2).map(|w| w[0] * w[1] / norm).collect()
        })
    }

    /// Independent variables `n^{-1/2} X_i` with the empty graph.
    pub fn independent(n: usize, law: CoordinateLaw) -> Result<Self> {
        law.validate()?;
        let norm = (n as f64).sqrt();
        let center = law.mean();
        Self::new((0..n).map(|i| vec![i]).collect(), move |rng| {
            (0..n).map(|_| (law.sample(rng) - center) / norm).collect()
        })
    }

    pub fn len(&self) -> usize {
        self.neighborhoods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighborhoods.is_empty()
    }

    pub fn neighborhood(&self, i: usize) -> &[usize] {
        &self.neighborhoods[i]
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (self.sampler)(rng)
    }

    /// `W_i = W - Σ_{j ∈ N_i} X_j`.
    pub fn w_excluding(&self, x: &[f64], i: usize) -> f64 {
        let w: f64 = x.iter().sum();
        w - self.neighborhoods[i].iter().map(|&j| x[j]).sum::<f64>()
    }

    /// `T = Σ_i X_i (W - W_i)`.
    pub fn t_statistic(&self, x: &[f64]) -> f64 {
        self.neighborhoods
            .iter()
            .enumerate()
            .map(|(i, nb)| x[i] * nb.iter().map(|&j| x[j]).sum::<f64>())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependencyReport {
    pub t_mean: Estimate,
    pub t_variance: Estimate,
    /// `σ^2 := E T`.
    pub sigma2: f64,
    pub w_second_moment: Estimate,
    /// Kolmogorov distance of `W / σ` to the standard normal.
    pub kolmogorov: f64,
}

pub fn dependency_graph_bound(
    model: &DependencyGraphModel,
    replicas: usize,
    seed: u64,
    parallelism: Parallelism,
) -> Result<DependencyReport> {
    if replicas < 2 {
        return Err(invalid("need at least 2 replicas"));
    }
    let seeds = SeedSequence::new(seed);
    let draws: Vec<(f64, f64)> = parallelism.try_map(replicas, |r| {
        let x = model.sample(&mut seeds.rng("dependency", r as u64));
        if x.len() != model.len() {
            return Err(invalid("sampler output does not match the vertex count"));
        }
        Ok((x.iter().sum::<f64>(), model.t_statistic(&x)))
    })?;
    let t: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let w2: Vec<f64> = draws.iter().map(|d| d.0 * d.0).collect();
    let t_mean = mean_estimate(&t);
    let sigma2 = t_mean.value;
    if !(sigma2 > 0.0) {
        return Err(invalid("estimated σ² is not positive"));
    }
    let sigma = sigma2.sqrt();
    let scaled: Vec<f64> = draws.iter().map(|d| d.0 / sigma).collect();
    Ok(DependencyReport {
        t_mean,
        t_variance: Estimate::new(sample_variance(&t), grouped_jackknife(&t, 20, sample_variance)),
        sigma2,
        w_second_moment: mean_estimate(&w2),
        kolmogorov: kolmogorov_distance_of(&scaled)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn chain_mean_of_t() {
        let n = 100;
        let model = DependencyGraphModel::rademacher_chain(n).unwrap();
        let rep = dependency_graph_bound(&model, 20_000, 4, Parallelism::sequential()).unwrap();
        assert!(rep.t_mean.z_score((n as f64 - 1.0) / n as f64) < 4.0, "{:?}", rep.t_mean);
    }

    #[test]
    fn decomposition_is_exact() {
        let model = DependencyGraphModel::rademacher_chain(12).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let x = model.sample(&mut rng);
            let w: f64 = x.iter().sum();
            for i in 0..model.len() {
                let local: f64 = model.neighborhood(i).iter().map(|&j| x[j]).sum();
                assert!((model.w_excluding(&x, i) + local - w).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn empty_graph_gives_sum_of_squares() {
        let model = DependencyGraphModel::independent(30, CoordinateLaw::StandardUniform).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let x = model.sample(&mut rng);
        let ss: f64 = x.iter().map(|v| v * v).sum();
        assert!((model.t_statistic(&x) - ss).abs() < 1e-14);
        let rep = dependency_graph_bound(&model, 20_000, 1, Parallelism::sequential()).unwrap();
        let combined = (rep.t_mean.std_error.powi(2) + rep.w_second_moment.std_error.powi(2)).sqrt();
        assert!((rep.t_mean.value - rep.w_second_moment.value).abs() < 4.0 * combined);
    }

    #[test]
    fn chain_t_variance_decreases() {
        let vars: Vec<f64> = [32, 128, 512]
            .iter()
            .map(|&n| {
                let model = DependencyGraphModel::rademacher_chain(n).unwrap();
                dependency_graph_bound(&model, 4000, 6, Parallelism::sequential())
                    .unwrap()
                    .t_variance
                    .value
            })
            .collect();
        assert!(vars[0] > vars[1] && vars[1] > vars[2], "{vars:?}");
    }

    #[test]
    fn asymmetric_graph_rejected() {
        let r = DependencyGraphModel::new(vec![vec![0, 1], vec![1]], |_| vec![0.0, 0.0]);
        assert!(r.is_err());
        let r = DependencyGraphModel::new(vec![vec![1], vec![0, 1]], |_| vec![0.0, 0.0]);
        assert!(r.is_err());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::Parallelism;
use crate::mst::bottleneck::{alpha, beta, delta_m, gamma};
use crate::mst::lattice::{Edge, LatticeBox};
use crate::mst::tree::{build_mst, mst_weight};
use crate::mst::weights::{HashedWeights, WeightEnvironment, WeightLaw};
use crate::perturbative::{theorem_bound, BoundReport, CoordinateLaw, Functional, IndependentEnvironment, McConfig};
use crate::seeding::SeedSequence;
use crate::stats::{grouped_jackknife, mean, mean_estimate, sample_variance, Estimate};
use crate::stein::kolmogorov_distance_of;

const CLT_TAG: &str = "mst/clt";
const LOCALIZATION_TAG: &str = "mst/localization";
const JACKKNIFE_GROUPS: usize = 20;

/// Weights of environment `j` under a per-radius seed.
pub fn environment_weights(radius_seed: u64, j: usize, law: WeightLaw) -> Result<HashedWeights> {
    HashedWeights::new(SeedSequence::new(radius_seed).child_seed("environment", j as u64), law)
}

/// Kolmogorov distance of the plug-in standardized sample.
fn standardized_kolmogorov(values: &[f64]) -> f64 {
    let sd = sample_variance(values).sqrt();
    if !(sd > 0.0) {
        return 1.0;
    }
    let mu = mean(values);
    let z: Vec<f64> = values.iter().map(|v| (v - mu) / sd).collect();
    kolmogorov_distance_of(&z).unwrap_or(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltRow {
    pub radius: usize,
    pub environments: usize,
    /// Seed from which every environment at this radius is derived.
    pub seed: u64,
    /// `μ̂_n`.
    pub mean: Estimate,
    /// `σ̂_n^2`.
    pub variance: Estimate,
    /// `σ̂_n^2 / (2n+1)^d`.
    pub variance_ratio: f64,
    /// Distance of the plug-in standardized `M_n` to the standard normal.
    pub kolmogorov: Estimate,
    pub standardized_mean: f64,
    pub standardized_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub dimension: usize,
    pub law: WeightLaw,
    pub seed: u64,
    pub rows: Vec<CltRow>,
}

/// `M_n` over independent environments at each radius.
pub fn clt_experiment(
    d: usize,
    radii: &[usize],
    environments: usize,
    law: WeightLaw,
    seed: u64,
    parallelism: Parallelism,
) -> Result<CltReport> {
    if environments < 2 {
        return Err(invalid(format!("need at least 2 environments per radius, got {environments}")));
    }
    if radii.is_empty() {
        return Err(invalid("radius list is empty"));
    }
    law.validate()?;
    let seeds = SeedSequence::new(seed);
    let mut rows = Vec::with_capacity(radii.len());
    for &n in radii {
        let lattice = LatticeBox::new(d, n)?;
        let radius_seed = seeds.child_seed(CLT_TAG, n as u64);
        let samples = parallelism.try_map(environments, |j| {
            let env = WeightEnvironment::hashed(lattice.clone(), environment_weights(radius_seed, j, law)?)?;
            Ok(build_mst(&env).total_weight)
        })?;
        let var = sample_variance(&samples);
        let sd = var.sqrt();
        let mu = mean(&samples);
        let z: Vec<f64> = samples.iter().map(|v| (v - mu) / sd).collect();
        rows.push(CltRow {
            radius: n,
            environments,
            seed: radius_seed,
            mean: mean_estimate(&samples),
            variance: Estimate::new(var, grouped_jackknife(&samples, JACKKNIFE_GROUPS, sample_variance)),
            variance_ratio: var / lattice.vertex_count() as f64,
            kolmogorov: Estimate::new(
                standardized_kolmogorov(&samples),
                grouped_jackknife(&samples, JACKKNIFE_GROUPS, standardized_kolmogorov),
            ),
            standardized_mean: mean(&z),
            standardized_variance: sample_variance(&z),
        });
    }
    Ok(CltReport {
        dimension: d,
        law,
        seed,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRow {
    pub k: usize,
    /// Mean of `|β_{e,k} - α_{e,n}|`.
    pub beta_gap: Estimate,
    /// Mean of `|Δ_e M_n - γ_{e,k}|`.
    pub delta_gap: Estimate,
    /// Mean of `β_{e,k}`; for the distinguished edge this is `α_{e,k}`.
    pub beta_mean: Estimate,
    /// Fraction of environments with `β_{e,k} = α_{e,n}`.
    pub localized_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub dimension: usize,
    pub radius: usize,
    /// Canonical id of the probed edge.
    pub edge: String,
    pub environments: usize,
    pub seed: u64,
    pub alpha_mean: Estimate,
    pub rows: Vec<LocalizationRow>,
    /// Samples with `β_{e,k} < α_{e,n}`; always zero for a correct engine.
    pub nesting_violations: usize,
}

struct LocalizationSample {
    alpha: f64,
    betas: Vec<f64>,
    delta: f64,
    gammas: Vec<f64>,
}

/// `β_{e,k}` and `γ_{e,k}` against `α_{e,n}` and `Δ_e M_n` for the edge from
/// the origin to `(1, 0, ..., 0)`, with `ω'_e` drawn independently per
/// environment.
pub fn localization_experiment(
    d: usize,
    n: usize,
    ks: &[usize],
    environments: usize,
    law: WeightLaw,
    seed: u64,
    parallelism: Parallelism,
) -> Result<LocalizationReport> {
    if environments < 2 {
        return Err(invalid(format!("need at least 2 environments, got {environments}")));
    }
    if ks.is_empty() {
        return Err(invalid("list of sub-box radii is empty"));
    }
    law.validate()?;
    let lattice = LatticeBox::new(d, n)?;
    let e = Edge::distinguished(d)?;
    for &k in ks {
        if !lattice.contains_box(&LatticeBox::translated(&e, k)?) {
            return Err(invalid(format!("sub-box radius {k} does not fit in radius {n}")));
        }
    }
    let seeds = SeedSequence::new(seed);
    let radius_seed = seeds.child_seed(LOCALIZATION_TAG, n as u64);
    let samples = parallelism.try_map(environments, |j| {
        let env = WeightEnvironment::hashed(lattice.clone(), environment_weights(radius_seed, j, law)?)?;
        let omega = env.weight(env.edge_index(&e)?);
        let omega_prime = law.sample(&mut seeds.rng("mst/localization/resample", j as u64));
        let a = alpha(&env, &e)?.alpha;
        let betas = ks
            .iter()
            .map(|&k| beta(&env, &e, k).map(|q| q.alpha))
            .collect::<Result<Vec<_>>>()?;
        Ok(LocalizationSample {
            alpha: a,
            delta: delta_m(a, omega, omega_prime),
            gammas: betas.iter().map(|&b| gamma(b, omega, omega_prime)).collect(),
            betas,
        })
    })?;
    let rows = ks
        .iter()
        .enumerate()
        .map(|(c, &k)| {
            let beta_gap: Vec<f64> = samples.iter().map(|s| (s.betas[c] - s.alpha).abs()).collect();
            let delta_gap: Vec<f64> = samples.iter().map(|s| (s.delta - s.gammas[c]).abs()).collect();
            let betas: Vec<f64> = samples.iter().map(|s| s.betas[c]).collect();
            let localized = samples.iter().filter(|s| s.betas[c] == s.alpha).count();
            LocalizationRow {
                k,
                beta_gap: mean_estimate(&beta_gap),
                delta_gap: mean_estimate(&delta_gap),
                beta_mean: mean_estimate(&betas),
                localized_fraction: localized as f64 / environments as f64,
            }
        })
        .collect();
    let alphas: Vec<f64> = samples.iter().map(|s| s.alpha).collect();
    Ok(LocalizationReport {
        dimension: d,
        radius: n,
        edge: e.to_string(),
        environments,
        seed,
        alpha_mean: mean_estimate(&alphas),
        rows,
        nesting_violations: samples
            .iter()
            .map(|s| s.betas.iter().filter(|&&b| b < s.alpha).count())
            .sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MstBoundReport {
    pub dimension: usize,
    pub radius: usize,
    pub edges: usize,
    pub law: WeightLaw,
    pub bound: BoundReport,
    /// Plug-in `μ̂_n` and `σ̂_n` from the pilot run.
    pub centering: f64,
    pub scale: f64,
    pub pilot_replicas: usize,
    /// Distance to normal of `(M_n - μ̂_n)/σ̂_n` over fresh environments.
    pub kolmogorov: Estimate,
    pub kolmogorov_samples: usize,
}

impl MstBoundReport {
    /// Whether the bound clears the empirical distance once both Monte Carlo
    /// errors are allowed for.
    pub fn bound_dominates(&self, sigmas: f64) -> bool {
        let se = self.bound.theorem_bound.std_error.hypot(self.kolmogorov.std_error);
        self.bound.theorem_bound.value >= self.kolmogorov.value - sigmas * se
    }
}

/// `M_n` as a functional of i.i.d. Uniform(0,1) coordinates, one per edge,
/// mapped through the weight law's quantile function.
pub fn mst_functional(d: usize, n: usize, law: WeightLaw) -> Result<Functional> {
    law.validate()?;
    let lattice = LatticeBox::new(d, n)?;
    let edges = lattice.edge_count();
    Ok(Functional::new(format!("mst d={d} n={n}"), edges, move |u: &[f64]| {
        let w: Vec<f64> = u.iter().map(|&x| law.quantile(x)).collect();
        mst_weight(&lattice, &w)
    }))
}

/// Theorem bound for the standardized `M_n`, next to the empirical
/// Kolmogorov distance it is meant to dominate.
pub fn mst_theorem_bound(
    d: usize,
    n: usize,
    law: WeightLaw,
    pilot_replicas: usize,
    cfg: &McConfig,
) -> Result<MstBoundReport> {
    let f = mst_functional(d, n, law)?;
    let edges = f.n();
    let env = IndependentEnvironment::iid(edges, CoordinateLaw::Uniform { lo: 0.0, hi: 1.0 })?;
    let seeds = SeedSequence::new(cfg.seed);
    let f = f.pilot_standardized(&env, pilot_replicas, seeds.child_seed("mst/pilot", 0), cfg.parallelism)?;
    let bound = theorem_bound(&f, &env, cfg)?;
    let ks_seeds = seeds.child("mst/kolmogorov", 0);
    let w = cfg.parallelism.try_map(cfg.replicas, |r| {
        f.value(&env.sample(&mut ks_seeds.rng("environment", r as u64)))
    })?;
    let ks = |v: &[f64]| kolmogorov_distance_of(v).unwrap_or(1.0);
    Ok(MstBoundReport {
        dimension: d,
        radius: n,
        edges,
        law,
        centering: f.centering(),
        scale: f.scale(),
        pilot_replicas,
        kolmogorov: Estimate::new(ks(&w), grouped_jackknife(&w, JACKKNIFE_GROUPS, ks)),
        kolmogorov_samples: w.len(),
        bound,
    })
}

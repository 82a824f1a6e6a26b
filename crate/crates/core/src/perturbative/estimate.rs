//! Monte Carlo estimation of `T`, the third-moment sum, and the resulting
//! Kolmogorov-distance bounds.
//!
//! `T = ½ Σ_i Σ_{A ⊆ [n]\{i}} ν(A) Δ_i f Δ_i f^A` is the expectation, given
//! `(X, X')`, of `n · ½ Δ_I f Δ_I f^A` with `I` uniform on `[n]` and
//! `A ~ ν` on `[n]\{I}`. Each replica draws `(X, X')` and averages `m` such
//! inner terms, which is unbiased for `T` given `(X, X')`.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::Parallelism;
use crate::perturbative::plan::{derivative_pair, sample_nu_subset};
use crate::perturbative::{CoordinateLaw, Functional, IndependentEnvironment, Standardization};
use crate::seeding::SeedSequence;
use crate::stats::{grouped_jackknife, mean, mean_estimate, sample_variance, Estimate};

const REPLICA_TAG: &str = "perturbative/replica";
const CONDITIONAL_TAG: &str = "perturbative/conditional";

/// How the replacement configuration `X'` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// `X'` an independent copy of `X`.
    #[default]
    Independent,
    /// `X' = X`; every derivative vanishes.
    Degenerate,
}

/// Which upper bound on `Var E(T|W)` enters the theorem bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceProxy {
    #[default]
    VarT,
    /// Nested estimate of `Var E(T|X)`.
    ConditionalOnX,
}

#[derive(Debug, Clone)]
pub struct McConfig {
    pub replicas: usize,
    /// Inner `(i, A)` draws per replica; defaults to `n`.
    pub inner: Option<usize>,
    pub seed: u64,
    pub coupling: Coupling,
    pub proxy: VarianceProxy,
    pub parallelism: Parallelism,
    /// Groups for the delete-a-group jackknife.
    pub jackknife_groups: usize,
}

impl McConfig {
    pub fn new(replicas: usize, seed: u64) -> Self {
        Self {
            replicas,
            inner: None,
            seed,
            coupling: Coupling::Independent,
            proxy: VarianceProxy::VarT,
            parallelism: Parallelism::sequential(),
            jackknife_groups: 20,
        }
    }

    pub fn inner(mut self, inner: usize) -> Self {
        self.inner = Some(inner);
        self
    }

    pub fn coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn proxy(mut self, proxy: VarianceProxy) -> Self {
        self.proxy = proxy;
        self
    }

    pub fn parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }

    fn inner_for(&self, n: usize) -> usize {
        self.inner.unwrap_or(n)
    }

    fn validate(&self, f: &Functional, env: &IndependentEnvironment) -> Result<()> {
        if self.replicas < 2 {
            return Err(invalid(format!("replicas must be at least 2, got {}", self.replicas)));
        }
        if self.inner == Some(0) {
            return Err(invalid("inner sample size must be at least 1"));
        }
        if f.n() != env.n() {
            return Err(invalid(format!(
                "functional expects {} coordinates, environment has {}",
                f.n(),
                env.n()
            )));
        }
        Ok(())
    }
}

/// Per-replica summary of one `(X, X')` draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicaDraw {
    /// Inner-sample estimate of `T` given `(X, X')`.
    pub t: f64,
    /// Sample variance of the inner terms.
    pub t_within: f64,
    /// Inner-sample estimate of `Σ_i |Δ_i f|^3` given `(X, X')`.
    pub third: f64,
    /// Nested estimate of `E(T|X)` and its within-replicate variance.
    pub conditional: Option<(f64, f64)>,
}

fn draw_pair(
    env: &IndependentEnvironment,
    coupling: Coupling,
    rng: &mut dyn RngCore,
) -> (Vec<f64>, Vec<f64>) {
    let x = env.sample(rng);
    let xp = match coupling {
        Coupling::Independent => env.sample(rng),
        Coupling::Degenerate => x.clone(),
    };
    (x, xp)
}

fn replica(
    f: &Functional,
    env: &IndependentEnvironment,
    cfg: &McConfig,
    seeds: &SeedSequence,
    r: usize,
) -> Result<ReplicaDraw> {
    let n = env.n();
    let m = cfg.inner_for(n);
    let nf = n as f64;
    let mut rng = seeds.rng(REPLICA_TAG, r as u64);
    let (x, xp) = draw_pair(env, cfg.coupling, &mut rng);
    let fx = f.value(&x)?;
    let mut scratch = x.clone();
    let mut terms = Vec::with_capacity(m);
    let mut third = 0.0;
    for _ in 0..m {
        let i = rng.random_range(0..n);
        let a = sample_nu_subset(n, i, &mut rng)?;
        let (d, da) = derivative_pair(f, &x, &xp, fx, i, &a, &mut scratch)?;
        terms.push(nf * 0.5 * d * da);
        third += nf * d.abs().powi(3);
    }
    let conditional = match cfg.proxy {
        VarianceProxy::VarT => None,
        VarianceProxy::ConditionalOnX => Some(conditional_replica(f, env, cfg, seeds, r, &x, fx)?),
    };
    Ok(ReplicaDraw {
        t: mean(&terms),
        t_within: sample_variance(&terms),
        third: third / m as f64,
        conditional,
    })
}

/// Inner draws with `X` held fixed and `(X', i, A)` redrawn each time.
fn conditional_replica(
    f: &Functional,
    env: &IndependentEnvironment,
    cfg: &McConfig,
    seeds: &SeedSequence,
    r: usize,
    x: &[f64],
    fx: f64,
) -> Result<(f64, f64)> {
    let n = env.n();
    let m = cfg.inner_for(n).max(2);
    let mut rng = seeds.rng(CONDITIONAL_TAG, r as u64);
    let mut scratch = x.to_vec();
    let mut terms = Vec::with_capacity(m);
    for _ in 0..m {
        let xp = match cfg.coupling {
            Coupling::Independent => env.sample(&mut rng),
            Coupling::Degenerate => x.to_vec(),
        };
        let i = rng.random_range(0..n);
        let a = sample_nu_subset(n, i, &mut rng)?;
        let (d, da) = derivative_pair(f, x, &xp, fx, i, &a, &mut scratch)?;
        terms.push(n as f64 * 0.5 * d * da);
    }
    Ok((mean(&terms), sample_variance(&terms)))
}

fn run_replicas(
    f: &Functional,
    env: &IndependentEnvironment,
    cfg: &McConfig,
) -> Result<Vec<ReplicaDraw>> {
    cfg.validate(f, env)?;
    let seeds = SeedSequence::new(cfg.seed);
    cfg.parallelism
        .try_map(cfg.replicas, |r| replica(f, env, cfg, &seeds, r))
}

/// Between-replica variance minus the average within-replica variance over
/// `m` (the inner-sampling contribution). May be negative before clamping.
fn corrected_variance(means: &[f64], withins: &[f64], m: usize) -> f64 {
    sample_variance(means) - mean(withins) / m as f64
}

fn var_t(draws: &[ReplicaDraw], m: usize) -> f64 {
    let t: Vec<f64> = draws.iter().map(|d| d.t).collect();
    let w: Vec<f64> = draws.iter().map(|d| d.t_within).collect();
    corrected_variance(&t, &w, m)
}

fn var_conditional(draws: &[ReplicaDraw], m: usize) -> f64 {
    let (t, w): (Vec<f64>, Vec<f64>) = draws.iter().filter_map(|d| d.conditional).unzip();
    corrected_variance(&t, &w, m)
}

/// Result of [`estimate_t`].
#[derive(Debug, Clone)]
pub struct TEstimate {
    pub mean: Estimate,
    /// Bias-corrected `Var T`, clamped at zero.
    pub variance: Estimate,
    pub variance_clamped: bool,
    /// Per-replica estimates of `T` given `(X, X')`, in replica order.
    pub values: Vec<f64>,
    pub inner: usize,
}

/// Monte Carlo estimate of `E T` and `Var T` for the standardized functional.
pub fn estimate_t(f: &Functional, env: &IndependentEnvironment, cfg: &McConfig) -> Result<TEstimate> {
    let draws = run_replicas(f, env, cfg)?;
    let m = cfg.inner_for(env.n());
    let values: Vec<f64> = draws.iter().map(|d| d.t).collect();
    let raw_var = var_t(&draws, m);
    let var_se = grouped_jackknife(&draws, cfg.jackknife_groups, |d| var_t(d, m));
    Ok(TEstimate {
        mean: mean_estimate(&values),
        variance: Estimate::new(raw_var.max(0.0), var_se),
        variance_clamped: raw_var < 0.0,
        values,
        inner: m,
    })
}

/// Unbiased estimate of `Σ_i E|Δ_i f|^3` (uniform `i` with an `n` multiplier).
pub fn third_moment_sum(
    f: &Functional,
    env: &IndependentEnvironment,
    cfg: &McConfig,
) -> Result<Estimate> {
    let draws = run_replicas(f, env, cfg)?;
    let third: Vec<f64> = draws.iter().map(|d| d.third).collect();
    Ok(mean_estimate(&third))
}

/// Monte Carlo estimate of `E W^2` from the same replica streams' `X`.
pub fn second_moment(f: &Functional, env: &IndependentEnvironment, cfg: &McConfig) -> Result<Estimate> {
    cfg.validate(f, env)?;
    let seeds = SeedSequence::new(cfg.seed);
    let w2 = cfg.parallelism.try_map(cfg.replicas, |r| {
        let mut rng = seeds.rng("perturbative/second-moment", r as u64);
        let w = f.value(&env.sample(&mut rng))?;
        Ok(w * w)
    })?;
    Ok(mean_estimate(&w2))
}

/// `2 (sqrt(v) + ¼ s)^{1/2}` for variance proxy `v` and third-moment sum `s`.
pub fn theorem_bound_value(variance_proxy: f64, third_moment_sum: f64) -> f64 {
    2.0 * (variance_proxy.max(0.0).sqrt() + 0.25 * third_moment_sum.max(0.0)).sqrt()
}

/// `√2 (Σ c_ij)^{1/4} + (Σ_i E|Δ_i f|^3)^{1/2}` from a precomputed cap sum.
pub fn corollary_bound_from_sum(cap_sum: f64, third_moment_sum: f64) -> Result<f64> {
    if !cap_sum.is_finite() || cap_sum < 0.0 {
        return Err(invalid(format!(
            "covariance caps must sum to a finite non-negative value, got {cap_sum}"
        )));
    }
    if !third_moment_sum.is_finite() || third_moment_sum < 0.0 {
        return Err(invalid("third-moment sum must be finite and non-negative"));
    }
    Ok(2f64.sqrt() * cap_sum.powf(0.25) + third_moment_sum.sqrt())
}

/// Corollary bound from the full `n × n` matrix of covariance caps `c_ij`.
pub fn corollary_bound(caps: &[Vec<f64>], third_moment_sum: f64) -> Result<f64> {
    let n = caps.len();
    if caps.iter().any(|row| row.len() != n) {
        return Err(invalid("covariance cap matrix must be square"));
    }
    if caps.iter().flatten().any(|c| !c.is_finite()) {
        return Err(invalid("covariance caps must be finite"));
    }
    corollary_bound_from_sum(caps.iter().flatten().sum(), third_moment_sum)
}

/// `Σ_ij c_ij` for the standardized i.i.d. sum `n^{-1/2} Σ (X_i - μ)/σ`.
///
/// Every discrete derivative equals `(X_i - X'_i)/(σ √n)` whatever `A` is, so
/// the covariances vanish off the diagonal and `c_ii = Var((X - X')^2)/(σ^4 n^2)
/// = (2 μ_4/σ^4 + 2)/n^2`.
pub fn iid_sum_cap_sum(law: &CoordinateLaw, n: usize) -> Result<f64> {
    law.validate()?;
    let var = law.variance();
    if !(var > 0.0) || n == 0 {
        return Err(invalid("cap sum needs a non-degenerate law and n >= 1"));
    }
    Ok((2.0 * law.fourth_central_moment() / (var * var) + 2.0) / n as f64)
}

/// Components and value of the Kolmogorov-distance bounds for one functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub t_mean: Estimate,
    /// Bias-corrected `Var T`, clamped at zero.
    pub t_variance: Estimate,
    /// Bias-corrected `Var E(T|X)`, when the nested estimator ran.
    pub conditional_variance: Option<Estimate>,
    pub third_moment_sum: Estimate,
    pub proxy: VarianceProxy,
    /// Set when a bias-corrected variance came out negative and was clamped.
    pub variance_clamped: bool,
    pub theorem_bound: Estimate,
    pub cap_sum: Option<f64>,
    pub corollary_bound: Option<f64>,
    pub replicas: usize,
    pub inner: usize,
    pub seed: u64,
    /// False when `μ, σ` are plug-in estimates rather than exact.
    pub exact_standardization: bool,
}

impl BoundReport {
    /// The variance that entered the theorem bound.
    pub fn variance_proxy_value(&self) -> f64 {
        match (self.proxy, self.conditional_variance) {
            (VarianceProxy::ConditionalOnX, Some(c)) => c.value,
            _ => self.t_variance.value,
        }
    }

    pub fn recompute_theorem_bound(&self) -> f64 {
        theorem_bound_value(self.variance_proxy_value(), self.third_moment_sum.value)
    }

    pub fn recompute_corollary_bound(&self) -> Option<f64> {
        self.cap_sum
            .and_then(|s| corollary_bound_from_sum(s, self.third_moment_sum.value).ok())
    }

    /// Attach covariance caps and the corollary bound they imply.
    pub fn with_cap_sum(mut self, cap_sum: f64) -> Result<Self> {
        self.corollary_bound = Some(corollary_bound_from_sum(cap_sum, self.third_moment_sum.value)?);
        self.cap_sum = Some(cap_sum);
        Ok(self)
    }
}

/// Estimate the theorem bound `2 (sqrt(Var E(T|W)) + ¼ Σ_i E|Δ_i f|^3)^{1/2}`,
/// with `Var E(T|W)` replaced by the configured upper-bounding proxy.
pub fn theorem_bound(f: &Functional, env: &IndependentEnvironment, cfg: &McConfig) -> Result<BoundReport> {
    let draws = run_replicas(f, env, cfg)?;
    let m = cfg.inner_for(env.n());
    let m_cond = m.max(2);
    let groups = cfg.jackknife_groups;

    let t: Vec<f64> = draws.iter().map(|d| d.t).collect();
    let third: Vec<f64> = draws.iter().map(|d| d.third).collect();
    let raw_var = var_t(&draws, m);
    let var_se = grouped_jackknife(&draws, groups, |d| var_t(d, m));
    let mut clamped = raw_var < 0.0;

    let conditional = match cfg.proxy {
        VarianceProxy::VarT => None,
        VarianceProxy::ConditionalOnX => {
            let raw = var_conditional(&draws, m_cond);
            clamped |= raw < 0.0;
            let se = grouped_jackknife(&draws, groups, |d| var_conditional(d, m_cond));
            Some(Estimate::new(raw.max(0.0), se))
        }
    };

    let proxy_of = |d: &[ReplicaDraw]| match cfg.proxy {
        VarianceProxy::VarT => var_t(d, m),
        VarianceProxy::ConditionalOnX => var_conditional(d, m_cond),
    };
    let third_est = mean_estimate(&third);
    let proxy_value = proxy_of(&draws).max(0.0);
    let bound = theorem_bound_value(proxy_value, third_est.value);
    let bound_se = grouped_jackknife(&draws, groups, |d| {
        let s: Vec<f64> = d.iter().map(|r| r.third).collect();
        theorem_bound_value(proxy_of(d), mean(&s))
    });

    Ok(BoundReport {
        t_mean: mean_estimate(&t),
        t_variance: Estimate::new(raw_var.max(0.0), var_se),
        conditional_variance: conditional,
        third_moment_sum: third_est,
        proxy: cfg.proxy,
        variance_clamped: clamped,
        theorem_bound: Estimate::new(bound, bound_se),
        cap_sum: None,
        corollary_bound: None,
        replicas: cfg.replicas,
        inner: m,
        seed: cfg.seed,
        exact_standardization: f.standardization() == Standardization::Declared,
    })
}

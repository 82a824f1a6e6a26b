use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde_json::{json, Value};
use steinbound_core::couplings::{
    dependency_graph_bound, exchangeable_pair_diagnostics, lindeberg_telescope, size_bias_identity_check,
    BernoulliSizeBias, BernoulliSumSizeBias, DependencyGraphModel, ExponentialSizeBias, SizeBiasPair, SumPair, TestFn,
};
use steinbound_core::mst::{
    alpha, alpha_monotonicity_probe, build_mst, clt_experiment, delta_m, environment_weights,
    localization_experiment, mst_theorem_bound, Edge, LatticeBox, WeightEnvironment,
};
use steinbound_core::perturbative::{
    iid_sum_cap_sum, nu_weight, sample_nu_subset, telescoping_check, theorem_bound, CoordinateLaw, Functional,
    IndependentEnvironment, McConfig,
};
use steinbound_core::stats::{grouped_jackknife, Estimate};
use steinbound_core::stein::{
    default_dictionary, kolmogorov_distance_of, solve_stein_equation, stein_discrepancy, uniform_grid,
    Interpolation, SampleSet, SmoothedIndicator, TestFunction,
};
use steinbound_core::{Parallelism, SeedSequence};

use crate::config::{DependencyModel, Experiment, ExperimentConfig, FunctionalKind, LindebergTest, SizeBiasCase};
use crate::error::{HarnessError, HarnessResult};
use crate::record::{stat, ExperimentRecord, Footer, Header, Status, SCHEMA, SCHEMA_VERSION};

const JACKKNIFE_GROUPS: usize = 20;
const TELESCOPING_TOLERANCE: f64 = 1e-9;

fn est(e: Estimate, replicas: usize) -> Value {
    stat(e.value, e.std_error, replicas)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Run the configured experiment and assemble its record. A fault partway
/// through yields a record flagged failed that keeps the rows completed so
/// far; the error is returned alongside it.
pub fn execute(cfg: &ExperimentConfig) -> (ExperimentRecord, Option<HarnessError>) {
    let start = Instant::now();
    let mut rows = Vec::new();
    let result = run_rows(cfg, &mut rows);
    let error = result.err();
    let record = ExperimentRecord {
        header: Header {
            schema: SCHEMA.into(),
            schema_version: SCHEMA_VERSION,
            library_version: env!("CARGO_PKG_VERSION").into(),
            kind: cfg.experiment.kind().into(),
            seed: cfg.seed(),
            jobs: cfg.jobs,
            config: to_value(&cfg.experiment),
        },
        footer: Footer {
            status: if error.is_some() { Status::Failed } else { Status::Ok },
            rows: rows.len(),
            wall_clock_seconds: start.elapsed().as_secs_f64(),
            error: error.as_ref().map(ToString::to_string),
        },
        rows,
    };
    (record, error)
}

fn functional(kind: FunctionalKind, n: usize) -> Functional {
    match kind {
        FunctionalKind::Sum => Functional::iid_sum(n),
        FunctionalKind::Max => Functional::maximum(n),
        FunctionalKind::Product => Functional::product(n),
    }
}

/// `n^{-1/2} Σ (x_i - μ)/σ` over fresh coordinates.
fn standardized_sum(law: &CoordinateLaw, n: usize, rng: &mut dyn rand::RngCore) -> f64 {
    let (mu, sd) = (law.mean(), law.variance().sqrt());
    (0..n).map(|_| (law.sample(rng) - mu) / sd).sum::<f64>() / (n as f64).sqrt()
}

fn run_rows(cfg: &ExperimentConfig, rows: &mut Vec<Value>) -> HarnessResult<()> {
    let seeds = SeedSequence::new(cfg.seed());
    let par = Parallelism::new(cfg.jobs)?;
    match &cfg.experiment {
        Experiment::SteinSolver {
            thresholds,
            epsilons,
            lo,
            hi,
            points,
        } => {
            let grid = uniform_grid(*lo, *hi, *points);
            for &eps in epsilons {
                for &t in thresholds {
                    for dir in [Interpolation::Upper, Interpolation::Lower] {
                        let g: Arc<dyn TestFunction> = Arc::new(SmoothedIndicator::new(t, eps, dir)?);
                        let sol = solve_stein_equation(g, &grid)?;
                        let (mut res, mut f, mut df) = (0.0f64, 0.0f64, 0.0f64);
                        for v in sol.grid() {
                            res = res.max(v.residual(sol.centered_g(v.x)));
                            f = f.max(v.f.abs());
                            df = df.max(v.df.abs());
                        }
                        rows.push(json!({
                            "threshold": t,
                            "epsilon": eps,
                            "direction": format!("{dir:?}").to_lowercase(),
                            "points": points,
                            "max_residual": res,
                            "max_abs_f": f,
                            "max_abs_df": df,
                            "f_ceiling": 2.0 / eps,
                            "df_ceiling": (2.0 / std::f64::consts::PI).sqrt() / eps,
                        }));
                    }
                }
            }
        }
        Experiment::Distance { law, sizes, samples } => {
            law.validate()?;
            let dict = default_dictionary()?;
            for &n in sizes {
                let s = seeds.child("distance", n as u64);
                let w = par.map(*samples, |r| standardized_sum(law, n, &mut s.rng("sample", r as u64)));
                let ks = |v: &[f64]| kolmogorov_distance_of(v).unwrap_or(f64::NAN);
                let sd = |v: &[f64]| {
                    SampleSet::new(v.to_vec())
                        .and_then(|set| stein_discrepancy(&set, &dict))
                        .unwrap_or(f64::NAN)
                };
                rows.push(json!({
                    "n": n,
                    "kolmogorov": stat(ks(&w), grouped_jackknife(&w, JACKKNIFE_GROUPS, ks), *samples),
                    "stein_discrepancy": stat(sd(&w), grouped_jackknife(&w, JACKKNIFE_GROUPS, sd), *samples),
                }));
            }
        }
        Experiment::TheoremBound {
            functional: kind,
            law,
            sizes,
            replicas,
            inner,
            proxy,
            coupling,
            pilot_replicas,
        } => {
            for &n in sizes {
                let env = IndependentEnvironment::iid(n, *law)?;
                let f = match kind {
                    FunctionalKind::Sum => functional(*kind, n)
                        .standardized((n as f64).sqrt() * law.mean(), law.variance().sqrt())?,
                    _ => functional(*kind, n).pilot_standardized(
                        &env,
                        pilot_replicas.unwrap_or(*replicas),
                        seeds.child_seed("theorem-bound/pilot", n as u64),
                        par,
                    )?,
                };
                let mut mc = McConfig::new(*replicas, seeds.child_seed("theorem-bound", n as u64))
                    .proxy(*proxy)
                    .coupling(*coupling)
                    .parallelism(par);
                if let Some(m) = inner {
                    mc = mc.inner(*m);
                }
                let mut rep = theorem_bound(&f, &env, &mc)?;
                if *kind == FunctionalKind::Sum {
                    rep = rep.with_cap_sum(iid_sum_cap_sum(law, n)?)?;
                }
                rows.push(json!({
                    "n": n,
                    "functional": kind,
                    "theorem_bound": est(rep.theorem_bound, rep.replicas),
                    "t_mean": est(rep.t_mean, rep.replicas),
                    "t_variance": est(rep.t_variance, rep.replicas),
                    "third_moment_sum": est(rep.third_moment_sum, rep.replicas),
                    "corollary_bound": rep.corollary_bound,
                    "variance_clamped": rep.variance_clamped,
                    "centering": f.centering(),
                    "scale": f.scale(),
                    "bound": to_value(&rep),
                }));
            }
        }
        Experiment::Telescoping {
            functional: kind,
            law,
            sizes,
            draws,
        } => {
            for &n in sizes {
                let env = IndependentEnvironment::iid(n, *law)?;
                let f = functional(*kind, n);
                let s = seeds.child("telescoping", n as u64);
                let errors = par.try_map(*draws, |r| {
                    let mut rng = s.rng("draw", r as u64);
                    let x = env.sample(&mut rng);
                    let xp = env.sample(&mut rng);
                    let (lhs, rhs) = telescoping_check(&f, &x, &xp)?;
                    Ok((lhs - rhs).abs() / (1.0 + rhs.abs()))
                })?;
                rows.push(json!({
                    "n": n,
                    "draws": draws,
                    "max_scaled_error": errors.iter().cloned().fold(0.0, f64::max),
                    "failures": errors.iter().filter(|&&e| e > TELESCOPING_TOLERANCE).count(),
                }));
            }
        }
        Experiment::NuSampler { n, draws } => {
            let n = *n;
            if n > 16 {
                return Err(HarnessError::Validation("experiment.n must be at most 16 for the sampler check".into()));
            }
            for i in 0..n {
                let s = seeds.child("nu-sampler", i as u64);
                let masks = par.try_map(*draws, |r| {
                    let a = sample_nu_subset(n, i, &mut s.rng("draw", r as u64))?;
                    Ok(a.iter().fold(0usize, |m, &j| m | 1 << j))
                })?;
                let mut counts = vec![0u64; 1 << n];
                for m in masks {
                    counts[m] += 1;
                }
                let mut chi2 = 0.0;
                for (mask, &c) in counts.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        continue;
                    }
                    let expected = *draws as f64 * nu_weight(n, mask.count_ones() as usize);
                    chi2 += (c as f64 - expected).powi(2) / expected;
                }
                rows.push(json!({
                    "index": i,
                    "draws": draws,
                    "chi_square": chi2,
                    "degrees_of_freedom": (1usize << (n - 1)) - 1,
                }));
            }
        }
        Experiment::Exchangeable { n, law, replicas, bins } => {
            let pair = SumPair::new(*n, *law)?;
            let d = exchangeable_pair_diagnostics(&pair, *replicas, *bins, seeds.child_seed("exchangeable", 0), par)?;
            rows.push(json!({
                "n": n,
                "lambda": d.lambda,
                "slope": est(d.slope, *replicas),
                "slope_deviation": d.slope_deviation,
                "second_moment_ratio": est(d.second_moment_ratio, *replicas),
                "second_moment_max_deviation": d.second_moment_max_deviation,
                "third_moment_ratio": est(d.third_moment_ratio, *replicas),
                "sign_balance": est(d.sign_balance, *replicas),
            }));
        }
        Experiment::SizeBias { pair, replicas } => {
            let sampler: Box<dyn SizeBiasPair> = match *pair {
                SizeBiasCase::Exponential => Box::new(ExponentialSizeBias),
                SizeBiasCase::Bernoulli { p } => Box::new(BernoulliSizeBias { p }),
                SizeBiasCase::BernoulliSum { n, p } => Box::new(BernoulliSumSizeBias { n, p }),
            };
            let lambda = sampler.mean();
            let step = move |x: f64| f64::from(u8::from(x <= lambda));
            let tests = [
                TestFn { name: "x", g: &|x| x },
                TestFn { name: "x^2", g: &|x| x * x },
                TestFn { name: "exp(-x)", g: &|x: f64| (-x).exp() },
                TestFn { name: "1{x<=mean}", g: &step },
            ];
            let rep = size_bias_identity_check(sampler.as_ref(), &tests, *replicas, seeds.child_seed("size-bias", 0), par)?;
            for row in rep.rows {
                rows.push(json!({
                    "test": row.name,
                    "lhs": est(row.lhs, *replicas),
                    "rhs": est(row.rhs, *replicas),
                    "residual": row.residual,
                    "z": row.z,
                }));
            }
        }
        Experiment::Dependency {
            model,
            law,
            sizes,
            replicas,
        } => {
            for &n in sizes {
                let m = match model {
                    DependencyModel::RademacherChain => DependencyGraphModel::rademacher_chain(n)?,
                    DependencyModel::Independent => {
                        DependencyGraphModel::independent(n, law.expect("validated law"))?
                    }
                };
                let rep = dependency_graph_bound(&m, *replicas, seeds.child_seed("dependency", n as u64), par)?;
                rows.push(json!({
                    "n": n,
                    "t_mean": est(rep.t_mean, *replicas),
                    "t_variance": est(rep.t_variance, *replicas),
                    "sigma2": rep.sigma2,
                    "w_second_moment": est(rep.w_second_moment, *replicas),
                    "kolmogorov": rep.kolmogorov,
                }));
            }
        }
        Experiment::Lindeberg {
            n,
            replicas,
            x_law,
            z_law,
            test,
        } => {
            let nf = *n as f64;
            let h: Box<dyn Fn(&[f64]) -> f64 + Sync> = match test {
                LindebergTest::Quadratic => Box::new(move |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() / nf),
                LindebergTest::Cubic => {
                    Box::new(move |x: &[f64]| x.iter().map(|v| v.powi(3)).sum::<f64>() / nf.powf(1.5))
                }
            };
            let rep = lindeberg_telescope(h.as_ref(), *x_law, *z_law, *n, *replicas, seeds.child_seed("lindeberg", 0), par)?;
            let largest_step = rep.step_means.iter().map(|s| s.value.abs()).fold(0.0, f64::max);
            rows.push(json!({
                "n": n,
                "test": test,
                "total": est(rep.total, *replicas),
                "max_pathwise_error": rep.max_pathwise_error,
                "largest_step_mean": largest_step,
            }));
        }
        Experiment::MstClt {
            d,
            radii,
            environments,
            law,
        } => {
            // One radius at a time so a fault keeps the finished radii.
            for &n in radii {
                let rep = clt_experiment(*d, &[n], *environments, *law, cfg.seed(), par)?;
                for r in rep.rows {
                    rows.push(json!({
                        "radius": r.radius,
                        "environments": r.environments,
                        "seed": r.seed,
                        "mean": est(r.mean, r.environments),
                        "variance": est(r.variance, r.environments),
                        "variance_ratio": r.variance_ratio,
                        "kolmogorov": est(r.kolmogorov, r.environments),
                        "standardized_mean": r.standardized_mean,
                        "standardized_variance": r.standardized_variance,
                    }));
                }
            }
        }
        Experiment::MstLocalization {
            d,
            n,
            ks,
            environments,
            law,
        } => {
            let rep = localization_experiment(*d, *n, ks, *environments, *law, cfg.seed(), par)?;
            for r in rep.rows {
                rows.push(json!({
                    "k": r.k,
                    "radius": rep.radius,
                    "edge": rep.edge,
                    "beta_gap": est(r.beta_gap, rep.environments),
                    "delta_gap": est(r.delta_gap, rep.environments),
                    "beta_mean": est(r.beta_mean, rep.environments),
                    "alpha_mean": est(rep.alpha_mean, rep.environments),
                    "localized_fraction": r.localized_fraction,
                    "nesting_violations": rep.nesting_violations,
                }));
            }
        }
        Experiment::MstBound {
            d,
            radii,
            replicas,
            inner,
            pilot_replicas,
            law,
        } => {
            for &n in radii {
                let mut mc = McConfig::new(*replicas, seeds.child_seed("mst-bound", n as u64)).parallelism(par);
                if let Some(m) = inner {
                    mc = mc.inner(*m);
                }
                let rep = mst_theorem_bound(*d, n, *law, *pilot_replicas, &mc)?;
                rows.push(json!({
                    "radius": n,
                    "edges": rep.edges,
                    "theorem_bound": est(rep.bound.theorem_bound, rep.bound.replicas),
                    "kolmogorov": est(rep.kolmogorov, rep.kolmogorov_samples),
                    "t_variance": est(rep.bound.t_variance, rep.bound.replicas),
                    "third_moment_sum": est(rep.bound.third_moment_sum, rep.bound.replicas),
                    "centering": rep.centering,
                    "scale": rep.scale,
                    "bound_dominates": rep.bound_dominates(4.0),
                    "bound": to_value(&rep.bound),
                }));
            }
        }
        Experiment::MstPerturbation {
            d,
            radii,
            environments,
            resamples,
            law,
        } => {
            for &n in radii {
                let lattice = LatticeBox::new(*d, n)?;
                let radius_seed = seeds.child_seed("mst-perturbation", n as u64);
                let per_env = par.try_map(*environments, |j| {
                    let env = WeightEnvironment::hashed(lattice.clone(), environment_weights(radius_seed, j, *law)?)?;
                    let before = build_mst(&env).total_weight;
                    let mut rng = SeedSequence::new(radius_seed).rng("resample", j as u64);
                    let mut worst = 0.0f64;
                    for _ in 0..*resamples {
                        let idx = rng.random_range(0..lattice.edge_count());
                        let omega_prime = law.sample(&mut rng);
                        let after = build_mst(&env.with_weight(idx, omega_prime)?).total_weight;
                        let a = alpha(&env, &lattice.edge(idx))?.alpha;
                        worst = worst.max((delta_m(a, env.weight(idx), omega_prime) - (before - after)).abs());
                    }
                    Ok(worst)
                })?;
                rows.push(json!({
                    "radius": n,
                    "environments": environments,
                    "checks": environments * resamples,
                    "max_error": per_env.iter().cloned().fold(0.0, f64::max),
                    "environments_over_tolerance": per_env.iter().filter(|&&e| e > 1e-9).count(),
                }));
            }
        }
        Experiment::MstAlphaProfile {
            d,
            radii,
            environments,
            law,
        } => {
            let c = Edge::distinguished(*d)?;
            let base = seeds.child_seed("mst-alpha-profile", 0);
            let profiles = par.try_map(*environments, |j| {
                Ok(alpha_monotonicity_probe(&c, radii, environment_weights(base, j, *law)?)?)
            })?;
            let violations = profiles
                .iter()
                .filter(|p| p.windows(2).any(|w| w[1] > w[0]))
                .count();
            for (k, &n) in radii.iter().enumerate() {
                let a: Vec<f64> = profiles.iter().map(|p| p[k]).collect();
                rows.push(json!({
                    "radius": n,
                    "alpha_mean": est(steinbound_core::stats::mean_estimate(&a), a.len()),
                    "monotonicity_violations": violations,
                }));
            }
        }
    }
    Ok(())
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use steinbound_core::mst::WeightLaw;
use steinbound_core::perturbative::{CoordinateLaw, Coupling, VarianceProxy};

use crate::error::{HarnessError, HarnessResult};

/// Top-level run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; may instead come from the command line, but never from
    /// ambient entropy.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub jobs: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub experiment: Experiment,
}

fn one() -> usize {
    1
}

fn default_d() -> usize {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalKind {
    Sum,
    Max,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SizeBiasCase {
    Exponential,
    Bernoulli { p: f64 },
    BernoulliSum { n: usize, p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DependencyModel {
    RademacherChain,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LindebergTest {
    /// `n^{-1} Σ x_i^2`.
    Quadratic,
    /// `n^{-3/2} Σ x_i^3`.
    Cubic,
}

/// One experiment per operation of the library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    SteinSolver {
        thresholds: Vec<f64>,
        epsilons: Vec<f64>,
        #[serde(default = "grid_lo")]
        lo: f64,
        #[serde(default = "grid_hi")]
        hi: f64,
        #[serde(default = "grid_points")]
        points: usize,
    },
    Distance {
        law: CoordinateLaw,
        sizes: Vec<usize>,
        samples: usize,
    },
    TheoremBound {
        functional: FunctionalKind,
        law: CoordinateLaw,
        sizes: Vec<usize>,
        replicas: usize,
        #[serde(default)]
        inner: Option<usize>,
        #[serde(default)]
        proxy: VarianceProxy,
        #[serde(default)]
        coupling: Coupling,
        #[serde(default)]
        pilot_replicas: Option<usize>,
    },
    Telescoping {
        functional: FunctionalKind,
        law: CoordinateLaw,
        sizes: Vec<usize>,
        draws: usize,
    },
    NuSampler {
        n: usize,
        draws: usize,
    },
    Exchangeable {
        n: usize,
        law: CoordinateLaw,
        replicas: usize,
        bins: usize,
    },
    SizeBias {
        pair: SizeBiasCase,
        replicas: usize,
    },
    Dependency {
        model: DependencyModel,
        #[serde(default)]
        law: Option<CoordinateLaw>,
        sizes: Vec<usize>,
        replicas: usize,
    },
    Lindeberg {
        n: usize,
        replicas: usize,
        x_law: CoordinateLaw,
        z_law: CoordinateLaw,
        test: LindebergTest,
    },
    MstClt {
        #[serde(default = "default_d")]
        d: usize,
        radii: Vec<usize>,
        environments: usize,
        #[serde(default)]
        law: WeightLaw,
    },
    MstLocalization {
        #[serde(default = "default_d")]
        d: usize,
        n: usize,
        ks: Vec<usize>,
        environments: usize,
        #[serde(default)]
        law: WeightLaw,
    },
    MstBound {
        #[serde(default = "default_d")]
        d: usize,
        radii: Vec<usize>,
        replicas: usize,
        #[serde(default)]
        inner: Option<usize>,
        pilot_replicas: usize,
        #[serde(default)]
        law: WeightLaw,
    },
    MstPerturbation {
        #[serde(default = "default_d")]
        d: usize,
        radii: Vec<usize>,
        environments: usize,
        resamples: usize,
        #[serde(default)]
        law: WeightLaw,
    },
    MstAlphaProfile {
        #[serde(default = "default_d")]
        d: usize,
        radii: Vec<usize>,
        environments: usize,
        #[serde(default)]
        law: WeightLaw,
    },
}

fn grid_lo() -> f64 {
    -8.0
}

fn grid_hi() -> f64 {
    8.0
}

fn grid_points() -> usize {
    1001
}

fn positive(key: &str, v: usize) -> HarnessResult<()> {
    if v == 0 {
        return Err(HarnessError::Validation(format!("experiment.{key} must be at least 1")));
    }
    Ok(())
}

fn non_empty<T>(key: &str, v: &[T]) -> HarnessResult<()> {
    if v.is_empty() {
        return Err(HarnessError::Validation(format!("experiment.{key} must not be empty")));
    }
    Ok(())
}

fn all_positive(key: &str, v: &[usize]) -> HarnessResult<()> {
    non_empty(key, v)?;
    if v.contains(&0) {
        return Err(HarnessError::Validation(format!("experiment.{key} entries must be at least 1")));
    }
    Ok(())
}

impl Experiment {
    /// Record tag, matching the `kind` key.
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::SteinSolver { .. } => "stein-solver",
            Experiment::Distance { .. } => "distance",
            Experiment::TheoremBound { .. } => "theorem-bound",
            Experiment::Telescoping { .. } => "telescoping",
            Experiment::NuSampler { .. } => "nu-sampler",
            Experiment::Exchangeable { .. } => "exchangeable",
            Experiment::SizeBias { .. } => "size-bias",
            Experiment::Dependency { .. } => "dependency",
            Experiment::Lindeberg { .. } => "lindeberg",
            Experiment::MstClt { .. } => "mst-clt",
            Experiment::MstLocalization { .. } => "mst-localization",
            Experiment::MstBound { .. } => "mst-bound",
            Experiment::MstPerturbation { .. } => "mst-perturbation",
            Experiment::MstAlphaProfile { .. } => "mst-alpha-profile",
        }
    }

    fn validate(&self) -> HarnessResult<()> {
        match self {
            Experiment::SteinSolver {
                thresholds,
                epsilons,
                lo,
                hi,
                points,
            } => {
                non_empty("thresholds", thresholds)?;
                non_empty("epsilons", epsilons)?;
                if epsilons.iter().any(|e| !(*e > 0.0)) {
                    return Err(HarnessError::Validation("experiment.epsilons entries must be positive".into()));
                }
                if !(lo < hi) {
                    return Err(HarnessError::Validation("experiment.lo must be below experiment.hi".into()));
                }
                positive("points", *points)
            }
            Experiment::Distance { sizes, samples, .. } => {
                all_positive("sizes", sizes)?;
                positive("samples", *samples)
            }
            Experiment::TheoremBound {
                sizes,
                replicas,
                inner,
                pilot_replicas,
                ..
            } => {
                all_positive("sizes", sizes)?;
                positive("replicas", *replicas)?;
                if let Some(m) = inner {
                    positive("inner", *m)?;
                }
                if let Some(p) = pilot_replicas {
                    positive("pilot_replicas", *p)?;
                }
                Ok(())
            }
            Experiment::Telescoping { sizes, draws, .. } => {
                all_positive("sizes", sizes)?;
                positive("draws", *draws)
            }
            Experiment::NuSampler { n, draws } => {
                positive("n", *n)?;
                positive("draws", *draws)
            }
            Experiment::Exchangeable { n, replicas, bins, .. } => {
                positive("n", *n)?;
                positive("replicas", *replicas)?;
                positive("bins", *bins)
            }
            Experiment::SizeBias { replicas, .. } => positive("replicas", *replicas),
            Experiment::Dependency {
                model,
                law,
                sizes,
                replicas,
            } => {
                all_positive("sizes", sizes)?;
                positive("replicas", *replicas)?;
                if *model == DependencyModel::Independent && law.is_none() {
                    return Err(HarnessError::Validation(
                        "experiment.law is required for the independent model".into(),
                    ));
                }
                Ok(())
            }
            Experiment::Lindeberg { n, replicas, .. } => {
                positive("n", *n)?;
                positive("replicas", *replicas)
            }
            Experiment::MstClt { radii, environments, .. } | Experiment::MstAlphaProfile { radii, environments, .. } => {
                all_positive("radii", radii)?;
                positive("environments", *environments)
            }
            Experiment::MstLocalization { n, ks, environments, .. } => {
                positive("n", *n)?;
                all_positive("ks", ks)?;
                positive("environments", *environments)
            }
            Experiment::MstBound {
                radii,
                replicas,
                inner,
                pilot_replicas,
                ..
            } => {
                all_positive("radii", radii)?;
                positive("replicas", *replicas)?;
                positive("pilot_replicas", *pilot_replicas)?;
                if let Some(m) = inner {
                    positive("inner", *m)?;
                }
                Ok(())
            }
            Experiment::MstPerturbation {
                radii,
                environments,
                resamples,
                ..
            } => {
                all_positive("radii", radii)?;
                positive("environments", *environments)?;
                positive("resamples", *resamples)
            }
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> HarnessResult<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::Validation(format!("invalid config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Apply overrides and check every constraint.
    pub fn resolve(mut self, overrides: &Overrides) -> HarnessResult<Self> {
        if overrides.seed.is_some() {
            self.seed = overrides.seed;
        }
        if let Some(j) = overrides.jobs {
            self.jobs = j;
        }
        if overrides.out.is_some() {
            self.out = overrides.out.clone();
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> HarnessResult<()> {
        if self.seed.is_none() {
            return Err(HarnessError::Validation(
                "seed is required (set `seed` in the config or pass --seed)".into(),
            ));
        }
        if self.jobs == 0 {
            return Err(HarnessError::Validation("jobs must be at least 1".into()));
        }
        self.experiment.validate()
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }
}

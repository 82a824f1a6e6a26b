//! Generalized perturbative bounds for functionals of independent inputs.
//!
//! For `W = f(X)` with independent coordinates, the distance of `W` from the
//! standard normal is bounded through randomized discrete derivatives
//! `Δ_i f` and `Δ_i f^A`, the subset measure `ν`, and the statistic `T`.

mod environment;
mod estimate;
mod functional;
mod plan;

pub use environment::{CoordinateLaw, IndependentEnvironment};
pub use estimate::{
    corollary_bound, corollary_bound_from_sum, estimate_t, iid_sum_cap_sum, second_moment, theorem_bound,
    theorem_bound_value, third_moment_sum, BoundReport, Coupling, McConfig, ReplicaDraw,
    TEstimate, VarianceProxy,
};
pub use functional::{Evaluator, Functional, Standardization};
pub use plan::{
    discrete_derivatives, nu_weight, sample_nu_subset, telescoping_check, DerivativeSample,
    PerturbationPlan, ENUMERATION_CAP,
};

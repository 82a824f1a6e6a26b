//! Minimal spanning trees on lattice boxes with random edge weights.

mod bottleneck;
mod experiments;
mod instance;
mod lattice;
mod tree;
mod weights;

pub use bottleneck::{
    alpha, alpha_monotonicity_probe, alpha_profile, beta, delta_m, gamma, mst_membership, BottleneckQuery,
};
pub use experiments::{
    clt_experiment, environment_weights, localization_experiment, mst_functional, mst_theorem_bound, CltReport,
    CltRow, LocalizationReport, LocalizationRow, MstBoundReport,
};
pub use instance::{dump_instance, parse_instance};
pub use lattice::{Edge, LatticeBox, MAX_DIMENSION};
pub use tree::{build_mst, mst_weight, DisjointSets, MstResult};
pub use weights::{HashedWeights, WeightEnvironment, WeightLaw, WeightSource};

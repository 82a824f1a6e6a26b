//! Classical Stein couplings and the Lindeberg replacement telescope.

mod dependency;
mod exchangeable;
mod lindeberg;
mod size_bias;

pub use dependency::{dependency_graph_bound, DependencyGraphModel, DependencyReport};
pub use exchangeable::{
    exchangeable_pair_diagnostics, BinSummary, ExchangeableDiagnostics, ExchangeablePairSampler,
    SumPair,
};
pub use lindeberg::{lindeberg_telescope, HybridVector, LindebergReport};
pub use size_bias::{
    size_bias_identity_check, BernoulliSizeBias, BernoulliSumSizeBias, ExponentialSizeBias,
    SizeBiasPair, SizeBiasReport, SizeBiasRow, TestFn,
};

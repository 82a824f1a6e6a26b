use crate::error::{invalid, Result};
use crate::mst::lattice::{Edge, LatticeBox};
use crate::mst::tree::DisjointSets;
use crate::mst::weights::{HashedWeights, WeightEnvironment};

/// Bottleneck threshold of an edge: the smallest `α` such that its endpoints
/// are joined by a path avoiding the edge and using only weights `<= α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BottleneckQuery {
    pub edge: Edge,
    /// `f64::INFINITY` when removing the edge disconnects its endpoints.
    pub alpha: f64,
    /// Index of the edge whose insertion first joined the endpoints.
    pub achieving: Option<usize>,
}

fn bottleneck_within(env: &WeightEnvironment, index: usize, region: Option<&LatticeBox>) -> BottleneckQuery {
    let lattice = env.lattice();
    let edge = lattice.edge(index);
    let (a, b) = lattice.endpoints(index);
    let mut sets = DisjointSets::new(lattice.vertex_count());
    for idx in env.order() {
        if idx == index {
            continue;
        }
        if let Some(r) = region {
            if !r.contains_edge(&lattice.edge(idx)) {
                continue;
            }
        }
        let (u, v) = lattice.endpoints(idx);
        if sets.union(u, v) && sets.connected(a, b) {
            return BottleneckQuery {
                edge,
                alpha: env.weight(idx),
                achieving: Some(idx),
            };
        }
    }
    BottleneckQuery {
        edge,
        alpha: f64::INFINITY,
        achieving: None,
    }
}

/// `α_{e,n}` on the environment's box.
pub fn alpha(env: &WeightEnvironment, e: &Edge) -> Result<BottleneckQuery> {
    let index = env.edge_index(e)?;
    Ok(bottleneck_within(env, index, None))
}

/// `β_{e,k}`: the bottleneck threshold restricted to the translate `e + V_k`,
/// which must lie inside the environment's box.
pub fn beta(env: &WeightEnvironment, e: &Edge, k: usize) -> Result<BottleneckQuery> {
    let index = env.edge_index(e)?;
    let region = LatticeBox::translated(e, k)?;
    if !env.lattice().contains_box(&region) {
        return Err(invalid(format!(
            "translate of radius {k} around {e} leaves the box of radius {}",
            env.lattice().radius()
        )));
    }
    Ok(bottleneck_within(env, index, Some(&region)))
}

/// Change `M(ω) - M(ω')` of the minimal spanning tree weight when the weight
/// of an edge with threshold `alpha` moves from `omega` to `omega_prime`:
/// `(α - ω')^+ - (α - ω)^+`, and `ω - ω'` when `α` is infinite.
pub fn delta_m(alpha: f64, omega: f64, omega_prime: f64) -> f64 {
    if alpha == f64::INFINITY {
        return omega - omega_prime;
    }
    (alpha - omega_prime).max(0.0) - (alpha - omega).max(0.0)
}

/// `γ_{e,k}`: the same formula with the localized threshold `β_{e,k}`.
pub fn gamma(beta: f64, omega: f64, omega_prime: f64) -> f64 {
    delta_m(beta, omega, omega_prime)
}

/// Tree membership via `ω_e < α_{e,n}`.
pub fn mst_membership(env: &WeightEnvironment, e: &Edge) -> Result<bool> {
    let q = alpha(env, e)?;
    Ok(env.weight(env.edge_index(e)?) < q.alpha)
}

/// `α_{e,n}` along a sequence of nested environments. Radii must increase,
/// every box must contain the previous one, and weights must agree on shared
/// edges.
pub fn alpha_profile(envs: &[WeightEnvironment], e: &Edge) -> Result<Vec<f64>> {
    for pair in envs.windows(2) {
        let (small, big) = (&pair[0], &pair[1]);
        if small.lattice().radius() >= big.lattice().radius() || !big.lattice().contains_box(small.lattice()) {
            return Err(invalid("alpha profile needs strictly growing nested boxes"));
        }
        for (i, edge) in small.lattice().edges().iter().enumerate() {
            let j = big.edge_index(edge)?;
            if small.weight(i) != big.weight(j) {
                return Err(invalid(format!(
                    "weights are not nested: edge {edge} has {} at radius {} and {} at radius {}",
                    small.weight(i),
                    small.lattice().radius(),
                    big.weight(j),
                    big.lattice().radius()
                )));
            }
        }
    }
    envs.iter().map(|env| alpha(env, e).map(|q| q.alpha)).collect()
}

/// `α_{e,n}` for each radius, with weights drawn from one hashed assignment.
pub fn alpha_monotonicity_probe(e: &Edge, radii: &[usize], weights: HashedWeights) -> Result<Vec<f64>> {
    let envs = radii
        .iter()
        .map(|&n| WeightEnvironment::hashed(LatticeBox::new(e.dim(), n)?, weights))
        .collect::<Result<Vec<_>>>()?;
    alpha_profile(&envs, e)
}

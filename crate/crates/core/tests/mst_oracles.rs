use std::collections::VecDeque;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steinbound_core::mst::{
    alpha, alpha_monotonicity_probe, beta, build_mst, delta_m, mst_membership, Edge, HashedWeights, LatticeBox,
    WeightEnvironment, WeightLaw,
};

fn random_env(d: usize, n: usize, rng: &mut ChaCha8Rng) -> WeightEnvironment {
    let lattice = LatticeBox::new(d, n).unwrap();
    let w = (0..lattice.edge_count()).map(|_| rng.random::<f64>() + 1e-12).collect();
    WeightEnvironment::from_values(lattice, w).unwrap()
}

fn adjacency(lattice: &LatticeBox, skip: Option<usize>, keep: impl Fn(usize) -> bool) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); lattice.vertex_count()];
    for i in 0..lattice.edge_count() {
        if Some(i) == skip || !keep(i) {
            continue;
        }
        let (u, v) = lattice.endpoints(i);
        adj[u].push((v, i));
        adj[v].push((u, i));
    }
    adj
}

fn reachable(adj: &[Vec<(usize, usize)>], a: usize, b: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([a]);
    seen[a] = true;
    while let Some(u) = queue.pop_front() {
        if u == b {
            return true;
        }
        for &(v, _) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    false
}

/// Smallest edge weight `t` such that `e`'s endpoints connect through edges
/// of weight `<= t` other than `e`, by bisection over the sorted weights.
fn threshold_oracle(env: &WeightEnvironment, idx: usize) -> f64 {
    let lattice = env.lattice();
    let (a, b) = lattice.endpoints(idx);
    let mut ws: Vec<f64> = env.weights().to_vec();
    ws.sort_by(f64::total_cmp);
    let ok = |t: f64| reachable(&adjacency(lattice, Some(idx), |i| env.weight(i) <= t), a, b);
    if !ok(ws[ws.len() - 1]) {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0, ws.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if ok(ws[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    ws[lo]
}

/// Prim's tree on `G \ e`, then the heaviest edge on its path between the
/// endpoints of `e`.
fn prim_path_max(env: &WeightEnvironment, idx: usize) -> f64 {
    let lattice = env.lattice();
    let adj = adjacency(lattice, Some(idx), |_| true);
    let nv = lattice.vertex_count();
    let mut in_tree = vec![false; nv];
    let mut best = vec![(f64::INFINITY, usize::MAX); nv];
    let mut tree_adj = vec![Vec::new(); nv];
    best[0] = (0.0, usize::MAX);
    for _ in 0..nv {
        let u = (0..nv)
            .filter(|&v| !in_tree[v])
            .min_by(|&x, &y| best[x].0.total_cmp(&best[y].0))
            .unwrap();
        in_tree[u] = true;
        if best[u].1 != usize::MAX {
            let (p, q) = lattice.endpoints(best[u].1);
            let other = if p == u { q } else { p };
            tree_adj[u].push((other, best[u].1));
            tree_adj[other].push((u, best[u].1));
        }
        for &(v, e) in &adj[u] {
            if !in_tree[v] && env.weight(e) < best[v].0 {
                best[v] = (env.weight(e), e);
            }
        }
    }
    let (a, b) = lattice.endpoints(idx);
    // Path max by DFS carrying the running maximum.
    let mut stack = vec![(a, usize::MAX, 0.0f64)];
    while let Some((u, parent, m)) = stack.pop() {
        if u == b {
            return m;
        }
        for &(v, e) in &tree_adj[u] {
            if v != parent {
                stack.push((v, u, m.max(env.weight(e))));
            }
        }
    }
    f64::INFINITY
}

fn is_spanning_tree(nv: usize, edges: &[(usize, usize)]) -> bool {
    let mut label: Vec<usize> = (0..nv).collect();
    for &(u, v) in edges {
        let (lu, lv) = (label[u], label[v]);
        if lu == lv {
            return false;
        }
        for l in label.iter_mut() {
            if *l == lv {
                *l = lu;
            }
        }
    }
    edges.len() + 1 == nv
}

#[test]
fn kruskal_matches_exhaustive_search_on_3x3() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..20 {
        let env = random_env(2, 1, &mut rng);
        let lattice = env.lattice();
        let m = lattice.edge_count();
        let mut best = (f64::INFINITY, 0u32);
        for mask in 0u32..(1 << m) {
            if mask.count_ones() as usize != lattice.vertex_count() - 1 {
                continue;
            }
            let edges: Vec<(usize, usize)> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| lattice.endpoints(i)).collect();
            if is_spanning_tree(lattice.vertex_count(), &edges) {
                let w: f64 = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| env.weight(i)).sum();
                if w < best.0 {
                    best = (w, mask);
                }
            }
        }
        let mst = build_mst(&env);
        let mask: u32 = mst.tree.iter().map(|&i| 1u32 << i).sum();
        assert_eq!(mask, best.1);
        assert!((mst.total_weight - best.0).abs() < 1e-12);
    }
}

#[test]
fn alpha_matches_path_enumeration_on_3x3() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..10 {
        let env = random_env(2, 1, &mut rng);
        let lattice = env.lattice();
        let adj = adjacency(lattice, None, |_| true);
        for (idx, e) in lattice.edges().iter().enumerate() {
            let (a, b) = lattice.endpoints(idx);
            // Minimax over all simple paths avoiding e.
            let mut best = f64::INFINITY;
            let mut stack = vec![(a, 1u32 << a, 0.0f64)];
            while let Some((u, seen, m)) = stack.pop() {
                if u == b {
                    best = best.min(m);
                    continue;
                }
                for &(v, ei) in &adj[u] {
                    if ei != idx && seen >> v & 1 == 0 {
                        stack.push((v, seen | 1 << v, m.max(env.weight(ei))));
                    }
                }
            }
            assert_eq!(alpha(&env, e).unwrap().alpha, best);
        }
    }
}

#[test]
fn alpha_matches_threshold_and_prim_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for (d, n) in [(2, 1), (2, 2), (2, 3), (3, 1)] {
        for _ in 0..5 {
            let env = random_env(d, n, &mut rng);
            for (idx, e) in env.lattice().edges().iter().enumerate() {
                let q = alpha(&env, e).unwrap();
                assert_eq!(q.alpha, threshold_oracle(&env, idx));
                assert_eq!(q.alpha, prim_path_max(&env, idx));
            }
        }
    }
}

#[test]
fn delta_formula_matches_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut checks = 0;
    for env_no in 0..210 {
        let n = 1 + env_no % 3;
        let env = random_env(2, n, &mut rng);
        let before = build_mst(&env).total_weight;
        for _ in 0..10 {
            let idx = rng.random_range(0..env.lattice().edge_count());
            let e = env.lattice().edge(idx);
            let omega_prime = rng.random::<f64>() + 1e-12;
            let after = build_mst(&env.with_weight(idx, omega_prime).unwrap()).total_weight;
            let a = alpha(&env, &e).unwrap().alpha;
            let predicted = delta_m(a, env.weight(idx), omega_prime);
            assert!((predicted - (before - after)).abs() <= 1e-9, "{predicted} vs {}", before - after);
            checks += 1;
        }
    }
    assert_eq!(checks, 2100);
}

#[test]
fn membership_and_cycle_exchange() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for _ in 0..50 {
        let env = random_env(2, 2, &mut rng);
        let mst = build_mst(&env);
        for (idx, e) in env.lattice().edges().iter().enumerate() {
            assert_eq!(mst_membership(&env, e).unwrap(), mst.contains(idx));
            let h = alpha(&env, e).unwrap().achieving.unwrap();
            let lighter = if env.weight(idx) < env.weight(h) { idx } else { h };
            let heavier = if lighter == idx { h } else { idx };
            assert!(mst.contains(lighter) && !mst.contains(heavier));
        }
    }
}

#[test]
fn heaviest_cycle_edge_excluded_lightest_edge_included() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for _ in 0..20 {
        let env = random_env(2, 2, &mut rng);
        let lattice = env.lattice();
        let lightest = env.order().next().unwrap();
        assert!(mst_membership(&env, &lattice.edge(lightest)).unwrap());
        // Unit square with lower-left corner (0,0).
        let cell = ["0,0/0", "1,0/1", "0,1/0", "0,0/1"].map(|s| lattice.edge_index(&s.parse().unwrap()).unwrap());
        let heaviest = *cell.iter().max_by(|&&a, &&b| env.weight(a).total_cmp(&env.weight(b))).unwrap();
        assert!(!mst_membership(&env, &lattice.edge(heaviest)).unwrap());
    }
}

#[test]
fn order_preserving_relabeling_keeps_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for _ in 0..20 {
        let env = random_env(2, 3, &mut rng);
        let warped: Vec<f64> = env.weights().iter().map(|w| w.powi(3) + 2.0 * w).collect();
        let env2 = WeightEnvironment::from_values(env.lattice().clone(), warped).unwrap();
        assert_eq!(build_mst(&env).tree, build_mst(&env2).tree);
    }
}

#[test]
fn alpha_ignores_own_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let env = random_env(2, 3, &mut rng);
    for (idx, e) in env.lattice().edges().iter().enumerate() {
        let other = env.with_weight(idx, rng.random::<f64>() + 1e-12).unwrap();
        assert_eq!(alpha(&env, e).unwrap().alpha, alpha(&other, e).unwrap().alpha);
    }
}

#[test]
fn alpha_nonincreasing_in_radius_and_sandwiched() {
    let c = Edge::distinguished(2).unwrap();
    for seed in 0..40 {
        let w = HashedWeights::new(seed, WeightLaw::default()).unwrap();
        let alphas = alpha_monotonicity_probe(&c, &[2, 4, 8], w).unwrap();
        assert!(alphas.windows(2).all(|p| p[0] >= p[1]), "{alphas:?}");

        let n = 4;
        let env = WeightEnvironment::hashed(LatticeBox::new(2, n).unwrap(), w).unwrap();
        let outer = WeightEnvironment::hashed(LatticeBox::new(2, 3 * n).unwrap(), w).unwrap();
        for e in env.lattice().edges() {
            let a = alpha(&env, e).unwrap().alpha;
            let far = beta(&outer, e, 2 * n).unwrap().alpha;
            assert!(a >= far);
            for k in 1..n {
                if let Ok(b) = beta(&env, e, k) {
                    assert!(b.alpha >= a);
                }
            }
        }
        let betas: Vec<f64> = (1..=n).map(|k| beta(&env, &c, k).unwrap().alpha).collect();
        assert!(betas.windows(2).all(|p| p[0] >= p[1]));
    }
}

#[test]
fn hashed_environments_are_reproducible() {
    let w = HashedWeights::new(2024, WeightLaw::default()).unwrap();
    let a = WeightEnvironment::hashed(LatticeBox::new(2, 5).unwrap(), w).unwrap();
    let b = WeightEnvironment::hashed(LatticeBox::new(2, 5).unwrap(), w).unwrap();
    assert_eq!(a.weights(), b.weights());
    assert_eq!(build_mst(&a), build_mst(&b));
}

proptest! {
    #[test]
    fn delta_is_bounded_and_antisymmetric(alpha in 0.0f64..1.0, w in 0.0f64..1.0, wp in 0.0f64..1.0) {
        let d = delta_m(alpha, w, wp);
        prop_assert!(d.abs() <= (w - wp).abs() + 1e-15);
        prop_assert!((d + delta_m(alpha, wp, w)).abs() <= 1e-15);
        if w >= alpha && wp >= alpha {
            prop_assert_eq!(d, 0.0);
        }
    }
}

#[test]
fn theorem_bound_dominates_kolmogorov_distance() {
    use steinbound_core::mst::mst_theorem_bound;
    use steinbound_core::perturbative::McConfig;
    use steinbound_core::Parallelism;

    let cfg = |seed| McConfig::new(1000, seed).parallelism(Parallelism::new(2).unwrap());
    let n2 = mst_theorem_bound(2, 2, WeightLaw::default(), 2000, &cfg(11)).unwrap();
    let n3 = mst_theorem_bound(2, 3, WeightLaw::default(), 2000, &cfg(12)).unwrap();
    assert!(n2.bound_dominates(4.0), "{n2:?}");
    assert!(n3.bound_dominates(4.0), "{n3:?}");
    let se = n2.bound.theorem_bound.std_error.hypot(n3.bound.theorem_bound.std_error);
    assert!(n3.bound.theorem_bound.value <= n2.bound.theorem_bound.value + 4.0 * se);
    assert!((n2.bound.recompute_theorem_bound() - n2.bound.theorem_bound.value).abs() < 1e-12);
}

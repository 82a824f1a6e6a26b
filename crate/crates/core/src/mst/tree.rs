use crate::mst::lattice::LatticeBox;
use crate::mst::weights::WeightEnvironment;

/// Disjoint-set forest with union by size and path halving.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Merge the classes of `a` and `b`; false if already merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }

    pub fn connected(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Root of every element.
    pub fn roots(&mut self) -> Vec<usize> {
        (0..self.parent.len()).map(|x| self.find(x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MstResult {
    /// Tree edge indices in the order Kruskal accepted them.
    pub tree: Vec<usize>,
    pub in_tree: Vec<bool>,
    /// `M_n`.
    pub total_weight: f64,
    /// Root of each vertex in the final union-find forest.
    pub forest: Vec<usize>,
}

impl MstResult {
    pub fn contains(&self, index: usize) -> bool {
        self.in_tree[index]
    }
}

/// Kruskal over the environment's presorted edge order. Distinct weights make
/// the tree unique.
pub fn build_mst(env: &WeightEnvironment) -> MstResult {
    let lattice = env.lattice();
    let mut sets = DisjointSets::new(lattice.vertex_count());
    let mut in_tree = vec![false; lattice.edge_count()];
    let mut tree = Vec::with_capacity(lattice.vertex_count() - 1);
    let mut total = 0.0;
    for idx in env.order() {
        let (u, v) = lattice.endpoints(idx);
        if sets.union(u, v) {
            in_tree[idx] = true;
            tree.push(idx);
            total += env.weight(idx);
            if tree.len() + 1 == lattice.vertex_count() {
                break;
            }
        }
    }
    MstResult {
        tree,
        in_tree,
        total_weight: total,
        forest: sets.roots(),
    }
}

/// Minimal spanning tree weight for arbitrary weights (ties allowed: the
/// minimum is well defined even when the tree is not).
pub fn mst_weight(lattice: &LatticeBox, weights: &[f64]) -> f64 {
    let mut order: Vec<u32> = (0..weights.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| weights[a as usize].total_cmp(&weights[b as usize]));
    let mut sets = DisjointSets::new(lattice.vertex_count());
    let mut accepted = 0;
    // Tree edge weights in increasing order; summing them in that order keeps
    // the result independent of how ties are broken.
    let mut total = 0.0;
    for idx in order {
        let (u, v) = lattice.endpoints(idx as usize);
        if sets.union(u, v) {
            total += weights[idx as usize];
            accepted += 1;
            if accepted + 1 == lattice.vertex_count() {
                break;
            }
        }
    }
    total
}

//! Incompatibility graph over same-groups and maximum-weight independent
//! sets on it (here: minimum total weight, since improving weights are
//! negative).

use crate::branching::BranchingConstraints;

#[derive(Debug, Clone)]
pub struct IncompatibilityGraph {
    groups: Vec<Vec<usize>>,
    adjacency: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl IncompatibilityGraph {
    /// Vertices are the same-groups of `branching`, edges its different
    /// pairs. Weights start at zero.
    pub fn new(branching: &BranchingConstraints) -> Self {
        let groups = branching.groups().to_vec();
        let mut adjacency = vec![Vec::new(); groups.len()];
        for &(g, h) in branching.group_conflicts() {
            adjacency[g].push(h);
            adjacency[h].push(g);
        }
        let weights = vec![0.0; groups.len()];
        Self { groups, adjacency, weights }
    }

    pub fn num_vertices(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sets `ω_v = Σ_{i∈v} score[i]`.
    pub fn set_scores(&mut self, scores: &[f64]) {
        for (w, g) in self.weights.iter_mut().zip(&self.groups) {
            *w = g.iter().map(|&i| scores[i]).sum();
        }
    }

    pub fn weight_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&v| self.weights[v]).sum()
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter().all(|&v| self.adjacency[v].iter().all(|u| !set.contains(u)))
    }

    /// Demand points of the chosen vertices, sorted.
    pub fn points_of(&self, set: &[usize]) -> Vec<usize> {
        let mut s: Vec<usize> = set.iter().flat_map(|&v| self.groups[v].iter().copied()).collect();
        s.sort_unstable();
        s
    }

    /// Repeatedly adds the most negative vertex compatible with the set built
    /// so far; ties go to the lower index.
    pub fn greedy_mwis(&self) -> Vec<usize> {
        let n = self.num_vertices();
        let mut blocked = vec![false; n];
        let mut chosen = Vec::new();
        loop {
            let mut best: Option<usize> = None;
            for v in 0..n {
                if !blocked[v] && self.weights[v] < 0.0 && best.is_none_or(|b| self.weights[v] < self.weights[b]) {
                    best = Some(v);
                }
            }
            let Some(v) = best else { break };
            chosen.push(v);
            blocked[v] = true;
            for &u in &self.adjacency[v] {
                blocked[u] = true;
            }
        }
        chosen.sort_unstable();
        chosen
    }

    /// Minimum-weight independent set by depth-first enumeration over the
    /// negative vertices with suffix-sum pruning. Returns `None` if more than
    /// `node_limit` search nodes would be needed.
    pub fn exact_mwis(&self, node_limit: usize) -> Option<(f64, Vec<usize>)> {
        let mut order: Vec<usize> = (0..self.num_vertices()).filter(|&v| self.weights[v] < 0.0).collect();
        order.sort_by(|&a, &b| self.weights[a].total_cmp(&self.weights[b]).then(a.cmp(&b)));
        let mut suffix = vec![0.0; order.len() + 1];
        for t in (0..order.len()).rev() {
            suffix[t] = suffix[t + 1] + self.weights[order[t]];
        }
        // start from the greedy solution
        let greedy = self.greedy_mwis();
        let mut search = Search {
            g: self,
            order: &order,
            suffix: &suffix,
            blocked: vec![0; self.num_vertices()],
            current: Vec::new(),
            best_value: self.weight_of(&greedy),
            best: greedy,
            nodes: 0,
            limit: node_limit,
        };
        if !search.go(0, 0.0) {
            return None;
        }
        let mut best = search.best;
        best.sort_unstable();
        Some((search.best_value, best))
    }

    /// Enumerates every subset; only for small graphs in tests.
    pub fn brute_force_mwis(&self) -> (f64, Vec<usize>) {
        let n = self.num_vertices();
        assert!(n <= 24, "brute force limited to 24 vertices");
        let mut best = (0.0, Vec::new());
        for mask in 0u32..(1u32 << n) {
            let set: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
            if self.is_independent(&set) {
                let w = self.weight_of(&set);
                if w < best.0 {
                    best = (w, set);
                }
            }
        }
        best
    }
}

struct Search<'a> {
    g: &'a IncompatibilityGraph,
    order: &'a [usize],
    suffix: &'a [f64],
    blocked: Vec<u32>,
    current: Vec<usize>,
    best_value: f64,
    best: Vec<usize>,
    nodes: usize,
    limit: usize,
}

impl Search<'_> {
    /// Returns false when the node limit is hit.
    fn go(&mut self, t: usize, value: f64) -> bool {
        self.nodes += 1;
        if self.nodes > self.limit {
            return false;
        }
        if value + self.suffix[t] >= self.best_value - 1e-15 {
            return true;
        }
        if t == self.order.len() {
            self.best_value = value;
            self.best = self.current.clone();
            return true;
        }
        let v = self.order[t];
        if self.blocked[v] == 0 {
            self.current.push(v);
            for &u in &self.g.adjacency[v] {
                self.blocked[u] += 1;
            }
            let ok = self.go(t + 1, value + self.g.weights[v]);
            for &u in &self.g.adjacency[v] {
                self.blocked[u] -= 1;
            }
            self.current.pop();
            if !ok {
                return false;
            }
        }
        self.go(t + 1, value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::PairSide;

    #[test]
    fn no_constraints_selects_all_negatives() {
        let b = BranchingConstraints::new(4);
        let mut g = IncompatibilityGraph::new(&b);
        g.set_scores(&[-1.0, 2.0, -0.5, 0.0]);
        assert_eq!(g.greedy_mwis(), vec![0, 2]);
        assert_eq!(g.exact_mwis(1000).unwrap().1, vec![0, 2]);
    }

    #[test]
    fn same_group_enters_as_unit() {
        let b = BranchingConstraints::new(2).with_pair(0, 1, PairSide::Same).unwrap();
        let mut g = IncompatibilityGraph::new(&b);
        g.set_scores(&[-3.0, 1.0]);
        assert_eq!(g.weights(), &[-2.0]);
        assert_eq!(g.points_of(&g.greedy_mwis()), vec![0, 1]);
    }

    #[test]
    fn greedy_can_be_suboptimal_exact_is_not() {
        // path a - b - c with weights -2, -3, -2: greedy takes b, optimum is {a, c}
        let b = BranchingConstraints::new(3)
            .with_pair(0, 1, PairSide::Different)
            .unwrap()
            .with_pair(1, 2, PairSide::Different)
            .unwrap();
        let mut g = IncompatibilityGraph::new(&b);
        g.set_scores(&[-2.0, -3.0, -2.0]);
        assert_eq!(g.greedy_mwis(), vec![1]);
        let (v, s) = g.exact_mwis(1000).unwrap();
        assert_eq!((v, s), (-4.0, vec![0, 2]));
        assert!(g.exact_mwis(1).is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn exact_matches_brute_force_and_bounds_greedy(
                scores in proptest::collection::vec(-5.0f64..3.0, 6),
                pairs in proptest::collection::vec((0usize..6, 0usize..6, any::<bool>()), 0..6)
            ) {
                let mut b = BranchingConstraints::new(6);
                for (i, j, same) in pairs {
                    if i == j || b.is_constrained(i, j) {
                        continue;
                    }
                    let side = if same { PairSide::Same } else { PairSide::Different };
                    if let Ok(next) = b.with_pair(i, j, side) {
                        b = next;
                    }
                }
                let mut g = IncompatibilityGraph::new(&b);
                g.set_scores(&scores);
                let (bv, _) = g.brute_force_mwis();
                let (ev, es) = g.exact_mwis(1_000_000).unwrap();
                prop_assert!(g.is_independent(&es));
                prop_assert!((ev - bv).abs() <= 1e-12);
                let greedy = g.greedy_mwis();
                prop_assert!(g.is_independent(&greedy));
                prop_assert!(g.weight_of(&greedy) >= bv - 1e-12);
                prop_assert!(b.allows(&g.points_of(&greedy)));
            }
        }
    }
}

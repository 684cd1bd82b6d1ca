//! Same/different pair constraints accumulated along a branch of the tree.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Which side of a Ryan–Foster branch a pair was fixed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairSide {
    /// The two points must be served by different facilities.
    Different,
    /// The two points must be served by the same facility.
    Same,
}

/// Pair constraints over `n` demand points.
///
/// Same-pairs are closed transitively into groups; every point belongs to
/// exactly one group (singletons included). Different-pairs are kept as
/// given and lifted to conflicts between groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchingConstraints {
    n: usize,
    same: Vec<(usize, usize)>,
    different: Vec<(usize, usize)>,
    group_of: Vec<usize>,
    groups: Vec<Vec<usize>>,
    conflicts: Vec<(usize, usize)>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl BranchingConstraints {
    pub fn new(n: usize) -> Self {
        let mut c = Self {
            n,
            same: Vec::new(),
            different: Vec::new(),
            group_of: Vec::new(),
            groups: Vec::new(),
            conflicts: Vec::new(),
        };
        c.rebuild();
        c
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.same.is_empty() && self.different.is_empty()
    }

    pub fn same_pairs(&self) -> &[(usize, usize)] {
        &self.same
    }

    pub fn different_pairs(&self) -> &[(usize, usize)] {
        &self.different
    }

    /// Groups of points forced together, ordered by smallest member.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_of(&self, i: usize) -> usize {
        self.group_of[i]
    }

    /// Pairs of groups that may not share a facility, `g < h`, sorted.
    pub fn group_conflicts(&self) -> &[(usize, usize)] {
        &self.conflicts
    }

    /// True when the pair is already decided by the constraints (same group
    /// or conflicting groups).
    pub fn is_constrained(&self, i: usize, j: usize) -> bool {
        let (g, h) = (self.group_of[i], self.group_of[j]);
        g == h || self.conflicts.binary_search(&(g.min(h), g.max(h))).is_ok()
    }

    /// Returns a copy with one more pair fixed.
    pub fn with_pair(&self, i: usize, j: usize, side: PairSide) -> Result<Self> {
        if i >= self.n || j >= self.n {
            return invalid(format!("pair ({i}, {j}) out of range for {} points", self.n));
        }
        if i == j {
            return invalid("a branching pair needs two distinct points");
        }
        let pair = (i.min(j), i.max(j));
        let mut c = self.clone();
        match side {
            PairSide::Same => c.same.push(pair),
            PairSide::Different => c.different.push(pair),
        }
        c.rebuild();
        if let Some(&(a, b)) = c.different.iter().find(|&&(a, b)| c.group_of[a] == c.group_of[b]) {
            return invalid(format!("points {a} and {b} are required to be both together and apart"));
        }
        Ok(c)
    }

    fn rebuild(&mut self) {
        let mut parent: Vec<usize> = (0..self.n).collect();
        for &(a, b) in &self.same {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        self.group_of = vec![usize::MAX; self.n];
        self.groups.clear();
        for i in 0..self.n {
            let r = find(&mut parent, i);
            if self.group_of[r] == usize::MAX {
                self.group_of[r] = self.groups.len();
                self.groups.push(Vec::new());
            }
            let g = self.group_of[r];
            self.group_of[i] = g;
            self.groups[g].push(i);
        }
        let mut conflicts: Vec<(usize, usize)> = self
            .different
            .iter()
            .map(|&(a, b)| {
                let (g, h) = (self.group_of[a], self.group_of[b]);
                (g.min(h), g.max(h))
            })
            .collect();
        conflicts.sort_unstable();
        conflicts.dedup();
        self.conflicts = conflicts;
    }

    /// Whether a column serving exactly the points of `subset` respects every
    /// constraint: same-groups entirely in or out, no different-pair inside.
    pub fn allows(&self, subset: &[usize]) -> bool {
        self.violation(subset).is_none()
    }

    /// Describes the first violated constraint, if any.
    pub fn violation(&self, subset: &[usize]) -> Option<String> {
        let mut inside = vec![false; self.n];
        for &i in subset {
            if i < self.n {
                inside[i] = true;
            }
        }
        for &(a, b) in &self.same {
            if inside[a] != inside[b] {
                return Some(format!("splits same-facility pair ({a}, {b})"));
            }
        }
        for &(a, b) in &self.different {
            if inside[a] && inside[b] {
                return Some(format!("joins different-facility pair ({a}, {b})"));
            }
        }
        None
    }

    /// Whether an allocation (point → block label) satisfies the constraints.
    pub fn allows_partition(&self, block_of: &[usize]) -> bool {
        self.same.iter().all(|&(a, b)| block_of[a] == block_of[b])
            && self.different.iter().all(|&(a, b)| block_of[a] != block_of[b])
    }
}

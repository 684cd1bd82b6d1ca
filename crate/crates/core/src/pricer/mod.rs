//! Column generation subproblem: find a subset `S` and a facility `x` with
//! negative reduced cost `γ + Σ_{i∈S} (−αᵢ + cᵢ‖aᵢ − x‖)`.
//!
//! For a fixed `x` the best `S` takes every point with negative score
//! (or, under branching constraints, a minimum-weight independent set of
//! same-groups); for a fixed `S` the best `x` is a Weber point. The
//! heuristics alternate the two from sampled candidate positions; the exact
//! pricer in [`exact`] searches over `x` by spatial branch-and-bound.

pub mod exact;
pub mod mwis;
pub mod weber;

use rand::Rng;

use crate::branching::BranchingConstraints;
use crate::master::{Column, MasterDuals};
use crate::model::{bounding_box, Hyperrect, Instance, LambdaVector, Point};

pub use exact::{exact_price, ExactPricingOptions, ExactPricingResult};
pub use mwis::IncompatibilityGraph;
pub use weber::{weber_point, weber_solve};

/// Most columns returned by one pricer call.
pub const MULTIPLE_PRICING_CAP: usize = 10;
/// A column is improving when its reduced cost is below `−IMPROVEMENT_TOL`.
pub const IMPROVEMENT_TOL: f64 = 1e-6;
/// Random candidate positions per heuristic call, in addition to the box center.
pub const RANDOM_CANDIDATES: usize = 32;

const REFINE_ROUNDS: usize = 10;

/// Scores `eᵢ = −αᵢ + cᵢ·‖aᵢ − x‖` straight from master duals.
pub fn point_scores(x: &[f64], duals: &MasterDuals, lambda: &LambdaVector, instance: &Instance) -> Vec<f64> {
    let c = duals.distance_weights(lambda);
    (0..instance.n()).map(|i| -duals.alpha[i] + c[i] * instance.dist(i, x)).collect()
}

/// Duals of the current master together with the node's branching state.
#[derive(Debug, Clone, Copy)]
pub struct PricingProblem<'a> {
    pub instance: &'a Instance,
    pub alpha: &'a [f64],
    pub gamma: f64,
    /// Distance weights `cᵢ = Σₖ λₖ εᵢₖ`.
    pub c: &'a [f64],
    pub branching: &'a BranchingConstraints,
}

impl<'a> PricingProblem<'a> {
    pub fn new(
        instance: &'a Instance,
        alpha: &'a [f64],
        gamma: f64,
        c: &'a [f64],
        branching: &'a BranchingConstraints,
    ) -> Self {
        Self { instance, alpha, gamma, c, branching }
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        (0..self.instance.n()).map(|i| -self.alpha[i] + self.c[i] * self.instance.dist(i, x)).collect()
    }

    /// Reduced cost of serving `subset` from `x`.
    pub fn value(&self, subset: &[usize], x: &[f64]) -> f64 {
        self.gamma + subset.iter().map(|&i| -self.alpha[i] + self.c[i] * self.instance.dist(i, x)).sum::<f64>()
    }

    /// Box that contains an optimal facility of every improving column.
    ///
    /// Without branching only points with `αᵢ > 0` can have a negative score,
    /// and moving `x` into their bounding box shortens every relevant
    /// distance. Under branching a group may mix such points with others, so
    /// the full bounding box is used. `None` when no point can ever score
    /// negative.
    pub fn search_box(&self) -> Option<Hyperrect> {
        if !self.branching.is_empty() {
            return Some(bounding_box(self.instance));
        }
        let d = self.instance.d();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        let mut any = false;
        for i in 0..self.instance.n() {
            if self.alpha[i] > 0.0 {
                any = true;
                for (l, &v) in self.instance.point(i).iter().enumerate() {
                    lo[l] = lo[l].min(v);
                    hi[l] = hi[l].max(v);
                }
            }
        }
        any.then(|| Hyperrect::new(lo, hi))
    }

    /// Best subset for a fixed `x` by the sign rule (no branching) or the
    /// greedy independent set (branching).
    pub fn select_heuristic(&self, x: &[f64], graph: &mut IncompatibilityGraph) -> Vec<usize> {
        let e = self.scores(x);
        if self.branching.is_empty() {
            return (0..e.len()).filter(|&i| e[i] < 0.0).collect();
        }
        graph.set_scores(&e);
        graph.points_of(&graph.greedy_mwis())
    }

    /// Alternates Weber relocation and subset reselection while the reduced
    /// cost improves.
    pub fn refine(&self, mut subset: Vec<usize>, mut x: Point, graph: &mut IncompatibilityGraph) -> (Vec<usize>, Point, f64) {
        let mut v = self.value(&subset, &x);
        for _ in 0..REFINE_ROUNDS {
            if subset.is_empty() {
                break;
            }
            let w: Vec<f64> = subset.iter().map(|&i| self.c[i]).collect();
            let pts: Vec<&[f64]> = subset.iter().map(|&i| self.instance.point(i)).collect();
            let nx = weber_point(&pts, &w, self.instance.norm());
            let ns = self.select_heuristic(&nx, graph);
            let nv = self.value(&ns, &nx);
            // the relocated facility with the old subset is never worse
            let kept = self.value(&subset, &nx);
            if nv < v - 1e-12 && nv <= kept {
                let same = ns == subset;
                subset = ns;
                x = nx;
                v = nv;
                if same {
                    break;
                }
            } else if kept < v - 1e-12 {
                x = nx;
                v = kept;
                break;
            } else {
                break;
            }
        }
        (subset, x, v)
    }

    pub fn column(&self, subset: Vec<usize>, x: Point) -> Column {
        Column::new(self.instance, subset, x).expect("pricing produced a malformed column")
    }
}

/// Best distinct improving `(S, x)` pairs seen so far, at most `cap`.
#[derive(Debug, Clone)]
pub(crate) struct Collector {
    cap: usize,
    items: Vec<(f64, Vec<usize>, Point)>,
}

impl Collector {
    pub(crate) fn new(cap: usize) -> Self {
        Self { cap, items: Vec::new() }
    }

    pub(crate) fn offer(&mut self, value: f64, subset: &[usize], x: &[f64]) {
        if subset.is_empty() || !(value < -IMPROVEMENT_TOL) {
            return;
        }
        if let Some(item) = self.items.iter_mut().find(|it| it.1 == subset) {
            if value < item.0 {
                item.0 = value;
                item.2 = x.to_vec();
            }
        } else {
            if self.items.len() == self.cap && value >= self.items.last().unwrap().0 {
                return;
            }
            self.items.push((value, subset.to_vec(), x.to_vec()));
        }
        self.items.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        self.items.truncate(self.cap);
    }

    pub(crate) fn into_columns(self, problem: &PricingProblem) -> Vec<Column> {
        self.items.into_iter().map(|(_, s, x)| problem.column(s, x)).collect()
    }
}

/// Box center plus [`RANDOM_CANDIDATES`] uniform points of the search box.
pub fn generate_candidates(problem: &PricingProblem, rng: &mut impl Rng) -> Vec<Point> {
    let Some(b) = problem.search_box() else { return Vec::new() };
    let mut out = vec![b.center()];
    for _ in 0..RANDOM_CANDIDATES {
        out.push(
            b.lo.iter()
                .zip(&b.hi)
                .map(|(&l, &h)| if h > l { rng.gen_range(l..=h) } else { l })
                .collect(),
        );
    }
    out
}

fn heuristic_price_with(problem: &PricingProblem, candidates: &[Point]) -> Vec<Column> {
    let mut graph = IncompatibilityGraph::new(problem.branching);
    let mut keep = Collector::new(MULTIPLE_PRICING_CAP);
    for x in candidates {
        let s = problem.select_heuristic(x, &mut graph);
        if s.is_empty() || problem.value(&s, x) >= -IMPROVEMENT_TOL {
            continue;
        }
        let (s, x, v) = problem.refine(s, x.clone(), &mut graph);
        debug_assert!(problem.branching.allows(&s));
        keep.offer(v, &s, &x);
    }
    keep.into_columns(problem)
}

/// Sign-rule pricer for nodes without branching constraints.
pub fn heuristic_price_root(problem: &PricingProblem, candidates: &[Point]) -> Vec<Column> {
    debug_assert!(problem.branching.is_empty());
    heuristic_price_with(problem, candidates)
}

/// Greedy independent-set pricer for nodes with branching constraints.
pub fn heuristic_price_branched(problem: &PricingProblem, candidates: &[Point]) -> Vec<Column> {
    heuristic_price_with(problem, candidates)
}

/// Dispatches to the root or branched heuristic.
pub fn heuristic_price(problem: &PricingProblem, candidates: &[Point]) -> Vec<Column> {
    if problem.branching.is_empty() {
        heuristic_price_root(problem, candidates)
    } else {
        heuristic_price_branched(problem, candidates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::master::{reduced_cost, ColumnPool, NodeMaster};
    use crate::model::{make_lambda, LambdaKind, NormSpec};
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn single() -> Instance {
        let w = make_lambda(LambdaKind::W, 1, 0, 0.0).unwrap();
        Instance::new(vec![vec![0.0, 0.0]], 1, NormSpec::L2, w).unwrap()
    }

    #[test]
    fn scores_examples() {
        let inst = single();
        let lam = inst.lambda();
        let zero = MasterDuals { alpha: vec![0.0], gamma: 0.0, epsilon: vec![vec![1.0]] };
        assert!(point_scores(&[3.0, 4.0], &zero, lam, &inst).iter().all(|&e| e >= 0.0));
        let even = MasterDuals { alpha: vec![5.0], gamma: 0.0, epsilon: vec![vec![1.0]] };
        assert_eq!(point_scores(&[3.0, 4.0], &even, lam, &inst), vec![0.0]);
        let d = MasterDuals { alpha: vec![5.0], gamma: 0.0, epsilon: vec![vec![1.0]] };
        assert_eq!(point_scores(&[2.0, 0.0], &d, lam, &inst), vec![-3.0]);
    }

    #[test]
    fn root_heuristic_examples() {
        let inst = single();
        let none = BranchingConstraints::new(1);
        let c = [1.0];
        let p = PricingProblem::new(&inst, &[0.0], 0.0, &c, &none);
        assert!(heuristic_price_root(&p, &[vec![1.0, 1.0]]).is_empty());

        // e₀ = −1 at x, γ = 0.5 → reduced cost −0.5 before refinement
        let p = PricingProblem::new(&inst, &[2.0], 0.5, &c, &none);
        let x = vec![1.0, 0.0];
        assert_relative_eq!(p.value(&[0], &x), -0.5);
        let cols = heuristic_price_root(&p, &[x]);
        assert_eq!(cols.len(), 1);
        assert_eq!(cols[0].subset, vec![0]);
        // Weber refinement moves the facility onto the point
        assert_eq!(cols[0].facility, vec![0.0, 0.0]);
    }

    #[test]
    fn branched_with_no_constraints_matches_sign_rule() {
        let lam = make_lambda(LambdaKind::W, 4, 0, 0.0).unwrap();
        let inst = Instance::new(vec![vec![0.0], vec![1.0], vec![5.0], vec![9.0]], 2, NormSpec::L1, lam).unwrap();
        let none = BranchingConstraints::new(4);
        let alpha = [2.0, 2.0, 1.0, 0.0];
        let c = [1.0, 1.0, 1.0, 1.0];
        let p = PricingProblem::new(&inst, &alpha, 0.0, &c, &none);
        let mut g = IncompatibilityGraph::new(&none);
        let x = [0.5];
        let sign: Vec<usize> = p.scores(&x).iter().enumerate().filter(|(_, &e)| e < 0.0).map(|(i, _)| i).collect();
        assert_eq!(p.select_heuristic(&x, &mut g), sign);
    }

    fn five_point_master() -> (Instance, ColumnPool, crate::master::RrmpSolution) {
        let lam = make_lambda(LambdaKind::D, 5, 0, 0.9).unwrap();
        let pts = vec![vec![0.0, 0.0], vec![1.0, 3.0], vec![4.0, 1.0], vec![5.0, 5.0], vec![2.0, 2.0]];
        let inst = Instance::new(pts, 2, NormSpec::L1, lam).unwrap();
        let none = BranchingConstraints::new(5);
        let mut pool = ColumnPool::new(&inst);
        pool.add_columns(&inst, [Column::new(&inst, vec![0, 1, 2, 3, 4], vec![2.0, 2.0]).unwrap()], &none);
        let mut node = NodeMaster::new(&inst, &pool, &none, None).unwrap();
        let sol = node.solve(&inst).unwrap();
        (inst, pool, sol)
    }

    #[test]
    fn emitted_columns_match_master_reduced_cost() {
        let (inst, _, sol) = five_point_master();
        let none = BranchingConstraints::new(5);
        let p = PricingProblem::new(&inst, &sol.duals.alpha, sol.duals.gamma, &sol.weights, &none);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let cands = generate_candidates(&p, &mut rng);
        assert_eq!(cands.len(), 1 + RANDOM_CANDIDATES);
        let cols = heuristic_price_root(&p, &cands);
        assert!(!cols.is_empty());
        assert!(cols.len() <= MULTIPLE_PRICING_CAP);
        for col in &cols {
            let rc = reduced_cost(col, &sol.duals, inst.lambda());
            assert!(rc <= -IMPROVEMENT_TOL);
            assert_relative_eq!(rc, p.value(&col.subset, &col.facility), epsilon = 1e-9);
        }
    }

    #[test]
    fn branched_columns_respect_constraints() {
        use crate::branching::PairSide;
        let (inst, _, sol) = five_point_master();
        let b = BranchingConstraints::new(5)
            .with_pair(0, 4, PairSide::Different)
            .unwrap()
            .with_pair(1, 2, PairSide::Same)
            .unwrap();
        let p = PricingProblem::new(&inst, &sol.duals.alpha, sol.duals.gamma, &sol.weights, &b);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let cands = generate_candidates(&p, &mut rng);
        for col in heuristic_price_branched(&p, &cands) {
            assert!(b.allows(&col.subset));
            assert!(p.value(&col.subset, &col.facility) <= -IMPROVEMENT_TOL);
        }
    }
}

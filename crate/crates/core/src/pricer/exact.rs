//! Certified pricing by best-first spatial branch-and-bound over the
//! facility position.
//!
//! For a box `B`, point `i` contributes at least `min(0, −αᵢ + cᵢ·dist_lb(aᵢ, B))`.
//! Without branching, points whose score is nonpositive on all of `B` are
//! certainly selected and their distance terms are bounded jointly by the
//! minimum of a convex function over `B`, which keeps the bound tight on
//! flat regions. Under branching the same holds for same-groups, after
//! enumerating which of the groups in conflict with each other a selection
//! takes. With too many such groups the bound falls back to an exact
//! independent-set search on per-group bounds, and if that exceeds its node
//! limit to dropping the conflict edges, which is still valid.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::{Collector, IncompatibilityGraph, PricingProblem, MULTIPLE_PRICING_CAP};
use crate::master::Column;
use crate::model::{Hyperrect, NormSpec, Point};
use crate::pricer::weber::weighted_median;

/// Most contested groups enumerated per box before falling back to the
/// independent-set bound.
const CONTESTED_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy)]
pub struct ExactPricingOptions {
    /// Stop once every open box has bound ≥ best value − `tol`.
    pub tol: f64,
    /// Boxes with bound ≥ best value − `prune_tol` are discarded.
    pub prune_tol: f64,
    pub deadline: Option<Instant>,
    pub max_boxes: usize,
    /// Stop early as soon as a column with reduced cost below this is known.
    pub stop_below: Option<f64>,
    pub mwis_node_limit: usize,
    pub cap: usize,
}

impl Default for ExactPricingOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            prune_tol: 1e-8,
            deadline: None,
            max_boxes: 5_000_000,
            stop_below: None,
            mwis_node_limit: 200_000,
            cap: MULTIPLE_PRICING_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExactPricingResult {
    /// Smallest reduced cost attained by a found column; `γ` if none improves
    /// on the empty selection.
    pub min_reduced_cost: f64,
    /// No column has reduced cost below this value.
    pub lower_bound: f64,
    /// True when the search closed: `lower_bound ≥ min_reduced_cost − tol`.
    pub exact: bool,
    /// Improving columns, best first, at most `cap`.
    pub columns: Vec<Column>,
    /// Subset and facility attaining `min_reduced_cost`, if any.
    pub best: Option<(Vec<usize>, Point)>,
    pub boxes: usize,
    /// Some box bound fell back to dropping conflict edges.
    pub relaxed: bool,
}

struct OpenBox {
    lb: f64,
    id: u64,
    rect: Hyperrect,
}

impl PartialEq for OpenBox {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OpenBox {}
impl PartialOrd for OpenBox {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenBox {
    // max-heap: reverse so the smallest bound (then smallest id) pops first
    fn cmp(&self, other: &Self) -> Ordering {
        other.lb.total_cmp(&self.lb).then(other.id.cmp(&self.id))
    }
}

struct Search<'p, 'a> {
    p: &'p PricingProblem<'a>,
    opts: ExactPricingOptions,
    graph: IncompatibilityGraph,
    best_value: f64,
    best: Option<(Vec<usize>, Point)>,
    keep: Collector,
    relaxed: bool,
    lb_scores: Vec<f64>,
}

impl Search<'_, '_> {
    /// Minimum over x ∈ B of `Σ_{i∈in} cᵢ‖aᵢ − x‖`, bounded from below, with
    /// the point used for the bound.
    fn convex_part(&self, members: &[usize], b: &Hyperrect) -> (f64, Point) {
        let inst = self.p.instance;
        let norm = inst.norm();
        let f = |x: &[f64]| members.iter().map(|&i| self.p.c[i] * inst.dist(i, x)).sum::<f64>();
        let w: Vec<f64> = members.iter().map(|&i| self.p.c[i]).collect();
        let median: Point = (0..b.dim())
            .map(|l| {
                let vals: Vec<f64> = members.iter().map(|&i| inst.point(i)[l]).collect();
                weighted_median(&vals, &w).clamp(b.lo[l], b.hi[l])
            })
            .collect();
        if norm == NormSpec::L1 {
            // separable: each coordinate's convex piece is minimized by the clamped median
            return (f(&median), median);
        }
        let center = b.center();
        let (fc, fm) = (f(&center), f(&median));
        let (xh, fx) = if fm < fc { (median, fm) } else { (center, fc) };
        let mut g = vec![0.0; b.dim()];
        for &i in members {
            norm.add_subgradient(inst.point(i), &xh, self.p.c[i], &mut g);
        }
        let mut lin = fx;
        for l in 0..b.dim() {
            lin += (g[l] * (b.lo[l] - xh[l])).min(g[l] * (b.hi[l] - xh[l]));
        }
        let floor: f64 = members.iter().map(|&i| self.p.c[i] * b.dist_lb(inst.point(i), norm)).sum();
        (lin.max(floor), xh)
    }

    /// Lower bound on the reduced cost of any column with facility in `b`,
    /// plus a promising point of `b` when one is available.
    fn bound(&mut self, b: &Hyperrect) -> (f64, Option<Point>) {
        let inst = self.p.instance;
        let norm = inst.norm();
        if self.p.branching.is_empty() {
            let mut lb = self.p.gamma;
            let mut members = Vec::new();
            for i in 0..inst.n() {
                let a = self.p.alpha[i];
                if a <= 0.0 {
                    continue;
                }
                let lo = -a + self.p.c[i] * b.dist_lb(inst.point(i), norm);
                if lo >= 0.0 {
                    continue;
                }
                let hi = -a + self.p.c[i] * b.dist_ub(inst.point(i), norm);
                if hi <= 0.0 {
                    members.push(i);
                    lb -= a;
                } else {
                    lb += lo;
                }
            }
            if members.is_empty() {
                return (lb, None);
            }
            let (m, xh) = self.convex_part(&members, b);
            return (lb + m, Some(xh));
        }
        let mut hi_scores = vec![0.0; inst.n()];
        for i in 0..inst.n() {
            self.lb_scores[i] = -self.p.alpha[i] + self.p.c[i] * b.dist_lb(inst.point(i), norm);
            hi_scores[i] = -self.p.alpha[i] + self.p.c[i] * b.dist_ub(inst.point(i), norm);
        }
        self.graph.set_scores(&hi_scores);
        let hi_w = self.graph.weights().to_vec();
        self.graph.set_scores(&self.lb_scores);
        let mut lo_w = self.graph.weights().to_vec();
        for (g, members) in self.graph.groups().iter().enumerate() {
            // a group's own distance terms share the facility: bound them jointly
            if lo_w[g] < 0.0 && members.iter().filter(|&&i| self.p.c[i] > 0.0).count() > 1 {
                let fixed: f64 = members.iter().map(|&i| self.p.alpha[i]).sum();
                lo_w[g] = lo_w[g].max(self.convex_part(members, b).0 - fixed);
            }
        }
        if let Some(r) = self.contested_bound(b, &lo_w, &hi_w) {
            return r;
        }
        // groups that never hurt anywhere in `b` and conflict with no group
        // that could help: some best selection at every x contains them
        let mut members = Vec::new();
        let mut fixed = 0.0;
        for g in 0..lo_w.len() {
            if hi_w[g] <= 0.0 && self.graph.neighbors(g).iter().all(|&u| lo_w[u] >= 0.0) {
                for &i in &self.graph.groups()[g] {
                    members.push(i);
                    fixed -= self.p.alpha[i];
                    self.lb_scores[i] = 0.0;
                }
            }
        }
        if !members.is_empty() {
            self.graph.set_scores(&self.lb_scores);
        }
        let v = match self.graph.exact_mwis(self.opts.mwis_node_limit) {
            Some((v, _)) => v,
            None => {
                self.relaxed = true;
                self.graph.weights().iter().map(|w| w.min(0.0)).sum()
            }
        };
        if members.is_empty() {
            return (self.p.gamma + v, None);
        }
        members.sort_unstable();
        let (m, xh) = self.convex_part(&members, b);
        (self.p.gamma + v + fixed + m, Some(xh))
    }

    /// Branched bound by enumerating which contested groups (candidates in
    /// conflict with another candidate) a selection takes. Groups taken that
    /// are nonpositive on all of `b` join the certainly selected ones in the
    /// joint convex term. `None` when too many groups are contested.
    fn contested_bound(&self, b: &Hyperrect, lo_w: &[f64], hi_w: &[f64]) -> Option<(f64, Option<Point>)> {
        let groups = self.graph.groups();
        let cand: Vec<bool> = lo_w.iter().map(|&w| w < 0.0).collect();
        let mut contested = Vec::new();
        let mut base = self.p.gamma;
        let mut members = Vec::new();
        let mut optional = Vec::new();
        for g in 0..groups.len() {
            if !cand[g] {
                continue;
            }
            if self.graph.neighbors(g).iter().any(|&u| cand[u]) {
                contested.push(g);
            } else if hi_w[g] <= 0.0 {
                for &i in &groups[g] {
                    members.push(i);
                    base -= self.p.alpha[i];
                }
            } else {
                optional.push(g);
            }
        }
        if contested.len() > CONTESTED_LIMIT {
            return None;
        }
        // free groups of either sign are enumerated too while there is room,
        // so they join the joint convex term; the rest are bounded alone
        for g in optional {
            if contested.len() < CONTESTED_LIMIT {
                contested.push(g);
            } else {
                base += lo_w[g];
            }
        }
        let mut best: (f64, Option<Point>) = (f64::INFINITY, None);
        let mut taken = Vec::new();
        self.enumerate_contested(b, &contested, 0, &mut taken, base, &members, lo_w, hi_w, &mut best);
        Some(best)
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate_contested(
        &self,
        b: &Hyperrect,
        contested: &[usize],
        t: usize,
        taken: &mut Vec<usize>,
        base: f64,
        members: &[usize],
        lo_w: &[f64],
        hi_w: &[f64],
        best: &mut (f64, Option<Point>),
    ) {
        if t == contested.len() {
            let groups = self.graph.groups();
            let mut value = base;
            let mut mem = members.to_vec();
            // a taken group shares the facility with the fixed members,
            // whatever the sign of its score
            for &g in taken.iter() {
                for &i in &groups[g] {
                    mem.push(i);
                    value -= self.p.alpha[i];
                }
            }
            let mut xh = None;
            if !mem.is_empty() {
                mem.sort_unstable();
                let (m, x) = self.convex_part(&mem, b);
                value += m;
                xh = Some(x);
            }
            if value < best.0 {
                *best = (value, xh);
            }
            return;
        }
        let g = contested[t];
        self.enumerate_contested(b, contested, t + 1, taken, base, members, lo_w, hi_w, best);
        if !taken.iter().any(|u| self.graph.neighbors(g).contains(u)) {
            taken.push(g);
            self.enumerate_contested(b, contested, t + 1, taken, base, members, lo_w, hi_w, best);
            taken.pop();
        }
    }

    /// Best subset at a fixed point: sign rule, or exact (else greedy)
    /// independent set under branching.
    fn select(&mut self, x: &[f64]) -> Vec<usize> {
        let e = self.p.scores(x);
        if self.p.branching.is_empty() {
            return (0..e.len()).filter(|&i| e[i] < 0.0).collect();
        }
        self.graph.set_scores(&e);
        let set = match self.graph.exact_mwis(self.opts.mwis_node_limit) {
            Some((_, s)) => s,
            None => self.graph.greedy_mwis(),
        };
        self.graph.points_of(&set)
    }

    fn probe(&mut self, x: Point) {
        let s = self.select(&x);
        if s.is_empty() {
            return;
        }
        let v = self.p.value(&s, &x);
        self.keep.offer(v, &s, &x);
        if v < self.best_value {
            let (rs, rx, rv) = self.p.refine(s.clone(), x.clone(), &mut self.graph);
            let (s, x, v) = if rv < v { (rs, rx, rv) } else { (s, x, v) };
            self.keep.offer(v, &s, &x);
            if v < self.best_value {
                self.best_value = v;
                self.best = Some((s, x));
            }
        }
    }

    fn out_of_budget(&self, boxes: usize) -> bool {
        boxes >= self.opts.max_boxes
            || self.opts.stop_below.is_some_and(|t| self.best_value < t)
            || self.opts.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// Minimum reduced cost over all columns allowed by the problem's branching
/// constraints, with a certified lower bound.
pub fn exact_price(problem: &PricingProblem, opts: &ExactPricingOptions) -> ExactPricingResult {
    let mut s = Search {
        p: problem,
        opts: *opts,
        graph: IncompatibilityGraph::new(problem.branching),
        best_value: problem.gamma,
        best: None,
        keep: Collector::new(opts.cap),
        relaxed: false,
        lb_scores: vec![0.0; problem.instance.n()],
    };
    let Some(root) = problem.search_box() else {
        return ExactPricingResult {
            min_reduced_cost: problem.gamma,
            lower_bound: problem.gamma,
            exact: true,
            columns: Vec::new(),
            best: None,
            boxes: 0,
            relaxed: false,
        };
    };
    let scale = root.lo.iter().chain(&root.hi).fold(1.0f64, |m, v| m.max(v.abs()));
    let tiny = 1e-12 * scale;

    s.probe(root.center());
    let (lb, xh) = s.bound(&root);
    if let Some(x) = xh {
        s.probe(x);
    }
    let mut heap = BinaryHeap::new();
    let mut next_id = 0u64;
    let mut floor = f64::INFINITY;
    heap.push(OpenBox { lb, id: next_id, rect: root });
    next_id += 1;
    let mut boxes = 1usize;
    let mut closed = false;
    while let Some(top) = heap.peek() {
        if top.lb >= s.best_value - opts.tol {
            closed = true;
            break;
        }
        if s.out_of_budget(boxes) {
            break;
        }
        let top = heap.pop().unwrap();
        let (axis, len) = top.rect.longest_edge();
        if len <= tiny {
            floor = floor.min(top.lb);
            continue;
        }
        let (a, b) = top.rect.split(axis);
        for child in [a, b] {
            boxes += 1;
            s.probe(child.center());
            let (lb, xh) = s.bound(&child);
            if let Some(x) = xh {
                if lb < s.best_value - opts.prune_tol {
                    s.probe(x);
                }
            }
            // a child bound can never be weaker than its parent's
            let lb = lb.max(top.lb);
            if lb < s.best_value - opts.prune_tol {
                heap.push(OpenBox { lb, id: next_id, rect: child });
                next_id += 1;
            }
        }
    }
    if heap.is_empty() {
        closed = true;
    }
    let open_min = heap.peek().map_or(f64::INFINITY, |b| b.lb);
    let lower_bound = s.best_value.min(open_min).min(floor);
    let exact = closed && floor >= s.best_value - opts.tol;
    ExactPricingResult {
        min_reduced_cost: s.best_value,
        lower_bound,
        exact,
        columns: s.keep.into_columns(problem),
        best: s.best,
        boxes,
        relaxed: s.relaxed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::{BranchingConstraints, PairSide};
    use crate::model::{bounding_box, make_lambda, Instance, LambdaKind};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn one_point() -> Instance {
        let w = make_lambda(LambdaKind::W, 1, 0, 0.0).unwrap();
        Instance::new(vec![vec![0.0, 0.0]], 1, NormSpec::L2, w).unwrap()
    }

    #[test]
    fn zero_alpha_certifies_gamma() {
        let inst = one_point();
        let none = BranchingConstraints::new(1);
        let p = PricingProblem::new(&inst, &[0.0], 0.25, &[1.0], &none);
        let r = exact_price(&p, &Default::default());
        assert!(r.exact);
        assert_eq!(r.min_reduced_cost, 0.25);
        assert_eq!(r.lower_bound, 0.25);
        assert!(r.columns.is_empty());
    }

    #[test]
    fn single_point_optimum() {
        let inst = one_point();
        let none = BranchingConstraints::new(1);
        let p = PricingProblem::new(&inst, &[5.0], 0.0, &[1.0], &none);
        let r = exact_price(&p, &Default::default());
        assert!(r.exact);
        assert_relative_eq!(r.min_reduced_cost, -5.0);
        let (s, x) = r.best.unwrap();
        assert_eq!((s, x), (vec![0], vec![0.0, 0.0]));
    }

    /// Minimum over grid points of the best selection at that point.
    fn grid_scan(p: &PricingProblem, res: usize) -> f64 {
        let b = bounding_box(p.instance);
        let mut graph = IncompatibilityGraph::new(p.branching);
        let mut best = p.gamma;
        for a in 0..res {
            for c in 0..res {
                let t = [a as f64 / (res - 1) as f64, c as f64 / (res - 1) as f64];
                let x: Vec<f64> = (0..2).map(|l| b.lo[l] + (b.hi[l] - b.lo[l]) * t[l]).collect();
                let e = p.scores(&x);
                graph.set_scores(&e);
                let v = p.gamma + graph.brute_force_mwis().0;
                best = best.min(v);
            }
        }
        best
    }

    fn random_problem(seed: u64, n: usize, norm: NormSpec) -> (Instance, Vec<f64>, Vec<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0..=20) as f64, rng.gen_range(0..=20) as f64]).collect();
        let lam = make_lambda(LambdaKind::W, n, 0, 0.0).unwrap();
        let inst = Instance::new(pts, 2, norm, lam).unwrap();
        let alpha: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.8) { rng.gen_range(0.0..8.0) } else { 0.0 }).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.5)).collect();
        (inst, alpha, c)
    }

    #[test]
    fn l1_certificate_matches_lattice_grid() {
        // integer points, L1: optimal facilities sit on median coordinates,
        // hence on the integer lattice the grid below contains
        for seed in 0..6 {
            let (inst, alpha, c) = random_problem(seed, 7, NormSpec::L1);
            let b = bounding_box(&inst);
            let res = [(b.hi[0] - b.lo[0]) as usize + 1, (b.hi[1] - b.lo[1]) as usize + 1];
            assert_eq!(res[0], res[1].max(res[0]).min(res[0]));
            let none = BranchingConstraints::new(7);
            let p = PricingProblem::new(&inst, &alpha, 0.3, &c, &none);
            let r = exact_price(&p, &Default::default());
            assert!(r.exact);
            let mut best = p.gamma;
            for gx in 0..res[0] {
                for gy in 0..res[1] {
                    let x = [b.lo[0] + gx as f64, b.lo[1] + gy as f64];
                    let v = p.gamma + p.scores(&x).iter().filter(|&&e| e < 0.0).sum::<f64>();
                    best = best.min(v);
                }
            }
            assert!(best >= r.lower_bound - 1e-9, "grid {best} beats certificate {}", r.lower_bound);
            assert!((best - r.min_reduced_cost).abs() <= 1e-6, "seed {seed}: grid {best} vs {}", r.min_reduced_cost);
        }
    }

    #[test]
    fn l2_certificate_never_beaten_by_grid() {
        for seed in 10..14 {
            let (inst, alpha, c) = random_problem(seed, 6, NormSpec::L2);
            let none = BranchingConstraints::new(6);
            let p = PricingProblem::new(&inst, &alpha, 0.0, &c, &none);
            let r = exact_price(&p, &Default::default());
            assert!(r.exact);
            let g = grid_scan(&p, 120);
            assert!(g >= r.lower_bound - 1e-9);
            assert!(g - r.min_reduced_cost <= 0.2, "grid {g} vs {}", r.min_reduced_cost);
        }
    }

    #[test]
    fn branched_certificate_never_beaten_by_grid() {
        for seed in 20..24 {
            let (inst, alpha, c) = random_problem(seed, 6, NormSpec::L1);
            let b = BranchingConstraints::new(6)
                .with_pair(0, 1, PairSide::Different)
                .unwrap()
                .with_pair(2, 3, PairSide::Same)
                .unwrap();
            let p = PricingProblem::new(&inst, &alpha, 0.1, &c, &b);
            let r = exact_price(&p, &Default::default());
            assert!(r.exact, "{} {} {} {}", r.min_reduced_cost, r.lower_bound, r.boxes, r.relaxed);
            for col in &r.columns {
                assert!(b.allows(&col.subset));
            }
            let g = grid_scan(&p, 60);
            assert!(g >= r.lower_bound - 1e-9);
        }
    }

    #[test]
    fn stop_below_keeps_a_valid_bound() {
        let (inst, alpha, c) = random_problem(3, 7, NormSpec::L2);
        let none = BranchingConstraints::new(7);
        let p = PricingProblem::new(&inst, &alpha, 0.0, &c, &none);
        let full = exact_price(&p, &Default::default());
        let opts = ExactPricingOptions { stop_below: Some(-1e-6), ..Default::default() };
        let early = exact_price(&p, &opts);
        assert!(early.lower_bound <= full.min_reduced_cost + 1e-9);
        assert!(early.boxes <= full.boxes);
    }
}

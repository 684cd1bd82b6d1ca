//! Branch-and-price driver.
//!
//! Nodes are explored best-bound first (deeper first on ties). At each node
//! columns are generated until pricing certifies that no improving column
//! exists; heuristic pricers run first and the exact pricer is only called
//! when they come back empty. Branching is on pairs of demand points (same
//! facility versus different facilities), the pair chosen by the θ-rule.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::branching::{BranchingConstraints, PairSide};
use crate::error::{Error, Result};
use crate::master::{Column, ColumnPool, NodeMaster};
use crate::matheur::initial_pool;
use crate::model::{Instance, LambdaKind, Point, Solution};
use crate::objective::evaluate;
use crate::pricer::{exact_price, generate_candidates, heuristic_price, ExactPricingOptions, PricingProblem, IMPROVEMENT_TOL};
use crate::simplex::Basis;

/// Score given to the closeness term of coincident points.
pub const COINCIDENT_SCORE: f64 = 1e12;
/// Tolerance for treating a master value as 0 or 1.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct SolveConfig {
    /// θ of the branching rule; `None` picks it from the λ kind.
    pub theta: Option<f64>,
    pub time_limit: Option<Duration>,
    pub seed: u64,
    /// Run the heuristic pricer before the exact one.
    pub heuristic_first: bool,
    /// Certify every node with the exact pricer.
    pub exact_pricing: bool,
    /// Rounds of the initial column pool.
    pub rounds: usize,
    /// Relative optimality tolerance.
    pub tol: f64,
    pub max_nodes: Option<usize>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            theta: None,
            time_limit: None,
            seed: 0,
            heuristic_first: true,
            exact_pricing: true,
            rounds: 20,
            tol: 1e-6,
            max_nodes: None,
        }
    }
}

/// θ used for a λ kind when none is configured: 0 for the center, 0.5 for
/// k-centrum, 1 otherwise.
pub fn resolve_theta(theta: Option<f64>, kind: LambdaKind) -> f64 {
    theta.unwrap_or(match kind {
        LambdaKind::C => 0.0,
        LambdaKind::K => 0.5,
        _ => 1.0,
    })
}

/// Bound of one processed node.
#[derive(Debug, Clone, Serialize)]
pub struct NodeRecord {
    pub id: usize,
    pub depth: usize,
    pub lower_bound: f64,
    /// The bound rests on a certified pricing result.
    pub bound_is_exact: bool,
    pub same_pairs: Vec<(usize, usize)>,
    pub different_pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub incumbent: Solution,
    pub lower_bound: f64,
    pub gap_percent: f64,
    pub root_lower_bound: f64,
    pub gap_root_percent: f64,
    pub nodes: usize,
    /// Genuine columns generated, initial pool included.
    pub columns: usize,
    pub exact_pricer_calls: usize,
    pub heuristic_pricer_calls: usize,
    pub total_pricer_calls: usize,
    pub lp_iterations: usize,
    pub time_seconds: f64,
    pub timed_out: bool,
    pub bound_is_exact: bool,
    pub node_trace: Vec<NodeRecord>,
    pub diagnostics: Vec<String>,
}

/// `z + p·min(m, 0)`: a lower bound on the node optimum whenever `m` is a
/// lower bound on every reduced cost.
pub fn node_lower_bound(z: f64, m: f64, p: usize) -> f64 {
    z + p as f64 * m.min(0.0)
}

/// `100·(incumbent − bound)/max(|incumbent|, 1e-10)`.
pub fn gap_percent(incumbent: f64, bound: f64) -> f64 {
    100.0 * (incumbent - bound) / incumbent.abs().max(1e-10)
}

/// `Σ_{R ∋ i, j} y_R` for every pair, as a dense symmetric matrix whose
/// diagonal holds the coverage of each point.
pub fn pair_sums(n: usize, columns: &[Column], y: &[f64]) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; n]; n];
    for (col, &v) in columns.iter().zip(y) {
        if v <= 1e-12 {
            continue;
        }
        for (a, &i) in col.subset.iter().enumerate() {
            for &j in &col.subset[a..] {
                s[i][j] += v;
                if i != j {
                    s[j][i] += v;
                }
            }
        }
    }
    s
}

/// θ-rule: among unconstrained pairs with fractional pair-sum `s`, maximize
/// `θ·min(s, 1−s) + (1−θ)/‖aᵢ − aⱼ‖`. `None` when no pair is eligible.
pub fn select_branching_pair(
    instance: &Instance,
    columns: &[Column],
    y: &[f64],
    theta: f64,
    branching: &BranchingConstraints,
) -> Option<(usize, usize)> {
    let n = instance.n();
    let sums = pair_sums(n, columns, y);
    let mut best: Option<(f64, (usize, usize))> = None;
    for i in 0..n {
        for j in i + 1..n {
            let s = sums[i][j];
            if s <= INTEGRALITY_TOL || s >= 1.0 - INTEGRALITY_TOL || branching.is_constrained(i, j) {
                continue;
            }
            let d = instance.norm().dist(instance.point(i), instance.point(j));
            let close = if d > 0.0 { 1.0 / d } else { COINCIDENT_SCORE };
            let score = theta * s.min(1.0 - s) + (1.0 - theta) * close;
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, (i, j)));
            }
        }
    }
    best.map(|(_, pair)| pair)
}

/// Adds `pair` on `side` to a copy of the node constraints.
pub fn apply_branch(branching: &BranchingConstraints, pair: (usize, usize), side: PairSide) -> Result<BranchingConstraints> {
    branching.with_pair(pair.0, pair.1, side)
}

/// Result of [`integer_recovery`].
#[derive(Debug, Clone)]
pub struct Recovery {
    /// Demand subsets of the recovered blocks.
    pub blocks: Vec<Vec<usize>>,
    /// One facility per block: the y-weighted mean of the block's facilities.
    pub block_facilities: Vec<Point>,
    /// Closest-allocation evaluation of the block facilities.
    pub solution: Solution,
}

/// Builds an integer solution from a master solution whose coverage and
/// pair-sums are all 0 or 1. Columns with the same subset are merged into
/// one facility at the y-weighted mean of their facilities. `None` when the
/// hypothesis fails.
pub fn integer_recovery(instance: &Instance, columns: &[Column], y: &[f64]) -> Option<Recovery> {
    let n = instance.n();
    let sums = pair_sums(n, columns, y);
    let near = |v: f64, t: f64| (v - t).abs() <= INTEGRALITY_TOL;
    for i in 0..n {
        if !near(sums[i][i], 1.0) {
            return None;
        }
        for j in i + 1..n {
            if !(near(sums[i][j], 0.0) || near(sums[i][j], 1.0)) {
                return None;
            }
        }
    }
    let mut blocks: Vec<(Vec<usize>, f64, Point)> = Vec::new();
    for (col, &v) in columns.iter().zip(y) {
        if v <= 1e-12 {
            continue;
        }
        let k = match blocks.iter().position(|b| b.0 == col.subset) {
            Some(k) => k,
            None => {
                blocks.push((col.subset.clone(), 0.0, vec![0.0; instance.d()]));
                blocks.len() - 1
            }
        };
        blocks[k].1 += v;
        for (acc, x) in blocks[k].2.iter_mut().zip(&col.facility) {
            *acc += v * x;
        }
    }
    if blocks.len() > instance.p() {
        return None;
    }
    let mut out = Recovery { blocks: Vec::new(), block_facilities: Vec::new(), solution: empty_solution() };
    for (subset, mass, sum) in blocks {
        out.block_facilities.push(sum.iter().map(|s| s / mass).collect());
        out.blocks.push(subset);
    }
    let (objective, assignment) = evaluate(instance, &out.block_facilities).ok()?;
    out.solution = Solution { facilities: out.block_facilities.clone(), assignment, objective };
    Some(out)
}

fn empty_solution() -> Solution {
    Solution { facilities: Vec::new(), assignment: Vec::new(), objective: f64::INFINITY }
}

fn solution_at(instance: &Instance, facilities: Vec<Point>) -> Result<Solution> {
    let (objective, assignment) = evaluate(instance, &facilities)?;
    Ok(Solution { facilities, assignment, objective })
}

struct OpenNode {
    id: usize,
    depth: usize,
    lower_bound: f64,
    exact: bool,
    branching: BranchingConstraints,
    basis: Option<Basis>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OpenNode {}
impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenNode {
    // max-heap: smallest bound, then deepest, then oldest pops first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lower_bound
            .total_cmp(&self.lower_bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

enum NodeOutcome {
    Fathomed,
    Branch((usize, usize)),
    TimedOut,
}

struct Driver<'a> {
    inst: &'a Instance,
    cfg: &'a SolveConfig,
    theta: f64,
    deadline: Option<Instant>,
    rng: ChaCha8Rng,
    pool: ColumnPool,
    incumbent: Solution,
    report: SolveReport,
}

impl Driver<'_> {
    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn fathom_gap(&self) -> f64 {
        self.cfg.tol * self.incumbent.objective.abs().max(1.0)
    }

    fn offer(&mut self, sol: Solution) {
        if sol.objective < self.incumbent.objective - 1e-12 {
            self.incumbent = sol;
        }
    }

    fn offer_facilities(&mut self, mut facilities: Vec<Point>) -> Result<()> {
        if facilities.is_empty() {
            return Ok(());
        }
        while facilities.len() < self.inst.p() {
            facilities.push(facilities[0].clone());
        }
        let sol = solution_at(self.inst, facilities)?;
        self.offer(sol);
        Ok(())
    }

    /// Incumbent candidates from a master solution: integral y, the p
    /// largest columns, and integer recovery.
    fn harvest(&mut self, y: &[f64]) -> Result<()> {
        let cols = self.pool.columns();
        let mut support: Vec<(f64, usize)> =
            (1..cols.len()).filter(|&j| y[j] > INTEGRALITY_TOL).map(|j| (y[j], j)).collect();
        support.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let integral = y[0] <= INTEGRALITY_TOL && support.iter().all(|&(v, _)| v >= 1.0 - INTEGRALITY_TOL);
        let top: Vec<Point> = support.iter().take(self.inst.p()).map(|&(_, j)| cols[j].facility.clone()).collect();
        if integral && support.len() <= self.inst.p() {
            self.offer_facilities(top)?;
        } else {
            self.offer_facilities(top)?;
            if let Some(r) = integer_recovery(self.inst, self.pool.columns(), y) {
                self.offer(r.solution);
            }
        }
        Ok(())
    }

    /// Column generation at one node: the outcome, the node bound, whether
    /// that bound is proven, and the final basis.
    fn process(&mut self, node: &OpenNode) -> Result<(NodeOutcome, f64, bool, Option<Basis>)> {
        let inst = self.inst;
        let exact_mode = self.cfg.exact_pricing;
        let mut master = NodeMaster::new(inst, &self.pool, &node.branching, node.basis.clone())?;
        let mut lb = node.lower_bound;
        let mut certified = false;
        // p times this stays within half the fathoming gap
        let price_tol = (0.5 * self.fathom_gap() / inst.p() as f64).max(IMPROVEMENT_TOL);
        let sol = loop {
            if self.expired() {
                return Ok((NodeOutcome::TimedOut, lb, exact_mode, master.basis().cloned()));
            }
            master.sync(inst, &self.pool, &node.branching);
            let sol = master.solve(inst)?;
            self.report.lp_iterations += sol.lp_iterations;
            let problem = PricingProblem::new(inst, &sol.duals.alpha, sol.duals.gamma, &sol.weights, &node.branching);
            let mut new_cols = Vec::new();
            if self.cfg.heuristic_first || !exact_mode {
                let mut candidates = generate_candidates(&problem, &mut self.rng);
                for (col, &v) in self.pool.columns().iter().zip(&sol.y) {
                    if v > 1e-9 && !col.is_artificial {
                        candidates.push(col.facility.clone());
                    }
                }
                new_cols = heuristic_price(&problem, &candidates);
                self.report.heuristic_pricer_calls += 1;
                self.report.total_pricer_calls += 1;
            }
            if new_cols.is_empty() {
                if !exact_mode {
                    // heuristic convergence: z only estimates the node bound
                    lb = lb.max(sol.objective);
                    break sol;
                }
                let opts = ExactPricingOptions { tol: price_tol, deadline: self.deadline, ..Default::default() };
                let r = exact_price(&problem, &opts);
                self.report.exact_pricer_calls += 1;
                self.report.total_pricer_calls += 1;
                lb = lb.max(node_lower_bound(sol.objective, r.lower_bound, inst.p()));
                new_cols = r.columns;
                if new_cols.is_empty() {
                    certified = r.exact || r.lower_bound >= -price_tol;
                    if !certified {
                        self.report.diagnostics.push(format!("node {}: pricing stopped before certification", node.id));
                    }
                    break sol;
                }
            }
            if exact_mode && lb >= self.incumbent.objective - self.fathom_gap() {
                self.harvest(&sol.y)?;
                return Ok((NodeOutcome::Fathomed, lb, true, master.basis().cloned()));
            }
            let added = self.pool.add_columns(inst, new_cols, &node.branching);
            for why in added.rejected {
                self.report.diagnostics.push(format!("node {}: {why}", node.id));
            }
            if added.added.is_empty() {
                self.report.diagnostics.push(format!("node {}: pricer repeated pooled columns, stopping", node.id));
                break sol;
            }
        };
        self.harvest(&sol.y)?;
        let basis = master.basis().cloned();
        // heuristic bounds prune too; the run is then flagged as unproven
        if lb >= self.incumbent.objective - self.fathom_gap() {
            return Ok((NodeOutcome::Fathomed, lb, exact_mode, basis));
        }
        match select_branching_pair(inst, self.pool.columns(), &sol.y, self.theta, &node.branching) {
            Some(pair) => Ok((NodeOutcome::Branch(pair), lb, exact_mode, basis)),
            None => {
                // with all pair sums integral the recovered solution is no worse
                // than the master value, which bounds the node once pricing is certified
                let recovered = integer_recovery(inst, self.pool.columns(), &sol.y).is_some();
                let proven = exact_mode && certified && recovered;
                if exact_mode && !proven {
                    self.report
                        .diagnostics
                        .push(format!("node {}: nothing to branch on, node closed without proof", node.id));
                }
                Ok((NodeOutcome::Fathomed, lb, proven, basis))
            }
        }
    }
}

/// Branch-and-price. With exact pricing and no time-out the incumbent is
/// optimal within the configured tolerance.
pub fn solve(instance: &Instance, config: &SolveConfig) -> Result<SolveReport> {
    let start = Instant::now();
    if let Some(t) = config.theta {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidInput(format!("theta must lie in [0, 1], got {t}")));
        }
    }
    let deadline = config.time_limit.map(|t| start + t);
    let init = initial_pool(instance, config.rounds.max(1), config.seed)?;
    let none = BranchingConstraints::new(instance.n());
    let mut pool = ColumnPool::new(instance);
    pool.add_columns(instance, init.columns, &none);
    let mut d = Driver {
        inst: instance,
        cfg: config,
        theta: resolve_theta(config.theta, instance.lambda().kind()),
        deadline,
        rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15),
        pool,
        incumbent: init.incumbent,
        report: SolveReport {
            incumbent: empty_solution(),
            lower_bound: 0.0,
            gap_percent: 0.0,
            root_lower_bound: 0.0,
            gap_root_percent: 0.0,
            nodes: 0,
            columns: 0,
            exact_pricer_calls: 0,
            heuristic_pricer_calls: 0,
            total_pricer_calls: 0,
            lp_iterations: 0,
            time_seconds: 0.0,
            timed_out: false,
            bound_is_exact: config.exact_pricing,
            node_trace: Vec::new(),
            diagnostics: Vec::new(),
        },
    };

    // ordered medians are nonnegative, so 0 bounds every node
    let mut heap = BinaryHeap::new();
    heap.push(OpenNode { id: 0, depth: 0, lower_bound: 0.0, exact: config.exact_pricing, branching: none, basis: None });
    let mut next_id = 1;
    let mut closed_min = f64::INFINITY;
    let mut closed_exact = true;
    let mut root_done = false;
    while let Some(node) = heap.pop() {
        if node.id != 0 && node.lower_bound >= d.incumbent.objective - d.fathom_gap() {
            closed_min = closed_min.min(node.lower_bound);
            continue;
        }
        if d.expired() || config.max_nodes.is_some_and(|m| d.report.nodes >= m) {
            d.report.timed_out = true;
            heap.push(node);
            break;
        }
        d.report.nodes += 1;
        let (outcome, lb, exact, basis) = d.process(&node)?;
        d.report.node_trace.push(NodeRecord {
            id: node.id,
            depth: node.depth,
            lower_bound: lb,
            bound_is_exact: exact,
            same_pairs: node.branching.same_pairs().to_vec(),
            different_pairs: node.branching.different_pairs().to_vec(),
        });
        if !root_done {
            root_done = true;
            d.report.root_lower_bound = lb;
            d.report.gap_root_percent = gap_percent(d.incumbent.objective, lb.min(d.incumbent.objective)).max(0.0);
        }
        match outcome {
            NodeOutcome::TimedOut => {
                d.report.timed_out = true;
                heap.push(OpenNode { lower_bound: lb, exact, basis, ..node });
                break;
            }
            NodeOutcome::Fathomed => {
                closed_min = closed_min.min(lb);
                closed_exact &= exact;
            }
            NodeOutcome::Branch(pair) => {
                for side in [PairSide::Different, PairSide::Same] {
                    let branching = apply_branch(&node.branching, pair, side)?;
                    heap.push(OpenNode {
                        id: next_id,
                        depth: node.depth + 1,
                        lower_bound: lb,
                        exact,
                        branching,
                        basis: basis.clone(),
                    });
                    next_id += 1;
                }
            }
        }
    }
    let open_min = heap.iter().map(|n| n.lower_bound).fold(f64::INFINITY, f64::min);
    let open_exact = heap.iter().all(|n| n.exact);
    let inc = d.incumbent.objective;
    let mut report = d.report;
    report.bound_is_exact &= closed_exact && open_exact && config.exact_pricing;
    report.lower_bound = inc.min(open_min).min(closed_min).max(0.0);
    if heap.is_empty() && report.bound_is_exact && inc - report.lower_bound <= config.tol * inc.abs().max(1.0) {
        report.lower_bound = report.lower_bound.min(inc);
        report.gap_percent = 0.0;
    } else {
        report.gap_percent = gap_percent(inc, report.lower_bound).max(0.0);
    }
    if report.root_lower_bound > inc {
        report.root_lower_bound = inc;
    }
    report.columns = d.pool.genuine_len();
    report.incumbent = d.incumbent;
    report.time_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

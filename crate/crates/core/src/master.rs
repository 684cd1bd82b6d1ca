//! Column pool and the restricted relaxed master LP.
//!
//! Variables are `uᵢ` (one per demand point, cost = multiplicity), `vₖ` (one
//! per λ entry, cost 1) and `y_R ≥ 0` per pooled column. Rows are, in order:
//! coverage `Σ_{R∋i} y_R ≥ 1` for every point, the count row `−Σ y_R ≥ −p`,
//! and `uᵢ + vₖ − λₖ Σ_{R∋i} δᵢᴿ y_R ≥ 0` for every point `i` and rank `k`.
//! Ranks with `λₖ = 0` still get a row (it pins `uᵢ + vₖ ≥ 0`) but columns
//! have no entry there.

use std::collections::HashMap;

use crate::branching::BranchingConstraints;
use crate::error::{invalid, Error, Result};
use crate::model::{big_m, bounding_box, Instance, LambdaVector, Point};
use crate::simplex::{warm_start_solve_with, Basis, LinearProgram, LpSolution, RowSense, SimplexOptions};

/// Coordinate tolerance under which two facilities count as the same.
pub const DUPLICATE_TOL: f64 = 1e-9;

/// Largest tolerated deviation of ε row/column sums from their targets.
pub const EPSILON_DRIFT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    /// Sorted, distinct demand indices.
    pub subset: Vec<usize>,
    pub facility: Point,
    /// Distance of each member of `subset` to `facility`, parallel to `subset`.
    pub delta: Vec<f64>,
    pub is_artificial: bool,
}

impl Column {
    /// Column serving `subset` from `facility` with true distances.
    pub fn new(instance: &Instance, mut subset: Vec<usize>, facility: Point) -> Result<Self> {
        subset.sort_unstable();
        if subset.is_empty() {
            return invalid("a column must serve at least one point");
        }
        if subset.windows(2).any(|w| w[0] == w[1]) {
            return invalid("a column lists a demand point twice");
        }
        if *subset.last().unwrap() >= instance.n() {
            return invalid("a column references a missing demand point");
        }
        if facility.len() != instance.d() {
            return invalid(format!("facility has dimension {}, expected {}", facility.len(), instance.d()));
        }
        let delta = subset.iter().map(|&i| instance.dist(i, &facility)).collect();
        Ok(Self { subset, facility, delta, is_artificial: false })
    }

    pub fn contains(&self, i: usize) -> bool {
        self.subset.binary_search(&i).is_ok()
    }

    /// `δᵢ` if `i` is served, `None` otherwise.
    pub fn delta_of(&self, i: usize) -> Option<f64> {
        self.subset.binary_search(&i).ok().map(|p| self.delta[p])
    }

    fn same_as(&self, other: &Column) -> bool {
        self.subset == other.subset
            && self.is_artificial == other.is_artificial
            && self.facility.iter().zip(&other.facility).all(|(a, b)| (a - b).abs() <= DUPLICATE_TOL)
    }
}

/// Column covering every point from the box center at distance `2·M` each.
pub fn artificial_column(instance: &Instance) -> Column {
    let m = big_m(instance);
    // keep the column strictly costlier than any genuine one even when all points coincide
    let big = if m > 0.0 { 2.0 * m } else { 1.0 };
    Column {
        subset: (0..instance.n()).collect(),
        facility: bounding_box(instance).center(),
        delta: vec![big; instance.n()],
        is_artificial: true,
    }
}

/// Dual multipliers of an optimal restricted master.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterDuals {
    /// Coverage rows.
    pub alpha: Vec<f64>,
    /// Count row.
    pub gamma: f64,
    /// Order rows, `epsilon[i][k]`.
    pub epsilon: Vec<Vec<f64>>,
}

impl MasterDuals {
    /// `cᵢ = Σₖ λₖ εᵢₖ`, the per-point weight of distance in the reduced cost.
    pub fn distance_weights(&self, lambda: &LambdaVector) -> Vec<f64> {
        let w = lambda.weights();
        self.epsilon
            .iter()
            .map(|row| row.iter().zip(w).map(|(e, l)| e * l).sum::<f64>().max(0.0))
            .collect()
    }

    /// Largest deviation of ε row sums from the multiplicities and of column
    /// sums from 1.
    pub fn epsilon_drift(&self, multiplicity: &[usize]) -> f64 {
        let mut drift: f64 = 0.0;
        let ranks = self.epsilon.first().map_or(0, Vec::len);
        let mut col = vec![0.0; ranks];
        for (row, &w) in self.epsilon.iter().zip(multiplicity) {
            drift = drift.max((row.iter().sum::<f64>() - w as f64).abs());
            for (c, e) in col.iter_mut().zip(row) {
                *c += e;
            }
        }
        col.iter().fold(drift, |d, s| d.max((s - 1.0).abs()))
    }
}

/// Reduced cost `−Σ_{i∈S} αᵢ + γ + Σ_{i∈S} cᵢ δᵢ` with `cᵢ = Σₖ λₖ εᵢₖ`.
pub fn reduced_cost(column: &Column, duals: &MasterDuals, lambda: &LambdaVector) -> f64 {
    let w = lambda.weights();
    let mut rc = duals.gamma;
    for (&i, &d) in column.subset.iter().zip(&column.delta) {
        let c: f64 = duals.epsilon[i].iter().zip(w).map(|(e, l)| e * l).sum();
        rc += -duals.alpha[i] + c * d;
    }
    rc
}

/// Same as [`reduced_cost`] with precomputed distance weights.
pub fn reduced_cost_with_weights(column: &Column, alpha: &[f64], gamma: f64, c: &[f64]) -> f64 {
    column.subset.iter().zip(&column.delta).map(|(&i, &d)| -alpha[i] + c[i] * d).sum::<f64>() + gamma
}

/// Index arithmetic of the master LP.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub n: usize,
    pub ranks: usize,
}

impl Layout {
    pub fn of(instance: &Instance) -> Self {
        Self { n: instance.n(), ranks: instance.total_demand() }
    }
    pub fn u_col(&self, i: usize) -> usize {
        i
    }
    pub fn v_col(&self, k: usize) -> usize {
        self.n + k
    }
    /// LP column of pool column `j`.
    pub fn y_col(&self, j: usize) -> usize {
        self.n + self.ranks + j
    }
    pub fn coverage_row(&self, i: usize) -> usize {
        i
    }
    pub fn count_row(&self) -> usize {
        self.n
    }
    pub fn order_row(&self, i: usize, k: usize) -> usize {
        self.n + 1 + i * self.ranks + k
    }
    pub fn num_rows(&self) -> usize {
        self.n + 1 + self.n * self.ranks
    }
}

fn column_entries(layout: &Layout, lambda: &[f64], col: &Column) -> Vec<(usize, f64)> {
    let mut e = Vec::with_capacity(col.subset.len() * (1 + lambda.len()) + 1);
    for (&i, &d) in col.subset.iter().zip(&col.delta) {
        e.push((layout.coverage_row(i), 1.0));
        if d != 0.0 {
            for (k, &l) in lambda.iter().enumerate() {
                if l != 0.0 {
                    e.push((layout.order_row(i, k), -l * d));
                }
            }
        }
    }
    e.push((layout.count_row(), -1.0));
    e
}

fn rrmp_skeleton(instance: &Instance) -> LinearProgram {
    let layout = Layout::of(instance);
    let mut lp = LinearProgram::new();
    for _ in 0..instance.n() {
        lp.add_row(RowSense::Ge, 1.0);
    }
    lp.add_row(RowSense::Ge, -(instance.p() as f64));
    for _ in 0..instance.n() * layout.ranks {
        lp.add_row(RowSense::Ge, 0.0);
    }
    for i in 0..instance.n() {
        let entries: Vec<(usize, f64)> = (0..layout.ranks).map(|k| (layout.order_row(i, k), 1.0)).collect();
        lp.add_column(instance.multiplicity()[i] as f64, f64::NEG_INFINITY, f64::INFINITY, entries);
    }
    for k in 0..layout.ranks {
        let entries: Vec<(usize, f64)> = (0..instance.n()).map(|i| (layout.order_row(i, k), 1.0)).collect();
        lp.add_column(1.0, f64::NEG_INFINITY, f64::INFINITY, entries);
    }
    lp
}

fn check_coverage(instance: &Instance, pool: &[Column]) -> Result<()> {
    let mut covered = vec![false; instance.n()];
    for c in pool {
        for &i in &c.subset {
            if i < covered.len() {
                covered[i] = true;
            }
        }
    }
    match covered.iter().position(|c| !c) {
        Some(i) => invalid(format!("demand point {i} is not covered by any column")),
        None => Ok(()),
    }
}

/// Restricted relaxed master over `pool` with no branching restrictions.
pub fn build_rrmp(instance: &Instance, pool: &[Column]) -> Result<LinearProgram> {
    build_rrmp_at(instance, pool, &BranchingConstraints::new(instance.n()))
}

/// Restricted relaxed master at a node: columns violating `branching` keep
/// their place in the LP but get upper bound 0. The artificial column is
/// never restricted.
pub fn build_rrmp_at(instance: &Instance, pool: &[Column], branching: &BranchingConstraints) -> Result<LinearProgram> {
    check_coverage(instance, pool)?;
    let layout = Layout::of(instance);
    let mut lp = rrmp_skeleton(instance);
    for col in pool {
        append_column(&mut lp, &layout, instance.lambda(), col, branching);
    }
    Ok(lp)
}

fn append_column(
    lp: &mut LinearProgram,
    layout: &Layout,
    lambda: &LambdaVector,
    col: &Column,
    branching: &BranchingConstraints,
) -> usize {
    let upper = if col.is_artificial || branching.allows(&col.subset) { f64::INFINITY } else { 0.0 };
    lp.add_column(0.0, 0.0, upper, column_entries(layout, lambda.weights(), col))
}

/// Outcome of [`ColumnPool::add_columns`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AddReport {
    /// Pool indices of the columns that were added.
    pub added: Vec<usize>,
    pub duplicates: usize,
    /// One diagnostic per rejected column.
    pub rejected: Vec<String>,
}

/// Global column pool; index 0 is always the artificial column.
#[derive(Debug, Clone)]
pub struct ColumnPool {
    columns: Vec<Column>,
    by_subset: HashMap<Vec<usize>, Vec<usize>>,
}

impl ColumnPool {
    pub fn new(instance: &Instance) -> Self {
        let art = artificial_column(instance);
        Self { columns: vec![art], by_subset: HashMap::new() }
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Number of genuine (non-artificial) columns.
    pub fn genuine_len(&self) -> usize {
        self.columns.len() - 1
    }

    /// Adds columns, dropping duplicates (same subset, facility within
    /// [`DUPLICATE_TOL`]) and rejecting columns that violate `branching` or
    /// whose distances are not induced by their facility.
    pub fn add_columns(
        &mut self,
        instance: &Instance,
        new: impl IntoIterator<Item = Column>,
        branching: &BranchingConstraints,
    ) -> AddReport {
        let mut report = AddReport::default();
        for col in new {
            if let Some(why) = branching.violation(&col.subset) {
                report.rejected.push(format!("column {:?} {why}", col.subset));
                continue;
            }
            if col.subset.is_empty()
                || col.subset.len() != col.delta.len()
                || col.subset.windows(2).any(|w| w[0] >= w[1])
                || col.subset.last().is_some_and(|&i| i >= instance.n())
            {
                report.rejected.push(format!("column {:?} is malformed", col.subset));
                continue;
            }
            let induced = col
                .subset
                .iter()
                .zip(&col.delta)
                .all(|(&i, &d)| d >= instance.dist(i, &col.facility) - 1e-9);
            if !induced {
                report.rejected.push(format!("column {:?} understates a distance", col.subset));
                continue;
            }
            let bucket = self.by_subset.entry(col.subset.clone()).or_default();
            if bucket.iter().any(|&j| self.columns[j].same_as(&col)) {
                report.duplicates += 1;
                continue;
            }
            bucket.push(self.columns.len());
            report.added.push(self.columns.len());
            self.columns.push(col);
        }
        report
    }
}

/// Solution of one restricted master.
#[derive(Debug, Clone)]
pub struct RrmpSolution {
    pub objective: f64,
    /// Value of every pool column.
    pub y: Vec<f64>,
    pub duals: MasterDuals,
    /// Distance weights `cᵢ` derived from the duals.
    pub weights: Vec<f64>,
    pub lp_iterations: usize,
}

/// The master LP of one tree node, grown incrementally as the pool grows.
#[derive(Debug, Clone)]
pub struct NodeMaster {
    layout: Layout,
    lp: LinearProgram,
    included: usize,
    basis: Option<Basis>,
}

impl NodeMaster {
    pub fn new(instance: &Instance, pool: &ColumnPool, branching: &BranchingConstraints, basis: Option<Basis>) -> Result<Self> {
        let lp = build_rrmp_at(instance, pool.columns(), branching)?;
        Ok(Self { layout: Layout::of(instance), lp, included: pool.len(), basis })
    }

    pub fn basis(&self) -> Option<&Basis> {
        self.basis.as_ref()
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    /// Appends pool columns added since the last call.
    pub fn sync(&mut self, instance: &Instance, pool: &ColumnPool, branching: &BranchingConstraints) {
        for col in &pool.columns()[self.included..] {
            append_column(&mut self.lp, &self.layout, instance.lambda(), col, branching);
        }
        self.included = pool.len();
    }

    /// Solves the current LP from the last basis. When the ε sums drift
    /// beyond [`EPSILON_DRIFT_TOL`] the LP is re-solved with tighter
    /// tolerances.
    pub fn solve(&mut self, instance: &Instance) -> Result<RrmpSolution> {
        let empty = Basis { columns: Vec::new(), rows: Vec::new() };
        let mut opts = SimplexOptions::default();
        let mut iterations = 0;
        for attempt in 0..2 {
            let start = if attempt == 0 { self.basis.as_ref().unwrap_or(&empty) } else { &empty };
            let sol = warm_start_solve_with(&self.lp, start, &opts)?;
            iterations += sol.iterations;
            if !sol.is_optimal() {
                return Err(Error::Numerical(format!("restricted master ended with status {:?}", sol.status)));
            }
            let duals = self.extract_duals(&sol);
            self.basis = Some(sol.basis.clone());
            if duals.epsilon_drift(instance.multiplicity()) <= EPSILON_DRIFT_TOL || attempt == 1 {
                let y = (0..self.included).map(|j| sol.primal[self.layout.y_col(j)].max(0.0)).collect();
                let weights = duals.distance_weights(instance.lambda());
                return Ok(RrmpSolution { objective: sol.objective, y, duals, weights, lp_iterations: iterations });
            }
            opts.feasibility_tol = 1e-9;
            opts.optimality_tol = 1e-10;
        }
        unreachable!()
    }

    fn extract_duals(&self, sol: &LpSolution) -> MasterDuals {
        let l = &self.layout;
        let alpha = (0..l.n).map(|i| sol.duals[l.coverage_row(i)].max(0.0)).collect();
        let gamma = sol.duals[l.count_row()].max(0.0);
        let epsilon = (0..l.n)
            .map(|i| (0..l.ranks).map(|k| sol.duals[l.order_row(i, k)].max(0.0)).collect())
            .collect();
        MasterDuals { alpha, gamma, epsilon }
    }
}

//! Bounded-variable revised simplex with primal and dual solutions.
//!
//! Every row `i` gets a logical variable `rᵢ = aᵢ·x` with the row's bounds,
//! so the constraint system is `A x − r = 0`. A basis holds `k` structural
//! columns and `m − k` logicals; since logical columns are negated unit
//! vectors only the `k × k` block of structural columns restricted to the
//! rows of nonbasic logicals has to be factorized. Column generation masters
//! keep `k` small (a few times the number of demand points) even when the
//! row count is quadratic, which is what makes the dense factorization
//! affordable.
//!
//! Phase 1 minimizes the sum of bound violations of basic variables starting
//! from any basis; the same routine therefore restores feasibility after a
//! warm start with changed bounds. Pricing is Dantzig's rule with a two-pass
//! Harris ratio test, and Bland's rule takes over once the objective has not
//! moved for `2·(rows + cols)` consecutive iterations.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Constraint sense of a row `a·x {≥,≤,=} b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Ge,
    Le,
    Eq,
}

/// `min c·x` subject to sensed rows and column bounds (possibly infinite).
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    cost: Vec<f64>,
    col_lower: Vec<f64>,
    col_upper: Vec<f64>,
    columns: Vec<Vec<(usize, f64)>>,
    sense: Vec<RowSense>,
    rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_row(&mut self, sense: RowSense, rhs: f64) -> usize {
        self.sense.push(sense);
        self.rhs.push(rhs);
        self.rhs.len() - 1
    }

    /// Adds a column from `(row, coefficient)` pairs; duplicate rows are summed
    /// and zero coefficients dropped.
    pub fn add_column(&mut self, cost: f64, lower: f64, upper: f64, entries: impl IntoIterator<Item = (usize, f64)>) -> usize {
        let mut e: Vec<(usize, f64)> = entries.into_iter().collect();
        e.sort_by_key(|&(r, _)| r);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(e.len());
        for (r, v) in e {
            match merged.last_mut() {
                Some(last) if last.0 == r => last.1 += v,
                _ => merged.push((r, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        self.cost.push(cost);
        self.col_lower.push(lower);
        self.col_upper.push(upper);
        self.columns.push(merged);
        self.cost.len() - 1
    }

    pub fn set_column_bounds(&mut self, col: usize, lower: f64, upper: f64) {
        self.col_lower[col] = lower;
        self.col_upper[col] = upper;
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cost.len()
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    pub fn cost(&self, j: usize) -> f64 {
        self.cost[j]
    }

    pub fn column_bounds(&self, j: usize) -> (f64, f64) {
        (self.col_lower[j], self.col_upper[j])
    }

    pub fn row(&self, i: usize) -> (RowSense, f64) {
        (self.sense[i], self.rhs[i])
    }

    /// Checks shapes, finiteness and bound consistency.
    pub fn validate(&self) -> Result<()> {
        let m = self.num_rows();
        for (i, b) in self.rhs.iter().enumerate() {
            if !b.is_finite() {
                return invalid(format!("row {i} has a non-finite right-hand side"));
            }
        }
        for j in 0..self.num_cols() {
            if !self.cost[j].is_finite() {
                return invalid(format!("column {j} has a non-finite cost"));
            }
            let (l, u) = (self.col_lower[j], self.col_upper[j]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return invalid(format!("column {j} has inconsistent bounds [{l}, {u}]"));
            }
            for &(r, v) in &self.columns[j] {
                if r >= m {
                    return invalid(format!("column {j} references missing row {r}"));
                }
                if !v.is_finite() {
                    return invalid(format!("column {j} has a non-finite coefficient"));
                }
            }
        }
        Ok(())
    }

    fn row_bounds(&self, i: usize) -> (f64, f64) {
        let b = self.rhs[i];
        match self.sense[i] {
            RowSense::Ge => (b, f64::INFINITY),
            RowSense::Le => (f64::NEG_INFINITY, b),
            RowSense::Eq => (b, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

/// Position of a variable relative to the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable resting at zero.
    Zero,
}

/// A simplex basis: one status per column and one per row logical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Basis {
    pub columns: Vec<VarStatus>,
    pub rows: Vec<VarStatus>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Column values.
    pub primal: Vec<f64>,
    /// One multiplier per row; nonnegative for `≥` rows and nonpositive for
    /// `≤` rows at a minimization optimum.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub basis: Basis,
    /// True when a supplied warm-start basis was actually used.
    pub warm_started: bool,
    pub diagnostics: Vec<String>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// `cⱼ − πᵀAⱼ` of column `j`.
    pub fn reduced_cost(&self, lp: &LinearProgram, j: usize) -> f64 {
        lp.cost(j) - lp.column(j).iter().map(|&(r, v)| self.duals[r] * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// `None` means `50·(rows + cols) + 10_000`.
    pub max_iterations: Option<usize>,
    /// Non-improving iterations before Bland's rule; `None` means `2·(rows + cols)`.
    pub bland_after: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            pivot_tol: 1e-9,
            max_iterations: None,
            bland_after: None,
        }
    }
}

/// Solves from the all-logical basis.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    solve_lp_with(lp, &SimplexOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution> {
    lp.validate()?;
    let mut s = Solver::new(lp, *opts);
    s.slack_basis();
    Ok(s.run(false, Vec::new()))
}

/// Solves starting from `previous`, which must describe a basis of `lp` or
/// of `lp` without some trailing columns (new columns start nonbasic). A
/// basis that does not fit or is singular falls back to a cold solve, noted
/// in the diagnostics.
pub fn warm_start_solve(lp: &LinearProgram, previous: &Basis) -> Result<LpSolution> {
    warm_start_solve_with(lp, previous, &SimplexOptions::default())
}

pub fn warm_start_solve_with(lp: &LinearProgram, previous: &Basis, opts: &SimplexOptions) -> Result<LpSolution> {
    lp.validate()?;
    let mut s = Solver::new(lp, *opts);
    let mut diag = Vec::new();
    match s.load_basis(previous) {
        Ok(()) => Ok(s.run(true, diag)),
        Err(why) => {
            diag.push(format!("warm start rejected ({why}); cold start"));
            s.slack_basis();
            Ok(s.run(false, diag))
        }
    }
}

/// Dense LU with partial pivoting, `P·M = L·U`, row-major.
#[derive(Debug, Clone, Default)]
struct DenseLu {
    k: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    fn factor(k: usize, mut a: Vec<f64>, tiny: f64) -> Option<Self> {
        let mut perm: Vec<usize> = (0..k).collect();
        for c in 0..k {
            let mut piv = c;
            let mut best = a[c * k + c].abs();
            for r in c + 1..k {
                let v = a[r * k + c].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best <= tiny {
                return None;
            }
            if piv != c {
                for t in 0..k {
                    a.swap(c * k + t, piv * k + t);
                }
                perm.swap(c, piv);
            }
            let d = a[c * k + c];
            for r in c + 1..k {
                let f = a[r * k + c] / d;
                if f != 0.0 {
                    a[r * k + c] = f;
                    let (top, bottom) = a.split_at_mut(r * k);
                    let src = &top[c * k + c + 1..c * k + k];
                    let dst = &mut bottom[c + 1..k];
                    for (x, y) in dst.iter_mut().zip(src) {
                        *x -= f * y;
                    }
                } else {
                    a[r * k + c] = 0.0;
                }
            }
        }
        Some(Self { k, a, perm })
    }

    /// Solves `M x = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..k {
            let row = &self.a[r * k..r * k + r];
            let s: f64 = row.iter().zip(&x[..r]).map(|(l, v)| l * v).sum();
            x[r] -= s;
        }
        for r in (0..k).rev() {
            let row = &self.a[r * k + r + 1..r * k + k];
            let s: f64 = row.iter().zip(&x[r + 1..]).map(|(u, v)| u * v).sum();
            x[r] = (x[r] - s) / self.a[r * k + r];
        }
        x
    }

    /// Solves `Mᵀ y = b`.
    fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut z = b.to_vec();
        // Uᵀ z = b
        for c in 0..k {
            z[c] /= self.a[c * k + c];
            let zc = z[c];
            if zc != 0.0 {
                for r in c + 1..k {
                    z[r] -= self.a[c * k + r] * zc;
                }
            }
        }
        // Lᵀ w = z
        for c in (0..k).rev() {
            let wc = z[c];
            if wc != 0.0 {
                for r in 0..c {
                    z[r] -= self.a[c * k + r] * wc;
                }
            }
        }
        let mut y = vec![0.0; k];
        for (r, &p) in self.perm.iter().enumerate() {
            y[p] = z[r];
        }
        y
    }
}

const NONE: usize = usize::MAX;

struct Solver<'a> {
    lp: &'a LinearProgram,
    opts: SimplexOptions,
    m: usize,
    nc: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    /// Basic structural columns in factorization order.
    sb: Vec<usize>,
    /// Rows whose logical is nonbasic, in factorization order.
    rr: Vec<usize>,
    /// Position of a structural in `sb`, or `NONE`.
    sb_pos: Vec<usize>,
    /// Position of a row in `rr`, or `NONE` when its logical is basic.
    rr_pos: Vec<usize>,
    lu: DenseLu,
    iterations: usize,
    scratch: Vec<f64>,
}

enum Step {
    Optimal,
    Unbounded,
    Progress,
}

impl<'a> Solver<'a> {
    fn new(lp: &'a LinearProgram, opts: SimplexOptions) -> Self {
        let m = lp.num_rows();
        let nc = lp.num_cols();
        let mut lower = lp.col_lower.clone();
        let mut upper = lp.col_upper.clone();
        for i in 0..m {
            let (l, u) = lp.row_bounds(i);
            lower.push(l);
            upper.push(u);
        }
        Self {
            lp,
            opts,
            m,
            nc,
            lower,
            upper,
            x: vec![0.0; nc + m],
            status: vec![VarStatus::AtLower; nc + m],
            sb: Vec::new(),
            rr: Vec::new(),
            sb_pos: vec![NONE; nc],
            rr_pos: vec![NONE; m],
            lu: DenseLu::default(),
            iterations: 0,
            scratch: vec![0.0; m],
        }
    }

    fn nonbasic_status(&self, j: usize, hint: VarStatus) -> VarStatus {
        let (l, u) = (self.lower[j], self.upper[j]);
        match hint {
            VarStatus::AtUpper if u.is_finite() => VarStatus::AtUpper,
            VarStatus::AtLower if l.is_finite() => VarStatus::AtLower,
            _ if l.is_finite() => VarStatus::AtLower,
            _ if u.is_finite() => VarStatus::AtUpper,
            _ => VarStatus::Zero,
        }
    }

    fn place_nonbasic(&mut self, j: usize) {
        self.x[j] = match self.status[j] {
            VarStatus::AtLower => self.lower[j],
            VarStatus::AtUpper => self.upper[j],
            _ => 0.0,
        };
    }

    fn slack_basis(&mut self) {
        for j in 0..self.nc {
            self.status[j] = self.nonbasic_status(j, VarStatus::AtLower);
            self.place_nonbasic(j);
        }
        for i in 0..self.m {
            self.status[self.nc + i] = VarStatus::Basic;
        }
        let ok = self.factorize();
        debug_assert!(ok);
    }

    fn load_basis(&mut self, b: &Basis) -> std::result::Result<(), String> {
        if b.rows.len() != self.m {
            return Err(format!("basis has {} rows, LP has {}", b.rows.len(), self.m));
        }
        if b.columns.len() > self.nc {
            return Err(format!("basis has {} columns, LP has {}", b.columns.len(), self.nc));
        }
        let basic = b.columns.iter().chain(&b.rows).filter(|s| **s == VarStatus::Basic).count();
        if basic != self.m {
            return Err(format!("basis has {basic} basic variables for {} rows", self.m));
        }
        for j in 0..self.nc + self.m {
            let hint = if j < self.nc {
                b.columns.get(j).copied().unwrap_or(VarStatus::AtLower)
            } else {
                b.rows[j - self.nc]
            };
            if hint == VarStatus::Basic {
                self.status[j] = VarStatus::Basic;
            } else {
                self.status[j] = self.nonbasic_status(j, hint);
                self.place_nonbasic(j);
            }
        }
        if !self.factorize() {
            return Err("singular basis".into());
        }
        Ok(())
    }

    fn column_of(&self, j: usize) -> ColumnRef<'_> {
        if j < self.nc {
            ColumnRef::Structural(&self.lp.columns[j])
        } else {
            ColumnRef::Logical(j - self.nc)
        }
    }

    fn factorize(&mut self) -> bool {
        self.sb.clear();
        self.rr.clear();
        self.sb_pos.iter_mut().for_each(|p| *p = NONE);
        self.rr_pos.iter_mut().for_each(|p| *p = NONE);
        for j in 0..self.nc {
            if self.status[j] == VarStatus::Basic {
                self.sb_pos[j] = self.sb.len();
                self.sb.push(j);
            }
        }
        for i in 0..self.m {
            if self.status[self.nc + i] != VarStatus::Basic {
                self.rr_pos[i] = self.rr.len();
                self.rr.push(i);
            }
        }
        let k = self.sb.len();
        if k != self.rr.len() {
            return false;
        }
        let mut a = vec![0.0; k * k];
        for (c, &j) in self.sb.iter().enumerate() {
            for &(i, v) in &self.lp.columns[j] {
                let r = self.rr_pos[i];
                if r != NONE {
                    a[r * k + c] = v;
                }
            }
        }
        match DenseLu::factor(k, a, 1e-11) {
            Some(lu) => {
                self.lu = lu;
                self.compute_basic_values();
                true
            }
            None => false,
        }
    }

    /// Solves `B α = h` for a dense row vector `h`; returns `α` indexed by
    /// basis slot: structural slot `c` in `[..k]`, logical of row `i` at `k + i`.
    fn ftran(&self, h: &[f64]) -> Vec<f64> {
        let k = self.sb.len();
        let hr: Vec<f64> = self.rr.iter().map(|&i| h[i]).collect();
        let alpha_s = if k > 0 { self.lu.solve(&hr) } else { Vec::new() };
        let mut out = vec![0.0; k + self.m];
        out[..k].copy_from_slice(&alpha_s);
        for (c, &j) in self.sb.iter().enumerate() {
            let a = alpha_s[c];
            if a != 0.0 {
                for &(i, v) in &self.lp.columns[j] {
                    if self.rr_pos[i] == NONE {
                        out[k + i] += v * a;
                    }
                }
            }
        }
        for i in 0..self.m {
            if self.rr_pos[i] == NONE {
                out[k + i] -= h[i];
            } else {
                out[k + i] = 0.0;
            }
        }
        out
    }

    /// Solves `π B = c_B` given per-variable costs of the basic variables.
    fn btran(&self, basic_cost: impl Fn(usize) -> f64) -> Vec<f64> {
        let k = self.sb.len();
        let mut pi = vec![0.0; self.m];
        for i in 0..self.m {
            if self.rr_pos[i] == NONE {
                pi[i] = -basic_cost(self.nc + i);
            }
        }
        if k > 0 {
            let rhs: Vec<f64> = self
                .sb
                .iter()
                .map(|&j| {
                    let mut v = basic_cost(j);
                    for &(i, a) in &self.lp.columns[j] {
                        if self.rr_pos[i] == NONE {
                            v -= pi[i] * a;
                        }
                    }
                    v
                })
                .collect();
            let y = self.lu.solve_transpose(&rhs);
            for (r, &i) in self.rr.iter().enumerate() {
                pi[i] = y[r];
            }
        }
        pi
    }

    fn compute_basic_values(&mut self) {
        let mut h = std::mem::take(&mut self.scratch);
        h.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.nc {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                for &(i, v) in &self.lp.columns[j] {
                    h[i] -= v * self.x[j];
                }
            }
        }
        for i in 0..self.m {
            let j = self.nc + i;
            if self.status[j] != VarStatus::Basic {
                h[i] += self.x[j];
            }
        }
        let sol = self.ftran(&h);
        let k = self.sb.len();
        for (c, &j) in self.sb.iter().enumerate() {
            self.x[j] = sol[c];
        }
        for i in 0..self.m {
            if self.rr_pos[i] == NONE {
                self.x[self.nc + i] = sol[k + i];
            }
        }
        self.scratch = h;
    }

    fn slot_of(&self, j: usize) -> usize {
        if j < self.nc {
            self.sb_pos[j]
        } else {
            self.sb.len() + (j - self.nc)
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let tol = self.opts.feasibility_tol;
        let v = self.x[j];
        if v < self.lower[j] - tol {
            self.lower[j] - v
        } else if v > self.upper[j] + tol {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn basic_vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.sb.iter().copied().chain((0..self.m).filter(|&i| self.rr_pos[i] == NONE).map(|i| self.nc + i))
    }

    fn total_infeasibility(&self) -> f64 {
        self.basic_vars().map(|j| self.infeasibility(j)).sum()
    }

    fn phase_cost(&self, phase1: bool, j: usize) -> f64 {
        if phase1 {
            if self.status[j] != VarStatus::Basic {
                return 0.0;
            }
            let tol = self.opts.feasibility_tol;
            if self.x[j] < self.lower[j] - tol {
                -1.0
            } else if self.x[j] > self.upper[j] + tol {
                1.0
            } else {
                0.0
            }
        } else if j < self.nc {
            self.lp.cost[j]
        } else {
            0.0
        }
    }

    fn phase_objective(&self, phase1: bool) -> f64 {
        if phase1 {
            self.total_infeasibility()
        } else {
            (0..self.nc).map(|j| self.lp.cost[j] * self.x[j]).sum()
        }
    }

    fn iteration(&mut self, phase1: bool, bland: bool) -> std::result::Result<Step, ()> {
        let pi = self.btran(|j| self.phase_cost(phase1, j));
        let tol = self.opts.optimality_tol;
        // pricing
        let mut entering = NONE;
        let mut dir = 0.0;
        let mut best = 0.0;
        for j in 0..self.nc + self.m {
            let st = self.status[j];
            if st == VarStatus::Basic || self.lower[j] == self.upper[j] {
                continue;
            }
            let cost = self.phase_cost(phase1, j);
            let d = match self.column_of(j) {
                ColumnRef::Structural(col) => cost - col.iter().map(|&(i, v)| pi[i] * v).sum::<f64>(),
                ColumnRef::Logical(i) => cost + pi[i],
            };
            let cand = match st {
                VarStatus::AtLower if d < -tol => 1.0,
                VarStatus::AtUpper if d > tol => -1.0,
                VarStatus::Zero if d.abs() > tol => -d.signum(),
                _ => 0.0,
            };
            if cand == 0.0 {
                continue;
            }
            if bland {
                entering = j;
                dir = cand;
                break;
            }
            if d.abs() > best {
                best = d.abs();
                entering = j;
                dir = cand;
            }
        }
        if entering == NONE {
            return Ok(Step::Optimal);
        }
        let q = entering;
        let mut h = std::mem::take(&mut self.scratch);
        h.iter_mut().for_each(|v| *v = 0.0);
        match self.column_of(q) {
            ColumnRef::Structural(col) => col.iter().for_each(|&(i, v)| h[i] = v),
            ColumnRef::Logical(i) => h[i] = -1.0,
        }
        let alpha = self.ftran(&h);
        self.scratch = h;

        // ratio test over basic variables, whose rate of change is -dir·α
        let ftol = self.opts.feasibility_tol;
        let ptol = self.opts.pivot_tol;
        let basics: Vec<usize> = self.basic_vars().collect();
        let mut limits: Vec<(usize, f64, f64, f64)> = Vec::new(); // (var, rate, exact ratio, bound hit)
        let mut relaxed_min = f64::INFINITY;
        for &b in &basics {
            let rate = -dir * alpha[self.slot_of(b)];
            if rate.abs() <= ptol {
                continue;
            }
            let v = self.x[b];
            let (mut lo, mut hi) = (self.lower[b], self.upper[b]);
            if phase1 {
                if v < lo - ftol {
                    hi = lo;
                    lo = f64::NEG_INFINITY;
                } else if v > hi + ftol {
                    lo = hi;
                    hi = f64::INFINITY;
                }
            }
            let (target, gap) = if rate < 0.0 {
                if !lo.is_finite() {
                    continue;
                }
                (lo, v - lo)
            } else {
                if !hi.is_finite() {
                    continue;
                }
                (hi, hi - v)
            };
            let exact = gap / rate.abs();
            let relaxed = (gap + ftol) / rate.abs();
            relaxed_min = relaxed_min.min(relaxed);
            limits.push((b, rate, exact, target));
        }
        let range = self.upper[q] - self.lower[q];
        let mut leave: Option<(usize, f64, f64)> = None; // (var, step, bound)
        if bland {
            let mut best_t = f64::INFINITY;
            for &(b, _, exact, target) in &limits {
                let t = exact.max(0.0);
                if t < best_t - 1e-12 || (t <= best_t + 1e-12 && leave.is_some_and(|(lb, _, _)| b < lb)) {
                    if t < best_t {
                        best_t = t;
                    }
                    leave = Some((b, t, target));
                }
            }
        } else {
            let mut best_rate = 0.0;
            for &(b, rate, exact, target) in &limits {
                if exact <= relaxed_min && rate.abs() > best_rate {
                    best_rate = rate.abs();
                    leave = Some((b, exact.max(0.0), target));
                }
            }
        }
        let step = match leave {
            Some((_, t, _)) if !(range.is_finite() && range <= t) => t,
            _ if range.is_finite() => {
                // bound flip
                let t = range;
                self.apply_step(q, dir, t, &alpha, &basics);
                self.status[q] = if dir > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower };
                self.place_nonbasic(q);
                self.compute_basic_values();
                return Ok(Step::Progress);
            }
            _ => return Ok(Step::Unbounded),
        };
        let (lv, _, bound) = leave.expect("leaving variable");
        self.apply_step(q, dir, step, &alpha, &basics);
        self.status[q] = VarStatus::Basic;
        self.status[lv] = if bound == self.lower[lv] { VarStatus::AtLower } else { VarStatus::AtUpper };
        if !self.lower[lv].is_finite() && !self.upper[lv].is_finite() {
            self.status[lv] = VarStatus::Zero;
        }
        self.x[lv] = bound;
        if !self.factorize() {
            return Err(());
        }
        Ok(Step::Progress)
    }

    fn apply_step(&mut self, q: usize, dir: f64, t: f64, alpha: &[f64], basics: &[usize]) {
        if t == 0.0 {
            return;
        }
        self.x[q] += dir * t;
        for &b in basics {
            self.x[b] -= dir * t * alpha[self.slot_of(b)];
        }
    }

    fn run(&mut self, warm: bool, mut diagnostics: Vec<String>) -> LpSolution {
        let total = self.nc + self.m;
        let max_iter = self.opts.max_iterations.unwrap_or(50 * total + 10_000);
        let bland_after = self.opts.bland_after.unwrap_or(2 * total);
        let mut restarts = 0;
        let status = 'outer: loop {
            for phase1 in [true, false] {
                if phase1 && self.total_infeasibility() == 0.0 {
                    continue;
                }
                let mut stall = 0usize;
                let mut bland = false;
                let mut obj = self.phase_objective(phase1);
                loop {
                    if self.iterations >= max_iter {
                        break 'outer LpStatus::IterationLimit;
                    }
                    if phase1 && self.total_infeasibility() == 0.0 {
                        break;
                    }
                    self.iterations += 1;
                    match self.iteration(phase1, bland) {
                        Ok(Step::Optimal) => {
                            if phase1 {
                                break 'outer LpStatus::Infeasible;
                            }
                            break;
                        }
                        Ok(Step::Unbounded) => {
                            if phase1 {
                                // cannot happen with a bounded phase objective
                                break 'outer LpStatus::NumericalFailure;
                            }
                            break 'outer LpStatus::Unbounded;
                        }
                        Ok(Step::Progress) => {
                            let new_obj = self.phase_objective(phase1);
                            if new_obj < obj - 1e-12 * (1.0 + obj.abs()) {
                                stall = 0;
                            } else {
                                stall += 1;
                                if stall > bland_after {
                                    bland = true;
                                }
                            }
                            obj = new_obj;
                        }
                        Err(()) => {
                            if restarts >= 2 {
                                break 'outer LpStatus::NumericalFailure;
                            }
                            restarts += 1;
                            diagnostics.push("singular basis after pivot; restarting from slack basis".into());
                            self.slack_basis();
                            continue 'outer;
                        }
                    }
                }
            }
            // phase 2 finished; make sure drift did not break feasibility
            self.compute_basic_values();
            if self.total_infeasibility() > 0.0 {
                if restarts >= 2 {
                    break LpStatus::NumericalFailure;
                }
                restarts += 1;
                diagnostics.push("feasibility lost at optimality check; re-running phase 1".into());
                continue;
            }
            break LpStatus::Optimal;
        };
        let duals = if status == LpStatus::Optimal {
            self.btran(|j| self.phase_cost(false, j))
        } else {
            vec![0.0; self.m]
        };
        let primal = self.x[..self.nc].to_vec();
        let objective = (0..self.nc).map(|j| self.lp.cost[j] * primal[j]).sum();
        LpSolution {
            status,
            primal,
            duals,
            objective,
            iterations: self.iterations,
            basis: Basis {
                columns: self.status[..self.nc].to_vec(),
                rows: self.status[self.nc..].to_vec(),
            },
            warm_started: warm,
            diagnostics,
        }
    }
}

enum ColumnRef<'a> {
    Structural(&'a [(usize, f64)]),
    Logical(usize),
}

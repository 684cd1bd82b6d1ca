//! Brute-force reference solvers for tiny instances.
//!
//! [`grid_oracle`] enumerates facility tuples on a lattice over the bounding
//! box. [`partition_oracle`] enumerates every partition of the demand points
//! into at most `p` blocks and minimizes the ordered median for each fixed
//! assignment, a convex problem, with the ellipsoid method. Under ℓ₁ the
//! fixed-assignment problem is also solved as a linear program to pin down
//! the value. Besides the best value it returns a certified lower bound.

use crate::branching::BranchingConstraints;
use crate::error::{Error, Result};
use crate::model::{bounding_box, Instance, NormSpec, Point, Solution};
use crate::objective::{evaluate, ordered_median_weighted, rank_coefficients};
use crate::simplex::{solve_lp, LinearProgram, RowSense};

pub use crate::objective::ordered_median_via_assignment as exact_om_assignment_check;

pub const GRID_MAX_P: usize = 3;
pub const GRID_MAX_RESOLUTION: usize = 64;
pub const PARTITION_MAX_N: usize = 10;
pub const PARTITION_MAX_P: usize = 3;

/// Best `p`-tuple of lattice nodes, `resolution + 1` per axis including both
/// box corners, under closest allocation. An upper bound on the optimum.
pub fn grid_oracle(instance: &Instance, resolution: usize) -> Result<Solution> {
    let p = instance.p();
    if p > GRID_MAX_P || instance.d() != 2 || resolution == 0 || resolution > GRID_MAX_RESOLUTION {
        return Err(Error::Refused(format!(
            "grid oracle needs p ≤ {GRID_MAX_P}, d = 2 and 1 ≤ resolution ≤ {GRID_MAX_RESOLUTION}"
        )));
    }
    let b = bounding_box(instance);
    let step = |l: usize, t: usize| b.lo[l] + (b.hi[l] - b.lo[l]) * t as f64 / resolution as f64;
    let mut nodes = Vec::new();
    for a in 0..=resolution {
        for c in 0..=resolution {
            nodes.push(vec![step(0, a), step(1, c)]);
        }
    }
    let n = instance.n();
    let dist: Vec<Vec<f64>> = nodes.iter().map(|x| (0..n).map(|i| instance.dist(i, x)).collect()).collect();
    let g = nodes.len();
    let mut best = (f64::INFINITY, vec![0; p]);
    let mut tuple = vec![0usize; p];
    let mut closest = vec![0.0; n];
    loop {
        for i in 0..n {
            closest[i] = tuple.iter().map(|&t| dist[t][i]).fold(f64::INFINITY, f64::min);
        }
        let v = ordered_median_weighted(&closest, instance.multiplicity(), instance.lambda())?;
        if v < best.0 {
            best = (v, tuple.clone());
        }
        // next nondecreasing tuple
        let mut k = p;
        while k > 0 && tuple[k - 1] == g - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        tuple[k - 1] += 1;
        for t in k..p {
            tuple[t] = tuple[k - 1];
        }
    }
    let facilities: Vec<Point> = best.1.iter().map(|&t| nodes[t].clone()).collect();
    let (objective, assignment) = evaluate(instance, &facilities)?;
    Ok(Solution { facilities, assignment, objective })
}

/// Result of the partition oracle.
#[derive(Debug, Clone)]
pub struct PartitionOracleResult {
    pub solution: Solution,
    /// No feasible solution is better than this.
    pub lower_bound: f64,
    /// Block index of every point in the best partition.
    pub blocks: Vec<usize>,
    pub partitions: usize,
    pub pruned: usize,
}

/// Exact optimum for `n ≤ 10`, `p ≤ 3`, up to the ellipsoid tolerance.
pub fn partition_oracle(instance: &Instance) -> Result<PartitionOracleResult> {
    run_partitions(instance, None)
}

/// Optimum over solutions whose fixed assignment respects `branching`: the
/// value of a tree node of the branch-and-price. The objective reported is
/// that of the fixed assignment, not re-evaluated by closest allocation.
pub fn partition_oracle_constrained(instance: &Instance, branching: &BranchingConstraints) -> Result<PartitionOracleResult> {
    if branching.n() != instance.n() {
        return Err(Error::InvalidInput("branching constraints do not match the instance".into()));
    }
    run_partitions(instance, Some(branching))
}

fn run_partitions(instance: &Instance, branching: Option<&BranchingConstraints>) -> Result<PartitionOracleResult> {
    let n = instance.n();
    let p = instance.p();
    if n > PARTITION_MAX_N || p > PARTITION_MAX_P {
        return Err(Error::Refused(format!("partition oracle needs n ≤ {PARTITION_MAX_N} and p ≤ {PARTITION_MAX_P}")));
    }
    let lam_max = instance.lambda().weights().last().copied().unwrap_or(0.0);
    let mut parts: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut rgs = vec![0usize; n];
    enumerate_rgs(&mut rgs, 1, 1, p, &mut |blocks| {
        if branching.is_some_and(|b| !b.allows_partition(blocks)) {
            return;
        }
        parts.push((lam_max * max_block_radius_lb(instance, blocks), blocks.to_vec()));
    });
    if parts.is_empty() {
        return Err(Error::InvalidInput("branching constraints admit no partition".into()));
    }
    parts.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    let mut best = (f64::INFINITY, Vec::new(), Vec::new());
    let mut lower = f64::INFINITY;
    let mut pruned = 0;
    for (cheap, blocks) in &parts {
        if *cheap >= best.0 {
            pruned += 1;
            lower = lower.min(*cheap);
            continue;
        }
        let r = minimize_fixed(instance, blocks, best.0);
        lower = lower.min(r.lower_bound);
        if r.value < best.0 {
            best = (r.value, r.facilities, blocks.clone());
        }
    }
    let (value, mut facilities, blocks) = best;
    while facilities.len() < p {
        facilities.push(facilities[0].clone());
    }
    let solution = match branching {
        Some(_) => Solution { assignment: blocks.clone(), facilities, objective: value },
        None => {
            let (objective, assignment) = evaluate(instance, &facilities)?;
            Solution { facilities, assignment, objective }
        }
    };
    let lower_bound = lower.min(solution.objective);
    Ok(PartitionOracleResult { solution, lower_bound, blocks, partitions: parts.len(), pruned })
}

/// Restricted growth strings with at most `p` blocks.
fn enumerate_rgs(rgs: &mut [usize], pos: usize, used: usize, p: usize, f: &mut impl FnMut(&[usize])) {
    if pos == rgs.len() {
        f(rgs);
        return;
    }
    for b in 0..used.min(p) {
        rgs[pos] = b;
        enumerate_rgs(rgs, pos + 1, used, p, f);
    }
    if used < p {
        rgs[pos] = used;
        enumerate_rgs(rgs, pos + 1, used + 1, p, f);
    }
}

/// Half the largest in-block distance: some point of that block is at
/// least this far from any single facility.
fn max_block_radius_lb(instance: &Instance, blocks: &[usize]) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            if blocks[i] == blocks[j] {
                r = r.max(instance.norm().dist(instance.point(i), instance.point(j)) / 2.0);
            }
        }
    }
    r
}

pub(crate) struct FixedResult {
    pub value: f64,
    pub lower_bound: f64,
    pub facilities: Vec<Point>,
}

pub(crate) const ELLIPSOID_REL_TOL: f64 = 1e-9;

/// Minimizes the ordered median with point `i` served by facility
/// `blocks[i]`. Stops early once the lower bound reaches `cutoff`.
pub(crate) fn minimize_fixed(instance: &Instance, blocks: &[usize], cutoff: f64) -> FixedResult {
    let q = blocks.iter().max().map_or(0, |m| m + 1);
    let d = instance.d();
    let k = q * d;
    let b = bounding_box(instance);
    let norm = instance.norm();
    let eval = |x: &[f64], grad: Option<&mut Vec<f64>>| -> f64 {
        let dist: Vec<f64> = (0..instance.n()).map(|i| instance.dist(i, &x[blocks[i] * d..(blocks[i] + 1) * d])).collect();
        let v = ordered_median_weighted(&dist, instance.multiplicity(), instance.lambda()).expect("consistent lengths");
        if let Some(g) = grad {
            g.iter_mut().for_each(|v| *v = 0.0);
            let w = rank_coefficients(&dist, instance.multiplicity(), instance.lambda()).expect("consistent lengths");
            for i in 0..instance.n() {
                let s = blocks[i] * d;
                norm.add_subgradient(instance.point(i), &x[s..s + d], w[i], &mut g[s..s + d]);
            }
        }
        v
    };
    let center = b.center();
    let mut x: Vec<f64> = (0..q).flat_map(|_| center.iter().copied()).collect();
    let r2: f64 = q as f64 * b.lo.iter().zip(&b.hi).map(|(l, h)| ((h - l) / 2.0).powi(2)).sum::<f64>();
    let mut g = vec![0.0; k];
    let mut best_v = eval(&x, Some(&mut g));
    let mut best_x = x.clone();
    for start in block_starts(instance, blocks, q) {
        let v = eval(&start, None);
        if v < best_v {
            best_v = v;
            best_x = start;
        }
    }
    if r2 <= 1e-300 {
        return FixedResult { value: best_v, lower_bound: best_v, facilities: split(&best_x, q, d) };
    }
    let r2 = r2 * 1.0001 + 1e-12;
    let mut lower: f64 = 0.0;
    let max_iter = 400 * k * k + 2000;
    if k == 1 {
        let mut r = r2.sqrt();
        for _ in 0..max_iter {
            let v = eval(&x, Some(&mut g));
            if v < best_v {
                best_v = v;
                best_x = x.clone();
            }
            lower = lower.max(v - g[0].abs() * r);
            if g[0] == 0.0 {
                lower = lower.max(v);
            }
            if best_v - lower <= ELLIPSOID_REL_TOL * best_v.max(1.0) || lower >= cutoff {
                break;
            }
            x[0] -= g[0].signum() * r / 2.0;
            r /= 2.0;
        }
    } else {
        let kf = k as f64;
        let mut pm = vec![0.0; k * k];
        for t in 0..k {
            pm[t * k + t] = r2;
        }
        let mut pg = vec![0.0; k];
        for _ in 0..max_iter {
            let v = eval(&x, Some(&mut g));
            if v < best_v {
                best_v = v;
                best_x = x.clone();
            }
            for a in 0..k {
                pg[a] = (0..k).map(|c| pm[a * k + c] * g[c]).sum();
            }
            let gpg: f64 = g.iter().zip(&pg).map(|(a, c)| a * c).sum();
            if g.iter().all(|&c| c == 0.0) {
                // zero subgradient: x is a minimizer
                lower = lower.max(v);
                break;
            }
            if gpg <= 0.0 {
                // the shape matrix has lost definiteness to rounding
                break;
            }
            let s = gpg.sqrt();
            lower = lower.max(v - s);
            if best_v - lower <= ELLIPSOID_REL_TOL * best_v.max(1.0) || lower >= cutoff {
                break;
            }
            for a in 0..k {
                x[a] -= pg[a] / (s * (kf + 1.0));
            }
            let f = kf * kf / (kf * kf - 1.0);
            let c = 2.0 / ((kf + 1.0) * gpg);
            for a in 0..k {
                for e in a..k {
                    let val = f * (pm[a * k + e] - c * pg[a] * pg[e]);
                    pm[a * k + e] = val;
                    pm[e * k + a] = val;
                }
            }
        }
    }
    if norm == NormSpec::L1 && lower < cutoff {
        if let Some(x) = l1_fixed_lp(instance, blocks, q) {
            let v = eval(&x, None);
            if v < best_v {
                best_v = v;
                best_x = x;
            }
        }
    }
    FixedResult { value: best_v, lower_bound: lower.min(best_v), facilities: split(&best_x, q, d) }
}

/// Exact minimizer of the fixed-assignment problem under ℓ₁ as a linear
/// program. The ordered median is a nonnegative combination of sums of the
/// `r` largest distances, each `min_t r·t + Σ mᵢ·max(0, δᵢ − t)`.
fn l1_fixed_lp(instance: &Instance, blocks: &[usize], q: usize) -> Option<Vec<f64>> {
    let (n, d) = (instance.n(), instance.d());
    let mult = instance.multiplicity();
    let w = instance.lambda().weights();
    // (weight increment, r) for every rank where λ steps up
    let steps: Vec<(f64, f64)> = (0..w.len())
        .filter_map(|j| {
            let step = w[j] - if j == 0 { 0.0 } else { w[j - 1] };
            (step > 0.0).then_some((step, (w.len() - j) as f64))
        })
        .collect();
    let mut lp = LinearProgram::new();
    // e_il − x ≥ −a_il and e_il + x ≥ a_il
    let abs_rows: Vec<(usize, usize)> = (0..n * d)
        .map(|k| {
            let a = instance.point(k / d)[k % d];
            (lp.add_row(RowSense::Ge, -a), lp.add_row(RowSense::Ge, a))
        })
        .collect();
    // u_ij + t_j − Σ_l e_il ≥ 0
    let step_rows: Vec<Vec<usize>> = steps.iter().map(|_| (0..n).map(|_| lp.add_row(RowSense::Ge, 0.0)).collect()).collect();
    for b in 0..q {
        for l in 0..d {
            let entries = (0..n).filter(|&i| blocks[i] == b).flat_map(|i| {
                let (lo, hi) = abs_rows[i * d + l];
                [(lo, -1.0), (hi, 1.0)]
            });
            lp.add_column(0.0, f64::NEG_INFINITY, f64::INFINITY, entries);
        }
    }
    for (k, &(lo, hi)) in abs_rows.iter().enumerate() {
        let entries = [(lo, 1.0), (hi, 1.0)].into_iter().chain(step_rows.iter().map(|rows| (rows[k / d], -1.0)));
        lp.add_column(0.0, 0.0, f64::INFINITY, entries);
    }
    for (&(step, r), rows) in steps.iter().zip(&step_rows) {
        lp.add_column(step * r, f64::NEG_INFINITY, f64::INFINITY, rows.iter().map(|&row| (row, 1.0)));
        for i in 0..n {
            lp.add_column(step * mult[i] as f64, 0.0, f64::INFINITY, [(rows[i], 1.0)]);
        }
    }
    let sol = solve_lp(&lp).ok()?;
    sol.is_optimal().then(|| sol.primal[..q * d].to_vec())
}

/// Per-block coordinatewise medians and centroids.
fn block_starts(instance: &Instance, blocks: &[usize], q: usize) -> [Vec<f64>; 2] {
    let d = instance.d();
    let mut med = Vec::with_capacity(q * d);
    let mut mean = Vec::with_capacity(q * d);
    for b in 0..q {
        let members: Vec<usize> = (0..blocks.len()).filter(|&i| blocks[i] == b).collect();
        for l in 0..d {
            let mut vals: Vec<f64> = members.iter().map(|&i| instance.point(i)[l]).collect();
            vals.sort_by(f64::total_cmp);
            med.push(vals[(vals.len() - 1) / 2]);
            mean.push(vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }
    [med, mean]
}

fn split(x: &[f64], q: usize, d: usize) -> Vec<Point> {
    (0..q).map(|b| x[b * d..(b + 1) * d].to_vec()).collect()
}

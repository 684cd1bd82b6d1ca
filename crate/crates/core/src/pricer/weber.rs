//! Single-facility Weber problem: minimize `Σ wᵢ ‖aᵢ − x‖`.

use crate::error::{invalid, Result};
use crate::model::{Instance, NormSpec, Point};

const WEISZFELD_MAX_ITER: usize = 10_000;
const WEISZFELD_STEP_TOL: f64 = 1e-9;
const SUBGRADIENT_ITER: usize = 4_000;

pub fn weber_objective(points: &[&[f64]], weights: &[f64], norm: NormSpec, x: &[f64]) -> f64 {
    points.iter().zip(weights).map(|(a, w)| w * norm.dist(a, x)).sum()
}

/// Weber point of `subset` with weights parallel to `subset`.
pub fn weber_solve(instance: &Instance, subset: &[usize], weights: &[f64]) -> Result<Point> {
    if subset.is_empty() {
        return invalid("the Weber problem needs at least one point");
    }
    if subset.len() != weights.len() {
        return invalid("subset and weights differ in length");
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return invalid("Weber weights must be finite and nonnegative");
    }
    let pts: Vec<&[f64]> = subset.iter().map(|&i| instance.point(i)).collect();
    Ok(weber_point(&pts, weights, instance.norm()))
}

/// Weber point of arbitrary points; weights must be nonnegative. With all
/// weights zero every point is optimal and the centroid is returned.
pub fn weber_point(points: &[&[f64]], weights: &[f64], norm: NormSpec) -> Point {
    debug_assert!(!points.is_empty());
    if weights.iter().all(|&w| w <= 0.0) {
        return centroid(points, None);
    }
    match norm {
        NormSpec::L1 => weighted_median_point(points, weights),
        NormSpec::L2 => weiszfeld(points, weights).0,
        NormSpec::LTau { .. } => subgradient_weber(points, weights, norm),
    }
}

fn centroid(points: &[&[f64]], weights: Option<&[f64]>) -> Point {
    let d = points[0].len();
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    for (t, a) in points.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[t]);
        total += w;
        for l in 0..d {
            x[l] += w * a[l];
        }
    }
    x.iter_mut().for_each(|v| *v /= total);
    x
}

/// Lower weighted median of `values`.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| weights[i] > 0.0).collect();
    if idx.is_empty() {
        return values[0];
    }
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let total: f64 = idx.iter().map(|&i| weights[i]).sum();
    let mut acc = 0.0;
    for &i in &idx {
        acc += weights[i];
        if acc >= 0.5 * total * (1.0 - 1e-12) {
            return values[i];
        }
    }
    values[*idx.last().unwrap()]
}

fn weighted_median_point(points: &[&[f64]], weights: &[f64]) -> Point {
    let d = points[0].len();
    (0..d)
        .map(|l| {
            let vals: Vec<f64> = points.iter().map(|a| a[l]).collect();
            weighted_median(&vals, weights)
        })
        .collect()
}

/// Kuhn's test at demand point `j`: optimal iff the pull of the other points
/// does not exceed `wⱼ`. Returns the pull vector and its norm.
fn pull_at(points: &[&[f64]], weights: &[f64], j: usize) -> (Vec<f64>, f64) {
    let x = points[j];
    let d = x.len();
    let mut r = vec![0.0; d];
    for (t, a) in points.iter().enumerate() {
        let dist = NormSpec::L2.dist(a, x);
        if t == j || dist == 0.0 || weights[t] == 0.0 {
            continue;
        }
        for l in 0..d {
            r[l] += weights[t] * (a[l] - x[l]) / dist;
        }
    }
    let n = NormSpec::L2.norm(&r);
    (r, n)
}

/// Weiszfeld iteration with the Vardi–Zhang step at demand points. Returns
/// the point and the objective after every iteration (non-increasing).
pub fn weiszfeld(points: &[&[f64]], weights: &[f64]) -> (Point, Vec<f64>) {
    let norm = NormSpec::L2;
    let obj = |x: &[f64]| weber_objective(points, weights, norm, x);
    // a demand point that passes Kuhn's test is optimal
    let mut best_vertex = None;
    for j in 0..points.len() {
        let v = obj(points[j]);
        if best_vertex.is_none_or(|(_, bv)| v < bv) {
            best_vertex = Some((j, v));
        }
    }
    if let Some((j, v)) = best_vertex {
        // weights of coincident points add up at the vertex
        let wj: f64 = (0..points.len()).filter(|&t| points[t] == points[j]).map(|t| weights[t]).sum();
        if pull_at(points, weights, j).1 <= wj {
            return (points[j].to_vec(), vec![v]);
        }
    }
    let d = points[0].len();
    let mut x = centroid(points, Some(weights));
    let mut history = vec![obj(&x)];
    for _ in 0..WEISZFELD_MAX_ITER {
        let mut num = vec![0.0; d];
        let mut den = 0.0;
        let mut anchor_weight = 0.0;
        let mut pull = vec![0.0; d];
        for (a, &w) in points.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let dist = norm.dist(a, &x);
            if dist <= 1e-14 {
                anchor_weight += w;
                continue;
            }
            for l in 0..d {
                num[l] += w * a[l] / dist;
                pull[l] += w * (a[l] - x[l]) / dist;
            }
            den += w / dist;
        }
        if den == 0.0 {
            break;
        }
        let t: Vec<f64> = num.iter().map(|v| v / den).collect();
        let next: Vec<f64> = if anchor_weight > 0.0 {
            let r = norm.norm(&pull);
            if r <= anchor_weight {
                break;
            }
            let s = anchor_weight / r;
            t.iter().zip(&x).map(|(ti, xi)| (1.0 - s) * ti + s * xi).collect()
        } else {
            t
        };
        let step = norm.dist(&next, &x);
        let v = obj(&next);
        if v > *history.last().unwrap() {
            // rounding noise at convergence
            break;
        }
        x = next;
        history.push(v);
        if step < WEISZFELD_STEP_TOL {
            break;
        }
    }
    (x, history)
}

/// Projected subgradient with diminishing normalized steps, started from the
/// Euclidean Weber point, the box center of the points and the best demand
/// point; returns the best iterate seen.
fn subgradient_weber(points: &[&[f64]], weights: &[f64], norm: NormSpec) -> Point {
    let d = points[0].len();
    let mut lo = points[0].to_vec();
    let mut hi = points[0].to_vec();
    for a in points {
        for l in 0..d {
            lo[l] = lo[l].min(a[l]);
            hi[l] = hi[l].max(a[l]);
        }
    }
    let diam = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    if diam == 0.0 {
        return lo;
    }
    let obj = |x: &[f64]| weber_objective(points, weights, norm, x);
    let vertex = points
        .iter()
        .min_by(|a, b| obj(a).total_cmp(&obj(b)))
        .map(|a| a.to_vec())
        .unwrap();
    let starts = [weiszfeld(points, weights).0, lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect(), vertex];
    let mut best = starts[0].clone();
    let mut best_v = obj(&best);
    for start in starts {
        let mut x = start;
        let mut v = obj(&x);
        if v < best_v {
            best_v = v;
            best = x.clone();
        }
        let mut h = 0.25 * diam;
        let mut since_improve = 0;
        for k in 0..SUBGRADIENT_ITER {
            let mut g = vec![0.0; d];
            for (a, &w) in points.iter().zip(weights) {
                norm.add_subgradient(a, &x, w, &mut g);
            }
            let gn = NormSpec::L2.norm(&g);
            if gn == 0.0 {
                break;
            }
            let step = h / ((k % 200) as f64 + 1.0).sqrt();
            for l in 0..d {
                x[l] = (x[l] - step * g[l] / gn).clamp(lo[l], hi[l]);
            }
            v = obj(&x);
            if v < best_v - 1e-15 {
                best_v = v;
                best = x.clone();
                since_improve = 0;
            } else {
                since_improve += 1;
            }
            // restart from the best point with a smaller radius on plateaus
            if since_improve >= 200 {
                x = best.clone();
                h *= 0.5;
                since_improve = 0;
                if h < 1e-10 * diam {
                    break;
                }
            }
        }
    }
    best
}

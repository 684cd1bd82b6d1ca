//! Heuristics built on the branch-and-price machinery: the initial column
//! pool, heuristic-pricing-only branch-and-price, and demand point
//! aggregation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bnp::{solve, SolveConfig, SolveReport};
use crate::error::{invalid, Result};
use crate::master::Column;
use crate::model::{bounding_box, Instance, Point, Solution};
use crate::objective::{closest_assignment, evaluate};

/// Columns from repeated random facility placement, plus the best
/// placement found as a starting incumbent.
#[derive(Debug, Clone)]
pub struct InitialPool {
    pub columns: Vec<Column>,
    pub incumbent: Solution,
}

/// Round 1 draws `p` facilities uniformly in the bounding box. Every later
/// round keeps the `⌈p/2⌉` facilities with the largest clusters and redraws
/// the others. Each round contributes its nonempty closest-allocation
/// clusters as columns.
pub fn initial_pool(instance: &Instance, rounds: usize, seed: u64) -> Result<InitialPool> {
    if rounds == 0 {
        return invalid("initial pool needs at least one round");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = bounding_box(instance);
    let draw = |rng: &mut ChaCha8Rng| -> Point {
        b.lo.iter().zip(&b.hi).map(|(&l, &h)| if h > l { rng.gen_range(l..=h) } else { l }).collect()
    };
    let p = instance.p();
    let keep = p.div_ceil(2);
    let mut facilities: Vec<Point> = (0..p).map(|_| draw(&mut rng)).collect();
    let mut columns = Vec::new();
    let mut best: Option<Solution> = None;
    for round in 0..rounds {
        if round > 0 {
            let (_, assign) = closest_assignment(instance, &facilities)?;
            let mut size = vec![0usize; p];
            for (i, &j) in assign.iter().enumerate() {
                size[j] += instance.multiplicity()[i];
            }
            let mut order: Vec<usize> = (0..p).collect();
            order.sort_by(|&a, &c| size[c].cmp(&size[a]).then(a.cmp(&c)));
            let mut next = Vec::with_capacity(p);
            for &j in order.iter().take(keep) {
                if size[j] > 0 {
                    next.push(facilities[j].clone());
                }
            }
            while next.len() < p {
                next.push(draw(&mut rng));
            }
            facilities = next;
        }
        let (objective, assignment) = evaluate(instance, &facilities)?;
        for (j, x) in facilities.iter().enumerate() {
            let cluster: Vec<usize> = (0..instance.n()).filter(|&i| assignment[i] == j).collect();
            if !cluster.is_empty() {
                columns.push(Column::new(instance, cluster, x.clone())?);
            }
        }
        if best.as_ref().is_none_or(|s| objective < s.objective) {
            best = Some(Solution { facilities: facilities.clone(), assignment, objective });
        }
    }
    Ok(InitialPool { columns, incumbent: best.expect("at least one round ran") })
}

/// Branch-and-price with heuristic pricing only. The reported bound is not
/// proven.
pub fn matheur_solve(instance: &Instance, config: &SolveConfig) -> Result<SolveReport> {
    let cfg = SolveConfig { exact_pricing: false, heuristic_first: true, ..config.clone() };
    solve(instance, &cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AggregationMethod {
    KMean,
    Ptf,
}

/// Demand points replaced by representatives carrying multiplicities.
#[derive(Debug, Clone)]
pub struct Aggregation {
    /// Representatives weighted by the number of points they stand for,
    /// with the original λ.
    pub instance: Instance,
    /// Original point index → representative index in `instance`.
    pub mapping: Vec<usize>,
    /// Largest distance from a point to its representative, in the instance norm.
    pub delta: f64,
}

/// Lloyd's algorithm in L2.
#[derive(Debug, Clone)]
pub struct KMeans {
    pub centroids: Vec<Point>,
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squared distances after each iteration.
    pub history: Vec<f64>,
}

pub const KMEANS_MAX_ITERATIONS: usize = 100;
pub const KMEANS_TOL: f64 = 1e-8;

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_sq(x: &[f64], centers: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Seeded farthest-point initialization, then Lloyd iterations until no
/// centroid moves more than [`KMEANS_TOL`]. An empty cluster is reseeded at
/// the point farthest from its centroid.
pub fn kmeans(points: &[Point], m: usize, seed: u64) -> Result<KMeans> {
    if m == 0 || m > points.len() {
        return invalid(format!("cannot form {m} clusters from {} points", points.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    while centroids.len() < m {
        let far = (0..points.len())
            .map(|i| (i, nearest_sq(&points[i], &centroids).1))
            .fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b });
        centroids.push(points[far.0].clone());
    }
    let d = points[0].len();
    let mut assignment = vec![0; points.len()];
    let mut history = Vec::new();
    for _ in 0..KMEANS_MAX_ITERATIONS {
        for (i, x) in points.iter().enumerate() {
            assignment[i] = nearest_sq(x, &centroids).0;
        }
        let mut sum = vec![vec![0.0; d]; m];
        let mut count = vec![0usize; m];
        for (i, x) in points.iter().enumerate() {
            count[assignment[i]] += 1;
            for (s, v) in sum[assignment[i]].iter_mut().zip(x) {
                *s += v;
            }
        }
        let mut moved: f64 = 0.0;
        for j in 0..m {
            if count[j] == 0 {
                continue;
            }
            let c: Point = sum[j].iter().map(|s| s / count[j] as f64).collect();
            moved = moved.max(sq(&c, &centroids[j]).sqrt());
            centroids[j] = c;
        }
        for j in 0..m {
            if count[j] == 0 {
                let far = (0..points.len())
                    .map(|i| (i, sq(&points[i], &centroids[assignment[i]])))
                    .fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b });
                centroids[j] = points[far.0].clone();
                assignment[far.0] = j;
                moved = f64::INFINITY;
            }
        }
        history.push(points.iter().zip(&assignment).map(|(x, &j)| sq(x, &centroids[j])).sum());
        if moved <= KMEANS_TOL {
            break;
        }
    }
    for (i, x) in points.iter().enumerate() {
        assignment[i] = nearest_sq(x, &centroids).0;
    }
    Ok(KMeans { centroids, assignment, history })
}

/// Pick-the-farthest starting from demand point `first`: each further pick
/// is the unchosen point farthest from the last one chosen (lowest index on
/// ties).
pub fn ptf_indices(instance: &Instance, m: usize, first: usize) -> Result<Vec<usize>> {
    if m == 0 || m > instance.n() {
        return invalid(format!("cannot pick {m} of {} points", instance.n()));
    }
    if first >= instance.n() {
        return invalid(format!("first point {first} is out of range"));
    }
    let mut chosen = vec![first];
    let mut taken = vec![false; instance.n()];
    taken[first] = true;
    while chosen.len() < m {
        let last = instance.point(*chosen.last().unwrap());
        let mut best = (usize::MAX, -1.0);
        for i in 0..instance.n() {
            if !taken[i] {
                let dist = instance.dist(i, last);
                if dist > best.1 {
                    best = (i, dist);
                }
            }
        }
        taken[best.0] = true;
        chosen.push(best.0);
    }
    Ok(chosen)
}

/// Aggregates onto the given representatives: every point goes to its
/// nearest representative in the instance norm, unused representatives are
/// dropped.
pub fn aggregate_onto(instance: &Instance, reps: &[Point]) -> Result<Aggregation> {
    let mut near = Vec::with_capacity(instance.n());
    let mut delta: f64 = 0.0;
    for i in 0..instance.n() {
        let mut best = (0, f64::INFINITY);
        for (j, r) in reps.iter().enumerate() {
            let dist = instance.dist(i, r);
            if dist < best.1 {
                best = (j, dist);
            }
        }
        delta = delta.max(best.1);
        near.push(best.0);
    }
    let mut index = vec![usize::MAX; reps.len()];
    let mut points = Vec::new();
    let mut mult = Vec::new();
    for (i, &j) in near.iter().enumerate() {
        if index[j] == usize::MAX {
            index[j] = points.len();
            points.push(reps[j].clone());
            mult.push(0);
        }
        mult[index[j]] += instance.multiplicity()[i];
    }
    let mapping = near.iter().map(|&j| index[j]).collect();
    let agg = Instance::with_multiplicity(points, mult, instance.p(), instance.norm(), instance.lambda().clone())?;
    Ok(Aggregation { instance: agg, mapping, delta })
}

/// Aggregates to at most `m` representatives with k-means (clustered in L2)
/// or pick-the-farthest (first point drawn from `seed`).
pub fn aggregate(instance: &Instance, method: AggregationMethod, m: usize, seed: u64) -> Result<Aggregation> {
    if m == 0 || m > instance.n() {
        return invalid(format!("aggregation target {m} must lie in 1..={}", instance.n()));
    }
    let reps = match method {
        AggregationMethod::KMean => kmeans(instance.points(), m, seed)?.centroids,
        AggregationMethod::Ptf => {
            let first = ChaCha8Rng::seed_from_u64(seed).gen_range(0..instance.n());
            ptf_indices(instance, m, first)?.into_iter().map(|i| instance.point(i).to_vec()).collect()
        }
    };
    aggregate_onto(instance, &reps)
}

#[derive(Debug, Clone)]
pub struct AggregatedReport {
    /// Facilities found on the aggregated instance, evaluated on the original points.
    pub solution: Solution,
    /// Objective of the same facilities on the aggregated instance.
    pub aggregated_objective: f64,
    pub delta: f64,
    /// `2Δ·Σλ`: a priori loss of optimality from aggregation.
    pub two_delta_bound: f64,
    pub inner: SolveReport,
}

/// Solves the aggregated instance (exact or heuristic pricing per
/// `config.exact_pricing`) and evaluates its facilities on the original points.
pub fn aggregated_solve(
    instance: &Instance,
    method: AggregationMethod,
    m: usize,
    config: &SolveConfig,
) -> Result<AggregatedReport> {
    let agg = aggregate(instance, method, m, config.seed)?;
    let inner = solve(&agg.instance, config)?;
    let facilities = inner.incumbent.facilities.clone();
    let (objective, assignment) = evaluate(instance, &facilities)?;
    Ok(AggregatedReport {
        solution: Solution { facilities, assignment, objective },
        aggregated_objective: inner.incumbent.objective,
        delta: agg.delta,
        two_delta_bound: 2.0 * agg.delta * instance.lambda().sum(),
        inner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_lambda, LambdaKind, NormSpec};
    use approx::assert_relative_eq;

    fn inst(points: Vec<Vec<f64>>, p: usize, norm: NormSpec) -> Instance {
        let lam = make_lambda(LambdaKind::W, points.len(), 0, 0.0).unwrap();
        Instance::new(points, p, norm, lam).unwrap()
    }

    #[test]
    fn pool_columns_have_true_distances() {
        let pts: Vec<Vec<f64>> = (0..12).map(|i| vec![(i * 7 % 11) as f64, (i * 3 % 5) as f64]).collect();
        let inst = inst(pts, 3, NormSpec::L2);
        let a = initial_pool(&inst, 5, 9).unwrap();
        let b = initial_pool(&inst, 5, 9).unwrap();
        assert_eq!(a.columns, b.columns);
        for c in &a.columns {
            for (&i, &d) in c.subset.iter().zip(&c.delta) {
                assert_eq!(d, inst.dist(i, &c.facility));
            }
        }
        let (obj, _) = evaluate(&inst, &a.incumbent.facilities).unwrap();
        assert_eq!(obj, a.incumbent.objective);
        assert!(initial_pool(&inst, 0, 9).is_err());
    }

    #[test]
    fn kmeans_examples() {
        let line = inst(vec![vec![0.0], vec![10.0]], 1, NormSpec::L1);
        let a = aggregate(&line, AggregationMethod::KMean, 1, 0).unwrap();
        assert_eq!(a.instance.points(), &[vec![5.0]]);
        assert_eq!(a.instance.multiplicity(), &[2]);
        assert_relative_eq!(a.delta, 5.0);
        let same = aggregate(&line, AggregationMethod::KMean, 2, 0).unwrap();
        assert_eq!(same.delta, 0.0);
    }

    #[test]
    fn ptf_example() {
        let pts = inst(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![10.0, 0.0]], 1, NormSpec::L2);
        let idx = ptf_indices(&pts, 2, 1).unwrap();
        assert_eq!(idx, vec![1, 2]);
        let reps: Vec<Point> = idx.iter().map(|&i| pts.point(i).to_vec()).collect();
        let a = aggregate_onto(&pts, &reps).unwrap();
        assert_relative_eq!(a.delta, 1.0);
        assert_eq!(a.mapping, vec![0, 0, 1]);
        assert!(aggregate(&pts, AggregationMethod::Ptf, 4, 0).is_err());
    }

    #[test]
    fn kmeans_sse_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Point> = (0..60).map(|_| vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)]).collect();
        for m in [2, 5, 9] {
            let k = kmeans(&pts, m, 3).unwrap();
            for w in k.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-9);
            }
        }
    }

    #[test]
    fn matheur_never_beats_exact() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 3.0], vec![4.0, 1.0], vec![5.0, 5.0], vec![2.0, 2.0]];
        let inst = inst(pts, 2, NormSpec::L1);
        let cfg = SolveConfig::default();
        let exact = solve(&inst, &cfg).unwrap();
        let heur = matheur_solve(&inst, &cfg).unwrap();
        assert!(heur.incumbent.objective >= exact.incumbent.objective - 1e-9);
        assert!(!heur.bound_is_exact);
    }
}

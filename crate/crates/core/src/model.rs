//! Core domain types: instances, norms, λ-vectors and solutions.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A coordinate vector in ℝᵈ.
pub type Point = Vec<f64>;

/// Multiplicative slack turning `M > max ‖aᵢ − aₖ‖` into a computable value.
pub const BIG_M_SLACK: f64 = 1e-6;

/// Distance norm: ℓ₁, ℓ₂ or ℓ_τ with rational exponent τ = r/s > 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormSpec {
    L1,
    L2,
    LTau { r: u32, s: u32 },
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl NormSpec {
    /// Builds `LTau(r, s)`; requires `r > s ≥ 1` and `gcd(r, s) = 1`.
    pub fn ltau(r: u32, s: u32) -> Result<Self> {
        if s == 0 || r <= s {
            return invalid(format!("l_tau exponent {r}/{s} must satisfy r > s >= 1"));
        }
        if gcd(r, s) != 1 {
            return invalid(format!("l_tau exponent {r}/{s} is not in lowest terms"));
        }
        Ok(NormSpec::LTau { r, s })
    }

    pub fn tau(&self) -> f64 {
        match *self {
            NormSpec::L1 => 1.0,
            NormSpec::L2 => 2.0,
            NormSpec::LTau { r, s } => r as f64 / s as f64,
        }
    }

    /// Norm of a difference vector.
    pub fn norm(&self, v: &[f64]) -> f64 {
        self.norm_iter(v.iter().copied())
    }

    pub(crate) fn norm_iter(&self, it: impl Iterator<Item = f64>) -> f64 {
        match *self {
            NormSpec::L1 => it.map(f64::abs).sum(),
            NormSpec::L2 => it.map(|t| t * t).sum::<f64>().sqrt(),
            NormSpec::LTau { .. } => {
                let tau = self.tau();
                let v: Vec<f64> = it.map(f64::abs).collect();
                let scale = v.iter().cloned().fold(0.0, f64::max);
                if scale == 0.0 {
                    return 0.0;
                }
                let s: f64 = v.iter().map(|t| (t / scale).powf(tau)).sum();
                scale * s.powf(1.0 / tau)
            }
        }
    }

    /// ‖a − x‖ without dimension checks.
    #[inline]
    pub fn dist(&self, a: &[f64], x: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), x.len());
        match *self {
            NormSpec::L1 => a.iter().zip(x).map(|(p, q)| (p - q).abs()).sum(),
            NormSpec::L2 => a
                .iter()
                .zip(x)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt(),
            NormSpec::LTau { .. } => self.norm_iter(a.iter().zip(x).map(|(p, q)| p - q)),
        }
    }

    /// Norm of the dual space (ℓ∞ for ℓ₁, ℓ₂ for ℓ₂, ℓ_q with 1/τ + 1/q = 1).
    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        match *self {
            NormSpec::L1 => v.iter().fold(0.0, |m, t| m.max(t.abs())),
            NormSpec::L2 => v.iter().map(|t| t * t).sum::<f64>().sqrt(),
            NormSpec::LTau { r, s } => {
                // q = r / (r - s)
                let q = r as f64 / (r - s) as f64;
                let scale = v.iter().fold(0.0, |m: f64, t| m.max(t.abs()));
                if scale == 0.0 {
                    return 0.0;
                }
                scale * v.iter().map(|t| (t.abs() / scale).powf(q)).sum::<f64>().powf(1.0 / q)
            }
        }
    }

    /// Adds `weight · g` to `out`, where g is a subgradient of `x ↦ ‖x − a‖` at `x`.
    /// At `x = a` the zero subgradient is used.
    pub fn add_subgradient(&self, a: &[f64], x: &[f64], weight: f64, out: &mut [f64]) {
        match *self {
            NormSpec::L1 => {
                for l in 0..a.len() {
                    let d = x[l] - a[l];
                    if d > 0.0 {
                        out[l] += weight;
                    } else if d < 0.0 {
                        out[l] -= weight;
                    }
                }
            }
            NormSpec::L2 => {
                let n = self.dist(a, x);
                if n > 0.0 {
                    for l in 0..a.len() {
                        out[l] += weight * (x[l] - a[l]) / n;
                    }
                }
            }
            NormSpec::LTau { .. } => {
                let n = self.dist(a, x);
                if n > 0.0 {
                    let tau = self.tau();
                    for l in 0..a.len() {
                        let d = x[l] - a[l];
                        out[l] += weight * d.signum() * (d.abs() / n).powf(tau - 1.0);
                    }
                }
            }
        }
    }
}

/// Checked distance `(Σₗ |aₗ − xₗ|^τ)^{1/τ}`.
pub fn distance(a: &[f64], x: &[f64], norm: NormSpec) -> Result<f64> {
    if a.len() != x.len() {
        return invalid(format!("dimension mismatch: {} vs {}", a.len(), x.len()));
    }
    Ok(norm.dist(a, x))
}

/// The ordered-median families of λ-vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LambdaKind {
    /// p-median, all ones.
    W,
    /// p-center, only the largest distance counts.
    C,
    /// k-center, the k largest distances.
    K,
    /// Centdian, α everywhere except 1 on the largest.
    D,
    /// k-entdian, α then k ones.
    S,
    /// Ascendant, i/(n−1).
    A,
    Custom,
}

impl LambdaKind {
    pub fn label(&self) -> &'static str {
        match self {
            LambdaKind::W => "W",
            LambdaKind::C => "C",
            LambdaKind::K => "K",
            LambdaKind::D => "D",
            LambdaKind::S => "S",
            LambdaKind::A => "A",
            LambdaKind::Custom => "custom",
        }
    }
}

/// Monotone nondecreasing nonnegative ordered-median weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaVector {
    weights: Vec<f64>,
    kind: LambdaKind,
    k: usize,
    alpha: f64,
}

impl LambdaVector {
    /// Wraps explicit weights, rejecting negative or decreasing entries.
    pub fn custom(weights: Vec<f64>) -> Result<Self> {
        Self::validated(weights, LambdaKind::Custom, 0, 0.0)
    }

    fn validated(weights: Vec<f64>, kind: LambdaKind, k: usize, alpha: f64) -> Result<Self> {
        if weights.is_empty() {
            return invalid("lambda must not be empty");
        }
        for (i, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                return invalid(format!("lambda[{i}] = {w} is not a finite nonnegative value"));
            }
            if i > 0 && *w < weights[i - 1] {
                return invalid(format!("lambda is not nondecreasing at position {i}"));
            }
        }
        Ok(Self { weights, kind, k, alpha })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn kind(&self) -> LambdaKind {
        self.kind
    }

    /// The `k` parameter used at construction (0 when not applicable).
    pub fn k(&self) -> usize {
        self.k
    }

    /// The `α` parameter used at construction (0 when not applicable).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Builds the λ-vector of a named family for `n` demand points.
pub fn make_lambda(kind: LambdaKind, n: usize, k: usize, alpha: f64) -> Result<LambdaVector> {
    if n == 0 {
        return invalid("lambda length must be at least 1");
    }
    if matches!(kind, LambdaKind::K | LambdaKind::S) && (k == 0 || k > n) {
        return invalid(format!("k = {k} must lie in 1..={n}"));
    }
    if matches!(kind, LambdaKind::D | LambdaKind::S) && !(0.0..=1.0).contains(&alpha) {
        return invalid(format!("alpha = {alpha} must lie in [0, 1]"));
    }
    let w: Vec<f64> = match kind {
        LambdaKind::W => vec![1.0; n],
        LambdaKind::C => (0..n).map(|i| if i + 1 == n { 1.0 } else { 0.0 }).collect(),
        LambdaKind::K => (0..n).map(|i| if i >= n - k { 1.0 } else { 0.0 }).collect(),
        LambdaKind::D => (0..n).map(|i| if i + 1 == n { 1.0 } else { alpha }).collect(),
        LambdaKind::S => (0..n).map(|i| if i >= n - k { 1.0 } else { alpha }).collect(),
        LambdaKind::A => {
            if n == 1 {
                vec![1.0]
            } else {
                (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
            }
        }
        LambdaKind::Custom => return invalid("custom lambda needs explicit weights"),
    };
    let (k, alpha) = match kind {
        LambdaKind::K => (k, 0.0),
        LambdaKind::S => (k, alpha),
        LambdaKind::D => (0, alpha),
        _ => (0, 0.0),
    };
    LambdaVector::validated(w, kind, k, alpha)
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperrect {
    pub lo: Point,
    pub hi: Point,
}

impl Hyperrect {
    pub fn new(lo: Point, hi: Point) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Point {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    pub fn clamp(&self, x: &[f64]) -> Point {
        x.iter().zip(self.lo.iter().zip(&self.hi)).map(|(v, (l, h))| v.clamp(*l, *h)).collect()
    }

    /// Index and length of the longest edge.
    pub fn longest_edge(&self) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for l in 0..self.dim() {
            let w = self.hi[l] - self.lo[l];
            if w > best.1 {
                best = (l, w);
            }
        }
        best
    }

    /// Smallest norm distance from `a` to any point of the box.
    pub fn dist_lb(&self, a: &[f64], norm: NormSpec) -> f64 {
        norm.norm_iter(
            a.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .map(|(v, (l, h))| v - v.clamp(*l, *h)),
        )
    }

    /// Largest norm distance from `a` to any point of the box.
    pub fn dist_ub(&self, a: &[f64], norm: NormSpec) -> f64 {
        norm.norm_iter(
            a.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .map(|(v, (l, h))| (v - l).abs().max((v - h).abs())),
        )
    }

    pub fn split(&self, axis: usize) -> (Hyperrect, Hyperrect) {
        let mid = 0.5 * (self.lo[axis] + self.hi[axis]);
        let mut left = self.clone();
        let mut right = self.clone();
        left.hi[axis] = mid;
        right.lo[axis] = mid;
        (left, right)
    }
}

/// Demand points, facility count, norm and ordered-median weights.
///
/// Each demand point carries an integer multiplicity (1 unless the instance
/// came out of an aggregation); λ has one entry per unit of multiplicity, so
/// an instance with multiplicities behaves exactly like the multiset in
/// which every point is repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    points: Vec<Point>,
    multiplicity: Vec<usize>,
    p: usize,
    norm: NormSpec,
    lambda: LambdaVector,
}

impl Instance {
    pub fn new(points: Vec<Point>, p: usize, norm: NormSpec, lambda: LambdaVector) -> Result<Self> {
        let m = vec![1; points.len()];
        Self::with_multiplicity(points, m, p, norm, lambda)
    }

    pub fn with_multiplicity(
        points: Vec<Point>,
        multiplicity: Vec<usize>,
        p: usize,
        norm: NormSpec,
        lambda: LambdaVector,
    ) -> Result<Self> {
        if points.is_empty() {
            return invalid("an instance needs at least one demand point");
        }
        if p == 0 {
            return invalid("p must be at least 1");
        }
        let d = points[0].len();
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        for (i, a) in points.iter().enumerate() {
            if a.len() != d {
                return invalid(format!("point {i} has dimension {} instead of {d}", a.len()));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return invalid(format!("point {i} has a non-finite coordinate"));
            }
        }
        if multiplicity.len() != points.len() || multiplicity.iter().any(|&w| w == 0) {
            return invalid("every demand point needs a positive multiplicity");
        }
        let total: usize = multiplicity.iter().sum();
        if lambda.len() != total {
            return invalid(format!("lambda has length {} but the demand has {total} units", lambda.len()));
        }
        Ok(Self { points, multiplicity, p, norm, lambda })
    }

    /// Number of distinct demand points.
    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Total demand, i.e. the length of λ.
    pub fn total_demand(&self) -> usize {
        self.lambda.len()
    }

    pub fn d(&self) -> usize {
        self.points[0].len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn norm(&self) -> NormSpec {
        self.norm
    }

    pub fn lambda(&self) -> &LambdaVector {
        &self.lambda
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn multiplicity(&self) -> &[usize] {
        &self.multiplicity
    }

    pub fn has_unit_multiplicity(&self) -> bool {
        self.multiplicity.iter().all(|&w| w == 1)
    }

    pub fn with_lambda(&self, lambda: LambdaVector) -> Result<Self> {
        Self::with_multiplicity(self.points.clone(), self.multiplicity.clone(), self.p, self.norm, lambda)
    }

    pub fn with_p(&self, p: usize) -> Result<Self> {
        Self::with_multiplicity(self.points.clone(), self.multiplicity.clone(), p, self.norm, self.lambda.clone())
    }

    pub fn dist(&self, i: usize, x: &[f64]) -> f64 {
        self.norm.dist(&self.points[i], x)
    }
}

/// Componentwise min/max over all demand points.
pub fn bounding_box(instance: &Instance) -> Hyperrect {
    let d = instance.d();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for a in instance.points() {
        for l in 0..d {
            lo[l] = lo[l].min(a[l]);
            hi[l] = hi[l].max(a[l]);
        }
    }
    Hyperrect::new(lo, hi)
}

/// Largest pairwise demand distance, inflated by [`BIG_M_SLACK`].
pub fn big_m(instance: &Instance) -> f64 {
    let pts = instance.points();
    let mut best: f64 = 0.0;
    for i in 0..pts.len() {
        for k in i + 1..pts.len() {
            best = best.max(instance.norm().dist(&pts[i], &pts[k]));
        }
    }
    best * (1.0 + BIG_M_SLACK)
}

/// Facilities with the closest-facility assignment of every demand point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub facilities: Vec<Point>,
    pub assignment: Vec<usize>,
    pub objective: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn w(n: usize) -> LambdaVector {
        make_lambda(LambdaKind::W, n, 0, 0.0).unwrap()
    }

    #[test]
    fn distances() {
        let o = [0.0, 0.0];
        assert_eq!(distance(&o, &[3.0, 4.0], NormSpec::L2).unwrap(), 5.0);
        assert_eq!(distance(&o, &[3.0, 4.0], NormSpec::L1).unwrap(), 7.0);
        let lt = NormSpec::ltau(3, 2).unwrap();
        let v = distance(&o, &[1.0, 1.0], lt).unwrap();
        assert_relative_eq!(v, 2f64.powf(2.0 / 3.0), epsilon = 1e-14);
        // bisection on t ↦ 2·(1/t)^{3/2} − 1 = 0 gives the same root
        let (mut lo, mut hi) = (1.0f64, 2.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 2.0 * (1.0 / mid).powf(1.5) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_relative_eq!(v, lo, epsilon = 1e-12);
        assert!(matches!(distance(&o, &[1.0], NormSpec::L1), Err(crate::Error::InvalidInput(_))));
    }

    #[test]
    fn ltau_validation() {
        assert!(NormSpec::ltau(3, 2).is_ok());
        assert!(NormSpec::ltau(2, 2).is_err());
        assert!(NormSpec::ltau(4, 2).is_err());
        assert!(NormSpec::ltau(1, 2).is_err());
        assert!(NormSpec::ltau(3, 0).is_err());
    }

    #[test]
    fn lambda_families() {
        assert_eq!(make_lambda(LambdaKind::W, 3, 0, 0.0).unwrap().weights(), &[1.0, 1.0, 1.0]);
        assert_eq!(make_lambda(LambdaKind::A, 3, 0, 0.0).unwrap().weights(), &[0.0, 0.5, 1.0]);
        assert_eq!(make_lambda(LambdaKind::K, 4, 2, 0.0).unwrap().weights(), &[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(make_lambda(LambdaKind::C, 3, 0, 0.0).unwrap().weights(), &[0.0, 0.0, 1.0]);
        assert_eq!(make_lambda(LambdaKind::D, 3, 0, 0.9).unwrap().weights(), &[0.9, 0.9, 1.0]);
        assert_eq!(make_lambda(LambdaKind::S, 4, 2, 0.5).unwrap().weights(), &[0.5, 0.5, 1.0, 1.0]);
        assert!(make_lambda(LambdaKind::K, 4, 5, 0.0).is_err());
        assert!(make_lambda(LambdaKind::K, 4, 0, 0.0).is_err());
        assert!(make_lambda(LambdaKind::D, 4, 0, 1.5).is_err());
        assert!(make_lambda(LambdaKind::W, 0, 0, 0.0).is_err());
        assert!(LambdaVector::custom(vec![1.0, 0.5]).is_err());
        assert!(LambdaVector::custom(vec![-1.0, 0.5]).is_err());
    }

    #[test]
    fn boxes() {
        let inst = Instance::new(vec![vec![0.0, 0.0], vec![2.0, 1.0]], 1, NormSpec::L2, w(2)).unwrap();
        let b = bounding_box(&inst);
        assert_eq!((b.lo.clone(), b.hi.clone()), (vec![0.0, 0.0], vec![2.0, 1.0]));
        let one = Instance::new(vec![vec![5.0, 5.0]], 1, NormSpec::L2, w(1)).unwrap();
        let b = bounding_box(&one);
        assert_eq!((b.lo.clone(), b.hi.clone()), (vec![5.0, 5.0], vec![5.0, 5.0]));
        let three = Instance::new(
            vec![vec![1.0, 9.0], vec![3.0, 2.0], vec![2.0, 5.0]],
            1,
            NormSpec::L1,
            w(3),
        )
        .unwrap();
        let b = bounding_box(&three);
        assert_eq!((b.lo, b.hi), (vec![1.0, 2.0], vec![3.0, 9.0]));
    }

    #[test]
    fn big_m_values() {
        let two = Instance::new(vec![vec![0.0, 0.0], vec![3.0, 4.0]], 1, NormSpec::L2, w(2)).unwrap();
        assert_relative_eq!(big_m(&two), 5.0 * (1.0 + 1e-6));
        let one = Instance::new(vec![vec![1.0, 1.0]], 1, NormSpec::L2, w(1)).unwrap();
        assert_eq!(big_m(&one), 0.0);
        let tri = Instance::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]],
            1,
            NormSpec::L1,
            w(3),
        )
        .unwrap();
        assert_relative_eq!(big_m(&tri), 3.0 * (1.0 + 1e-6));
    }

    #[test]
    fn instance_validation() {
        assert!(Instance::new(vec![], 1, NormSpec::L1, w(1)).is_err());
        assert!(Instance::new(vec![vec![0.0]], 0, NormSpec::L1, w(1)).is_err());
        assert!(Instance::new(vec![vec![0.0], vec![0.0, 1.0]], 1, NormSpec::L1, w(2)).is_err());
        assert!(Instance::new(vec![vec![0.0]], 1, NormSpec::L1, w(2)).is_err());
        // duplicates are fine
        assert!(Instance::new(vec![vec![0.0], vec![0.0]], 1, NormSpec::L1, w(2)).is_ok());
        assert!(Instance::with_multiplicity(vec![vec![0.0], vec![1.0]], vec![2, 1], 1, NormSpec::L1, w(3)).is_ok());
    }

    #[test]
    fn box_distance_bounds() {
        let b = Hyperrect::new(vec![0.0, 0.0], vec![1.0, 2.0]);
        assert_eq!(b.dist_lb(&[3.0, 1.0], NormSpec::L1), 2.0);
        assert_eq!(b.dist_ub(&[3.0, 1.0], NormSpec::L1), 4.0);
        assert_eq!(b.dist_lb(&[0.5, 0.5], NormSpec::L2), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn norms() -> impl Strategy<Value = NormSpec> {
            prop_oneof![
                Just(NormSpec::L1),
                Just(NormSpec::L2),
                Just(NormSpec::LTau { r: 3, s: 2 }),
                Just(NormSpec::LTau { r: 3, s: 1 }),
            ]
        }

        fn pt() -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-10.0f64..10.0, 2)
        }

        proptest! {
            #[test]
            fn metric_axioms(norm in norms(), a in pt(), b in pt(), c in pt()) {
                let tol = if matches!(norm, NormSpec::LTau { .. }) { 1e-9 } else { 1e-12 };
                let ab = norm.dist(&a, &b);
                prop_assert!((ab - norm.dist(&b, &a)).abs() <= tol);
                prop_assert!(norm.dist(&a, &a) == 0.0);
                prop_assert!(ab <= norm.dist(&a, &c) + norm.dist(&c, &b) + tol);
                if a != b { prop_assert!(ab > 0.0); }
            }

            #[test]
            fn lambda_is_monotone(n in 1usize..40, kf in 0.0f64..1.0, alpha in 0.0f64..=1.0, kind in 0usize..6) {
                let kind = [LambdaKind::W, LambdaKind::C, LambdaKind::K, LambdaKind::D, LambdaKind::S, LambdaKind::A][kind];
                let k = 1 + ((n - 1) as f64 * kf) as usize;
                let l = make_lambda(kind, n, k, alpha).unwrap();
                prop_assert_eq!(l.len(), n);
                prop_assert!(l.weights().windows(2).all(|w| w[0] <= w[1]));
                prop_assert!(l.weights().iter().all(|w| *w >= 0.0));
            }

            #[test]
            fn big_m_dominates(norm in norms(), pts in proptest::collection::vec(pt(), 2..8)) {
                let n = pts.len();
                let inst = Instance::new(pts.clone(), 1, norm, make_lambda(LambdaKind::W, n, 0, 0.0).unwrap()).unwrap();
                let m = big_m(&inst);
                for i in 0..n {
                    for k in 0..n {
                        if pts[i] != pts[k] {
                            prop_assert!(m > norm.dist(&pts[i], &pts[k]));
                        }
                    }
                }
            }

            #[test]
            fn box_bound_is_valid(norm in norms(), a in pt(), lo in pt(), ext in proptest::collection::vec(0.0f64..5.0, 2), t in proptest::collection::vec(0.0f64..=1.0, 2)) {
                let hi: Vec<f64> = lo.iter().zip(&ext).map(|(l, e)| l + e).collect();
                let b = Hyperrect::new(lo.clone(), hi.clone());
                let x: Vec<f64> = (0..2).map(|l| lo[l] + t[l] * ext[l]).collect();
                let dx = norm.dist(&a, &x);
                prop_assert!(dx >= b.dist_lb(&a, norm) - 1e-12);
                prop_assert!(dx <= b.dist_ub(&a, norm) + 1e-12);
            }
        }
    }
}

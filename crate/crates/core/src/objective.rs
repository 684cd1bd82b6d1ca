//! Ordered median evaluation and closest-facility aggregation.

use crate::error::{invalid, Error, Result};
use crate::model::{Instance, LambdaVector, Point};

/// Largest length accepted by the permutation-enumeration cross-check.
pub const ASSIGNMENT_CHECK_MAX_N: usize = 8;

/// Indices of `distances` in ascending order; equal values keep index order.
pub fn ascending_order(distances: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..distances.len()).collect();
    idx.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(a.cmp(&b)));
    idx
}

/// `Σᵢ λᵢ δ₍ᵢ₎` over the ascending sort of `distances`.
pub fn ordered_median(distances: &[f64], lambda: &LambdaVector) -> Result<f64> {
    if distances.len() != lambda.len() {
        return invalid(format!(
            "{} distances for a lambda of length {}",
            distances.len(),
            lambda.len()
        ));
    }
    let w = lambda.weights();
    Ok(ascending_order(distances).iter().zip(w).map(|(&i, l)| l * distances[i]).sum())
}

/// Ordered median of the multiset in which `distances[i]` occurs
/// `multiplicity[i]` times.
pub fn ordered_median_weighted(distances: &[f64], multiplicity: &[usize], lambda: &LambdaVector) -> Result<f64> {
    Ok(rank_coefficients(distances, multiplicity, lambda)?
        .iter()
        .zip(distances)
        .map(|(c, d)| c * d)
        .sum())
}

/// Per-point sum of the λ entries occupied by that point in the sorted
/// multiset. The ordered median is the dot product of these coefficients
/// with the distances, and the coefficient vector is a subgradient of the
/// ordered median with respect to the distances.
pub fn rank_coefficients(distances: &[f64], multiplicity: &[usize], lambda: &LambdaVector) -> Result<Vec<f64>> {
    if distances.len() != multiplicity.len() {
        return invalid("distances and multiplicities differ in length");
    }
    let total: usize = multiplicity.iter().sum();
    if total != lambda.len() {
        return invalid(format!("total multiplicity {total} differs from lambda length {}", lambda.len()));
    }
    let w = lambda.weights();
    let mut coef = vec![0.0; distances.len()];
    let mut pos = 0;
    for i in ascending_order(distances) {
        coef[i] = w[pos..pos + multiplicity[i]].iter().sum();
        pos += multiplicity[i];
    }
    Ok(coef)
}

/// Closest-facility distance and facility index for every demand point.
/// Ties go to the lowest facility index.
pub fn closest_assignment(instance: &Instance, facilities: &[Point]) -> Result<(Vec<f64>, Vec<usize>)> {
    if facilities.is_empty() {
        return invalid("at least one facility is required");
    }
    let d = instance.d();
    if let Some(j) = facilities.iter().position(|x| x.len() != d) {
        return invalid(format!("facility {j} does not have dimension {d}"));
    }
    let mut dist = Vec::with_capacity(instance.n());
    let mut assign = Vec::with_capacity(instance.n());
    for i in 0..instance.n() {
        let mut best = (f64::INFINITY, 0);
        for (j, x) in facilities.iter().enumerate() {
            let v = instance.dist(i, x);
            if v < best.0 {
                best = (v, j);
            }
        }
        dist.push(best.0);
        assign.push(best.1);
    }
    Ok((dist, assign))
}

/// Ordered-median objective of a facility set under closest allocation.
pub fn evaluate(instance: &Instance, facilities: &[Point]) -> Result<(f64, Vec<usize>)> {
    let (dist, assign) = closest_assignment(instance, facilities)?;
    let obj = ordered_median_weighted(&dist, instance.multiplicity(), instance.lambda())?;
    Ok((obj, assign))
}

/// Ordered median computed as `max Σ λₖ δᵢ σᵢₖ` over permutation matrices σ,
/// by enumerating all permutations. Only meant as a cross-check.
pub fn ordered_median_via_assignment(distances: &[f64], lambda: &LambdaVector) -> Result<f64> {
    let n = distances.len();
    if n != lambda.len() {
        return invalid("distances and lambda differ in length");
    }
    if n > ASSIGNMENT_CHECK_MAX_N {
        return Err(Error::Refused(format!(
            "permutation enumeration is limited to n <= {ASSIGNMENT_CHECK_MAX_N}"
        )));
    }
    let w = lambda.weights();
    let mut perm: Vec<usize> = (0..n).collect();
    let value = |perm: &[usize]| -> f64 { perm.iter().enumerate().map(|(k, &i)| w[k] * distances[i]).sum() };
    let mut best = value(&perm);
    // Heap's algorithm
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.max(value(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_lambda, LambdaKind, NormSpec};
    use approx::assert_relative_eq;

    fn lam(v: &[f64]) -> LambdaVector {
        LambdaVector::custom(v.to_vec()).unwrap()
    }

    #[test]
    fn ordered_median_examples() {
        let d = [3.0, 1.0, 2.0];
        assert_eq!(ordered_median(&d, &lam(&[1.0, 1.0, 1.0])).unwrap(), 6.0);
        assert_eq!(ordered_median(&d, &lam(&[0.0, 0.0, 1.0])).unwrap(), 3.0);
        assert_eq!(ordered_median(&d, &lam(&[0.0, 0.5, 1.0])).unwrap(), 4.0);
        assert!(ordered_median(&d, &lam(&[1.0])).is_err());
    }

    #[test]
    fn assignment_examples() {
        assert_eq!(ordered_median_via_assignment(&[1.0, 2.0], &lam(&[0.0, 1.0])).unwrap(), 2.0);
        assert_eq!(ordered_median_via_assignment(&[3.0, 1.0, 2.0], &lam(&[0.0, 0.5, 1.0])).unwrap(), 4.0);
        assert_eq!(ordered_median_via_assignment(&[5.0, 5.0], &lam(&[0.2, 0.8])).unwrap(), 5.0);
        let big = vec![1.0; 9];
        assert!(matches!(
            ordered_median_via_assignment(&big, &lam(&big)),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn evaluate_examples() {
        let any = make_lambda(LambdaKind::A, 2, 0, 0.0).unwrap();
        let inst = Instance::new(vec![vec![0.0, 0.0], vec![10.0, 0.0]], 2, NormSpec::L2, any).unwrap();
        let (v, a) = evaluate(&inst, &[vec![0.0, 0.0], vec![10.0, 0.0]]).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(a, vec![0, 1]);

        let w = make_lambda(LambdaKind::W, 2, 0, 0.0).unwrap();
        let inst = Instance::new(vec![vec![0.0, 0.0], vec![4.0, 0.0]], 1, NormSpec::L1, w).unwrap();
        assert_eq!(evaluate(&inst, &[vec![1.0, 0.0]]).unwrap().0, 4.0);

        let c = make_lambda(LambdaKind::C, 3, 0, 0.0).unwrap();
        let inst =
            Instance::new(vec![vec![0.0, 0.0], vec![4.0, 0.0], vec![4.0, 3.0]], 2, NormSpec::L2, c).unwrap();
        let (v, a) = evaluate(&inst, &[vec![0.0, 0.0], vec![4.0, 0.0]]).unwrap();
        assert_eq!(v, 3.0);
        assert_eq!(a, vec![0, 1, 1]);
        assert!(evaluate(&inst, &[]).is_err());
        assert!(evaluate(&inst, &[vec![0.0]]).is_err());
    }

    #[test]
    fn ties_go_to_lowest_facility() {
        let w = make_lambda(LambdaKind::W, 1, 0, 0.0).unwrap();
        let inst = Instance::new(vec![vec![0.0, 0.0]], 2, NormSpec::L1, w).unwrap();
        let (_, a) = evaluate(&inst, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(a, vec![0]);
    }

    #[test]
    fn weighted_matches_expanded() {
        let l = lam(&[0.0, 0.25, 0.5, 1.0]);
        let v = ordered_median_weighted(&[2.0, 1.0], &[3, 1], &l).unwrap();
        let e = ordered_median(&[2.0, 2.0, 2.0, 1.0], &l).unwrap();
        assert_relative_eq!(v, e);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
            (1usize..=7).prop_flat_map(|n| {
                (
                    proptest::collection::vec(0.0f64..100.0, n),
                    proptest::collection::vec(0.0f64..3.0, n),
                )
            })
        }

        fn monotone(mut v: Vec<f64>) -> LambdaVector {
            v.sort_by(f64::total_cmp);
            LambdaVector::custom(v).unwrap()
        }

        proptest! {
            #[test]
            fn rearrangement_equivalence((d, l) in case()) {
                let l = monotone(l);
                let a = ordered_median(&d, &l).unwrap();
                let b = ordered_median_via_assignment(&d, &l).unwrap();
                prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
            }

            #[test]
            fn monotone_in_each_distance((d, l) in case(), bump in 0.0f64..10.0, pick in 0usize..7) {
                let l = monotone(l);
                let mut e = d.clone();
                let i = pick % d.len();
                e[i] += bump;
                prop_assert!(ordered_median(&e, &l).unwrap() >= ordered_median(&d, &l).unwrap() - 1e-12);
            }

            #[test]
            fn sublinear((d, l) in case(), shift in proptest::collection::vec(0.0f64..50.0, 7)) {
                let l = monotone(l);
                let e: Vec<f64> = shift[..d.len()].to_vec();
                let s: Vec<f64> = d.iter().zip(&e).map(|(a, b)| a + b).collect();
                let lhs = ordered_median(&s, &l).unwrap();
                let rhs = ordered_median(&d, &l).unwrap() + ordered_median(&e, &l).unwrap();
                prop_assert!(lhs <= rhs + 1e-9);
            }

            #[test]
            fn scale_equivariant((d, l) in case(), c in 0.0f64..20.0) {
                let l = monotone(l);
                let s: Vec<f64> = d.iter().map(|v| c * v).collect();
                let lhs = ordered_median(&s, &l).unwrap();
                let rhs = c * ordered_median(&d, &l).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
            }
        }
    }
}

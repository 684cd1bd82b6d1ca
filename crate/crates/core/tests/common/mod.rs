#![allow(dead_code)]

use mfmomp::model::make_lambda;
use mfmomp::{Instance, LambdaKind, NormSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const KINDS: [LambdaKind; 6] = [LambdaKind::W, LambdaKind::C, LambdaKind::K, LambdaKind::D, LambdaKind::S, LambdaKind::A];

/// `n` uniform points in `[0, 10)²`.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)]).collect()
}

pub fn instance(points: Vec<Vec<f64>>, p: usize, norm: NormSpec, kind: LambdaKind) -> Instance {
    let n = points.len();
    let lam = make_lambda(kind, n, n / 2, 0.5).unwrap();
    Instance::new(points, p, norm, lam).unwrap()
}

/// Small random instance cycling through λ kinds and norms by `index`.
pub fn fixture(seed: u64, index: usize, n: usize, p: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1000).wrapping_add(index as u64));
    let pts = random_points(&mut rng, n);
    let norm = if index % 2 == 0 { NormSpec::L1 } else { NormSpec::L2 };
    instance(pts, p, norm, KINDS[index % KINDS.len()])
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

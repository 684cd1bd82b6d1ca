mod common;

use common::{instance, random_points, KINDS};
use mfmomp::branching::BranchingConstraints;
use mfmomp::master::{reduced_cost, Column, ColumnPool, NodeMaster, EPSILON_DRIFT_TOL};
use mfmomp::NormSpec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn optimal_master_invariants(seed in 0u64..100_000, n in 3usize..8, kind in 0usize..6, cols in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = random_points(&mut rng, n);
        let inst = instance(pts, 2, if seed % 2 == 0 { NormSpec::L1 } else { NormSpec::L2 }, KINDS[kind]);
        let none = BranchingConstraints::new(n);
        let mut pool = ColumnPool::new(&inst);
        let mut new = Vec::new();
        for _ in 0..cols {
            let subset: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            if subset.is_empty() {
                continue;
            }
            let x = vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)];
            new.push(Column::new(&inst, subset, x).unwrap());
        }
        pool.add_columns(&inst, new, &none);

        let mut master = NodeMaster::new(&inst, &pool, &none, None).unwrap();
        let sol = master.solve(&inst).unwrap();
        for (col, _) in pool.columns().iter().zip(&sol.y) {
            prop_assert!(reduced_cost(col, &sol.duals, inst.lambda()) >= -1e-7);
        }
        for i in 0..n {
            let cov: f64 = pool.columns().iter().zip(&sol.y).filter(|(c, _)| c.contains(i)).map(|(_, y)| y).sum();
            prop_assert!(cov >= 1.0 - 1e-7);
        }
        prop_assert!(sol.duals.epsilon_drift(inst.multiplicity()) <= EPSILON_DRIFT_TOL);

        let mut again = NodeMaster::new(&inst, &pool, &none, None).unwrap();
        let sol2 = again.solve(&inst).unwrap();
        prop_assert_eq!(sol.objective.to_bits(), sol2.objective.to_bits());
        prop_assert_eq!(&sol.y, &sol2.y);
    }
}

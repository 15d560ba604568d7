mod common;

use locmc::band_linalg::{block_decompose, block_norm_bound, operator_norm, perturbed_inverse_bound, BlockPartition, SymMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn sqrt_inv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let e = a.clone().symmetric_eigen();
    &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues.map(|v| 1.0 / v.sqrt())) * e.eigenvectors.transpose()
}

fn sub(a: &DMatrix<f64>, r: &[usize], c: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(r.len(), c.len(), |i, j| a[(r[i], c[j])])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decomposition_reconstructs(blocks in 1usize..8, q in 1usize..4, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = blocks * q;
        let a = SymMatrix::from_fn(n, |_, _| rng.sample(StandardNormal));
        let p = BlockPartition::consecutive(n, q).unwrap();
        prop_assert_eq!(block_decompose(&a, &p).unwrap().reconstruct(), a.as_matrix().clone());
    }

    #[test]
    fn block_norm_bound_dominates(blocks in 1usize..8, q in 1usize..4, density in 0.1f64..0.9, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = blocks * q;
        let a = DMatrix::from_fn(n, n, |_, _| if rng.random::<f64>() < density { rng.sample(StandardNormal) } else { 0.0 });
        for qq in 1..=q {
            if n % qq == 0 {
                let p = BlockPartition::consecutive(n, qq).unwrap();
                prop_assert!(block_norm_bound(&a, &p) >= operator_norm(&a) - 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_blocks_inherit_spectrum(blocks in 2usize..6, q in 1usize..4, cond in 1.5f64..100.0, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = blocks * q;
        let c = common::dense_spd(&mut rng, n, cond);
        let (lo, hi) = (c.min_eigenvalue(), c.max_eigenvalue());
        let k = hi / lo;
        let p = BlockPartition::consecutive(n, q).unwrap();
        let a = c.as_matrix();
        for i in 0..blocks {
            let bi = p.block(i);
            let cii = sub(a, bi, bi);
            let ev = cii.clone().symmetric_eigenvalues();
            prop_assert!(ev.min() >= lo - 1e-12 && ev.max() <= hi + 1e-12);
            for j in 0..blocks {
                if i != j {
                    let bj = p.block(j);
                    let m = sqrt_inv(&cii) * sub(a, bi, bj) * sqrt_inv(&sub(a, bj, bj));
                    prop_assert!(operator_norm(&m) <= 1.0 - 1.0 / k + 1e-10);
                }
            }
        }
    }

    #[test]
    fn perturbed_inverse_bound_holds(n in 1usize..10, cond in 1.0f64..20.0, frac in 0.0f64..0.95, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let a = common::dense_spd(&mut rng, n, cond);
        let a_inv = a.inverse().unwrap();
        let nai = a_inv.norm();
        let b = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = &b * (frac / (nai * operator_norm(&b)));
        let pert = (a.as_matrix() + &b).try_inverse().unwrap();
        let exact = operator_norm(&(pert - a_inv.as_matrix()));
        let bound = perturbed_inverse_bound(nai, operator_norm(&b)).unwrap();
        prop_assert!(bound - exact >= -1e-10);
    }
}

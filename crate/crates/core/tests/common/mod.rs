#![allow(dead_code)]

use locmc::band_linalg::{BlockPartition, SymMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random SPD matrix whose nonzeros lie on the diagonal and first
/// off-diagonal blocks of `p`, rescaled to unit largest eigenvalue with
/// condition number about `cond`.
pub fn block_tridiagonal_spd(rng: &mut ChaCha8Rng, p: &BlockPartition, cond: f64) -> SymMatrix {
    let n = p.n();
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            if p.owner(i).abs_diff(p.owner(j)) <= 1 {
                let v: f64 = rng.sample(StandardNormal);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
    }
    let s = SymMatrix::new(a).unwrap();
    let ev = s.eigenvalues();
    let (lo, hi) = (ev[0], ev[n - 1]);
    // shift so that the spectrum becomes [t, t + hi − lo] with ratio cond
    let t = (hi - lo) / (cond - 1.0).max(1e-9);
    let shifted = s.add_diagonal(t - lo);
    let top = shifted.max_eigenvalue();
    shifted.scaled(1.0 / top)
}

/// Random dense SPD matrix with spectrum in [1/cond, 1].
pub fn dense_spd(rng: &mut ChaCha8Rng, n: usize, cond: f64) -> SymMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let d = DVector::from_fn(n, |i, _| if n == 1 { 1.0 } else { (1.0 / cond).powf(i as f64 / (n - 1) as f64) });
    SymMatrix::new(&q * DMatrix::from_diagonal(&d) * q.transpose()).unwrap()
}

mod common;

use std::sync::Arc;

use locmc::band_linalg::{BlockPartition, SymMatrix};
use locmc::linear_gaussian::{localized_posterior_moments, LinearGaussianProblem, Prior};
use locmc::localization::ObservationStructure;
use locmc::samplers::{
    run_chain, GaussianLogTarget, GaussianSampler, GaussianTarget, GibbsKernel, HmcKernel, Kernel, LinearTerms, LmwgKernel,
    ObservationAssignment, ObservationTerms, RecordOptions, RwmKernel, SamplerState,
};
use nalgebra::{DMatrix, DVector};

fn all_coords(n: usize) -> RecordOptions {
    RecordOptions { tracked: Some((0..n).collect()), burn_in_frac: 0.0 }
}

/// Empirical mean and covariance of the recorded series, with batch-means
/// standard errors for each moment.
struct Moments {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    mean_se: DVector<f64>,
    cov_se: DMatrix<f64>,
}

fn moments(series: &[Vec<f64>], batches: usize) -> Moments {
    let n = series.len();
    let len = series[0].len();
    let b = len / batches;
    let batch_stats = |lo: usize, hi: usize| {
        let m = DVector::from_fn(n, |i, _| series[i][lo..hi].iter().sum::<f64>() / (hi - lo) as f64);
        let c = DMatrix::from_fn(n, n, |i, j| {
            series[i][lo..hi].iter().zip(&series[j][lo..hi]).map(|(a, b)| (a - m[i]) * (b - m[j])).sum::<f64>() / (hi - lo) as f64
        });
        (m, c)
    };
    let (mean, cov) = batch_stats(0, b * batches);
    let stats: Vec<_> = (0..batches).map(|k| batch_stats(k * b, (k + 1) * b)).collect();
    let bf = batches as f64;
    let mean_se = DVector::from_fn(n, |i, _| (stats.iter().map(|s| (s.0[i] - mean[i]).powi(2)).sum::<f64>() / (bf * (bf - 1.0))).sqrt());
    let cov_se = DMatrix::from_fn(n, n, |i, j| (stats.iter().map(|s| (s.1[(i, j)] - cov[(i, j)]).powi(2)).sum::<f64>() / (bf * (bf - 1.0))).sqrt());
    Moments { mean, cov, mean_se, cov_se }
}

fn assert_within(m: &Moments, mean: &DVector<f64>, cov: &DMatrix<f64>, z: f64) {
    let n = mean.len();
    for i in 0..n {
        assert!((m.mean[i] - mean[i]).abs() <= z * m.mean_se[i] + 1e-12, "mean[{i}] {} vs {} (se {})", m.mean[i], mean[i], m.mean_se[i]);
        for j in 0..n {
            let d = (m.cov[(i, j)] - cov[(i, j)]).abs();
            assert!(d <= z * m.cov_se[(i, j)] + 1e-12, "cov[{i},{j}] {} vs {} (se {})", m.cov[(i, j)], cov[(i, j)], m.cov_se[(i, j)]);
        }
    }
}

// 16 moments are compared at once, so the per-moment slack is widened from
// 3 to 4 standard errors to keep the familywise false-alarm rate small.
const Z: f64 = 4.0;

#[test]
fn precision_gibbs_matches_target_moments() {
    let w = SymMatrix::tridiagonal(4, 2.0, -0.9);
    let mean = DVector::from_vec(vec![1.0, -1.0, 0.5, 0.0]);
    let t = GaussianTarget::new(mean.clone(), Prior::Precision(w.clone()), BlockPartition::consecutive(4, 1).unwrap()).unwrap();
    let k = GibbsKernel::new(t.gibbs().unwrap(), "gibbs_prec");
    let chain = run_chain(&k, DVector::zeros(4), 100_000, 11, &all_coords(4)).unwrap();
    let m = moments(&chain.series, 50);
    assert_within(&m, &mean, w.inverse().unwrap().as_matrix(), Z);
}

#[test]
fn gibbs_sweep_preserves_stationarity() {
    let c = SymMatrix::tridiagonal(6, 1.0, 0.4);
    let mean = DVector::from_vec(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    for form in [Prior::Covariance(c.clone()), Prior::Precision(c.inverse().unwrap())] {
        let t = GaussianTarget::new(mean.clone(), form.clone(), BlockPartition::consecutive(6, 2).unwrap()).unwrap();
        let g = t.gibbs().unwrap();
        let exact = GaussianSampler::new(mean.clone(), &form).unwrap();
        let mut rng = common::rng(5);
        let n_draws = 10_000;
        let mut before = vec![Vec::with_capacity(n_draws); 6];
        let mut after = vec![Vec::with_capacity(n_draws); 6];
        for _ in 0..n_draws {
            let mut x = exact.draw(&mut rng);
            for i in 0..6 {
                before[i].push(x[i]);
            }
            g.sweep(x.as_mut_slice(), &mut rng);
            for i in 0..6 {
                after[i].push(x[i]);
            }
        }
        let mb = moments(&before, 20);
        let ma = moments(&after, 20);
        assert_within(&mb, &mean, c.as_matrix(), Z);
        assert_within(&ma, &mean, c.as_matrix(), Z);
    }
}

#[test]
fn flat_likelihood_leaves_the_prior() {
    let c = SymMatrix::tridiagonal(4, 1.0, 0.3);
    let mean = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
    let p = BlockPartition::consecutive(4, 2).unwrap();
    let t = GaussianTarget::new(mean.clone(), Prior::Covariance(c.clone()), p.clone()).unwrap();
    let h = DMatrix::identity(4, 4);
    let r = DVector::from_element(4, 1e12);
    let terms = LinearTerms::new(&h, &DVector::zeros(4), &r).unwrap();
    let assign = ObservationAssignment::from_dependencies(&p, &terms.dependencies()).unwrap();
    let k = LmwgKernel::new(t.gibbs().unwrap(), Arc::new(terms), assign, "lmwg_cov").unwrap();
    let chain = run_chain(&k, mean.clone(), 50_000, 3, &all_coords(4)).unwrap();
    let m = moments(&chain.series, 50);
    assert_within(&m, &mean, c.as_matrix(), Z);
    let acc = chain.acceptance.as_ref().unwrap();
    assert!(acc.iter().filter(|a| a.accepted).count() as f64 / acc.len() as f64 > 0.999);
}

#[test]
fn lmwg_two_blocks_matches_localized_posterior() {
    let c = SymMatrix::new(DMatrix::from_row_slice(4, 4, &[1.0, 0.5, 0.0, 0.0, 0.5, 1.0, 0.2, 0.0, 0.0, 0.2, 1.0, 0.5, 0.0, 0.0, 0.5, 1.0])).unwrap();
    let m0 = DVector::from_vec(vec![0.0, 0.5, -0.5, 0.0]);
    let h = DMatrix::from_row_slice(3, 4, &[1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.3, 1.0]);
    let r = DVector::from_vec(vec![0.5, 1.0, 0.7]);
    let y = DVector::from_vec(vec![1.0, -0.5, 2.0]);
    let obs = ObservationStructure::new(h.clone(), vec![0, 2, 3]).unwrap();
    let prob = LinearGaussianProblem::new(m0.clone(), Prior::Covariance(c.clone()), obs, r.clone(), y.clone()).unwrap();
    let post = localized_posterior_moments(&prob).unwrap();

    let p = BlockPartition::consecutive(4, 2).unwrap();
    let t = GaussianTarget::new(m0.clone(), Prior::Covariance(c), p.clone()).unwrap();
    let terms = LinearTerms::new(&h, &y, &r).unwrap();
    let assign = ObservationAssignment::from_dependencies(&p, &terms.dependencies()).unwrap();
    let k = LmwgKernel::new(t.gibbs().unwrap(), Arc::new(terms), assign, "lmwg_cov").unwrap();
    let chain = run_chain(&k, m0, 200_000, 17, &all_coords(4)).unwrap();
    let m = moments(&chain.series, 50);
    assert_within(&m, &post.mean, post.cov.as_matrix(), Z);
}

#[test]
fn cached_terms_match_recomputation() {
    let c = SymMatrix::tridiagonal(6, 1.0, 0.4);
    let p = BlockPartition::consecutive(6, 2).unwrap();
    let t = GaussianTarget::new(DVector::zeros(6), Prior::Covariance(c), p.clone()).unwrap();
    let h = DMatrix::from_fn(3, 6, |j, i| if i / 2 == j { 1.0 + i as f64 * 0.1 } else { 0.0 });
    let terms = Arc::new(LinearTerms::new(&h, &DVector::from_vec(vec![1.0, 0.0, -1.0]), &DVector::from_element(3, 0.3)).unwrap());
    let assign = ObservationAssignment::from_dependencies(&p, &terms.dependencies()).unwrap();
    let k = LmwgKernel::new(t.gibbs().unwrap(), terms.clone(), assign, "lmwg").unwrap();
    let mut s = SamplerState::new(DVector::zeros(6), 9);
    k.prepare(&mut s).unwrap();
    let mut moves = Vec::new();
    for _ in 0..500 {
        k.step(&mut s, &mut moves).unwrap();
        for j in 0..3 {
            assert!((s.terms[j] - terms.term(j, s.x.as_slice()).unwrap()).abs() <= 1e-10);
        }
    }
    assert_eq!(moves.len(), 1500);
}

#[test]
fn hmc_standard_normal_variance() {
    let target = Arc::new(GaussianLogTarget::new(DVector::zeros(1), &SymMatrix::identity(1)).unwrap());
    let k = HmcKernel { target, eps: 0.3, n_leapfrog: 10 };
    let chain = run_chain(&k, DVector::zeros(1), 100_000, 4, &all_coords(1)).unwrap();
    let m = moments(&chain.series, 50);
    assert_within(&m, &DVector::zeros(1), &DMatrix::identity(1, 1), 3.0);
}

#[test]
fn chains_are_seed_deterministic() {
    let target = Arc::new(GaussianLogTarget::new(DVector::zeros(3), &SymMatrix::identity(3)).unwrap());
    let k = RwmKernel { target, sigma: 0.8 };
    let a = run_chain(&k, DVector::zeros(3), 1000, 42, &all_coords(3)).unwrap();
    let b = run_chain(&k, DVector::zeros(3), 1000, 42, &all_coords(3)).unwrap();
    assert_eq!(a.series, b.series);
    assert_eq!(a.acceptance, b.acceptance);
    let c = run_chain(&k, DVector::zeros(3), 1000, 43, &all_coords(3)).unwrap();
    assert_ne!(a.series, c.series);
}

#[test]
fn single_step_chain_holds_first_move() {
    let w = SymMatrix::from_diagonal(&[1.0, 4.0]);
    let t = GaussianTarget::new(DVector::zeros(2), Prior::Precision(w), BlockPartition::consecutive(2, 1).unwrap()).unwrap();
    let k = GibbsKernel::new(t.gibbs().unwrap(), "gibbs_prec");
    let chain = run_chain(&k, DVector::from_vec(vec![5.0, 5.0]), 1, 1, &all_coords(2)).unwrap();
    let mut s = SamplerState::new(DVector::from_vec(vec![5.0, 5.0]), 1);
    k.step(&mut s, &mut Vec::new()).unwrap();
    assert_eq!(chain.state(0), s.x.as_slice().to_vec());
    assert_eq!(chain.final_state, s.x);
}

#[test]
fn exact_gibbs_draws_are_uncorrelated() {
    let w = SymMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
    let t = GaussianTarget::new(DVector::zeros(3), Prior::Precision(w), BlockPartition::consecutive(3, 1).unwrap()).unwrap();
    let k = GibbsKernel::new(t.gibbs().unwrap(), "gibbs_prec");
    let n = 20_000;
    let chain = run_chain(&k, DVector::zeros(3), n, 8, &all_coords(3)).unwrap();
    for s in &chain.series {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        let v: f64 = s.iter().map(|x| (x - m).powi(2)).sum();
        let r1: f64 = s.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / v;
        assert!(r1.abs() < 4.0 / (n as f64).sqrt(), "lag-1 autocorrelation {r1}");
    }
}

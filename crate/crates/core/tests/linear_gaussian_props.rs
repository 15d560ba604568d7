mod common;

use locmc::band_linalg::{operator_norm, SymMatrix};
use locmc::linear_gaussian::{
    deltas_between, exact_differences, perturbation_bounds, posterior_moments_cov, posterior_moments_prec, BoundDeltas,
    LinearGaussianProblem, Prior,
};
use locmc::localization::{threshold_observation, truncate_by_bandwidth, ObservationStructure};
use locmc::problems::{build_example1, build_example2, build_example3};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_problem(rng: &mut ChaCha8Rng, n: usize, k: usize, cond: f64, cov_form: bool) -> LinearGaussianProblem {
    let a = common::dense_spd(rng, n, cond);
    let h = DMatrix::from_fn(k, n, |j, i| {
        let c = j * n / k;
        if i.abs_diff(c) <= 1 {
            rng.sample::<f64, _>(StandardNormal)
        } else {
            0.05 * rng.sample::<f64, _>(StandardNormal)
        }
    });
    let centers = (0..k).map(|j| j * n / k).collect();
    let r = DVector::from_fn(k, |_, _| rng.random_range(0.5..2.0));
    let y = common::normal_vec(rng, k);
    let m = common::normal_vec(rng, n);
    let prior = if cov_form { Prior::Covariance(a) } else { Prior::Precision(a) };
    LinearGaussianProblem::new(m, prior, ObservationStructure::new(h, centers).unwrap(), r, y).unwrap()
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn forms_agree(n in 1usize..20, kf in 0.2f64..1.0, cond in 1.0f64..50.0, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let k = ((n as f64 * kf).ceil() as usize).max(1);
        let p = random_problem(&mut rng, n, k, cond, true);
        let q = LinearGaussianProblem::new(p.m.clone(), Prior::Precision(p.prior.precision().unwrap()), p.obs.clone(), p.r.clone(), p.y.clone()).unwrap();
        let a = posterior_moments_cov(&p).unwrap();
        let b = posterior_moments_prec(&q).unwrap();
        prop_assert!((&a.mean - &b.mean).amax() <= 1e-8 * b.mean.amax().max(1.0));
        prop_assert!(rel(a.cov.as_matrix(), b.cov.as_matrix()) <= 1e-8);
        // posterior contraction: C − Ĉ ⪰ 0
        let d = SymMatrix::new(p.prior.matrix().as_matrix() - a.cov.as_matrix()).unwrap();
        prop_assert!(d.min_eigenvalue() >= -1e-9 * p.prior.matrix().norm());
    }

    #[test]
    fn bounds_dominate_exact_differences(n in 4usize..16, cond in 1.0f64..4.0, l in 1usize..4, cov_form in any::<bool>(), seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let k = n / 2;
        let p = random_problem(&mut rng, n, k, cond, cov_form);
        let (a_loc, _) = truncate_by_bandwidth(p.prior.matrix(), l);
        let prior_loc = if cov_form { Prior::Covariance(a_loc) } else { Prior::Precision(a_loc) };
        let (obs_loc, _) = threshold_observation(&p.obs, 0.2);
        let Ok(p_loc) = p.localized(prior_loc, obs_loc) else { return Ok(()) };
        if p_loc.prior.matrix().min_eigenvalue() <= 0.0 {
            return Ok(());
        }
        let deltas = deltas_between(&p, &p_loc).unwrap();
        let Ok(b) = perturbation_bounds(&p, &deltas) else { return Ok(()) };
        let e = exact_differences(&p, &p_loc).unwrap();
        prop_assert!(b.bound_mean - e.mean >= -1e-10, "mean {} > {}", e.mean, b.bound_mean);
        prop_assert!(b.bound_cov - e.cov >= -1e-10, "cov {} > {}", e.cov, b.bound_cov);
    }

    #[test]
    fn bounds_monotone_in_prior_delta(n in 3usize..10, cov_form in any::<bool>(), seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let p = random_problem(&mut rng, n, 2, 2.0, cov_form);
        let lo = p.prior.matrix().min_eigenvalue();
        let mut prev = None;
        for i in 0..20 {
            let d = BoundDeltas { delta_prior: 0.04 * lo * i as f64, delta_h: 0.01 };
            let Ok(b) = perturbation_bounds(&p, &d) else { break };
            if let Some((m, c)) = prev {
                prop_assert!(b.bound_mean >= m && b.bound_cov >= c);
            }
            prev = Some((b.bound_mean, b.bound_cov));
        }
    }
}

#[test]
fn generated_problems_agree_across_forms() {
    let probs = [
        build_example1(0.5, 0.01, 0.02, 10.0, 1).unwrap().problem,
        build_example2(0.5, 0.01, 0.06, 2).unwrap().problem,
        build_example3(40, 3).unwrap().problem,
    ];
    for p in probs {
        let (pc, pp) = match &p.prior {
            Prior::Covariance(c) => (p.clone(), p.localized(Prior::Precision(c.inverse().unwrap()), p.obs.clone()).unwrap()),
            Prior::Precision(w) => (p.localized(Prior::Covariance(w.inverse().unwrap()), p.obs.clone()).unwrap(), p.clone()),
        };
        let a = posterior_moments_cov(&pc).unwrap();
        let b = posterior_moments_prec(&pp).unwrap();
        assert!((&a.mean - &b.mean).amax() <= 1e-8 * b.mean.amax().max(1.0));
        assert!(rel(a.cov.as_matrix(), b.cov.as_matrix()) <= 1e-8);
    }
}

#[test]
fn unlocalized_problem_has_zero_bounds() {
    let p = build_example1(0.5, 0.01, 0.02, 10.0, 1).unwrap().problem;
    let d = deltas_between(&p, &p).unwrap();
    let b = perturbation_bounds(&p, &d).unwrap();
    let e = exact_differences(&p, &p).unwrap();
    assert_eq!((b.bound_mean, b.bound_cov, e.mean, e.cov), (0.0, 0.0, 0.0, 0.0));
    assert_eq!(operator_norm(&DMatrix::<f64>::zeros(2, 2)), 0.0);
}

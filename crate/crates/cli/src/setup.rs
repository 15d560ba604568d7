//! Problem instances for one size of an experiment, with everything the
//! samplers and reports need precomputed.

use std::sync::Arc;

use locmc::band_linalg::{BlockPartition, SymMatrix};
use locmc::linear_gaussian::{posterior_moments, LinearGaussianProblem, PosteriorMoments, Prior};
use locmc::localization::{repair_pd, truncate_by_bandwidth, truncate_by_threshold, LocalizationReport, DEFAULT_JITTER};
use locmc::problems::{
    build_deblur, build_example1, build_example2, build_example3, build_isotropic, build_l96_problem, gauss_newton_map, DeblurExample,
    GaussNewtonResult, LinearExample, NonlinearProblem,
};
use locmc::problems::l96::DEFAULT_T;
use locmc::samplers::{GaussianSampler, GaussianTarget};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ExampleId;
use crate::error::{CliError, CliResult};

pub const EX1_DZ: f64 = 0.01;
pub const EX1_RHO: f64 = 0.02;
pub const EX1_AMP: f64 = 10.0;
pub const EX1_COV_THRESHOLD: f64 = 0.1;
pub const EX1_PREC_BANDWIDTH: usize = 1;
pub const EX2_DZ: f64 = 0.01;
pub const EX2_RHO: f64 = 0.06;
pub const EX2_COV_THRESHOLD: f64 = 0.01;
pub const EX4_LAMBDA: f64 = 1e5;
pub const EX4_DELTA: f64 = 10.0;
pub const EX4_BLUR_SIGMA: f64 = 0.7;

/// A prior localized for one l-MwG implementation.
#[derive(Clone, Debug)]
pub struct LocalizedPrior {
    pub prior: Prior,
    pub report: LocalizationReport,
}

#[derive(Clone, Debug)]
pub struct LinearSetup {
    pub example: LinearExample,
    pub posterior: PosteriorMoments,
    pub posterior_precision: SymMatrix,
    pub cov_loc: LocalizedPrior,
    pub prec_loc: LocalizedPrior,
}

#[derive(Clone, Debug)]
pub struct DeblurSetup {
    pub example: DeblurExample,
    pub omega_loc: SymMatrix,
    pub info: DVector<f64>,
    /// Mean of the localized posterior: Ω_loc⁻¹ · info.
    pub mean_loc: DVector<f64>,
}

#[derive(Clone)]
pub struct L96Setup {
    pub problem: Arc<NonlinearProblem>,
    pub gauss_newton: GaussNewtonResult,
}

#[derive(Clone)]
pub enum Setup {
    Iso(GaussianTarget),
    Linear(Box<LinearSetup>),
    Deblur(Box<DeblurSetup>),
    L96(Box<L96Setup>),
}

/// One size of an experiment.
#[derive(Clone)]
pub struct Instance {
    pub example: ExampleId,
    /// The configured size: L, image side or dimension.
    pub size: f64,
    pub n: usize,
    pub seed: u64,
    pub setup: Setup,
}

fn integer_size(size: f64) -> CliResult<usize> {
    if size.fract() != 0.0 || size < 1.0 {
        return Err(CliError::Config(format!("size {size} is not a positive integer")));
    }
    Ok(size as usize)
}

fn localize(prior: Prior, by: Localize) -> CliResult<LocalizedPrior> {
    let m = prior.matrix();
    let (loc, mut report) = match by {
        Localize::None => (m.clone(), LocalizationReport::none()),
        Localize::Threshold(t) => truncate_by_threshold(m, t),
        Localize::Bandwidth(l) => truncate_by_bandwidth(m, l),
    };
    let loc = if report.delta > 0.0 { repair_pd(loc, &mut report, DEFAULT_JITTER)? } else { loc };
    let prior = if prior.is_covariance() { Prior::Covariance(loc) } else { Prior::Precision(loc) };
    Ok(LocalizedPrior { prior, report })
}

#[derive(Clone, Copy, Debug)]
enum Localize {
    None,
    Threshold(f64),
    Bandwidth(usize),
}

fn linear_setup(example: LinearExample, cov: Localize, prec: Localize) -> CliResult<LinearSetup> {
    let p = &example.problem;
    let posterior = posterior_moments(p)?;
    let w = p.prior.precision()?;
    let posterior_precision = SymMatrix::new(w.as_matrix() + p.data_precision())?;
    let cov_loc = localize(Prior::Covariance(p.prior.covariance()?), cov)?;
    let prec_loc = localize(Prior::Precision(w), prec)?;
    Ok(LinearSetup { example, posterior, posterior_precision, cov_loc, prec_loc })
}

impl Instance {
    pub fn build(example: ExampleId, size: f64, seed: u64) -> CliResult<Self> {
        let (n, setup) = match example {
            ExampleId::Iso => {
                let n = integer_size(size)?;
                (n, Setup::Iso(build_isotropic(n)?))
            }
            ExampleId::Ex1 => {
                let ex = build_example1(size, EX1_DZ, EX1_RHO, EX1_AMP, seed)?;
                let s = linear_setup(ex, Localize::Threshold(EX1_COV_THRESHOLD), Localize::Bandwidth(EX1_PREC_BANDWIDTH))?;
                (s.example.problem.n(), Setup::Linear(Box::new(s)))
            }
            ExampleId::Ex2 => {
                let ex = build_example2(size, EX2_DZ, EX2_RHO, seed)?;
                let s = linear_setup(ex, Localize::Threshold(EX2_COV_THRESHOLD), Localize::None)?;
                (s.example.problem.n(), Setup::Linear(Box::new(s)))
            }
            ExampleId::Ex3 => {
                let ex = build_example3(integer_size(size)?, seed)?;
                let s = linear_setup(ex, Localize::None, Localize::None)?;
                (s.example.problem.n(), Setup::Linear(Box::new(s)))
            }
            ExampleId::Ex4 => {
                let side = integer_size(size)?;
                let ex = build_deblur(side, EX4_LAMBDA, EX4_DELTA, EX4_BLUR_SIGMA, seed)?;
                let (omega_loc, info) = ex.localized_posterior_precision()?;
                let mean_loc = omega_loc.cholesky()?.solve(&info);
                (side * side, Setup::Deblur(Box::new(DeblurSetup { example: ex, omega_loc, info, mean_loc })))
            }
            ExampleId::Ex5 => {
                let n = integer_size(size)?;
                let problem = Arc::new(build_l96_problem(n, DEFAULT_T, seed)?);
                let gauss_newton = gauss_newton_map(&problem, &problem.prior_mean)?;
                (n, Setup::L96(Box::new(L96Setup { problem, gauss_newton })))
            }
        };
        Ok(Self { example, size, n, seed, setup })
    }

    /// Mean the chains are compared against.
    pub fn reference_mean(&self) -> DVector<f64> {
        match &self.setup {
            Setup::Iso(t) => t.mean.clone(),
            Setup::Linear(s) => s.posterior.mean.clone(),
            Setup::Deblur(s) => s.mean_loc.clone(),
            Setup::L96(s) => s.gauss_newton.x.clone(),
        }
    }

    /// Chain start: a prior draw, or the data image for the deblurring
    /// problem whose prior is improper.
    pub fn initial_state(&self, seed: u64) -> CliResult<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(match &self.setup {
            Setup::Iso(t) => GaussianSampler::new(t.mean.clone(), &t.form)?.draw(&mut rng),
            Setup::Linear(s) => {
                let p = &s.example.problem;
                GaussianSampler::new(p.m.clone(), &p.prior)?.draw(&mut rng)
            }
            Setup::Deblur(s) => s.example.problem.y.clone(),
            Setup::L96(s) => s.problem.prior_sampler().draw(&mut rng),
        })
    }

    pub fn linear_problem(&self) -> Option<&LinearGaussianProblem> {
        match &self.setup {
            Setup::Linear(s) => Some(&s.example.problem),
            Setup::Deblur(s) => Some(&s.example.problem),
            _ => None,
        }
    }

    pub fn consecutive_partition(&self, q: usize) -> CliResult<BlockPartition> {
        Ok(BlockPartition::consecutive(self.n, q)?)
    }
}

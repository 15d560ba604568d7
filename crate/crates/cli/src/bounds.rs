//! Perturbation bounds and Gibbs rate bounds evaluated against exact
//! differences and measured coupling decay.

use locmc::band_linalg::{condition_number, BlockPartition, SymMatrix};
use locmc::diagnostics::coupling_decay;
use locmc::linear_gaussian::{deltas_between, exact_differences, perturbation_bounds, posterior_moments, LinearGaussianProblem, Prior};
use locmc::samplers::{rate_bound_cov, rate_bound_prec, GaussianTarget};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExampleId, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::runner::{build_instances, derive_seed};
use crate::setup::{Instance, Setup};

pub const COUPLING_STEPS: usize = 30;
pub const COUPLING_TRIALS: usize = 200;
/// Monte Carlo slack on the coupling envelope, in standard errors.
pub const COUPLING_SIGMAS: f64 = 3.0;
/// A rate bound at or above this value says nothing useful.
pub const INFORMATIVE_BETA: f64 = 0.99;
const TAG_COUPLING: u64 = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub example: ExampleId,
    pub n: usize,
    pub l_or_side: f64,
    /// "cov" or "prec": the form of the prior that was localized.
    pub form: String,
    pub delta_prior: f64,
    pub delta_h: f64,
    pub bound_mean: Option<f64>,
    pub bound_cov: Option<f64>,
    pub exact_mean: f64,
    pub exact_cov: f64,
    /// None when the bound preconditions fail.
    pub dominance: Option<bool>,
    pub bound_note: Option<String>,
    /// Condition number of the localized posterior the Gibbs bound uses.
    pub cond: f64,
    pub beta: f64,
    /// Geometric mean per-sweep decay of 𝔼‖C^{-1/2}Δᵏ‖².
    pub coupling_rate: Option<f64>,
    pub envelope_ok: bool,
    pub informative: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub config: ExperimentConfig,
    pub rows: Vec<BoundRow>,
}

impl BoundsReport {
    pub fn all_dominant(&self) -> bool {
        self.rows.iter().all(|r| r.dominance != Some(false) && r.envelope_ok)
    }
}

fn posterior_in_form(p: &LinearGaussianProblem, cov: bool) -> CliResult<SymMatrix> {
    let m = posterior_moments(p)?;
    Ok(if cov { m.cov } else { SymMatrix::new(p.prior.precision()?.as_matrix() + p.data_precision())? })
}

fn bound_row(inst: &Instance, orig: &LinearGaussianProblem, loc: &LinearGaussianProblem, part: BlockPartition, seed: u64) -> CliResult<BoundRow> {
    let cov_form = orig.prior.is_covariance();
    let d = deltas_between(orig, loc)?;
    let exact = exact_differences(orig, loc)?;
    let (bound_mean, bound_cov, dominance, bound_note) = match perturbation_bounds(orig, &d) {
        Ok(b) => (Some(b.bound_mean), Some(b.bound_cov), Some(exact.mean <= b.bound_mean && exact.cov <= b.bound_cov), None),
        Err(e) => (None, None, None, Some(e.to_string())),
    };
    let post = posterior_in_form(loc, cov_form)?;
    let cond = condition_number(&post)?;
    let beta = if cov_form { rate_bound_cov(cond) } else { rate_bound_prec(cond) };
    let form = if cov_form { Prior::Covariance(post) } else { Prior::Precision(post) };
    let mean = posterior_moments(loc)?.mean;
    let target = GaussianTarget::new(mean, form, part)?;
    let dec = coupling_decay(&target, COUPLING_STEPS, COUPLING_TRIALS, seed)?;
    let n = inst.n as f64;
    let envelope_ok = dec
        .mean
        .iter()
        .zip(&dec.std_err)
        .enumerate()
        .all(|(k, (m, se))| *m <= beta.powi(k as i32 + 1) * n * (1.0 + dec.initial) + COUPLING_SIGMAS * se);
    let last = dec.mean.iter().rposition(|m| *m > 0.0 && m.is_finite());
    let coupling_rate = last.filter(|_| dec.initial > 0.0).map(|k| (dec.mean[k] / dec.initial).powf(1.0 / (k as f64 + 1.0)));
    Ok(BoundRow {
        example: inst.example,
        n: inst.n,
        l_or_side: inst.size,
        form: if cov_form { "cov".into() } else { "prec".into() },
        delta_prior: d.delta_prior,
        delta_h: d.delta_h,
        bound_mean,
        bound_cov,
        exact_mean: exact.mean,
        exact_cov: exact.cov,
        dominance,
        bound_note,
        cond,
        beta,
        coupling_rate,
        envelope_ok,
        informative: beta < INFORMATIVE_BETA,
    })
}

fn rows_for(inst: &Instance, q: usize, seed: u64) -> CliResult<Vec<BoundRow>> {
    let mut done = Vec::new();
    match &inst.setup {
        Setup::Linear(s) => {
            let p = &s.example.problem;
            for (i, loc) in [&s.cov_loc, &s.prec_loc].into_iter().enumerate() {
                let orig_prior = if loc.prior.is_covariance() { Prior::Covariance(p.prior.covariance()?) } else { Prior::Precision(p.prior.precision()?) };
                let orig = p.localized(orig_prior, p.obs.clone())?;
                let lp = orig.localized(loc.prior.clone(), orig.obs.clone())?;
                done.push(bound_row(inst, &orig, &lp, BlockPartition::consecutive(inst.n, q)?, derive_seed(seed, TAG_COUPLING, i as u64))?);
            }
        }
        Setup::Deblur(s) => {
            done.push(bound_row(inst, &s.example.problem, &s.example.localized, BlockPartition::tiles(s.example.n_side, q)?, seed)?);
        }
        _ => return Err(CliError::Config(format!("verify-bounds needs a linear example, got {}", inst.example))),
    }
    Ok(done)
}

pub fn verify_bounds(cfg: &ExperimentConfig) -> CliResult<BoundsReport> {
    cfg.validate()?;
    if !matches!(cfg.experiment.example, ExampleId::Ex1 | ExampleId::Ex2 | ExampleId::Ex3 | ExampleId::Ex4) {
        return Err(CliError::Config(format!("verify-bounds needs a linear example, got {}", cfg.experiment.example)));
    }
    let instances = build_instances(cfg)?;
    let q = cfg.q();
    let rows: CliResult<Vec<Vec<BoundRow>>> =
        instances.par_iter().enumerate().map(|(i, inst)| rows_for(inst, q, derive_seed(cfg.experiment.seed, TAG_COUPLING, i as u64))).collect();
    Ok(BoundsReport { config: cfg.clone(), rows: rows?.into_iter().flatten().collect() })
}

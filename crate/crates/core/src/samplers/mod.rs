//! Blocked Gibbs, localized Metropolis-within-Gibbs and reference MCMC
//! kernels, with a seeded chain driver.

pub mod baseline;
pub mod chain;
pub mod gibbs;
pub mod lmwg;
pub mod rates;

pub use baseline::{
    baseline_propose, hmc_step, GaussianLogTarget, GaussianSampler, HmcKernel, HmcOutcome, LinearLikelihood, LogLikelihood, LogTarget,
    MalaKernel, PcnKernel, ProposalKind, RwmKernel,
};
pub use chain::{
    run_chain, write_acceptance_csv, write_chain_csv, AcceptRecord, Chain, GibbsKernel, Kernel, ParallelGibbsKernel, RecordOptions,
    SamplerDescriptor, SamplerState,
};
pub use gibbs::{extract_linear_map, BlockConditional, CovarianceGibbs, GaussianTarget, PrecisionGibbs};
pub use lmwg::{LinearTerms, LmwgKernel, ObservationAssignment, ObservationTerms};
pub use rates::{gauss_seidel_operator, invariance_residual, rate_bound_cov, rate_bound_prec};

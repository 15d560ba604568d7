//! Full-dimensional reference kernels: random walk Metropolis, MALA,
//! preconditioned Crank-Nicolson and Hamiltonian Monte Carlo.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::chain::{Kernel, SamplerDescriptor, SamplerState};
use crate::band_linalg::{CholeskyFactor, SymMatrix};
use crate::error::{Error, Result};
use crate::linear_gaussian::Prior;

pub trait LogTarget: Send + Sync {
    fn n(&self) -> usize;

    /// Unnormalized log density; −∞ or NaN mark states to be rejected.
    fn log_density(&self, x: &DVector<f64>) -> Result<f64>;

    fn grad_log_density(&self, _x: &DVector<f64>) -> Result<DVector<f64>> {
        Err(Error::MissingGradient)
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        Ok((self.log_density(x)?, self.grad_log_density(x)?))
    }
}

/// N(m, Ω⁻¹) given by its precision.
#[derive(Clone, Debug)]
pub struct GaussianLogTarget {
    pub mean: DVector<f64>,
    pub precision: DMatrix<f64>,
}

impl GaussianLogTarget {
    pub fn new(mean: DVector<f64>, precision: &SymMatrix) -> Result<Self> {
        if mean.len() != precision.n() {
            return Err(Error::DimensionMismatch { expected: mean.len(), got: precision.n() });
        }
        Ok(Self { mean, precision: precision.as_matrix().clone() })
    }
}

impl LogTarget for GaussianLogTarget {
    fn n(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        let d = x - &self.mean;
        Ok(-0.5 * d.dot(&(&self.precision * &d)))
    }

    fn grad_log_density(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let d = x - &self.mean;
        Ok(-(&self.precision * d))
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let d = x - &self.mean;
        let wd = &self.precision * &d;
        Ok((-0.5 * d.dot(&wd), -wd))
    }
}

pub trait LogLikelihood: Send + Sync {
    /// ½(y − h(x))ᵀR⁻¹(y − h(x)); +∞ marks states to be rejected.
    fn neg_log_likelihood(&self, x: &DVector<f64>) -> Result<f64>;
}

#[derive(Clone, Debug)]
pub struct LinearLikelihood {
    pub h: DMatrix<f64>,
    pub y: DVector<f64>,
    pub r: DVector<f64>,
}

impl LogLikelihood for LinearLikelihood {
    fn neg_log_likelihood(&self, x: &DVector<f64>) -> Result<f64> {
        let res = &self.y - &self.h * x;
        Ok(0.5 * res.iter().zip(self.r.iter()).map(|(e, r)| e * e / r).sum::<f64>())
    }
}

/// Draws from, and evaluates, a Gaussian prior in either form.
#[derive(Clone, Debug)]
pub struct GaussianSampler {
    pub mean: DVector<f64>,
    factor: CholeskyFactor,
    covariance_form: bool,
}

impl GaussianSampler {
    pub fn new(mean: DVector<f64>, prior: &Prior) -> Result<Self> {
        if mean.len() != prior.n() {
            return Err(Error::DimensionMismatch { expected: mean.len(), got: prior.n() });
        }
        Ok(Self { mean, factor: prior.matrix().cholesky()?, covariance_form: prior.is_covariance() })
    }

    pub fn n(&self) -> usize {
        self.mean.len()
    }

    /// C^{1/2} z for a standard normal z, with C^{1/2} the Cholesky factor
    /// of C, or L⁻ᵀ for a precision factor L.
    pub fn correlate(&self, z: &DVector<f64>) -> DVector<f64> {
        if self.covariance_form {
            self.factor.mul_lower(z)
        } else {
            let mut v = z.clone();
            self.factor.solve_upper_in_place(v.as_mut_slice());
            v
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.n(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + self.correlate(&z)
    }

    /// Log density up to its normalizing constant.
    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        let mut d = x - &self.mean;
        if self.covariance_form {
            self.factor.solve_lower_in_place(d.as_mut_slice());
            -0.5 * d.norm_squared()
        } else {
            let ltd = self.factor.l().tr_mul(&d);
            -0.5 * ltd.norm_squared()
        }
    }

    /// −C⁻¹(x − m).
    pub fn grad_log_density(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = x - &self.mean;
        if self.covariance_form {
            -self.factor.solve(&d)
        } else {
            let l = self.factor.l();
            -(l * l.tr_mul(&d))
        }
    }
}

pub enum ProposalKind<'a> {
    Rwm,
    Pcn { prior: &'a GaussianSampler },
    /// MALA with drift (σ²/2)∇log p and noise σ·P^{1/2}ξ for a diagonal P.
    Mala { target: Option<&'a dyn LogTarget>, precond: Option<&'a DVector<f64>> },
}

fn normals<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn mala_log_q(to: &DVector<f64>, from: &DVector<f64>, grad_from: &DVector<f64>, sigma: f64, p: Option<&DVector<f64>>) -> f64 {
    let s2 = sigma * sigma;
    let mut acc = 0.0;
    for i in 0..to.len() {
        let e = to[i] - from[i] - 0.5 * s2 * grad_from[i];
        let v = s2 * p.map_or(1.0, |p| p[i]);
        acc += e * e / v;
    }
    -0.5 * acc
}

fn mala_move(x: &DVector<f64>, g: &DVector<f64>, sigma: f64, p: Option<&DVector<f64>>, z: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| x[i] + 0.5 * sigma * sigma * g[i] + sigma * p.map_or(1.0, |p| p[i].sqrt()) * z[i])
}

/// A proposal and log q(x|x') − log q(x'|x), the term to add to the
/// target log ratio in the Metropolis-Hastings test. For pCN this term is
/// log p₀(x) − log p₀(x'), so the test reduces to the likelihood ratio.
pub fn baseline_propose<R: Rng + ?Sized>(kind: &ProposalKind, x: &DVector<f64>, step: f64, rng: &mut R) -> Result<(DVector<f64>, f64)> {
    match kind {
        ProposalKind::Rwm => {
            let z = normals(x.len(), rng);
            Ok((x + step * z, 0.0))
        }
        ProposalKind::Pcn { prior } => {
            if !(step > 0.0 && step <= 1.0) {
                return Err(Error::InvalidArgument(format!("pCN step must lie in (0, 1], got {step}")));
            }
            let xi = prior.correlate(&normals(x.len(), rng));
            let xp = &prior.mean + (1.0 - step * step).sqrt() * (x - &prior.mean) + step * xi;
            let lq = prior.log_density(x) - prior.log_density(&xp);
            Ok((xp, lq))
        }
        ProposalKind::Mala { target, precond } => {
            let t = target.ok_or(Error::MissingGradient)?;
            let g = t.grad_log_density(x)?;
            let z = normals(x.len(), rng);
            let xp = mala_move(x, &g, step, *precond, &z);
            let gp = t.grad_log_density(&xp)?;
            let lq = mala_log_q(x, &xp, &gp, step, *precond) - mala_log_q(&xp, x, &g, step, *precond);
            Ok((xp, lq))
        }
    }
}

fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    if log_ratio >= 0.0 {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

pub struct RwmKernel {
    pub target: Arc<dyn LogTarget>,
    pub sigma: f64,
}

impl Kernel for RwmKernel {
    fn n(&self) -> usize {
        self.target.n()
    }

    fn descriptor(&self) -> SamplerDescriptor {
        SamplerDescriptor { kind: "rwm".into(), step: Some(self.sigma), block_size: None }
    }

    fn prepare(&self, s: &mut SamplerState) -> Result<()> {
        s.cached = Some(self.target.log_density(&s.x)?);
        Ok(())
    }

    fn step(&self, s: &mut SamplerState, moves: &mut Vec<(usize, bool)>) -> Result<()> {
        let cur = match s.cached {
            Some(v) => v,
            None => self.target.log_density(&s.x)?,
        };
        let (xp, _) = baseline_propose(&ProposalKind::Rwm, &s.x, self.sigma, &mut s.rng)?;
        let lp = self.target.log_density(&xp)?;
        let ok = lp.is_finite() && accept(lp - cur, &mut s.rng);
        if ok {
            s.x = xp;
            s.cached = Some(lp);
        } else {
            s.cached = Some(cur);
        }
        moves.push((0, ok));
        Ok(())
    }
}

pub struct MalaKernel {
    pub target: Arc<dyn LogTarget>,
    pub sigma: f64,
    pub precond: Option<DVector<f64>>,
}

impl Kernel for MalaKernel {
    fn n(&self) -> usize {
        self.target.n()
    }

    fn descriptor(&self) -> SamplerDescriptor {
        SamplerDescriptor { kind: "mala".into(), step: Some(self.sigma), block_size: None }
    }

    fn prepare(&self, s: &mut SamplerState) -> Result<()> {
        let (v, g) = self.target.value_and_gradient(&s.x)?;
        s.cached = Some(v);
        s.grad = Some(g);
        Ok(())
    }

    fn step(&self, s: &mut SamplerState, moves: &mut Vec<(usize, bool)>) -> Result<()> {
        if s.cached.is_none() || s.grad.is_none() {
            self.prepare(s)?;
        }
        let cur = s.cached.unwrap();
        let g = s.grad.take().unwrap();
        let p = self.precond.as_ref();
        let z = normals(s.x.len(), &mut s.rng);
        let xp = mala_move(&s.x, &g, self.sigma, p, &z);
        let (lp, gp) = self.target.value_and_gradient(&xp)?;
        let ok = lp.is_finite() && gp.iter().all(|v| v.is_finite()) && {
            let lq = mala_log_q(&s.x, &xp, &gp, self.sigma, p) - mala_log_q(&xp, &s.x, &g, self.sigma, p);
            accept(lp - cur + lq, &mut s.rng)
        };
        if ok {
            s.x = xp;
            s.cached = Some(lp);
            s.grad = Some(gp);
        } else {
            s.grad = Some(g);
        }
        moves.push((0, ok));
        Ok(())
    }
}

pub struct PcnKernel {
    pub prior: GaussianSampler,
    pub likelihood: Arc<dyn LogLikelihood>,
    pub beta: f64,
}

impl Kernel for PcnKernel {
    fn n(&self) -> usize {
        self.prior.n()
    }

    fn descriptor(&self) -> SamplerDescriptor {
        SamplerDescriptor { kind: "pcn".into(), step: Some(self.beta), block_size: None }
    }

    fn prepare(&self, s: &mut SamplerState) -> Result<()> {
        s.cached = Some(self.likelihood.neg_log_likelihood(&s.x)?);
        Ok(())
    }

    fn step(&self, s: &mut SamplerState, moves: &mut Vec<(usize, bool)>) -> Result<()> {
        let cur = match s.cached {
            Some(v) => v,
            None => self.likelihood.neg_log_likelihood(&s.x)?,
        };
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidArgument(format!("pCN step must lie in (0, 1], got {}", self.beta)));
        }
        let xi = self.prior.correlate(&normals(s.x.len(), &mut s.rng));
        let xp = &self.prior.mean + (1.0 - self.beta * self.beta).sqrt() * (&s.x - &self.prior.mean) + self.beta * xi;
        let np = self.likelihood.neg_log_likelihood(&xp)?;
        let ok = np.is_finite() && accept(cur - np, &mut s.rng);
        if ok {
            s.x = xp;
            s.cached = Some(np);
        } else {
            s.cached = Some(cur);
        }
        moves.push((0, ok));
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct HmcOutcome {
    pub accepted: bool,
    /// H(end) − H(start); NaN or infinite for a diverged trajectory.
    pub energy_error: f64,
}

/// Leapfrog trajectory with unit mass followed by a Metropolis test on the
/// total energy. Non-finite energies are rejected.
pub fn hmc_step(target: &dyn LogTarget, s: &mut SamplerState, eps: f64, n_leapfrog: usize) -> Result<HmcOutcome> {
    if !(eps > 0.0) || n_leapfrog == 0 {
        return Err(Error::InvalidArgument("HMC needs eps > 0 and at least one leapfrog step".into()));
    }
    let n = s.x.len();
    let p0 = normals(n, &mut s.rng);
    let (lp0, g0) = target.value_and_gradient(&s.x)?;
    let h0 = -lp0 + 0.5 * p0.norm_squared();
    let mut q = s.x.clone();
    let mut p = &p0 + 0.5 * eps * &g0;
    let mut lp = lp0;
    for i in 0..n_leapfrog {
        q += eps * &p;
        let (v, g) = target.value_and_gradient(&q)?;
        lp = v;
        if !v.is_finite() {
            break;
        }
        if i + 1 < n_leapfrog {
            p += eps * &g;
        } else {
            p += 0.5 * eps * &g;
        }
    }
    let h1 = -lp + 0.5 * p.norm_squared();
    let energy_error = h1 - h0;
    let accepted = energy_error.is_finite() && accept(-energy_error, &mut s.rng);
    if accepted {
        s.x = q;
        s.cached = Some(lp);
    } else {
        s.cached = Some(lp0);
    }
    Ok(HmcOutcome { accepted, energy_error })
}

pub struct HmcKernel {
    pub target: Arc<dyn LogTarget>,
    pub eps: f64,
    pub n_leapfrog: usize,
}

impl Kernel for HmcKernel {
    fn n(&self) -> usize {
        self.target.n()
    }

    fn descriptor(&self) -> SamplerDescriptor {
        SamplerDescriptor { kind: "hmc".into(), step: Some(self.eps), block_size: None }
    }

    fn step(&self, s: &mut SamplerState, moves: &mut Vec<(usize, bool)>) -> Result<()> {
        let out = hmc_step(self.target.as_ref(), s, self.eps, self.n_leapfrog)?;
        moves.push((0, out.accepted));
        Ok(())
    }
}

//! Lorenz'96 initial-condition estimation: RK4 forward map with tangent
//! linear and adjoint, climatological localized prior, Gauss-Newton MAP and
//! block-local likelihood terms.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::band_linalg::{BlockPartition, SymMatrix};
use crate::error::{Error, Result};
use crate::linear_gaussian::Prior;
use crate::localization::{repair_pd, taper_and_threshold, LocalizationReport, DEFAULT_JITTER};
use crate::samplers::{GaussianSampler, LogLikelihood, LogTarget, ObservationAssignment, ObservationTerms};

pub const FORCING: f64 = 8.0;
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_T: f64 = 0.2;

/// dx_i/dt = (x_{i+1} − x_{i−2}) x_{i−1} − x_i + F, indices periodic.
pub fn l96_rhs_into(x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let ip = x[(i + 1) % n];
        let im = x[(i + n - 1) % n];
        let imm = x[(i + n - 2) % n];
        out[i] = (ip - imm) * im - x[i] + FORCING;
    }
}

pub fn l96_rhs(x: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(x.len());
    l96_rhs_into(x.as_slice(), out.as_mut_slice());
    out
}

/// J(x)·w for the rhs Jacobian at x.
fn rhs_tangent(x: &[f64], w: &[f64], out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let (p, m, mm) = ((i + 1) % n, (i + n - 1) % n, (i + n - 2) % n);
        out[i] = x[m] * (w[p] - w[mm]) + (x[p] - x[mm]) * w[m] - w[i];
    }
}

/// J(x)ᵀ·v accumulated into `out`.
fn rhs_adjoint_add(x: &[f64], v: &[f64], out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let (p, m, mm) = ((i + 1) % n, (i + n - 1) % n, (i + n - 2) % n);
        let vi = v[i];
        out[p] += vi * x[m];
        out[mm] -= vi * x[m];
        out[m] += vi * (x[p] - x[mm]);
        out[i] -= vi;
    }
}

fn n_steps(t: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || t < 0.0 {
        return Err(Error::InvalidArgument("need dt > 0 and T ≥ 0".into()));
    }
    let r = t / dt;
    let s = r.round();
    if (r - s).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::InvalidArgument(format!("T/dt = {r} is not an integer")));
    }
    Ok(s as usize)
}

/// Stage inputs of one RK4 step: x, x + dt/2·k1, x + dt/2·k2, x + dt·k3.
struct Stages([Vec<f64>; 4]);

fn rk4_step(x: &mut [f64], dt: f64, tape: Option<&mut Vec<Stages>>) {
    let n = x.len();
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut u = [x.to_vec(), vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    l96_rhs_into(&u[0], &mut k[0]);
    for i in 0..n {
        u[1][i] = x[i] + 0.5 * dt * k[0][i];
    }
    l96_rhs_into(&u[1], &mut k[1]);
    for i in 0..n {
        u[2][i] = x[i] + 0.5 * dt * k[1][i];
    }
    l96_rhs_into(&u[2], &mut k[2]);
    for i in 0..n {
        u[3][i] = x[i] + dt * k[2][i];
    }
    l96_rhs_into(&u[3], &mut k[3]);
    for i in 0..n {
        x[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
    if let Some(t) = tape {
        t.push(Stages(u));
    }
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteState)
    }
}

/// RK4 integration of the L96 model from 0 to T.
pub fn l96_forward(x0: &DVector<f64>, t: f64, dt: f64) -> Result<DVector<f64>> {
    if x0.len() < 4 {
        return Err(Error::InvalidArgument("L96 needs at least 4 variables".into()));
    }
    let mut x = x0.clone();
    for _ in 0..n_steps(t, dt)? {
        rk4_step(x.as_mut_slice(), dt, None);
    }
    check_finite(x.as_slice())?;
    Ok(x)
}

/// Final state and the Jacobian ∂x_T/∂x_0 of the discrete RK4 map.
pub fn l96_jacobian(x0: &DVector<f64>, t: f64, dt: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = x0.len();
    let steps = n_steps(t, dt)?;
    let mut x = x0.clone();
    let mut tape = Vec::with_capacity(steps);
    for _ in 0..steps {
        rk4_step(x.as_mut_slice(), dt, Some(&mut tape));
    }
    check_finite(x.as_slice())?;
    let mut m = DMatrix::identity(n, n);
    let mut kd = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut ud = vec![0.0; n];
    for st in &tape {
        let u = &st.0;
        for col in 0..n {
            let w: Vec<f64> = m.column(col).iter().copied().collect();
            rhs_tangent(&u[0], &w, &mut kd[0]);
            for i in 0..n {
                ud[i] = w[i] + 0.5 * dt * kd[0][i];
            }
            rhs_tangent(&u[1], &ud, &mut kd[1]);
            for i in 0..n {
                ud[i] = w[i] + 0.5 * dt * kd[1][i];
            }
            rhs_tangent(&u[2], &ud, &mut kd[2]);
            for i in 0..n {
                ud[i] = w[i] + dt * kd[2][i];
            }
            rhs_tangent(&u[3], &ud, &mut kd[3]);
            for i in 0..n {
                m[(i, col)] = w[i] + dt / 6.0 * (kd[0][i] + 2.0 * kd[1][i] + 2.0 * kd[2][i] + kd[3][i]);
            }
        }
    }
    Ok((x, m))
}

/// Final state and (∂x_T/∂x_0)ᵀ λ by reverse accumulation through every
/// RK4 stage.
pub fn l96_adjoint(x0: &DVector<f64>, t: f64, dt: f64, lambda: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = x0.len();
    let steps = n_steps(t, dt)?;
    let mut x = x0.clone();
    let mut tape = Vec::with_capacity(steps);
    for _ in 0..steps {
        rk4_step(x.as_mut_slice(), dt, Some(&mut tape));
    }
    check_finite(x.as_slice())?;
    let mut a: Vec<f64> = lambda.iter().copied().collect();
    let mut u_bar = vec![0.0; n];
    for st in tape.iter().rev() {
        let u = &st.0;
        let mut bx = a.clone();
        let mut bk: [Vec<f64>; 4] = [
            a.iter().map(|v| dt / 6.0 * v).collect(),
            a.iter().map(|v| dt / 3.0 * v).collect(),
            a.iter().map(|v| dt / 3.0 * v).collect(),
            a.iter().map(|v| dt / 6.0 * v).collect(),
        ];
        // k4 = f(x + dt·k3)
        u_bar.iter_mut().for_each(|v| *v = 0.0);
        rhs_adjoint_add(&u[3], &bk[3], &mut u_bar);
        for i in 0..n {
            bx[i] += u_bar[i];
            bk[2][i] += dt * u_bar[i];
        }
        // k3 = f(x + dt/2·k2)
        u_bar.iter_mut().for_each(|v| *v = 0.0);
        rhs_adjoint_add(&u[2], &bk[2], &mut u_bar);
        for i in 0..n {
            bx[i] += u_bar[i];
            bk[1][i] += 0.5 * dt * u_bar[i];
        }
        // k2 = f(x + dt/2·k1)
        u_bar.iter_mut().for_each(|v| *v = 0.0);
        rhs_adjoint_add(&u[1], &bk[1], &mut u_bar);
        for i in 0..n {
            bx[i] += u_bar[i];
            bk[0][i] += 0.5 * dt * u_bar[i];
        }
        // k1 = f(x)
        rhs_adjoint_add(&u[0], &bk[0], &mut bx);
        a = bx;
    }
    Ok((x, DVector::from_vec(a)))
}

/// Observation operator h: Rⁿ → Rᵏ with derivatives.
pub trait ForwardModel: Send + Sync {
    fn n(&self) -> usize;
    fn k(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    /// h(x) and its k×n Jacobian.
    fn jacobian(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)>;
    /// h(x) and J(x)ᵀw.
    fn vjp(&self, x: &DVector<f64>, w: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)>;
}

#[derive(Clone, Debug)]
pub struct LinearModel {
    pub h: DMatrix<f64>,
}

impl ForwardModel for LinearModel {
    fn n(&self) -> usize {
        self.h.ncols()
    }

    fn k(&self) -> usize {
        self.h.nrows()
    }

    fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.h * x)
    }

    fn jacobian(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        Ok((&self.h * x, self.h.clone()))
    }

    fn vjp(&self, x: &DVector<f64>, w: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        Ok((&self.h * x, self.h.tr_mul(w)))
    }
}

/// Selected components of the L96 state at time T.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L96Model {
    pub n: usize,
    pub t_final: f64,
    pub dt: f64,
    pub observed: Vec<usize>,
}

impl L96Model {
    /// Observes every other component, starting with the first.
    pub fn every_other(n: usize, t_final: f64, dt: f64) -> Self {
        Self { n, t_final, dt, observed: (0..n).step_by(2).collect() }
    }

    fn select(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.observed.len(), self.observed.iter().map(|&i| x[i]))
    }
}

impl ForwardModel for L96Model {
    fn n(&self) -> usize {
        self.n
    }

    fn k(&self) -> usize {
        self.observed.len()
    }

    fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.select(&l96_forward(x, self.t_final, self.dt)?))
    }

    fn jacobian(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let (xt, m) = l96_jacobian(x, self.t_final, self.dt)?;
        let j = DMatrix::from_fn(self.k(), self.n, |r, c| m[(self.observed[r], c)]);
        Ok((self.select(&xt), j))
    }

    fn vjp(&self, x: &DVector<f64>, w: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let mut lam = DVector::zeros(self.n);
        for (r, &i) in self.observed.iter().enumerate() {
            lam[i] += w[r];
        }
        let (xt, g) = l96_adjoint(x, self.t_final, self.dt, &lam)?;
        Ok((self.select(&xt), g))
    }
}

/// How the climatological prior was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinUp {
    /// Added to 8·ones on the first coordinate.
    pub perturbation: f64,
    pub discard_time: f64,
    pub record_time: f64,
    pub taper_length: f64,
    pub threshold_frac: f64,
}

impl Default for SpinUp {
    fn default() -> Self {
        Self { perturbation: 0.01, discard_time: 10.0, record_time: 100.0, taper_length: 3.0 * 2f64.sqrt(), threshold_frac: 0.01 }
    }
}

/// Gaussian prior, nonlinear observation operator and Gaussian noise with
/// diagonal covariance.
#[derive(Clone)]
pub struct NonlinearProblem {
    pub model: Arc<dyn ForwardModel>,
    pub prior_mean: DVector<f64>,
    pub prior_cov: SymMatrix,
    pub prior_report: LocalizationReport,
    pub r: DVector<f64>,
    pub y: DVector<f64>,
    pub truth: DVector<f64>,
    pub seed: u64,
    pub spin_up: Option<SpinUp>,
    prior: GaussianSampler,
}

impl NonlinearProblem {
    pub fn new(model: Arc<dyn ForwardModel>, prior_mean: DVector<f64>, prior_cov: SymMatrix, r: DVector<f64>, y: DVector<f64>) -> Result<Self> {
        let n = model.n();
        if prior_mean.len() != n || prior_cov.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: prior_mean.len() });
        }
        if r.len() != model.k() || y.len() != model.k() {
            return Err(Error::DimensionMismatch { expected: model.k(), got: y.len() });
        }
        let prior = GaussianSampler::new(prior_mean.clone(), &Prior::Covariance(prior_cov.clone()))?;
        Ok(Self {
            model,
            prior_mean,
            prior_cov,
            prior_report: LocalizationReport::none(),
            r,
            y,
            truth: DVector::zeros(n),
            seed: 0,
            spin_up: None,
            prior,
        })
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    pub fn k(&self) -> usize {
        self.model.k()
    }

    pub fn prior_sampler(&self) -> &GaussianSampler {
        &self.prior
    }

    fn misfit(&self, hx: &DVector<f64>) -> f64 {
        0.5 * (0..self.k()).map(|j| (self.y[j] - hx[j]).powi(2) / self.r[j]).sum::<f64>()
    }

    /// ½‖y − h(x)‖²_R, or +∞ when the model blows up.
    pub fn neg_log_likelihood(&self, x: &DVector<f64>) -> Result<f64> {
        match self.model.apply(x) {
            Ok(hx) => Ok(self.misfit(&hx)),
            Err(Error::NonFiniteState) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    }

    pub fn neg_log_posterior(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.neg_log_likelihood(x)? - self.prior.log_density(x))
    }

    /// −log p(x|y) up to a constant and its gradient, with the likelihood
    /// gradient from the model's adjoint.
    pub fn neg_log_posterior_and_grad(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let hx = self.model.apply(x)?;
        let w = DVector::from_fn(self.k(), |j, _| (hx[j] - self.y[j]) / self.r[j]);
        let (_, g_lik) = self.model.vjp(x, &w)?;
        let g = g_lik - self.prior.grad_log_density(x);
        Ok((self.misfit(&hx) - self.prior.log_density(x), g))
    }

    pub fn prior_precision(&self) -> Result<SymMatrix> {
        self.prior_cov.inverse()
    }
}

/// Gradient of −log posterior at x0.
pub fn l96_adjoint_grad(problem: &NonlinearProblem, x0: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(problem.neg_log_posterior_and_grad(x0)?.1)
}

/// Builds the L96 problem: climatological prior from a long trajectory,
/// localized by taper and threshold, truth drawn from that prior, and
/// unit-noise observations of every other component at T.
pub fn build_l96_problem(n: usize, t_final: f64, seed: u64) -> Result<NonlinearProblem> {
    build_l96_problem_with(n, t_final, DEFAULT_DT, &SpinUp::default(), seed)
}

pub fn build_l96_problem_with(n: usize, t_final: f64, dt: f64, spin: &SpinUp, seed: u64) -> Result<NonlinearProblem> {
    if n < 8 || n % 2 != 0 {
        return Err(Error::InvalidArgument("L96 problem needs an even n ≥ 8".into()));
    }
    let (mean, cov) = climatology(n, dt, spin)?;
    let (c_loc, mut report) = taper_and_threshold(&cov, spin.taper_length, spin.threshold_frac);
    let c_loc = repair_pd(c_loc, &mut report, DEFAULT_JITTER)?;
    let model = Arc::new(L96Model::every_other(n, t_final, dt));
    let k = model.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = GaussianSampler::new(mean.clone(), &Prior::Covariance(c_loc.clone()))?;
    let truth = sampler.draw(&mut rng);
    let clean = model.apply(&truth)?;
    let y = DVector::from_fn(k, |j, _| clean[j] + rng.sample::<f64, _>(StandardNormal));
    let mut p = NonlinearProblem::new(model, mean, c_loc, DVector::from_element(k, 1.0), y)?;
    p.prior_report = report;
    p.truth = truth;
    p.seed = seed;
    p.spin_up = Some(spin.clone());
    Ok(p)
}

/// Sample mean and covariance of an L96 trajectory after spin-up.
pub fn climatology(n: usize, dt: f64, spin: &SpinUp) -> Result<(DVector<f64>, SymMatrix)> {
    let mut x = DVector::from_element(n, FORCING);
    x[0] += spin.perturbation;
    for _ in 0..n_steps(spin.discard_time, dt)? {
        rk4_step(x.as_mut_slice(), dt, None);
    }
    let steps = n_steps(spin.record_time, dt)?;
    if steps < 2 {
        return Err(Error::InvalidArgument("trajectory too short for a covariance".into()));
    }
    let mut states = DMatrix::zeros(n, steps);
    for s in 0..steps {
        rk4_step(x.as_mut_slice(), dt, None);
        states.set_column(s, &x);
    }
    check_finite(x.as_slice())?;
    let mean = states.column_mean();
    let centered = DMatrix::from_fn(n, steps, |i, s| states[(i, s)] - mean[i]);
    let cov = &centered * centered.transpose() / (steps as f64 - 1.0);
    Ok((mean, SymMatrix::new(cov)?))
}

#[derive(Clone, Debug)]
pub struct GaussNewtonResult {
    pub x: DVector<f64>,
    /// (C⁻¹ + JᵀR⁻¹J)⁻¹ at `x`.
    pub p: SymMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// The line search could not decrease the objective; `x` is the best
    /// iterate found.
    pub line_search_failed: bool,
    pub objective: f64,
    pub grad_norm: f64,
    pub initial_grad_norm: f64,
}

pub const GN_MAX_ITER: usize = 100;
pub const GN_STEP_TOL: f64 = 1e-8;
const ARMIJO_C: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_HALVINGS: usize = 40;

/// Gauss-Newton on −log p(x|y) with Armijo backtracking.
pub fn gauss_newton_map(problem: &NonlinearProblem, x_init: &DVector<f64>) -> Result<GaussNewtonResult> {
    let w = problem.prior_precision()?;
    let r_inv = problem.r.map(|v| 1.0 / v);
    let mut x = x_init.clone();
    let (mut f, mut g) = problem.neg_log_posterior_and_grad(&x)?;
    let g0 = g.norm();
    let mut converged = false;
    let mut failed = false;
    let mut iterations = 0;
    while iterations < GN_MAX_ITER {
        iterations += 1;
        let (_, j) = problem.model.jacobian(&x)?;
        let mut jr = j.transpose();
        for (c, mut col) in jr.column_iter_mut().enumerate() {
            col *= r_inv[c];
        }
        let hess = SymMatrix::new(w.as_matrix() + &jr * &j)?;
        let dx = -hess.cholesky()?.solve(&g);
        let slope = g.dot(&dx);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let xt = &x + t * &dx;
            let ft = problem.neg_log_posterior(&xt)?;
            if ft.is_finite() && ft <= f + ARMIJO_C * t * slope {
                accepted = Some(xt);
                break;
            }
            t *= BACKTRACK;
        }
        let Some(xn) = accepted else {
            failed = true;
            break;
        };
        let step = (t * &dx).norm();
        x = xn;
        let fg = problem.neg_log_posterior_and_grad(&x)?;
        f = fg.0;
        g = fg.1;
        if step < GN_STEP_TOL {
            converged = true;
            break;
        }
    }
    let (_, j) = problem.model.jacobian(&x)?;
    let mut jr = j.transpose();
    for (c, mut col) in jr.column_iter_mut().enumerate() {
        col *= r_inv[c];
    }
    let p = SymMatrix::new(w.as_matrix() + &jr * &j)?.inverse()?;
    Ok(GaussNewtonResult { x, p, iterations, converged, line_search_failed: failed, objective: f, grad_norm: g.norm(), initial_grad_norm: g0 })
}

/// Strict variant: a failed line search is an error.
pub fn gauss_newton_map_strict(problem: &NonlinearProblem, x_init: &DVector<f64>) -> Result<GaussNewtonResult> {
    let r = gauss_newton_map(problem, x_init)?;
    if r.line_search_failed {
        return Err(Error::LineSearchFailure { iterations: r.iterations, objective: r.objective });
    }
    Ok(r)
}

/// Consecutive blocks of size q (even, dividing n). Block b receives the
/// observations of its own sites plus `halo` observations on each side,
/// periodically.
pub fn l96_assignment(n: usize, q: usize, halo: usize) -> Result<(BlockPartition, ObservationAssignment)> {
    if q == 0 || q % 2 != 0 || n % q != 0 {
        return Err(Error::InvalidArgument(format!("block size {q} must be even and divide {n}")));
    }
    let p = BlockPartition::consecutive(n, q)?;
    let k = n / 2;
    let per_obs = q / 2;
    let lists = (0..p.num_blocks())
        .map(|b| {
            let first = (b * per_obs) as isize;
            let last = first + per_obs as isize - 1;
            let mut v: Vec<usize> = (first - halo as isize..=last + halo as isize).map(|j| j.rem_euclid(k as isize) as usize).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    let a = ObservationAssignment::from_block_lists(&p, k, lists)?;
    Ok((p, a))
}

/// H_j(x) = ½(y_j − h_j(x̃))²/r_j where x̃ equals x on the variables I_j of
/// observation j and the prior mean elsewhere. Changing variables outside
/// I_j leaves the term unchanged, so block updates only need the terms
/// assigned to the block.
pub struct LocalizedTerms {
    problem: Arc<NonlinearProblem>,
    var_sets: Vec<Vec<usize>>,
}

impl LocalizedTerms {
    pub fn new(problem: Arc<NonlinearProblem>, p: &BlockPartition, assign: &ObservationAssignment) -> Result<Self> {
        if assign.n_obs() != problem.k() {
            return Err(Error::DimensionMismatch { expected: problem.k(), got: assign.n_obs() });
        }
        let var_sets = (0..problem.k()).map(|j| assign.var_indices(j, p)).collect();
        Ok(Self { problem, var_sets })
    }

    pub fn var_set(&self, j: usize) -> &[usize] {
        &self.var_sets[j]
    }
}

impl ObservationTerms for LocalizedTerms {
    fn n_terms(&self) -> usize {
        self.var_sets.len()
    }

    fn term(&self, j: usize, x: &[f64]) -> std::result::Result<f64, String> {
        let mut xt = self.problem.prior_mean.clone();
        for &i in &self.var_sets[j] {
            xt[i] = x[i];
        }
        match self.problem.model.apply(&xt) {
            Ok(hx) => Ok(0.5 * (self.problem.y[j] - hx[j]).powi(2) / self.problem.r[j]),
            Err(Error::NonFiniteState) => Ok(f64::INFINITY),
            Err(e) => Err(e.to_string()),
        }
    }
}

/// Full likelihood of a nonlinear problem, for pCN.
pub struct NonlinearLikelihood(pub Arc<NonlinearProblem>);

impl LogLikelihood for NonlinearLikelihood {
    fn neg_log_likelihood(&self, x: &DVector<f64>) -> Result<f64> {
        self.0.neg_log_likelihood(x)
    }
}

/// Full posterior of a nonlinear problem, for MALA and HMC.
pub struct NonlinearPosterior(pub Arc<NonlinearProblem>);

impl LogTarget for NonlinearPosterior {
    fn n(&self) -> usize {
        self.0.n()
    }

    fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(-self.0.neg_log_posterior(x)?)
    }

    fn grad_log_density(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(-self.value_and_gradient(x)?.1)
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        match self.0.neg_log_posterior_and_grad(x) {
            Ok((f, g)) => Ok((-f, -g)),
            Err(Error::NonFiniteState) => Ok((f64::NEG_INFINITY, DVector::from_element(x.len(), f64::NAN))),
            Err(e) => Err(e),
        }
    }
}

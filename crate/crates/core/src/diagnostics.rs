//! Integrated autocorrelation times, acceptance rates, posterior-mean
//! error, power-law fits and coupled-chain contraction.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::band_linalg::CholeskyFactor;
use crate::error::{Error, Result};
use crate::linear_gaussian::Prior;
use crate::samplers::{Chain, GaussianTarget};

pub const MIN_SERIES_LEN: usize = 100;
/// Automatic window constant: the window stops at the first W ≥ c·τ(W).
pub const WINDOW_C: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IactEstimate {
    pub value: f64,
    pub window: usize,
    pub n_samples: usize,
}

/// Biased (1/N) autocovariances of the centered series at lags 0..N.
fn autocovariance(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex::new(v.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    buf.iter().take(n).map(|v| v.re / (len as f64 * n as f64)).collect()
}

/// τ = 1 + 2 Σ_{t=1}^{W} ρ(t) with the automatic window, floored at 0.5.
pub fn iact(series: &[f64]) -> Result<IactEstimate> {
    let n = series.len();
    if n < MIN_SERIES_LEN {
        return Err(Error::SeriesTooShort(n));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite value in series".into()));
    }
    let gamma = autocovariance(series);
    let scale = series.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    if gamma[0] <= (f64::EPSILON * scale).powi(2) * 16.0 {
        return Err(Error::ZeroVariance);
    }
    let max_w = (n - 1) / 2;
    let mut tau = 1.0;
    let mut window = max_w;
    for w in 1..=max_w {
        tau += 2.0 * gamma[w] / gamma[0];
        if w as f64 >= WINDOW_C * tau {
            window = w;
            break;
        }
    }
    Ok(IactEstimate { value: tau.max(0.5), window, n_samples: n })
}

/// Mean of the per-coordinate IACTs of the post-burn-in traces, over every
/// `stride`-th tracked coordinate.
pub fn mean_iact(chain: &Chain, stride: usize) -> Result<f64> {
    let stride = stride.max(1);
    let picks: Vec<usize> = (0..chain.series.len()).step_by(stride).collect();
    if picks.is_empty() {
        return Err(Error::DegenerateInput("chain tracks no coordinates".into()));
    }
    let vals: Vec<Result<f64>> = picks.par_iter().map(|&t| iact(chain.post_burn_in(t)).map(|e| e.value)).collect();
    let mut sum = 0.0;
    for v in vals {
        sum += v?;
    }
    Ok(sum / picks.len() as f64)
}

/// Number of series `mean_iact` evaluates for a given stride.
pub fn strided_count(n_series: usize, stride: usize) -> usize {
    n_series.div_ceil(stride.max(1))
}

pub fn acceptance_rate(chain: &Chain) -> Result<f64> {
    let log = chain.acceptance.as_ref().ok_or(Error::NoAcceptanceLog)?;
    if log.is_empty() {
        return Err(Error::NoAcceptanceLog);
    }
    Ok(log.iter().filter(|r| r.accepted).count() as f64 / log.len() as f64)
}

/// e = (1/n) Σ_j (m̂_j − x̄_j)².
pub fn posterior_mean_error(sample_mean: &DVector<f64>, m_hat: &DVector<f64>) -> Result<f64> {
    if sample_mean.len() != m_hat.len() || m_hat.is_empty() {
        return Err(Error::DimensionMismatch { expected: m_hat.len(), got: sample_mean.len() });
    }
    Ok((sample_mean - m_hat).norm_squared() / m_hat.len() as f64)
}

/// Mean of a set of samples given as rows.
pub fn sample_mean(samples: &DMatrix<f64>) -> DVector<f64> {
    samples.row_mean().transpose()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingModel {
    Constant,
    QuarterRoot,
    CubeRoot,
    SquareRoot,
    Linear,
}

impl ScalingModel {
    pub const ALL: [ScalingModel; 5] = [Self::Constant, Self::QuarterRoot, Self::CubeRoot, Self::SquareRoot, Self::Linear];

    pub fn exponent(self) -> f64 {
        match self {
            Self::Constant => 0.0,
            Self::QuarterRoot => 0.25,
            Self::CubeRoot => 1.0 / 3.0,
            Self::SquareRoot => 0.5,
            Self::Linear => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Root mean square residual of the log-log line.
    pub residual: f64,
    /// Member of the fixed exponent family with the smallest log residual.
    pub model: ScalingModel,
}

/// Least-squares line through (log n, log iact).
pub fn fit_scaling_exponent(ns: &[f64], iacts: &[f64]) -> Result<ScalingFit> {
    if ns.len() != iacts.len() {
        return Err(Error::DegenerateInput("sizes and IACTs differ in length".into()));
    }
    if ns.len() < 3 {
        return Err(Error::DegenerateInput(format!("need at least 3 points, got {}", ns.len())));
    }
    if ns.windows(2).any(|w| !(w[1] > w[0])) || ns[0] <= 0.0 {
        return Err(Error::DegenerateInput("sizes must be positive and strictly increasing".into()));
    }
    if iacts.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateInput("IACTs must be positive and finite".into()));
    }
    let lx: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = iacts.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let residual = (lx.iter().zip(&ly).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum::<f64>() / k).sqrt();
    let family_residual = |a: f64| {
        let c = ly.iter().zip(&lx).map(|(y, x)| y - a * x).sum::<f64>() / k;
        ly.iter().zip(&lx).map(|(y, x)| (y - c - a * x).powi(2)).sum::<f64>()
    };
    let model = ScalingModel::ALL
        .into_iter()
        .min_by(|a, b| family_residual(a.exponent()).total_cmp(&family_residual(b.exponent())))
        .unwrap();
    Ok(ScalingFit { exponent: slope, prefactor: icpt.exp(), residual, model })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingDecay {
    /// Δ⁰ term: mean of ‖C^{-1/2}Δ⁰‖² over trials.
    pub initial: f64,
    /// Mean of ‖C^{-1/2}Δᵏ‖² for k = 1..=k_max.
    pub mean: Vec<f64>,
    /// Standard error of each mean.
    pub std_err: Vec<f64>,
    /// Per-trial initial distance, to form the envelope trial by trial.
    pub initial_per_trial: Vec<f64>,
}

/// Start of the chain coupled to the exact-draw chain.
#[derive(Clone, Debug, PartialEq)]
pub enum CouplingStart {
    /// m + s·(w − m) for a fresh target draw w.
    Overdispersed(f64),
    /// A fixed point shared by all trials.
    Fixed(DVector<f64>),
    /// The exact draw itself.
    Identical,
}

/// Couples a chain started at an overdispersed point with a chain started
/// at an exact target draw, both driven by the same noise, and reports
/// 𝔼‖C^{-1/2}(xᵏ − zᵏ)‖².
pub fn coupling_decay(target: &GaussianTarget, k_max: usize, trials: usize, seed: u64) -> Result<CouplingDecay> {
    coupling_decay_with(target, &CouplingStart::Overdispersed(3.0), k_max, trials, seed)
}

pub fn coupling_decay_with(target: &GaussianTarget, start: &CouplingStart, k_max: usize, trials: usize, seed: u64) -> Result<CouplingDecay> {
    if trials == 0 {
        return Err(Error::InvalidArgument("coupling needs at least one trial".into()));
    }
    let n = target.n();
    let gibbs = target.gibbs()?;
    // ‖C^{-1/2}d‖² = dᵀΩd
    let (factor, cov_form) = match &target.form {
        Prior::Covariance(c) => (c.cholesky()?, true),
        Prior::Precision(w) => (w.cholesky()?, false),
    };
    let whitened = |d: &DVector<f64>| -> f64 {
        if cov_form {
            let mut v = d.clone();
            factor.solve_lower_in_place(v.as_mut_slice());
            v.norm_squared()
        } else {
            factor.l().tr_mul(d).norm_squared()
        }
    };
    let draw = |rng: &mut ChaCha8Rng, f: &CholeskyFactor| -> DVector<f64> {
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        if cov_form {
            &target.mean + f.mul_lower(&z)
        } else {
            let mut v = z;
            f.solve_upper_in_place(v.as_mut_slice());
            &target.mean + v
        }
    };
    let mut sums = vec![0.0; k_max];
    let mut sq = vec![0.0; k_max];
    let mut init = Vec::with_capacity(trials);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise_len = n;
    for _ in 0..trials {
        let mut z = draw(&mut rng, &factor);
        let mut x = match start {
            CouplingStart::Overdispersed(scale) => {
                let w = draw(&mut rng, &factor);
                &target.mean + *scale * (w - &target.mean)
            }
            CouplingStart::Fixed(x0) => {
                if x0.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
                }
                x0.clone()
            }
            CouplingStart::Identical => z.clone(),
        };
        init.push(whitened(&(&x - &z)));
        let mut noise = vec![0.0; noise_len];
        for k in 0..k_max {
            for v in noise.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            gibbs.sweep_with_noise(x.as_mut_slice(), &noise);
            gibbs.sweep_with_noise(z.as_mut_slice(), &noise);
            let d = whitened(&(&x - &z));
            sums[k] += d;
            sq[k] += d * d;
        }
    }
    let t = trials as f64;
    let mean: Vec<f64> = sums.iter().map(|s| s / t).collect();
    let std_err = sq
        .iter()
        .zip(&mean)
        .map(|(s, m)| if trials > 1 { ((s / t - m * m).max(0.0) * t / (t - 1.0) / t).sqrt() } else { 0.0 })
        .collect();
    Ok(CouplingDecay { initial: init.iter().sum::<f64>() / t, mean, std_err, initial_per_trial: init })
}

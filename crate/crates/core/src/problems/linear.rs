//! Linear-Gaussian test problems on 1D grids and periodic images.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::band_linalg::{BlockPartition, SymMatrix};
use crate::error::{Error, Result};
use crate::linear_gaussian::{LinearGaussianProblem, Prior};
use crate::localization::{threshold_observation, LocalizationReport, ObservationStructure};
use crate::samplers::{GaussianSampler, GaussianTarget};

pub const JITTER_EX1: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub length: f64,
    pub dz: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(length: f64, dz: f64) -> Result<Self> {
        if !(length > 0.0 && dz > 0.0) {
            return Err(Error::InvalidArgument("grid length and spacing must be positive".into()));
        }
        let r = length / dz;
        let n = r.round();
        if (r - n).abs() > 1e-9 * r.max(1.0) || n < 2.0 {
            return Err(Error::InvalidArgument(format!("L/dz = {r} is not an integer ≥ 2")));
        }
        Ok(Self { length, dz, n: n as usize })
    }

    pub fn point(&self, i: usize) -> f64 {
        i as f64 * self.dz
    }
}

/// A generated problem with the state that produced its data.
#[derive(Clone, Debug)]
pub struct LinearExample {
    pub problem: LinearGaussianProblem,
    pub truth: DVector<f64>,
    pub seed: u64,
}

/// Observes every other grid point with unit noise.
fn every_other(n: usize) -> ObservationStructure {
    let idx: Vec<usize> = (0..n).step_by(2).collect();
    ObservationStructure::selection(n, &idx)
}

fn noisy_data(rng: &mut ChaCha8Rng, h: &DMatrix<f64>, truth: &DVector<f64>, noise_sd: f64) -> DVector<f64> {
    let clean = h * truth;
    DVector::from_fn(clean.len(), |j, _| clean[j] + noise_sd * rng.sample::<f64, _>(StandardNormal))
}

fn sample_and_observe(m: DVector<f64>, prior: Prior, obs: ObservationStructure, seed: u64) -> Result<LinearExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = GaussianSampler::new(m.clone(), &prior)?.draw(&mut rng);
    let y = noisy_data(&mut rng, &obs.h, &truth, 1.0);
    let k = obs.k();
    let problem = LinearGaussianProblem::new(m, prior, obs, DVector::from_element(k, 1.0), y)?;
    Ok(LinearExample { problem, truth, seed })
}

/// Exponential covariance amp·exp(−|z−z'|/(2ρ)) plus jitter, mean 5 sin(2πz).
pub fn example1_covariance(grid: &Grid1D, rho: f64, amp: f64) -> SymMatrix {
    let z: Vec<f64> = (0..grid.n).map(|i| grid.point(i)).collect();
    SymMatrix::from_fn(grid.n, |i, j| amp * (-(z[i] - z[j]).abs() / (2.0 * rho)).exp() + if i == j { JITTER_EX1 } else { 0.0 })
}

pub fn build_example1(length: f64, dz: f64, rho: f64, amp: f64, seed: u64) -> Result<LinearExample> {
    let grid = Grid1D::new(length, dz)?;
    if grid.n % 2 != 0 {
        return Err(Error::InvalidArgument("example 1 needs an even number of grid points".into()));
    }
    let m = DVector::from_fn(grid.n, |i, _| 5.0 * (2.0 * std::f64::consts::PI * grid.point(i)).sin());
    let c = example1_covariance(&grid, rho, amp);
    sample_and_observe(m, Prior::Covariance(c), every_other(grid.n), seed)
}

/// Ω = (ρ⁻² I + L)² with L the Dirichlet second-difference matrix / dz².
pub fn example2_precision(grid: &Grid1D, rho: f64) -> SymMatrix {
    let n = grid.n;
    let s = 1.0 / (grid.dz * grid.dz);
    let a = SymMatrix::tridiagonal(n, 1.0 / (rho * rho) + 2.0 * s, -s);
    let sq = a.as_matrix() * a.as_matrix();
    SymMatrix::with_bandwidth(sq, 2).expect("square of a tridiagonal matrix is pentadiagonal")
}

pub fn build_example2(length: f64, dz: f64, rho: f64, seed: u64) -> Result<LinearExample> {
    let grid = Grid1D::new(length, dz)?;
    if grid.n % 2 != 0 {
        return Err(Error::InvalidArgument("example 2 needs an even number of grid points".into()));
    }
    let w = example2_precision(&grid, rho);
    sample_and_observe(DVector::zeros(grid.n), Prior::Precision(w), every_other(grid.n), seed)
}

pub fn build_example3(n: usize, seed: u64) -> Result<LinearExample> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::InvalidArgument("example 3 needs an even dimension ≥ 2".into()));
    }
    let c = SymMatrix::tridiagonal(n, 2.0, -1.0);
    sample_and_observe(DVector::zeros(n), Prior::Covariance(c), every_other(n), seed)
}

/// Identity-covariance target with unit blocks.
pub fn build_isotropic(n: usize) -> Result<GaussianTarget> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    GaussianTarget::new(DVector::zeros(n), Prior::Covariance(SymMatrix::identity(n)), BlockPartition::consecutive(n, 1)?)
}

#[derive(Clone, Debug)]
pub struct DeblurExample {
    pub n_side: usize,
    pub lambda: f64,
    pub delta: f64,
    /// Problem with the full blur H; its prior precision δL is singular.
    pub problem: LinearGaussianProblem,
    /// Same problem with H thresholded at 1% of its largest entry.
    pub localized: LinearGaussianProblem,
    pub h_report: LocalizationReport,
    pub truth: DVector<f64>,
    pub seed: u64,
}

/// Column-stacked index of pixel (row r, column c).
pub fn pixel(n_side: usize, r: usize, c: usize) -> usize {
    c * n_side + r
}

fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// Periodic 5-point Laplacian on an n_side × n_side image.
pub fn periodic_laplacian(n_side: usize) -> SymMatrix {
    let n = n_side * n_side;
    let mut a = DMatrix::zeros(n, n);
    for c in 0..n_side {
        for r in 0..n_side {
            let p = pixel(n_side, r, c);
            a[(p, p)] += 4.0;
            for (dr, dc) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
                let q = pixel(n_side, wrap(r as isize + dr, n_side), wrap(c as isize + dc, n_side));
                a[(p, q)] -= 1.0;
            }
        }
    }
    SymMatrix::new(a).expect("Laplacian stencil is symmetric")
}

/// Periodic Gaussian blur with support radius ceil(4σ) and unit row sums.
pub fn blur_matrix(n_side: usize, sigma: f64) -> DMatrix<f64> {
    let n = n_side * n_side;
    let rad = (4.0 * sigma).ceil() as isize;
    let mut w = Vec::new();
    for dc in -rad..=rad {
        for dr in -rad..=rad {
            w.push((dr, dc, (-((dr * dr + dc * dc) as f64) / (2.0 * sigma * sigma)).exp()));
        }
    }
    let total: f64 = w.iter().map(|t| t.2).sum();
    let mut h = DMatrix::zeros(n, n);
    for c in 0..n_side {
        for r in 0..n_side {
            let p = pixel(n_side, r, c);
            for &(dr, dc, v) in &w {
                let q = pixel(n_side, wrap(r as isize + dr, n_side), wrap(c as isize + dc, n_side));
                h[(p, q)] += v / total;
            }
        }
    }
    h
}

/// Seeded piecewise-smooth test image with values in about [0, 1]: a smooth
/// background, two discs and a bar at random positions.
pub fn synthetic_image(n_side: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = n_side as f64;
    let (fx, fy, ph): (f64, f64, f64) = (rng.random_range(0.5..1.5), rng.random_range(0.5..1.5), rng.random_range(0.0..6.28));
    let discs: Vec<(f64, f64, f64, f64)> =
        (0..2).map(|_| (rng.random_range(0.2..0.8) * s, rng.random_range(0.2..0.8) * s, rng.random_range(0.1..0.25) * s, rng.random_range(0.3..0.5))).collect();
    let (b0, b1) = (rng.random_range(0.1..0.4) * s, rng.random_range(0.5..0.9) * s);
    let mut x = DVector::zeros(n_side * n_side);
    for c in 0..n_side {
        for r in 0..n_side {
            let (u, v) = (r as f64, c as f64);
            let mut val = 0.3 + 0.1 * (2.0 * std::f64::consts::PI * (fx * u / s + fy * v / s) + ph).sin();
            for &(cr, cc, rad, amp) in &discs {
                if (u - cr).powi(2) + (v - cc).powi(2) < rad * rad {
                    val += amp;
                }
            }
            if u >= b0 && u < b1 && (v - 0.5 * s).abs() < 0.06 * s {
                val += 0.2;
            }
            x[pixel(n_side, r, c)] = val;
        }
    }
    x
}

/// y = Hx + N(0, λ⁻¹I) for a synthetic image x, prior precision δL with
/// the periodic Laplacian, and the 1%-thresholded localized blur.
pub fn build_deblur(n_side: usize, lambda: f64, delta: f64, blur_sigma: f64, seed: u64) -> Result<DeblurExample> {
    if n_side < 8 {
        return Err(Error::InvalidArgument("image side must be at least 8".into()));
    }
    let n = n_side * n_side;
    let h = blur_matrix(n_side, blur_sigma);
    let truth = synthetic_image(n_side, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let y = noisy_data(&mut rng, &h, &truth, 1.0 / lambda.sqrt());
    let prior = Prior::Precision(periodic_laplacian(n_side).scaled(delta));
    let centers = (0..n).collect();
    let obs = ObservationStructure::new(h, centers)?;
    let tau = 0.01 * obs.h.amax();
    let (obs_loc, h_report) = threshold_observation(&obs, tau);
    let r = DVector::from_element(n, 1.0 / lambda);
    let problem = LinearGaussianProblem::new(DVector::zeros(n), prior.clone(), obs, r.clone(), y.clone())?;
    let localized = LinearGaussianProblem::new(DVector::zeros(n), prior, obs_loc, r, y)?;
    Ok(DeblurExample { n_side, lambda, delta, problem, localized, h_report, truth, seed })
}

impl DeblurExample {
    /// Ω_loc = λ H_locᵀH_loc + δL and the information vector λ H_locᵀ y.
    pub fn localized_posterior_precision(&self) -> Result<(SymMatrix, DVector<f64>)> {
        let p = &self.localized;
        let w = SymMatrix::new(p.prior.matrix().as_matrix() + p.data_precision())?;
        let info = p.ht_rinv(&p.y);
        Ok((w, info))
    }
}

/// Writes an image as plain PGM (P2), rows top to bottom, scaled to 0..255
/// over its own range.
pub fn write_pgm<W: std::io::Write>(w: &mut W, x: &DVector<f64>, n_side: usize) -> Result<()> {
    if x.len() != n_side * n_side {
        return Err(Error::DimensionMismatch { expected: n_side * n_side, got: x.len() });
    }
    let (lo, hi) = (x.min(), x.max());
    let span = if hi > lo { hi - lo } else { 1.0 };
    writeln!(w, "P2\n{n_side} {n_side}\n255")?;
    for r in 0..n_side {
        let row: Vec<String> =
            (0..n_side).map(|c| (((x[pixel(n_side, r, c)] - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8).to_string()).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

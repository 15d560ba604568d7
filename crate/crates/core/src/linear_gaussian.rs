//! Posterior moments of linear-Gaussian problems, localization perturbation
//! bounds, and effective dimensions.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::band_linalg::{operator_norm, read_matrix, write_matrix, SymMatrix};
use crate::error::{Error, Result};
use crate::localization::{observation_delta, row_sum_delta, ObservationStructure};

#[derive(Clone, Debug, PartialEq)]
pub enum Prior {
    Covariance(SymMatrix),
    Precision(SymMatrix),
}

impl Prior {
    pub fn n(&self) -> usize {
        match self {
            Prior::Covariance(c) | Prior::Precision(c) => c.n(),
        }
    }

    pub fn matrix(&self) -> &SymMatrix {
        match self {
            Prior::Covariance(c) | Prior::Precision(c) => c,
        }
    }

    pub fn is_covariance(&self) -> bool {
        matches!(self, Prior::Covariance(_))
    }

    pub fn covariance(&self) -> Result<SymMatrix> {
        match self {
            Prior::Covariance(c) => Ok(c.clone()),
            Prior::Precision(w) => w.inverse(),
        }
    }

    pub fn precision(&self) -> Result<SymMatrix> {
        match self {
            Prior::Covariance(c) => c.inverse(),
            Prior::Precision(w) => Ok(w.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearGaussianProblem {
    pub m: DVector<f64>,
    pub prior: Prior,
    pub obs: ObservationStructure,
    /// Diagonal of R.
    pub r: DVector<f64>,
    pub y: DVector<f64>,
}

impl LinearGaussianProblem {
    pub fn new(m: DVector<f64>, prior: Prior, obs: ObservationStructure, r: DVector<f64>, y: DVector<f64>) -> Result<Self> {
        let n = m.len();
        if prior.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: prior.n() });
        }
        if obs.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: obs.n() });
        }
        let k = obs.k();
        if r.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: r.len() });
        }
        if y.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: y.len() });
        }
        if r.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("R must be diagonal with positive entries".into()));
        }
        Ok(Self { m, prior, obs, r, y })
    }

    /// Accepts a full R and rejects it unless it is diagonal.
    pub fn with_full_r(m: DVector<f64>, prior: Prior, obs: ObservationStructure, r: &DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let k = r.nrows();
        for j in 0..r.ncols() {
            for i in 0..k {
                if i != j && r[(i, j)] != 0.0 {
                    return Err(Error::InvalidArgument("R must be diagonal".into()));
                }
            }
        }
        Self::new(m, prior, obs, r.diagonal(), y)
    }

    pub fn n(&self) -> usize {
        self.m.len()
    }

    pub fn k(&self) -> usize {
        self.y.len()
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.obs.h
    }

    pub fn r_inv(&self) -> DVector<f64> {
        self.r.map(|v| 1.0 / v)
    }

    /// Same data and prior mean, with localized prior matrix and H.
    pub fn localized(&self, prior: Prior, obs: ObservationStructure) -> Result<Self> {
        Self::new(self.m.clone(), prior, obs, self.r.clone(), self.y.clone())
    }

    /// Hᵀ R⁻¹ H.
    pub fn data_precision(&self) -> DMatrix<f64> {
        let h = self.h();
        let mut w = h.clone();
        for (j, mut row) in w.row_iter_mut().enumerate() {
            row *= 1.0 / self.r[j];
        }
        h.transpose() * w
    }

    /// Hᵀ R⁻¹ v.
    pub fn ht_rinv(&self, v: &DVector<f64>) -> DVector<f64> {
        let w = v.component_div(&self.r);
        self.h().tr_mul(&w)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorMoments {
    pub mean: DVector<f64>,
    pub cov: SymMatrix,
    pub precision: Option<SymMatrix>,
    pub gain: DMatrix<f64>,
}

pub fn posterior_moments_cov(p: &LinearGaussianProblem) -> Result<PosteriorMoments> {
    let c = match &p.prior {
        Prior::Covariance(c) => c,
        Prior::Precision(_) => return Err(Error::PriorFormMismatch("covariance form required")),
    };
    let h = p.h();
    let ch_t = c.as_matrix() * h.transpose();
    let mut s = h * &ch_t;
    for j in 0..p.k() {
        s[(j, j)] += p.r[j];
    }
    let s = SymMatrix::new(s).map_err(|_| Error::SingularInnovation)?;
    let fs = s.cholesky().map_err(|_| Error::SingularInnovation)?;
    // K = C Hᵀ S⁻¹  ⇔  S Kᵀ = H C
    let gain = fs.solve_matrix(&ch_t.transpose()).transpose();
    let resid = &p.y - h * &p.m;
    let mean = &p.m + &gain * resid;
    let n = p.n();
    let i_kh = DMatrix::identity(n, n) - &gain * h;
    let cov = SymMatrix::new(i_kh * c.as_matrix())?;
    Ok(PosteriorMoments { mean, cov, precision: None, gain })
}

pub fn posterior_moments_prec(p: &LinearGaussianProblem) -> Result<PosteriorMoments> {
    let w = match &p.prior {
        Prior::Precision(w) => w,
        Prior::Covariance(_) => return Err(Error::PriorFormMismatch("precision form required")),
    };
    let w_hat = SymMatrix::new(w.as_matrix() + p.data_precision())?;
    let f = w_hat.cholesky()?;
    let resid = &p.y - p.h() * &p.m;
    let mean = &p.m + f.solve(&p.ht_rinv(&resid));
    let n = p.n();
    let cov = SymMatrix::new(f.solve_matrix(&DMatrix::identity(n, n)))?;
    let mut ht_rinv = p.h().transpose();
    for (j, mut col) in ht_rinv.column_iter_mut().enumerate() {
        col /= p.r[j];
    }
    let gain = f.solve_matrix(&ht_rinv);
    Ok(PosteriorMoments { mean, cov, precision: Some(w_hat), gain })
}

/// Dispatches on the prior form.
pub fn posterior_moments(p: &LinearGaussianProblem) -> Result<PosteriorMoments> {
    match p.prior {
        Prior::Covariance(_) => posterior_moments_cov(p),
        Prior::Precision(_) => posterior_moments_prec(p),
    }
}

/// Moments of a problem assembled from localized prior and observation
/// matrices; the formulas are the unlocalized ones.
pub fn localized_posterior_moments(p_loc: &LinearGaussianProblem) -> Result<PosteriorMoments> {
    posterior_moments(p_loc)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundDeltas {
    /// δ_C or δ_Ω, depending on the prior form.
    pub delta_prior: f64,
    pub delta_h: f64,
}

/// δ values computed directly from a problem and its localized version.
pub fn deltas_between(p: &LinearGaussianProblem, p_loc: &LinearGaussianProblem) -> Result<BoundDeltas> {
    if p.prior.is_covariance() != p_loc.prior.is_covariance() {
        return Err(Error::PriorFormMismatch("problem and localized problem use different prior forms"));
    }
    Ok(BoundDeltas {
        delta_prior: row_sum_delta(p.prior.matrix().as_matrix(), p_loc.prior.matrix().as_matrix()),
        delta_h: observation_delta(p.h(), p_loc.h()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationBounds {
    pub bound_mean: f64,
    pub bound_cov: f64,
    /// Δ₁ (covariance form) or Δ₂ (precision form).
    pub big_delta: f64,
}

/// Norms entering the bounds, after rescaling to ‖H‖ = 1.
#[derive(Clone, Copy, Debug)]
struct Normalized {
    c_hat: f64,
    r_inv: f64,
    m: f64,
    y: f64,
    delta_h: f64,
}

fn normalized(p: &LinearGaussianProblem, post: &PosteriorMoments, delta_h: f64) -> Normalized {
    let s = operator_norm(p.h());
    let r_inv = p.r_inv().max();
    let (r_inv, y, delta_h) = if s > 0.0 {
        // (H, R, y, δ_H) → (H/s, R/s², y/s, δ_H/s) leaves the posterior unchanged
        (r_inv * s * s, p.y.norm() / s, delta_h / s)
    } else {
        (r_inv, p.y.norm(), delta_h)
    };
    Normalized { c_hat: post.cov.norm(), r_inv, m: p.m.norm(), y, delta_h }
}

pub fn perturbation_bounds_cov(p: &LinearGaussianProblem, deltas: &BoundDeltas) -> Result<PerturbationBounds> {
    let c = match &p.prior {
        Prior::Covariance(c) => c,
        Prior::Precision(_) => return Err(Error::PriorFormMismatch("covariance form required")),
    };
    let post = posterior_moments_cov(p)?;
    let nz = normalized(p, &post, deltas.delta_h);
    let c_inv = 1.0 / c.min_eigenvalue();
    let dc = deltas.delta_prior;
    let dh = nz.delta_h;
    if dc * c_inv >= 1.0 {
        return Err(Error::BoundInapplicable(format!("δ_C‖C⁻¹‖ = {:.4} ≥ 1", dc * c_inv)));
    }
    let d1 = c_inv * c_inv * dc / (1.0 - dc * c_inv) + (2.0 * dh + dh * dh) * nz.r_inv;
    let ch = nz.c_hat;
    if d1 * ch >= 1.0 {
        return Err(Error::BoundInapplicable(format!("Δ₁‖Ĉ‖ = {:.4} ≥ 1", d1 * ch)));
    }
    let den = 1.0 - d1 * ch;
    let bound_cov = ch * ch * d1 / den;
    let m_coef = c_inv * c_inv * ch * dc / ((1.0 - dc * c_inv) * den) + c_inv * ch * ch * d1 / den;
    let y_coef = ch * nz.r_inv / den * (ch * d1 + dh);
    Ok(PerturbationBounds { bound_mean: m_coef * nz.m + y_coef * nz.y, bound_cov, big_delta: d1 })
}

pub fn perturbation_bounds_prec(p: &LinearGaussianProblem, deltas: &BoundDeltas) -> Result<PerturbationBounds> {
    let w = match &p.prior {
        Prior::Precision(w) => w,
        Prior::Covariance(_) => return Err(Error::PriorFormMismatch("precision form required")),
    };
    let post = posterior_moments_prec(p)?;
    let nz = normalized(p, &post, deltas.delta_h);
    let w_norm = w.norm();
    let dw = deltas.delta_prior;
    let dh = nz.delta_h;
    if dw > w_norm {
        return Err(Error::BoundInapplicable(format!("δ_Ω = {dw:.4} exceeds ‖Ω‖ = {w_norm:.4}")));
    }
    let d2 = dw + (2.0 * dh + dh * dh) * nz.r_inv;
    let ch = nz.c_hat;
    if d2 * ch >= 1.0 {
        return Err(Error::BoundInapplicable(format!("Δ₂‖Ĉ‖ = {:.4} ≥ 1", d2 * ch)));
    }
    let den = 1.0 - d2 * ch;
    let bound_cov = ch * ch * d2 / den;
    let m_coef = (ch * dw + w_norm * ch * ch * d2) / den;
    let y_coef = ch * nz.r_inv / den * (ch * d2 + dh);
    Ok(PerturbationBounds { bound_mean: m_coef * nz.m + y_coef * nz.y, bound_cov, big_delta: d2 })
}

/// Dispatches on the prior form.
pub fn perturbation_bounds(p: &LinearGaussianProblem, deltas: &BoundDeltas) -> Result<PerturbationBounds> {
    match p.prior {
        Prior::Covariance(_) => perturbation_bounds_cov(p, deltas),
        Prior::Precision(_) => perturbation_bounds_prec(p, deltas),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactDifferences {
    pub mean: f64,
    pub cov: f64,
}

/// ‖m̂ − m̂_loc‖ and ‖Ĉ − Ĉ_loc‖ by direct computation.
pub fn exact_differences(p: &LinearGaussianProblem, p_loc: &LinearGaussianProblem) -> Result<ExactDifferences> {
    let a = posterior_moments(p)?;
    let b = posterior_moments(p_loc)?;
    let dc = SymMatrix::new(a.cov.as_matrix() - b.cov.as_matrix())?;
    Ok(ExactDifferences { mean: (&a.mean - &b.mean).norm(), cov: dc.norm() })
}

fn check_same(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), got: b.n() });
    }
    Ok(())
}

/// tr((C − Ĉ)C⁻¹) = n − tr(C⁻¹Ĉ).
pub fn effective_dimension_1(c: &SymMatrix, c_hat: &SymMatrix) -> Result<f64> {
    check_same(c, c_hat)?;
    let x = c.cholesky()?.solve_matrix(c_hat.as_matrix());
    Ok(c.n() as f64 - x.trace())
}

/// tr((Ω̂ − Ω)Ω⁻¹) = tr(Ω̂Ω⁻¹) − n.
pub fn effective_dimension_2(omega: &SymMatrix, omega_hat: &SymMatrix) -> Result<f64> {
    check_same(omega, omega_hat)?;
    let x = omega.cholesky()?.solve_matrix(omega_hat.as_matrix());
    Ok(x.trace() - omega.n() as f64)
}

fn write_vector(path: &Path, v: &DVector<f64>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for x in v.iter() {
        writeln!(f, "{x:.16e}")?;
    }
    Ok(())
}

fn read_vector(path: &Path) -> Result<DVector<f64>> {
    let f = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for line in f.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(t.parse::<f64>().map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?);
    }
    Ok(DVector::from_vec(out))
}

fn write_mat_file(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write_matrix(&mut f, a)?;
    Ok(())
}

/// Writes a problem as a directory of text files plus `manifest.txt`
/// listing "role file" pairs.
pub fn write_bundle(dir: &Path, p: &LinearGaussianProblem) -> Result<()> {
    fs::create_dir_all(dir)?;
    let prior_role = if p.prior.is_covariance() { "prior_covariance" } else { "prior_precision" };
    let entries = [
        ("prior_mean", "prior_mean.txt"),
        (prior_role, "prior_matrix.txt"),
        ("observation_matrix", "H.txt"),
        ("observation_centers", "centers.txt"),
        ("noise_covariance", "R.txt"),
        ("data", "y.txt"),
    ];
    write_vector(&dir.join("prior_mean.txt"), &p.m)?;
    write_mat_file(&dir.join("prior_matrix.txt"), p.prior.matrix().as_matrix())?;
    write_mat_file(&dir.join("H.txt"), p.h())?;
    let centers = DVector::from_iterator(p.k(), p.obs.centers.iter().map(|&c| c as f64));
    write_vector(&dir.join("centers.txt"), &centers)?;
    write_mat_file(&dir.join("R.txt"), &DMatrix::from_diagonal(&p.r))?;
    write_vector(&dir.join("y.txt"), &p.y)?;
    let mut man = fs::File::create(dir.join("manifest.txt"))?;
    for (role, file) in entries {
        writeln!(man, "{role} {file}")?;
    }
    Ok(())
}

pub fn read_bundle(dir: &Path) -> Result<LinearGaussianProblem> {
    let man = fs::read_to_string(dir.join("manifest.txt"))?;
    let mut files = std::collections::HashMap::new();
    for line in man.lines().filter(|l| !l.trim().is_empty()) {
        let mut it = line.split_whitespace();
        let (Some(role), Some(file)) = (it.next(), it.next()) else {
            return Err(Error::Parse(format!("bad manifest line: {line}")));
        };
        files.insert(role.to_string(), dir.join(file));
    }
    let get = |role: &str| files.get(role).ok_or_else(|| Error::Parse(format!("manifest lacks role {role}")));
    let read_mat = |path: &Path| -> Result<DMatrix<f64>> { Ok(read_matrix(BufReader::new(fs::File::open(path)?))?.0) };
    let m = read_vector(get("prior_mean")?)?;
    let prior = if let Some(path) = files.get("prior_covariance") {
        Prior::Covariance(SymMatrix::new(read_mat(path)?)?)
    } else {
        Prior::Precision(SymMatrix::new(read_mat(get("prior_precision")?)?)?)
    };
    let h = read_mat(get("observation_matrix")?)?;
    let centers: Vec<usize> = read_vector(get("observation_centers")?)?.iter().map(|&c| c as usize).collect();
    let r = read_mat(get("noise_covariance")?)?;
    let y = read_vector(get("data")?)?;
    LinearGaussianProblem::with_full_r(m, prior, ObservationStructure::new(h, centers)?, &r, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(prior: Prior, h: f64) -> LinearGaussianProblem {
        let obs = ObservationStructure::new(DMatrix::from_element(1, 1, h), vec![0]).unwrap();
        LinearGaussianProblem::new(DVector::zeros(1), prior, obs, DVector::from_element(1, 1.0), DVector::from_element(1, 2.0)).unwrap()
    }

    #[test]
    fn scalar_conjugate_cases() {
        let post = posterior_moments_cov(&scalar(Prior::Covariance(SymMatrix::identity(1)), 1.0)).unwrap();
        assert_relative_eq!(post.mean[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(post.cov.get(0, 0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(post.gain[(0, 0)], 0.5, epsilon = 1e-15);

        let post = posterior_moments_prec(&scalar(Prior::Precision(SymMatrix::identity(1)), 1.0)).unwrap();
        assert_relative_eq!(post.precision.unwrap().get(0, 0), 2.0, epsilon = 1e-15);
        assert_relative_eq!(post.mean[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn no_information_leaves_prior() {
        let c = SymMatrix::from_diagonal(&[2.0, 3.0]);
        let obs = ObservationStructure::new(DMatrix::zeros(1, 2), vec![0]).unwrap();
        let m = DVector::from_vec(vec![1.0, -1.0]);
        let p = LinearGaussianProblem::new(m.clone(), Prior::Covariance(c.clone()), obs.clone(), DVector::from_element(1, 1.0), DVector::from_element(1, 5.0)).unwrap();
        let post = posterior_moments_cov(&p).unwrap();
        assert_eq!(post.mean, m);
        assert_relative_eq!(post.cov.as_matrix().clone(), c.as_matrix().clone(), epsilon = 1e-15);
        let p = LinearGaussianProblem::new(m.clone(), Prior::Precision(c.clone()), obs, DVector::from_element(1, 1.0), DVector::from_element(1, 5.0)).unwrap();
        let post = posterior_moments_prec(&p).unwrap();
        assert_eq!(post.mean, m);
        assert_eq!(post.precision.unwrap().as_matrix(), c.as_matrix());
    }

    #[test]
    fn wrong_form_and_bad_inputs() {
        let p = scalar(Prior::Precision(SymMatrix::identity(1)), 1.0);
        assert!(matches!(posterior_moments_cov(&p), Err(Error::PriorFormMismatch(_))));
        let obs = ObservationStructure::new(DMatrix::from_element(1, 1, 1.0), vec![0]).unwrap();
        assert!(LinearGaussianProblem::new(DVector::zeros(1), Prior::Covariance(SymMatrix::identity(1)), obs.clone(), DVector::from_element(1, 0.0), DVector::zeros(1)).is_err());
        let full_r = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.1, 1.0]);
        let obs2 = ObservationStructure::selection(2, &[0, 1]);
        assert!(LinearGaussianProblem::with_full_r(DVector::zeros(2), Prior::Covariance(SymMatrix::identity(2)), obs2, &full_r, DVector::zeros(2)).is_err());
    }

    #[test]
    fn bound_scalar_examples() {
        let p = scalar(Prior::Covariance(SymMatrix::identity(1)), 1.0);
        let zero = perturbation_bounds_cov(&p, &BoundDeltas::default()).unwrap();
        assert_eq!((zero.bound_mean, zero.bound_cov), (0.0, 0.0));
        let b = perturbation_bounds_cov(&p, &BoundDeltas { delta_prior: 0.1, delta_h: 0.0 }).unwrap();
        assert_relative_eq!(b.big_delta, 0.1 / 0.9, epsilon = 1e-15);
        assert_relative_eq!(b.bound_cov, 0.25 * (0.1 / 0.9) / (1.0 - 0.5 * 0.1 / 0.9), epsilon = 1e-15);
        assert!((b.bound_cov - 0.0294).abs() < 1e-4);

        let p = scalar(Prior::Precision(SymMatrix::identity(1)), 1.0);
        let zero = perturbation_bounds_prec(&p, &BoundDeltas::default()).unwrap();
        assert_eq!((zero.bound_mean, zero.bound_cov), (0.0, 0.0));
        let b = perturbation_bounds_prec(&p, &BoundDeltas { delta_prior: 0.1, delta_h: 0.0 }).unwrap();
        assert_relative_eq!(b.big_delta, 0.1, epsilon = 1e-15);
        assert_relative_eq!(b.bound_cov, 0.25 * 0.1 / 0.95, epsilon = 1e-15);
        assert!((b.bound_cov - 0.0263).abs() < 1e-4);
    }

    #[test]
    fn bound_preconditions_reported() {
        let p = scalar(Prior::Covariance(SymMatrix::identity(1)), 1.0);
        match perturbation_bounds_cov(&p, &BoundDeltas { delta_prior: 1.0, delta_h: 0.0 }) {
            Err(Error::BoundInapplicable(msg)) => assert!(msg.contains("δ_C")),
            other => panic!("{other:?}"),
        }
        match perturbation_bounds_cov(&p, &BoundDeltas { delta_prior: 0.0, delta_h: 1.0 }) {
            Err(Error::BoundInapplicable(msg)) => assert!(msg.contains("Δ₁")),
            other => panic!("{other:?}"),
        }
        let p = scalar(Prior::Precision(SymMatrix::identity(1)), 1.0);
        assert!(matches!(perturbation_bounds_prec(&p, &BoundDeltas { delta_prior: 1.5, delta_h: 0.0 }), Err(Error::BoundInapplicable(_))));
    }

    #[test]
    fn h_normalization_is_invariant() {
        // scaling H by s and R by s² (and y by s) describes the same posterior
        let base = scalar(Prior::Covariance(SymMatrix::identity(1)), 1.0);
        let s = 3.0;
        let obs = ObservationStructure::new(DMatrix::from_element(1, 1, s), vec![0]).unwrap();
        let scaled = LinearGaussianProblem::new(DVector::zeros(1), base.prior.clone(), obs, DVector::from_element(1, s * s), DVector::from_element(1, 2.0 * s)).unwrap();
        let d = BoundDeltas { delta_prior: 0.1, delta_h: 0.05 };
        let ds = BoundDeltas { delta_prior: 0.1, delta_h: 0.05 * s };
        let a = perturbation_bounds_cov(&base, &d).unwrap();
        let b = perturbation_bounds_cov(&scaled, &ds).unwrap();
        assert_relative_eq!(a.bound_cov, b.bound_cov, epsilon = 1e-14);
        assert_relative_eq!(a.bound_mean, b.bound_mean, epsilon = 1e-14);
    }

    #[test]
    fn effective_dimension_examples() {
        let c = SymMatrix::identity(1);
        assert_relative_eq!(effective_dimension_1(&c, &c).unwrap(), 0.0);
        assert_relative_eq!(effective_dimension_1(&c, &SymMatrix::from_diagonal(&[0.5])).unwrap(), 0.5);
        assert_relative_eq!(effective_dimension_2(&c, &c).unwrap(), 0.0);
        assert_relative_eq!(effective_dimension_2(&c, &SymMatrix::from_diagonal(&[2.0])).unwrap(), 1.0);
        assert!(matches!(effective_dimension_1(&c, &SymMatrix::identity(2)), Err(Error::DimensionMismatch { .. })));
    }
}

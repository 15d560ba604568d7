//! Localization of covariance, precision and observation matrices.
//!
//! Every routine reports the δ used by the perturbation bounds: the largest
//! absolute row sum of the removed part (for observation matrices, the
//! larger of the row and column versions).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::band_linalg::{bandwidth_of, SymMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_JITTER: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "params", rename_all = "snake_case")]
pub enum LocalizationMode {
    None,
    Bandwidth { l: usize },
    Threshold { tau: f64 },
    TaperThreshold { length_scale: f64, tau_frac: f64 },
    ObservationRadius { l_h: usize },
    ObservationThreshold { tau: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    #[serde(flatten)]
    pub mode: LocalizationMode,
    pub delta: f64,
    pub pd_repair_applied: bool,
}

impl LocalizationReport {
    pub fn none() -> Self {
        Self { mode: LocalizationMode::None, delta: 0.0, pd_repair_applied: false }
    }
}

/// Observation matrix with one center (0-based state index) per row.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationStructure {
    pub h: DMatrix<f64>,
    pub centers: Vec<usize>,
}

impl ObservationStructure {
    pub fn new(h: DMatrix<f64>, centers: Vec<usize>) -> Result<Self> {
        if centers.len() != h.nrows() {
            return Err(Error::DimensionMismatch { expected: h.nrows(), got: centers.len() });
        }
        if let Some(&c) = centers.iter().find(|&&c| c >= h.ncols()) {
            return Err(Error::InvalidArgument(format!("center {c} outside state of size {}", h.ncols())));
        }
        Ok(Self { h, centers })
    }

    pub fn with_inferred_centers(h: DMatrix<f64>) -> Result<Self> {
        let centers = infer_centers(&h)?;
        Ok(Self { h, centers })
    }

    /// Selection matrix observing the listed state indices.
    pub fn selection(n: usize, observed: &[usize]) -> Self {
        let mut h = DMatrix::zeros(observed.len(), n);
        for (j, &i) in observed.iter().enumerate() {
            h[(j, i)] = 1.0;
        }
        Self { h, centers: observed.to_vec() }
    }

    pub fn k(&self) -> usize {
        self.h.nrows()
    }

    pub fn n(&self) -> usize {
        self.h.ncols()
    }
}

/// Largest absolute row sum of `a − b`.
pub fn row_sum_delta(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| (a[(i, j)] - b[(i, j)]).abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Larger of the maximal absolute row sum and column sum of `a − b`.
pub fn observation_delta(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let rows = row_sum_delta(a, b);
    let cols = (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| (a[(i, j)] - b[(i, j)]).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    rows.max(cols)
}

fn finish_sym(out: DMatrix<f64>, m: &SymMatrix, mode: LocalizationMode) -> (SymMatrix, LocalizationReport) {
    let delta = row_sum_delta(m.as_matrix(), &out);
    let l = bandwidth_of(&out);
    let s = SymMatrix::with_bandwidth(out, l).expect("localized matrix stays symmetric");
    (s, LocalizationReport { mode, delta, pd_repair_applied: false })
}

pub fn truncate_by_bandwidth(m: &SymMatrix, l: usize) -> (SymMatrix, LocalizationReport) {
    let mut out = m.as_matrix().clone();
    let n = m.n();
    for j in 0..n {
        for i in 0..n {
            if i.abs_diff(j) > l {
                out[(i, j)] = 0.0;
            }
        }
    }
    finish_sym(out, m, LocalizationMode::Bandwidth { l })
}

/// Zeroes off-diagonal entries with |value| < tau.
pub fn truncate_by_threshold(m: &SymMatrix, tau: f64) -> (SymMatrix, LocalizationReport) {
    let mut out = m.as_matrix().clone();
    let n = m.n();
    for j in 0..n {
        for i in 0..n {
            if i != j && out[(i, j)].abs() < tau {
                out[(i, j)] = 0.0;
            }
        }
    }
    finish_sym(out, m, LocalizationMode::Threshold { tau })
}

pub fn periodic_distance(i: usize, j: usize, n: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(n - d)
}

pub fn taper_weight(d: usize, length_scale: f64) -> f64 {
    let r = d as f64 / length_scale;
    (-r * r).exp()
}

/// Hadamard product with exp(−(d/length_scale)²), d the periodic distance,
/// then thresholding of off-diagonal entries at `tau_frac` times the
/// largest tapered entry.
pub fn taper_and_threshold(m: &SymMatrix, length_scale: f64, tau_frac: f64) -> (SymMatrix, LocalizationReport) {
    let n = m.n();
    let a = m.as_matrix();
    let mut out = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * taper_weight(periodic_distance(i, j, n), length_scale));
    let tau = tau_frac * out.amax();
    for j in 0..n {
        for i in 0..n {
            if i != j && out[(i, j)].abs() < tau {
                out[(i, j)] = 0.0;
            }
        }
    }
    // The periodic taper can leave corner entries, so the declared
    // bandwidth may be large; δ accounts for both taper and threshold.
    finish_sym(out, m, LocalizationMode::TaperThreshold { length_scale, tau_frac })
}

/// Returns `M` if it is positive definite, otherwise `M + jitter·I`, with a
/// flag telling whether the jitter was added.
pub fn ensure_pd(m: &SymMatrix, jitter: f64) -> Result<(SymMatrix, bool)> {
    if m.n() == 0 || m.min_eigenvalue() > 0.0 {
        return Ok((m.clone(), false));
    }
    let r = m.add_diagonal(jitter);
    let lo = r.min_eigenvalue();
    if !(lo > 0.0) {
        return Err(Error::StillIndefinite(lo));
    }
    Ok((r, true))
}

/// `ensure_pd` that keeps a report consistent: the jitter counts toward δ.
pub fn repair_pd(m: SymMatrix, report: &mut LocalizationReport, jitter: f64) -> Result<SymMatrix> {
    let (out, repaired) = ensure_pd(&m, jitter)?;
    if repaired {
        report.pd_repair_applied = true;
        report.delta += jitter;
    }
    Ok(out)
}

pub fn localize_observation(obs: &ObservationStructure, l_h: usize) -> (ObservationStructure, LocalizationReport) {
    let mut h = obs.h.clone();
    for j in 0..obs.k() {
        for i in 0..obs.n() {
            if obs.centers[j].abs_diff(i) > l_h {
                h[(j, i)] = 0.0;
            }
        }
    }
    let delta = observation_delta(&obs.h, &h);
    let out = ObservationStructure { h, centers: obs.centers.clone() };
    (out, LocalizationReport { mode: LocalizationMode::ObservationRadius { l_h }, delta, pd_repair_applied: false })
}

/// Zeroes entries of H with |value| < tau.
pub fn threshold_observation(obs: &ObservationStructure, tau: f64) -> (ObservationStructure, LocalizationReport) {
    let h = obs.h.map(|v| if v.abs() < tau { 0.0 } else { v });
    let delta = observation_delta(&obs.h, &h);
    let out = ObservationStructure { h, centers: obs.centers.clone() };
    (out, LocalizationReport { mode: LocalizationMode::ObservationThreshold { tau }, delta, pd_repair_applied: false })
}

/// Row-wise argmax of |H|, ties to the smallest index.
pub fn infer_centers(h: &DMatrix<f64>) -> Result<Vec<usize>> {
    (0..h.nrows())
        .map(|j| {
            let mut best = None::<(usize, f64)>;
            for i in 0..h.ncols() {
                let v = h[(j, i)].abs();
                if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
            best.map(|(i, _)| i).ok_or(Error::ZeroRow(j))
        })
        .collect()
}

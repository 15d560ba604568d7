//! Gauss-Seidel operator of a blocked sweep and the geometric rate bounds
//! for block-tridiagonal covariance and precision matrices.

use nalgebra::DMatrix;

use crate::band_linalg::{block_decompose, BlockPartition, SymMatrix};
use crate::error::Result;

/// G = −(Ω_L + Ω_D)⁻¹ Ω_U for the block splitting induced by `p`.
pub fn gauss_seidel_operator(omega: &SymMatrix, p: &BlockPartition) -> Result<DMatrix<f64>> {
    omega.cholesky()?;
    let d = block_decompose(omega, p)?;
    let ld = &d.lower + &d.diag;
    let lu = ld.lu();
    let rhs = -&d.upper;
    Ok(lu.solve(&rhs).expect("lower block-triangular part of an SPD matrix is invertible"))
}

/// ‖C − G C Gᵀ − (Ω_L+Ω_D)⁻¹ Ω_D (Ω_L+Ω_D)⁻ᵀ‖: the stationary covariance
/// identity of one sweep, zero up to round-off.
pub fn invariance_residual(omega: &SymMatrix, p: &BlockPartition) -> Result<f64> {
    let c = omega.inverse()?;
    let g = gauss_seidel_operator(omega, p)?;
    let d = block_decompose(omega, p)?;
    let ld = &d.lower + &d.diag;
    let inv = ld.try_inverse().expect("invertible lower block-triangular part");
    let noise = &inv * &d.diag * inv.transpose();
    let r = c.as_matrix() - &g * c.as_matrix() * g.transpose() - noise;
    Ok(crate::band_linalg::operator_norm(&r))
}

fn clamp_cond(cond: f64) -> f64 {
    if cond.is_nan() || cond < 1.0 {
        1.0
    } else {
        cond
    }
}

/// β = 2(1−𝒞⁻¹)²𝒞⁴ / (1 + 2(1−𝒞⁻¹)²𝒞⁴) with 𝒞 the condition number of a
/// block-tridiagonal covariance matrix.
pub fn rate_bound_cov(cond: f64) -> f64 {
    let c = clamp_cond(cond);
    if c.is_infinite() {
        return 1.0;
    }
    let a = 2.0 * (1.0 - 1.0 / c).powi(2) * c.powi(4);
    a / (1.0 + a)
}

/// β = 𝒞(1−𝒞⁻¹)² / (1 + 𝒞(1−𝒞⁻¹)²) with 𝒞 the condition number of a
/// block-tridiagonal precision matrix.
pub fn rate_bound_prec(cond: f64) -> f64 {
    let c = clamp_cond(cond);
    if c.is_infinite() {
        return 1.0;
    }
    let a = c * (1.0 - 1.0 / c).powi(2);
    a / (1.0 + a)
}

//! Spectral Sobolev norms on a grid.
//!
//! `||u||_{H^s}^2 = sum_k (1 + lambda_k)^s |u_k|^2` in the orthonormal basis of
//! the grid's transform, and the dual norm `||u||_{H^-1}` built from the
//! Neumann (or periodic) inverse Laplacian with the mean split off.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::spectral::Spectral;

pub const MIN_SOBOLEV_INDEX: f64 = -1.0;
pub const MAX_SOBOLEV_INDEX: f64 = 3.0;

pub fn sobolev_norm(spectral: &Spectral, field: &Field, s: f64) -> Result<f64> {
    spectral.grid().check_same(field.grid())?;
    if !(MIN_SOBOLEV_INDEX..=MAX_SOBOLEV_INDEX).contains(&s) {
        return Err(Error::InvalidArgument(format!(
            "Sobolev index {s} outside [{MIN_SOBOLEV_INDEX}, {MAX_SOBOLEV_INDEX}]"
        )));
    }
    if s == 0.0 {
        return Ok(field.l2_norm());
    }
    Ok(spectral
        .quadratic_form(field.values(), |l| (1.0 + l).powf(s))
        .sqrt())
}

/// `||grad (-Delta)^-1 (u - mean)||_{L^2} + |mean| |Omega|^{1/2}`.
pub fn hminus1_norm(spectral: &Spectral, field: &Field) -> Result<f64> {
    spectral.grid().check_same(field.grid())?;
    let mean = field.mean();
    let fluct = spectral
        .quadratic_form(field.values(), |l| if l > 0.0 { 1.0 / l } else { 0.0 })
        .sqrt();
    Ok(fluct + mean.abs() * field.grid().volume().sqrt())
}

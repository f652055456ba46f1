//! Local spectral operators: Laplacian, inverse Laplacian and the Dirichlet
//! energy. Eigenvalues are the continuous symbols `|xi|^2`, not finite
//! difference symbols.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::spectral::Spectral;

/// Tolerance on `|int u| / ||u||_{L^1}` accepted by [`inv_laplacian`].
pub const MEAN_TOL: f64 = 1e-10;

pub fn laplacian(spectral: &Spectral, field: &Field) -> Result<Field> {
    spectral.grid().check_same(field.grid())?;
    Ok(spectral.field(spectral.apply_symbol(field.values(), |l| -l)))
}

/// `(-Delta)^-1` on mean-zero fields; the zero mode of the result is zero.
///
/// Fields whose mean is not negligible are rejected; callers split the mean
/// first.
pub fn inv_laplacian(spectral: &Spectral, field: &Field) -> Result<Field> {
    spectral.grid().check_same(field.grid())?;
    let total = field.integrate();
    let scale = field.values().iter().map(|v| v.abs()).sum::<f64>() * field.grid().cell_volume();
    if total.abs() > MEAN_TOL * scale.max(f64::MIN_POSITIVE) && total != 0.0 {
        return Err(Error::NonzeroMean {
            mean: field.mean(),
            scale,
        });
    }
    Ok(spectral.field(spectral.apply_symbol(field.values(), |l| if l > 0.0 { 1.0 / l } else { 0.0 })))
}

/// `1/2 int |grad c|^2 = 1/2 sum_k lambda_k |c_k|^2`.
pub fn dirichlet_energy(spectral: &Spectral, field: &Field) -> Result<f64> {
    spectral.grid().check_same(field.grid())?;
    Ok(0.5 * spectral.quadratic_form(field.values(), |l| l))
}

//! 2x2 building blocks: directional coupler, phase shifter and MZI.

use num_complex::Complex64;

use super::matrix::TransferMatrix;
use crate::error::{Error, Result};

pub(crate) fn check_transmission(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("transmission {t} outside [0, 1]")));
    }
    Ok(())
}

#[inline]
pub(crate) fn dc_coefficients(t: f64) -> [[Complex64; 2]; 2] {
    let bar = Complex64::new((1.0 - t).sqrt(), 0.0);
    let cross = Complex64::new(0.0, t.sqrt());
    [[bar, cross], [cross, bar]]
}

/// Directional coupler with power transmission (cross-coupling) `t`:
/// `[[sqrt(1-t), i sqrt(t)], [i sqrt(t), sqrt(1-t)]]`.
pub fn dc_unitary(t: f64) -> Result<TransferMatrix> {
    check_transmission(t)?;
    Ok(TransferMatrix::from_2x2(dc_coefficients(t)))
}

/// Phase shifter on the top arm: `diag(e^{i phi}, 1)`.
pub fn ps_unitary(phi: f64) -> Result<TransferMatrix> {
    if !phi.is_finite() {
        return Err(Error::domain(format!("phase {phi} is not finite")));
    }
    let zero = Complex64::new(0.0, 0.0);
    Ok(TransferMatrix::from_2x2([[Complex64::from_polar(1.0, phi), zero], [zero, Complex64::new(1.0, 0.0)]]))
}

/// `DC(t) . PS(theta) . DC(t) . PS(phi)` as a matrix product, so `phi` acts
/// on the input side and `theta` sits on the internal arm.
pub fn mzi_unitary(t: f64, theta: f64, phi: f64) -> Result<TransferMatrix> {
    let dc = dc_unitary(t)?;
    let inner = ps_unitary(theta)?;
    let outer = ps_unitary(phi)?;
    Ok(&(&(&dc * &inner) * &dc) * &outer)
}

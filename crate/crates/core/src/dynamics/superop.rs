//! Lindblad dissipator and homodyne measurement superoperator.

use crate::error::{Error, Result};
use crate::fock::{CMatrix, DensityMatrix, Operator, C64};

fn check(op: &Operator, rho: &DensityMatrix) -> Result<()> {
    if op.matrix().nrows() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: op.matrix().nrows() });
    }
    Ok(())
}

/// `D(A) rho = A rho A^dag - (A^dag A rho + rho A^dag A) / 2`.
pub fn lindblad_dissipator(op: &Operator, rho: &DensityMatrix) -> Result<CMatrix> {
    check(op, rho)?;
    Ok(dissipator_raw(op.matrix(), rho.matrix()))
}

/// `H(A) rho = A rho + rho A^dag - <A + A^dag> rho`.
pub fn measurement_superop(op: &Operator, rho: &DensityMatrix) -> Result<CMatrix> {
    check(op, rho)?;
    Ok(measurement_raw(op.matrix(), rho.matrix()))
}

pub(crate) fn dissipator_raw(a: &CMatrix, rho: &CMatrix) -> CMatrix {
    let ad = a.adjoint();
    let ada = &ad * a;
    a * rho * &ad - (&ada * rho + rho * &ada) * C64::new(0.5, 0.0)
}

pub(crate) fn measurement_raw(a: &CMatrix, rho: &CMatrix) -> CMatrix {
    let ad = a.adjoint();
    let sum = a + &ad;
    let mean = (&sum * rho).trace().re;
    a * rho + rho * &ad - rho.scale(mean)
}

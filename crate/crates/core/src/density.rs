use std::ops::Deref;

use crate::eigen::hermitian_eigs;
use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::scalar::{tol, Real};

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real>(CMatrix<T>);

impl<T: Real> DensityMatrix<T> {
    /// Validates `m` against the density-matrix invariants.
    pub fn new(m: CMatrix<T>) -> Result<Self> {
        if m.dim() == 0 {
            return Err(Error::InvalidDensity("empty matrix".into()));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        let asym = m.hermitian_asymmetry();
        if asym > T::tol(tol::HERMITIAN) {
            return Err(Error::InvalidDensity(format!("asymmetry {asym:e}")));
        }
        let tr = m.trace();
        if (tr.re - T::one()).abs() > T::tol(tol::TRACE) || tr.im.abs() > T::tol(tol::TRACE) {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min = hermitian_eigs(&m)?[0];
        if min < -T::tol(tol::PSD) {
            return Err(Error::InvalidDensity(format!("min eigenvalue {min:e}")));
        }
        Ok(Self(m))
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`
    pub fn pure(psi: &[crate::scalar::Cx<T>]) -> Result<Self> {
        let norm_sq = psi.iter().fold(T::zero(), |s, z| s + z.norm_sqr());
        if !(norm_sq > T::zero()) {
            return Err(Error::InvalidDensity("zero state vector".into()));
        }
        Self::new(CMatrix::outer(psi).scale_re(T::one() / norm_sq).hermitize())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim).scale_re(T::one() / T::lit(dim as f64)))
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.0
    }

    /// Expectation value `Tr(O ρ)` (real part).
    pub fn expectation(&self, observable: &CMatrix<T>) -> T {
        observable.trace_product(&self.0).re
    }
}

impl<T: Real> Deref for DensityMatrix<T> {
    type Target = CMatrix<T>;
    fn deref(&self) -> &CMatrix<T> {
        &self.0
    }
}

impl<T: Real> TryFrom<CMatrix<T>> for DensityMatrix<T> {
    type Error = Error;
    fn try_from(m: CMatrix<T>) -> Result<Self> {
        Self::new(m)
    }
}

//! Floating-point abstraction shared by the numerical core.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the core is generic over: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in target float")
    }

    /// Rescales a tolerance stated for `f64` arithmetic to this type's precision.
    ///
    /// For `f64` this is the identity; for `f32` the tolerance grows by the
    /// ratio of machine epsilons.
    #[inline]
    fn tol(x: f64) -> Self {
        let ratio = Self::epsilon().to_f64().unwrap_or(f64::EPSILON) / f64::EPSILON;
        Self::lit(x * ratio)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type Cx<T> = Complex<T>;

#[inline]
pub(crate) fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn re<T: Real>(x: T) -> Cx<T> {
    Complex::new(x, T::zero())
}

/// `-i`
#[inline]
pub(crate) fn neg_i<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), -T::one())
}

/// Module-wide numerical tolerances, stated for `f64`.
///
/// Generic code converts them with [`Real::tol`].
pub mod tol {
    /// Hermiticity of density matrices and Hamiltonians (max-entry norm).
    pub const HERMITIAN: f64 = 1e-12;
    /// Unit-trace check for density matrices.
    pub const TRACE: f64 = 1e-12;
    /// Slack on the smallest eigenvalue of a positive semidefinite matrix.
    pub const PSD: f64 = 1e-10;
    /// Symmetry check performed before a Hermitian eigendecomposition.
    pub const EIG_HERMITIAN: f64 = 1e-10;
    /// Taylor truncation tolerance of the reference exponential.
    pub const EXPM: f64 = 1e-14;
    /// Trace drift allowed in the reference propagator output.
    pub const ORACLE_TRACE: f64 = 1e-10;
    /// Below this the trace of an unnormalized step is treated as zero.
    pub const TRACE_FLOOR: f64 = 1e-300;
    /// RK outputs with a smaller eigenvalue are flagged as indefinite.
    pub const RK_INDEFINITE: f64 = 1e-8;
    /// Width of the marginal band around the unit circle in stability verdicts.
    pub const MARGINAL: f64 = 1e-9;
}

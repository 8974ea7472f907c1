//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real field the dense routines are generic over (`f32` or `f64`).
///
/// Tolerances are part of the scalar because a threshold that is sensible
/// for double precision is meaningless in single precision.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync + 'static
{
    /// Max-abs asymmetry accepted for a Hermitian operator.
    fn herm_tol() -> Self;
    /// Most negative eigenvalue still treated as zero.
    fn psd_tol() -> Self;
    /// Residual accepted when testing support on the symmetric subspace or
    /// permutation invariance of numerically constructed inputs.
    fn support_tol() -> Self;

    /// Converts an `f64` literal into the scalar.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable in scalar type")
    }

    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("integer representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn herm_tol() -> Self {
        1e-9
    }
    fn psd_tol() -> Self {
        1e-9
    }
    fn support_tol() -> Self {
        1e-8
    }
}

impl Real for f32 {
    fn herm_tol() -> Self {
        1e-4
    }
    fn psd_tol() -> Self {
        1e-4
    }
    fn support_tol() -> Self {
        1e-3
    }
}

/// Complex amplitude over a [`Real`] field.
pub type C<T> = Complex<T>;

pub(crate) fn cre<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

/// Modulus of a complex scalar using only `RealField` operations.
pub fn cabs<T: Real>(z: C<T>) -> T {
    z.re.hypot(z.im)
}

//! Scalar abstraction shared by every module.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};

/// Real scalar the whole toolkit is generic over. Implemented for `f32` and `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + LowerExp + Debug + Default + Send + Sync + 'static
{
    /// Coefficients with modulus at or below this are dropped from operator sums.
    fn prune_tolerance() -> Self;

    /// Converts an `f64` literal. Panics only for non-finite input on exotic types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Real for f64 {
    #[inline]
    fn prune_tolerance() -> Self {
        1e-12
    }
}

impl Real for f32 {
    #[inline]
    fn prune_tolerance() -> Self {
        1e-6
    }
}

pub type C<T> = Complex<T>;

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn c_zero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn c_one<T: Real>() -> C<T> {
    Complex::new(T::one(), T::zero())
}

#[inline]
pub fn c_i<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

#[inline]
pub fn c_abs<T: Real>(z: C<T>) -> T {
    z.re.hypot(z.im)
}

/// `e^{iθ}`.
#[inline]
pub fn c_phase<T: Real>(theta: T) -> C<T> {
    Complex::new(theta.cos(), theta.sin())
}

#[inline]
pub fn c_real<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

/// `i^k` for integer exponent.
#[inline]
pub fn i_pow<T: Real>(k: u8) -> C<T> {
    match k & 3 {
        0 => c_one(),
        1 => c_i(),
        2 => -c_one::<T>(),
        _ => -c_i::<T>(),
    }
}

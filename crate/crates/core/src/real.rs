//! Scalar abstraction for the numerical core.
//!
//! Everything downstream is generic over a floating-point type implementing
//! [`Real`]; `f64` is the default used by the concrete aliases at the crate
//! root, `f32` is available for quick low-precision scans.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar usable by every algorithm in this crate.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion back to `f64`, used for reporting and cache keys.
    fn to_f64_lossy(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

/// Shorthand for converting an `f64` literal into the working scalar type.
#[inline]
pub fn rl<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 literal must convert into the scalar type")
}

/// Complex number over the working scalar type.
pub type C<R> = Complex<R>;

/// Complex zero.
#[inline]
pub fn czero<R: Real>() -> C<R> {
    Complex::new(R::zero(), R::zero())
}

/// Complex one.
#[inline]
pub fn cone<R: Real>() -> C<R> {
    Complex::new(R::one(), R::zero())
}

/// Purely real complex number.
#[inline]
pub fn cre<R: Real>(x: R) -> C<R> {
    Complex::new(x, R::zero())
}

/// `exp(i phi)` as a complex number.
#[inline]
pub fn cis<R: Real>(phi: R) -> C<R> {
    Complex::new(phi.cos(), phi.sin())
}

/// Validation tolerance scaled to the working precision.
///
/// Equals the requested `f64` tolerance but never tighter than a small
/// multiple of the scalar epsilon, so `f32` runs validate consistently.
#[inline]
pub fn tol<R: Real>(t: f64) -> R {
    let base: R = rl(t);
    let floor = R::epsilon() * rl(256.0);
    base.max(floor)
}

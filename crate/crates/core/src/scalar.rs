//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// On top of `num_traits::Float` this adds the error function, which the
/// Gaussian-kernel tail corrections need and `num-traits` does not provide.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    fn erf(self) -> Self;
    fn erfc(self) -> Self;

    /// Literal conversion; every `f64` constant used in the crate is representable.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("index representable in scalar type")
    }
}

impl Real for f64 {
    #[inline]
    fn erf(self) -> Self {
        libm::erf(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Real for f32 {
    #[inline]
    fn erf(self) -> Self {
        libm::erff(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

/// `sign(y)·|y|^(1/k)`; the caller is responsible for `k` being odd.
#[inline]
pub(crate) fn odd_root<S: Real>(y: S, k: u32) -> S {
    if y == S::zero() {
        return S::zero();
    }
    let mag = y.abs();
    let r = if mag == S::one() {
        S::one()
    } else {
        mag.powf(S::one() / S::from_u32(k).unwrap())
    };
    if y < S::zero() {
        -r
    } else {
        r
    }
}

/// `sign(y)·|y|^e` with the same sign convention as [`odd_root`].
#[inline]
pub(crate) fn signed_pow<S: Real>(y: S, e: S) -> S {
    if y == S::zero() {
        return S::zero();
    }
    let r = y.abs().powf(e);
    if y < S::zero() {
        -r
    } else {
        r
    }
}

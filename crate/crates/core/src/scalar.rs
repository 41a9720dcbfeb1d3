//! Scalar abstraction shared by every numerical module.
//!
//! All Markov-chain code is written against [`Real`], which is implemented for
//! `f32` and `f64`. The linear algebra backend (SVD/QR in the tensor-train
//! engine) needs `faer`'s field traits, the rest of the arithmetic goes through
//! `num_traits::Float`.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + faer::traits::RealField
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from a literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Signed logarithmic representation of a real number, `sign * exp(ln_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue<T> {
    pub ln_abs: T,
    /// -1, 0 or +1.
    pub sign: i8,
}

impl<T: Real> LogValue<T> {
    pub fn from_parts(value: T, ln_scale: T) -> Self {
        if value == T::zero() {
            return Self { ln_abs: T::neg_infinity(), sign: 0 };
        }
        Self {
            ln_abs: value.abs().ln() + ln_scale,
            sign: if value > T::zero() { 1 } else { -1 },
        }
    }

    pub fn log10_abs(&self) -> T {
        self.ln_abs / T::lit(std::f64::consts::LN_10)
    }

    pub fn value(&self) -> T {
        T::lit(self.sign as f64) * self.ln_abs.exp()
    }
}

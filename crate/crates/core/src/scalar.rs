//! Floating-point scalar abstraction: `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the walk and statistics code is generic over.
///
/// Implemented for `f32` and `f64`. Counts and lattice positions stay
/// integral everywhere; only probabilities, normalizers and statistics go
/// through this trait.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Lossless for `f64`, rounded for `f32`.
    fn from_real(x: f64) -> Self;

    /// Step counts and sample sizes as a scalar.
    fn from_count(n: u64) -> Self;

    /// Lattice positions as a scalar.
    fn from_signed(k: i64) -> Self;

    /// Widen to `f64` (lossless for both lanes).
    fn to_real(self) -> f64;

    /// Map 64 random bits to a uniform value in `[0, 1)`.
    ///
    /// Exactly one `u64` is consumed per draw in both lanes, so stream
    /// positions advance identically for `f32` and `f64` simulations.
    fn unit_from_bits(bits: u64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }

    #[inline]
    fn from_count(n: u64) -> Self {
        n as f64
    }

    #[inline]
    fn from_signed(k: i64) -> Self {
        k as f64
    }

    #[inline]
    fn to_real(self) -> f64 {
        self
    }

    #[inline]
    fn unit_from_bits(bits: u64) -> Self {
        // 53 high bits -> [0, 1) on the standard dyadic grid.
        (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl Scalar for f32 {
    #[inline]
    fn from_real(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn from_count(n: u64) -> Self {
        n as f32
    }

    #[inline]
    fn from_signed(k: i64) -> Self {
        k as f32
    }

    #[inline]
    fn to_real(self) -> f64 {
        f64::from(self)
    }

    #[inline]
    fn unit_from_bits(bits: u64) -> Self {
        // 24 high bits -> [0, 1) on the f32 dyadic grid.
        (bits >> 40) as f32 * (1.0 / (1u32 << 24) as f32)
    }
}

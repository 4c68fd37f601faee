//! Floating-point scalar abstraction shared by every model.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, NumCast};

/// A real scalar the models can be instantiated over (`f32` or `f64`).
///
/// Besides arithmetic, a scalar knows its little-endian byte encoding so that
/// model files can be written and read back bit-exactly.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + Send
    + Sync
    + 'static
{
    /// Width of the encoded value in bytes.
    const BYTES: usize;

    fn write_le(self, out: &mut Vec<u8>);

    /// Decodes from exactly `Self::BYTES` bytes.
    fn read_le(bytes: &[u8]) -> Self;

    #[inline]
    fn of(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 is representable in every scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const BYTES: usize = 4;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut buf = [0u8; 4];
        buf.copy_from_slice(&bytes[..4]);
        f32::from_le_bytes(buf)
    }
}

impl Scalar for f64 {
    const BYTES: usize = 8;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut buf = [0u8; 8];
        buf.copy_from_slice(&bytes[..8]);
        f64::from_le_bytes(buf)
    }
}

/// Logistic function evaluated without overflow for large `|x|`.
#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `ln σ(x)`, stable for large positive and negative `x`.
#[inline]
pub fn log_sigmoid<T: Scalar>(x: T) -> T {
    // ln σ(x) = -ln(1 + e^{-x}) = min(x, 0) - ln(1 + e^{-|x|})
    x.min(T::zero()) - (-x.abs()).exp().ln_1p()
}

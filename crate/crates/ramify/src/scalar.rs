//! Real scalar types backing the complex series coefficients.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use twofloat::TwoFloat;

/// Floating point scalar usable as the real part of a series coefficient.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Default + Send + Sync + Debug + Display + 'static
{
    /// Approximate number of significant decimal digits carried.
    const DIGITS: u32;

    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer fits in scalar")
    }

    /// Reciprocal correct to the full carried precision.
    fn inv(self) -> Self {
        self.recip()
    }

    /// Quotient `self / rhs` correct to the full carried precision.
    fn quot(self, rhs: Self) -> Self {
        self / rhs
    }

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_int(num).quot(Self::from_int(den))
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `10^exp` in this scalar type.
    fn pow10(exp: i32) -> Self {
        Self::from_int(10).powi(exp)
    }

    /// Tolerance scaled relative to the carried precision: `10^(slack - DIGITS)`.
    fn tolerance(slack: i32) -> Self {
        Self::pow10(slack - Self::DIGITS as i32)
    }
}

impl Real for f32 {
    const DIGITS: u32 = 6;
}

impl Real for f64 {
    const DIGITS: u32 = 15;
}

impl Real for TwoFloat {
    const DIGITS: u32 = 30;

    // twofloat 0.8 computes the division residual without a fused multiply-add,
    // so its quotients are only double-precision accurate; one Newton step fixes that.
    fn inv(self) -> Self {
        let r = self.recip();
        r + r * (TwoFloat::from(1.0) - self * r)
    }

    // the crate's FromPrimitive::from_f64 goes through an integer conversion
    fn from_f64_lossy(v: f64) -> Self {
        TwoFloat::from(v)
    }

    fn quot(self, rhs: Self) -> Self {
        let r = rhs.inv();
        let q = self * r;
        q + r * (self - rhs * q)
    }
}

/// Complex coefficient type.
pub type C<T> = Complex<T>;

pub fn c_re<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

pub fn c_int<T: Real>(n: i64) -> C<T> {
    c_re(T::from_int(n))
}

pub fn c_ratio<T: Real>(num: i64, den: i64) -> C<T> {
    c_re(T::ratio(num, den))
}

pub fn c_f64<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::from_f64_lossy(re), T::from_f64_lossy(im))
}

/// Complex reciprocal routed through [`Real::inv`].
pub fn c_inv<T: Real>(z: C<T>) -> C<T> {
    let d = (z.re * z.re + z.im * z.im).inv();
    Complex::new(z.re * d, -z.im * d)
}

/// `z / n` for a real divisor, exact where the scalar division is.
pub fn c_div_re<T: Real>(z: C<T>, n: T) -> C<T> {
    Complex::new(z.re.quot(n), z.im.quot(n))
}

pub fn c_div<T: Real>(a: C<T>, b: C<T>) -> C<T> {
    a * c_inv(b)
}

pub fn c_to_f64<T: Real>(z: C<T>) -> Complex<f64> {
    Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy())
}

/// `|z|` without the overflow guard of `hypot`, which double-double lacks a fast path for.
pub fn modulus<T: Real>(z: C<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

pub fn is_finite<T: Real>(z: C<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twofloat_carries_thirty_digits() {
        let third = TwoFloat::ratio(1, 3);
        let back = third * TwoFloat::from_int(3) - TwoFloat::from_int(1);
        assert!(back.abs() < TwoFloat::pow10(-30), "{back:e}");
        // f64 cannot resolve 1 + 1e-20
        let tiny = TwoFloat::pow10(-20);
        assert!((TwoFloat::from_int(1) + tiny) - TwoFloat::from_int(1) > TwoFloat::pow10(-21));
    }

    #[test]
    fn complex_reciprocal_is_precise() {
        let z = c_f64::<TwoFloat>(0.3, -1.7);
        let err = modulus(z * c_inv(z) - c_int(1));
        assert!(err < TwoFloat::pow10(-30), "{err:e}");
        let q = c_div(c_int::<TwoFloat>(1), c_int(7));
        assert!(modulus(q * c_int(7) - c_int(1)) < TwoFloat::pow10(-30));
    }

    #[test]
    fn fractional_f64_survives() {
        assert_eq!(TwoFloat::from_f64_lossy(0.75).to_f64_lossy(), 0.75);
    }

    #[test]
    fn tolerance_tracks_digits() {
        assert_eq!(f64::tolerance(5), 1e-10);
        assert!((TwoFloat::tolerance(10).to_f64_lossy() - 1e-20).abs() < 1e-33);
    }

    #[test]
    fn modulus_of_3_4() {
        assert_eq!(modulus(Complex::new(3.0, 4.0)), 5.0);
    }
}

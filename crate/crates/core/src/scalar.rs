//! Scalar abstraction shared by the exact (rational) and floating-point paths.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// A field element usable as a polynomial / series coefficient.
///
/// Implemented for `f64` and for `BigRational`. Generic code uses
/// [`Scalar::near_zero`] for its zero tests, so the rational path decides
/// exactly while the float path applies the caller's tolerance.
pub trait Scalar:
    Clone + Debug + PartialEq + PartialOrd + Num + Neg<Output = Self> + Send + Sync + 'static
{
    /// True when arithmetic is exact and zero tests ignore tolerances.
    const EXACT: bool;
    fn from_int(k: i64) -> Self;
    /// Nearest representable value; exact for rationals.
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Square root when it exists in the scalar field.
    fn sqrt_opt(&self) -> Option<Self>;
    fn abs_val(&self) -> Self;
    /// `|self| <= tol` for floats, `self == 0` for exact scalars.
    fn near_zero(&self, tol: f64) -> bool;
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn from_int(k: i64) -> Self {
        k as f64
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn sqrt_opt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| self.sqrt())
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn near_zero(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn from_int(k: i64) -> Self {
        BigRational::from_integer(BigInt::from(k))
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(BigRational::zero)
    }
    fn sqrt_opt(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = self.numer().sqrt();
        let d = self.denom().sqrt();
        let r = BigRational::new(n, d);
        (&r * &r == *self).then_some(r)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // numerator/denominator too large for the direct conversion
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn near_zero(&self, _tol: f64) -> bool {
        self.is_zero()
    }
}

/// Exact rational from an `f64` (every finite double is a dyadic rational).
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// Parses `p/q`, an integer, or a decimal literal into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("0{int_part}{frac_part}").parse().ok()?;
    let shift = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(all);
    if shift >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, shift as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-shift) as usize));
    }
    Some(if neg { -r } else { r })
}

pub(crate) fn factorial(n: usize) -> i64 {
    (1..=n as i64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("2/1"), Some(q(2, 1)));
        assert_eq!(parse_rational("-3/6"), Some(q(-1, 2)));
        assert_eq!(parse_rational("0.125"), Some(q(1, 8)));
        assert_eq!(parse_rational("-1.5e2"), Some(q(-150, 1)));
        assert_eq!(parse_rational("7"), Some(q(7, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("."), None);
    }

    #[test]
    fn exact_square_roots() {
        assert_eq!(q(9, 4).sqrt_opt(), Some(q(3, 2)));
        assert_eq!(q(2, 1).sqrt_opt(), None);
        assert_eq!(q(-1, 1).sqrt_opt(), None);
        assert_eq!(4.0f64.sqrt_opt(), Some(2.0));
    }
}

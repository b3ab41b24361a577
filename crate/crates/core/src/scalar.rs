//! Exact scalar abstraction and string codec for rational quantities.
//!
//! Everything in this crate (values, quantities, bids, prices) is computed
//! exactly. The solver branches on equalities — demand exactly filling
//! supply, tied dropout thresholds — which floating point cannot decide
//! reliably, so the scalar bound requires a total order and exact ring
//! arithmetic. Rational types qualify; floats do not implement `Ord` and are
//! excluded structurally.

use std::fmt;
use std::hash::Hash;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, Zero};

/// Exact ordered scalar used throughout the crate.
///
/// Implemented by any exact rational type, e.g. `Ratio<i64>` or
/// `BigRational`. Blanket-implemented; do not implement manually.
pub trait Scalar:
    Num + Signed + Ord + Hash + Clone + fmt::Debug + fmt::Display + FromPrimitive + 'static
{
}

impl<T> Scalar for T where
    T: Num + Signed + Ord + Hash + Clone + fmt::Debug + fmt::Display + FromPrimitive + 'static
{
}

/// Lift an integer literal into a scalar.
pub fn int<R: Scalar>(n: i64) -> R {
    R::from_i64(n).expect("integer representable in scalar type")
}

/// Exact fraction `num/den`.
///
/// Panics if `den == 0`.
pub fn ratio<R: Scalar>(num: i64, den: i64) -> R {
    assert!(den != 0, "zero denominator");
    int::<R>(num) / int::<R>(den)
}

/// Error parsing an exact rational from a string.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseRationalError {
    #[error("empty number")]
    Empty,
    #[error("invalid digit in number {0:?}")]
    InvalidDigit(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Parse an exact rational from `"p/q"`, a decimal literal, or an integer.
///
/// `"7/6"`, `"0.7"`, `"-1.25"`, and `"3"` all convert exactly; no rounding
/// ever happens. This is the number format accepted by instance files.
pub fn parse_rational(s: &str) -> Result<BigRational, ParseRationalError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-BigInt::one(), rest),
        None => (BigInt::one(), s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return Err(ParseRationalError::InvalidDigit(s.to_string()));
    }
    let invalid = || ParseRationalError::InvalidDigit(s.to_string());

    if let Some((num, den)) = body.split_once('/') {
        let num: BigInt = num.parse().map_err(|_| invalid())?;
        let den: BigInt = den.parse().map_err(|_| invalid())?;
        if den.is_zero() {
            return Err(ParseRationalError::ZeroDenominator(s.to_string()));
        }
        return Ok(BigRational::new(sign * num, den));
    }

    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(invalid());
    }
    let digits_ok = |d: &str| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit());
    if !int_part.is_empty() && !digits_ok(int_part) {
        return Err(invalid());
    }
    if !frac_part.is_empty() && !digits_ok(frac_part) {
        return Err(invalid());
    }
    let whole: BigInt = if int_part.is_empty() {
        BigInt::zero()
    } else {
        int_part.parse().map_err(|_| invalid())?
    };
    let mut numer = whole;
    let mut denom = BigInt::one();
    if !frac_part.is_empty() {
        let frac: BigInt = frac_part.parse().map_err(|_| invalid())?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        numer = numer * &scale + frac;
        denom = scale;
    }
    Ok(BigRational::new(sign * numer, denom))
}

/// Render a rational as the exact string accepted back by [`parse_rational`].
///
/// Integers print without a denominator (`"3"`), everything else as `"p/q"`.
pub fn format_rational(r: &BigRational) -> String {
    r.to_string()
}

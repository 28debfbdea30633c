//! Exact rational helpers used throughout the crate.
//!
//! Scores only exist as decimals at the I/O boundary; everything in between
//! is a [`Rational`] over arbitrary-precision integers.

use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn uint(v: u64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// `num / den`; panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn pow10(k: u32) -> BigInt {
    num::pow(BigInt::from(10), k as usize)
}

/// `10^-k` as an exact rational.
pub fn ulp(k: u32) -> Rational {
    Rational::new(BigInt::one(), pow10(k))
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// True when `x` can be written with at most `k` decimal places.
pub fn is_representable(x: &Rational, k: u32) -> bool {
    (x * Rational::from_integer(pow10(k))).is_integer()
}

/// Number of decimal places needed to write `x` exactly, if finite.
pub fn decimal_places(x: &Rational) -> Option<u32> {
    let mut den = x.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0u32, 0u32);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    den.is_one().then_some(twos.max(fives))
}

/// Parses a plain decimal literal (`0.9473`, `1`, `.5`, `-0.25`) exactly.
///
/// Returns the value together with the number of fractional digits written.
pub fn parse_decimal(text: &str) -> Result<(Rational, u32)> {
    let s = text.trim();
    let invalid = || Error::InvalidScore(format!("`{text}` is not a decimal number"));
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (whole, frac) = match body.split_once('.') {
        Some((w, f)) => (w, f),
        None => (body, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return Err(invalid());
    }
    if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(invalid());
    }
    let digits = frac.len() as u32;
    let joined = format!("{whole}{frac}");
    let mut numer: BigInt = if joined.is_empty() {
        BigInt::zero()
    } else {
        joined.parse().map_err(|_| invalid())?
    };
    if negative {
        numer = -numer;
    }
    Ok((Rational::new(numer, pow10(digits)), digits))
}

/// Rounds half away from zero to `k` decimals and prints with exactly `k`
/// fractional digits.
pub fn format_decimal(x: &Rational, k: u32) -> String {
    let scale = Rational::from_integer(pow10(k));
    let scaled = x.abs() * scale;
    let half = ratio(1, 2);
    let units = (scaled + half).floor().to_integer();
    let negative = x.is_negative() && !units.is_zero();
    let digits = units.to_string();
    let body = if k == 0 {
        digits
    } else {
        let k = k as usize;
        let padded = if digits.len() <= k {
            format!("{}{}", "0".repeat(k + 1 - digits.len()), digits)
        } else {
            digits
        };
        let (w, f) = padded.split_at(padded.len() - k);
        format!("{w}.{f}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// Exact `a/b` text form.
pub fn format_exact(x: &Rational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn floor_int(x: &Rational) -> BigInt {
    x.floor().to_integer()
}

pub fn ceil_int(x: &Rational) -> BigInt {
    x.ceil().to_integer()
}

/// Greatest common divisor of two non-negative rationals: the largest `g`
/// with `a/g` and `b/g` both integers.
pub fn rational_gcd(a: &Rational, b: &Rational) -> Rational {
    if a.is_zero() {
        return b.abs();
    }
    if b.is_zero() {
        return a.abs();
    }
    let num = (a.numer() * b.denom()).gcd(&(b.numer() * a.denom()));
    Rational::new(num, a.denom() * b.denom())
}

pub mod serde_rational {
    //! Serializes a rational as its exact `a/b` string.
    use super::{format_exact, Rational};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_exact(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_decimals() {
        assert_eq!(parse_decimal("0.9473").unwrap(), (ratio(9473, 10000), 4));
        assert_eq!(parse_decimal("1").unwrap(), (int(1), 0));
        assert_eq!(parse_decimal(".5").unwrap(), (ratio(1, 2), 1));
        assert_eq!(parse_decimal("0.7760").unwrap().1, 4);
        assert!(parse_decimal("1e-3").is_err());
        assert!(parse_decimal("").is_err());
        assert!(parse_decimal("0.9x").is_err());
    }

    #[test]
    fn formats_with_half_away_rounding() {
        assert_eq!(format_decimal(&ratio(94725, 100000), 4), "0.9473");
        assert_eq!(format_decimal(&ratio(-94725, 100000), 4), "-0.9473");
        assert_eq!(format_decimal(&ratio(1, 3), 6), "0.333333");
        assert_eq!(format_decimal(&int(1), 3), "1.000");
        assert_eq!(format_decimal(&ratio(5, 1000), 4), "0.0050");
    }

    #[test]
    fn decimal_places_of_terminating_fractions() {
        assert_eq!(decimal_places(&ratio(1, 8)), Some(3));
        assert_eq!(decimal_places(&ratio(1, 20000)), Some(5));
        assert_eq!(decimal_places(&ratio(1, 3)), None);
    }

    #[test]
    fn rational_gcd_divides_both() {
        let g = rational_gcd(&ratio(1, 6), &ratio(1, 4));
        assert_eq!(g, ratio(1, 12));
    }
}

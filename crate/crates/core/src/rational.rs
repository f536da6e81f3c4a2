//! Exact arithmetic helpers on top of `BigRational`.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn factorial(n: u32) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * k)
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Rising factorial a(a+1)...(a+k-1); 1 when k = 0.
pub fn rising(a: &Rational, k: u32) -> Rational {
    let mut acc = Rational::one();
    let mut term = a.clone();
    for _ in 0..k {
        acc *= &term;
        term += Rational::one();
    }
    acc
}

/// Falling factorial a(a-1)...(a-k+1); 1 when k = 0.
pub fn falling(a: &Rational, k: u32) -> Rational {
    let mut acc = Rational::one();
    let mut term = a.clone();
    for _ in 0..k {
        acc *= &term;
        term -= Rational::one();
    }
    acc
}

pub fn falling_int(a: i64, k: u32) -> i128 {
    (0..k as i64).fold(1i128, |acc, i| acc * (a - i) as i128)
}

pub fn to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Scale both sides down when numerator or denominator overflow f64.
    let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
    let num = (r.numer().abs() >> shift).to_f64().unwrap_or(f64::INFINITY);
    let den = (r.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
    let v = num / den;
    if r.is_negative() {
        -v
    } else {
        v
    }
}

pub fn from_biguint(v: BigUint) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// `a/b` in lowest terms, or `a` for integers.
pub fn fraction_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde adapter writing a rational as its fraction string.
pub fn serialize_fraction<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fraction_string(r))
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let num: BigInt = a.trim().parse().map_err(|_| bad())?;
        let den: BigInt = b.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::ZeroDenominator(s.to_string()));
        }
        return Ok(Rational::new(num, den));
    }
    if let Ok(v) = s.parse::<BigInt>() {
        return Ok(Rational::from_integer(v));
    }
    // Decimal literal: exact conversion of the written digits.
    let (int_part, frac_part) = s.split_once('.').ok_or_else(bad)?;
    let negative = int_part.starts_with('-');
    let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    let v = Rational::new(num, den);
    Ok(if negative { -v } else { v })
}

pub fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

//! Exact rational scalars and certified root bounds.
//!
//! All scalar values in the library are `BigRational`. Irrational
//! quantities (square roots, p-th roots) never appear as values; they are
//! represented by their exact power (see `spaces::NormValue`) and, when a
//! decimal is needed, bracketed between rational lower/upper bounds.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::str::FromStr;

pub type Rat = BigRational;

use crate::Error;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_i(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// 2^k as a rational, k may be negative.
pub fn pow2(k: i64) -> Rat {
    if k >= 0 {
        Rat::from_integer(BigInt::one() << (k as usize))
    } else {
        Rat::new(BigInt::one(), BigInt::one() << ((-k) as usize))
    }
}

/// r^k for a nonnegative integer exponent.
pub fn pow_u(r: &Rat, k: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..k {
        acc *= r;
    }
    acc
}

/// Parses `p/q` or `p`. Denominator must be positive after normalization.
pub fn parse_rat(s: &str) -> Result<Rat, Error> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n = BigInt::from_str(num).map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    let d = BigInt::from_str(den).map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in `{s}`")));
    }
    Ok(Rat::new(n, d))
}

/// Lossless `p/q` rendering (integers render without the `/1`).
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering with `digits` digits after the point, truncated
/// toward zero.
pub fn decimal_string(r: &Rat, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = (r.numer() * &scale).div_floor(r.denom());
    let neg = scaled.sign() == Sign::Minus;
    let mag = scaled.abs().to_string();
    let mag = if mag.len() <= digits as usize {
        format!("{}{}", "0".repeat(digits as usize + 1 - mag.len()), mag)
    } else {
        mag
    };
    let (int, frac) = mag.split_at(mag.len() - digits as usize);
    format!("{}{}.{}", if neg { "-" } else { "" }, int, frac)
}

fn pow10(digits: u32) -> BigInt {
    BigInt::from(10u32).pow(digits)
}

/// Rational lower bound of `r^(1/k)` accurate to `digits` decimal digits.
/// Requires `r >= 0`.
pub fn nth_root_lower(r: &Rat, k: u32, digits: u32) -> Rat {
    assert!(!r.is_negative(), "root of a negative rational");
    assert!(k >= 1);
    let scale = pow10(digits);
    let scale_k = scale.pow(k);
    // floor((num * scale^k / den)^(1/k)) / scale  <=  r^(1/k)
    let scaled = (r.numer() * scale_k).div_floor(r.denom());
    Rat::new(scaled.nth_root(k), scale)
}

/// Rational upper bound of `r^(1/k)` accurate to `digits` decimal digits.
pub fn nth_root_upper(r: &Rat, k: u32, digits: u32) -> Rat {
    let lower = nth_root_lower(r, k, digits);
    // lower^k <= r < (lower + 2*10^-digits)^k
    let bump = Rat::new(BigInt::from(2), pow10(digits));
    let cand = &lower + &bump;
    debug_assert!(pow_u(&cand, k) >= *r);
    cand
}

pub fn sqrt_lower(r: &Rat, digits: u32) -> Rat {
    nth_root_lower(r, 2, digits)
}

pub fn sqrt_upper(r: &Rat, digits: u32) -> Rat {
    nth_root_upper(r, 2, digits)
}

/// Exact square root when `r` is a perfect square of a rational.
pub fn exact_sqrt(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let sn = r.numer().sqrt();
    let sd = r.denom().sqrt();
    if &(&sn * &sn) == r.numer() && &(&sd * &sd) == r.denom() {
        Some(Rat::new(sn, sd))
    } else {
        None
    }
}

/// True iff `t` is a dyadic rational `(2k-1)/2^n` in lowest terms; returns
/// `(n, k)`. `t` must be in (0,1).
pub fn odd_dyadic(t: &Rat) -> Option<(u32, u64)> {
    if !t.is_positive() || *t >= Rat::one() {
        return None;
    }
    let den = t.denom();
    // denominator must be a power of two
    let bits = den.bits();
    if den != &(BigInt::one() << (bits - 1) as usize) {
        return None;
    }
    let n = (bits - 1) as u32;
    if n == 0 {
        return None; // integer in (0,1): impossible anyway
    }
    // numerator is odd because the fraction is in lowest terms
    let num = t.numer();
    let k = ((num + BigInt::one()) / BigInt::from(2))
        .to_string()
        .parse::<u64>()
        .ok()?;
    Some((n, k))
}

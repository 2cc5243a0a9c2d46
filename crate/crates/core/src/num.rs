//! Exact rational helpers shared by every module.
//!
//! Edge weights, cuts and fairness quotas are `Ratio<i64>`. Weights read from
//! files are decimals (or `p/q` fractions) with small denominators, so sums of
//! a few thousand of them stay far away from `i64` overflow. The LP solver
//! promotes to `BigRational` internally.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// Largest denominator accepted when parsing weights.
pub const MAX_DENOMINATOR: i64 = 1_000_000_000;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(numer, denom)
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(v)
}

pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn to_big(r: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Converts back from the LP's big rationals; fails only if the value does not fit.
pub fn from_big(r: &BigRational) -> Option<Rational> {
    Some(Rational::new(r.numer().to_i64()?, r.denom().to_i64()?))
}

/// Largest multiple of `1/denom` not exceeding `x`.
pub fn floor_to_grid(x: f64, denom: i64) -> Rational {
    Rational::new((x * denom as f64).floor() as i64, denom)
}

/// Parses `0.25`, `1`, `.5` or `3/8`.
pub fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty number".into());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let q: i64 = q.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if q <= 0 || q > MAX_DENOMINATOR {
            return Err(format!("denominator out of range in {s:?}"));
        }
        return Ok(Rational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(format!("no digits in {s:?}"));
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(format!("not a decimal number: {s:?}"));
    }
    if frac.len() > 9 {
        return Err(format!("more than 9 fractional digits in {s:?}"));
    }
    let whole: i64 = if whole.is_empty() {
        0
    } else {
        whole.parse().map_err(|_| format!("number too large: {s:?}"))?
    };
    let denom = 10i64.pow(frac.len() as u32);
    let frac_val: i64 = if frac.is_empty() { 0 } else { frac.parse().unwrap() };
    let numer = whole
        .checked_mul(denom)
        .and_then(|w| w.checked_add(frac_val))
        .ok_or_else(|| format!("number too large: {s:?}"))?;
    Ok(Rational::new(if neg { -numer } else { numer }, denom))
}

/// Finite decimal when the denominator is of the form 2^a 5^b, `p/q` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let mut d = *r.denom();
    let (mut twos, mut fives) = (0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let digits = twos.max(fives);
    let scale = 10i128.pow(digits);
    let scaled = *r.numer() as i128 * scale / *r.denom() as i128;
    let sign = if scaled < 0 { "-" } else { "" };
    let scaled = scaled.abs();
    let whole = scaled / scale;
    let frac = scaled % scale;
    let frac = format!("{:0width$}", frac, width = digits as usize);
    format!("{sign}{whole}.{}", frac.trim_end_matches('0'))
}

/// Common denominator of a set of rationals, used to move hot loops onto `i64`.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> i64 {
    values.into_iter().fold(1i64, |acc, r| acc.lcm(r.denom()))
}

/// Scales `r` by `denom` (which must be a multiple of `r`'s denominator).
pub fn scale(r: &Rational, denom: i64) -> i64 {
    r.numer() * (denom / r.denom())
}

pub(crate) fn check_unit_interval(w: &Rational) -> Result<()> {
    if *w < Rational::zero() || *w > int(1) {
        return Err(Error::domain(format!("weight {w} outside [0, 1]")));
    }
    Ok(())
}

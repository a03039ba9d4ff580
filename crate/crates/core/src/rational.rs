//! Exact rational helpers.
//!
//! Money amounts and thresholds are kept as `Ratio<i128>` so that break-even
//! comparisons never flip under rounding. Inputs usually arrive as decimal
//! strings (tariffs, CSV values) and are parsed without going through `f64`.

use num_rational::Ratio;
use num_traits::{Signed, Zero};

use crate::error::{DispatchError, Result};

pub type Rational = Ratio<i128>;

/// Builds an integer-valued rational.
pub fn int(n: i128) -> Rational {
    Rational::from_integer(n)
}

/// Parses `"17.56"`, `"-0.5"`, `"3"` or `"401/25"` exactly.
pub fn parse_decimal(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || DispatchError::Domain(format!("not a decimal number: {text:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: i128 = n.trim().parse().map_err(|_| bad())?;
        let d: i128 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    if frac.len() > 30 {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let numer: i128 = if digits.is_empty() {
        0
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let denom = 10i128.pow(frac.len() as u32);
    let value = Rational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

/// Converts a float through its shortest decimal representation, so `0.056`
/// becomes exactly `56/1000`.
pub fn from_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(DispatchError::Domain(format!("non-finite value {x}")));
    }
    parse_decimal(&format!("{x}"))
}

pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `max(x, 0)`.
pub fn positive_part(x: Rational) -> Rational {
    if x.is_negative() {
        Rational::zero()
    } else {
        x
    }
}

/// Smallest integer `n` with `n >= x` for nonnegative `x`.
pub fn ceil_to_u64(x: &Rational) -> Result<u64> {
    if x.is_negative() {
        return Err(DispatchError::Domain(format!("negative quantity {x}")));
    }
    let c = x.ceil().to_integer();
    u64::try_from(c).map_err(|_| DispatchError::Capacity(format!("quantity {x} overflows")))
}

//! Exact rational scalars.
//!
//! Every probability, coordinate and construction parameter in this crate is a
//! [`Rat`]: an arbitrary-precision reduced fraction. Nothing on a verdict path
//! ever touches floating point.

use alloc::string::String;
use core::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

/// Arbitrary-precision rational in canonical reduced form.
pub type Rat = BigRational;

/// Builds `num / den`. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Builds an integer rational.
pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn zero() -> Rat {
    Rat::zero()
}

pub fn one() -> Rat {
    Rat::one()
}

/// Parses `"p/q"` or `"p"`. Whitespace around the value is rejected.
pub fn parse_rat(s: &str) -> Result<Rat, Error> {
    let bad = || Error::ParseRational(String::from(s));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    if num.is_empty() || den.is_empty() || den.starts_with(['-', '+']) {
        return Err(bad());
    }
    let num = BigInt::from_str(num).map_err(|_| bad())?;
    let den = BigInt::from_str(den).map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rat::new(num, den))
}

/// True iff the value is strictly positive.
pub fn is_positive(x: &Rat) -> bool {
    x.is_positive()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn parse_and_display_canonical() {
        assert_eq!(parse_rat("2/4").unwrap(), rat(1, 2));
        assert_eq!(parse_rat("3").unwrap(), int(3));
        assert_eq!(parse_rat("-6/4").unwrap(), rat(-3, 2));
        assert_eq!(rat(6, 8).to_string(), "3/4");
        assert_eq!(int(2).to_string(), "2");
    }

    #[test]
    fn parse_rejects_garbage() {
        for s in ["", "/2", "1/", "1/0", "a", "1.5", " 1", "1/-2", "1/2/3"] {
            assert!(parse_rat(s).is_err(), "{s:?} should not parse");
        }
    }
}

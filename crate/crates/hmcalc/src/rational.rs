//! Exact rational scalars and their wire format.
//!
//! All coefficients in the engine are `num_rational::BigRational`, which is
//! always stored reduced with a positive denominator. The wire format used in
//! configs, canonical element text and JSON output is `"p"` or `"p/q"`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::HmError;

pub type Rat = BigRational;

/// Rational from an integer literal.
pub fn rat_int(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

/// Rational p/q; panics on q == 0 (used for constants in code and tests).
pub fn rat(p: i64, q: i64) -> Rat {
    assert!(q != 0, "zero denominator");
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Binomial coefficient C(n, 2) as a rational.
pub fn binom2(n: u32) -> Rat {
    rat_int((n as i64) * (n as i64 - 1) / 2)
}

/// Parse the `"p"` / `"p/q"` wire format.
pub fn parse_rat(s: &str) -> Result<Rat, HmError> {
    let s = s.trim();
    let bad = || HmError::Parse(format!("invalid rational literal {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((p, q)) => (p, Some(q)),
        None => (s, None),
    };
    let p: BigInt = num.trim().parse().map_err(|_| bad())?;
    let q: BigInt = match den {
        Some(q) => q.trim().parse().map_err(|_| bad())?,
        None => BigInt::one(),
    };
    if q.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(p, q))
}

/// Render in the `"p"` / `"p/q"` wire format.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// True when the rational is a (weakly) negative number; used by renderers.
pub fn is_negative(r: &Rat) -> bool {
    r.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["0", "1", "-7", "2/3", "-5/9", "10/4"] {
            let r = parse_rat(s).unwrap();
            let t = format_rat(&r);
            assert_eq!(parse_rat(&t).unwrap(), r);
        }
        // reduction and sign normalization
        assert_eq!(format_rat(&parse_rat("10/4").unwrap()), "5/2");
        assert_eq!(format_rat(&parse_rat("3/-6").unwrap()), "-1/2");
    }

    #[test]
    fn rejects_malformed() {
        for s in ["", "a", "1/0", "1/2/3", "1.5"] {
            assert!(parse_rat(s).is_err(), "accepted {s:?}");
        }
    }

    #[test]
    fn binom2_values() {
        assert_eq!(binom2(0), rat_int(0));
        assert_eq!(binom2(1), rat_int(0));
        assert_eq!(binom2(2), rat_int(1));
        assert_eq!(binom2(5), rat_int(10));
    }
}

//! Exact rational arithmetic helpers.
//!
//! Every feasibility decision in this crate is made on arbitrary-precision
//! rationals; floating point only ever appears in reporting (and in the
//! optional float LP mode). The geometric-grid helpers here compute
//! `ceil`/`floor` of log_{base}(x) by exact integer search on rational
//! powers, never through floating-point logarithms, so boundary cases
//! (x exactly a power of the base) round correctly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

pub type Rat = BigRational;

/// Rational from an integer pair. Panics on zero denominator.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from an integer.
pub fn int(value: i64) -> Rat {
    Rat::from_integer(BigInt::from(value))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {input:?}: {reason}")]
pub struct ParseRatError {
    pub input: String,
    pub reason: String,
}

/// Parses the `"num/den"` wire format (a bare integer is accepted too).
pub fn parse_rat(s: &str) -> Result<Rat, ParseRatError> {
    let err = |reason: &str| ParseRatError {
        input: s.to_string(),
        reason: reason.to_string(),
    };
    let mut parts = s.splitn(2, '/');
    let num = parts.next().ok_or_else(|| err("empty"))?.trim();
    let num = BigInt::from_str(num).map_err(|e| err(&e.to_string()))?;
    let den = match parts.next() {
        Some(d) => BigInt::from_str(d.trim()).map_err(|e| err(&e.to_string()))?,
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(err("zero denominator"));
    }
    Ok(Rat::new(num, den))
}

/// Canonical `"num/den"` rendering (always carries the denominator).
pub fn format_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// base^exp for integer exp (negative exponents give the reciprocal).
pub fn pow_int(base: &Rat, exp: i64) -> Rat {
    debug_assert!(!base.is_zero());
    let mut result = Rat::one();
    let mut b = if exp >= 0 { base.clone() } else { base.recip() };
    let mut e = exp.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            result *= &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    result
}

/// Smallest integer `a` with base^a >= x. Requires base > 1 and x > 0.
pub fn ceil_log(base: &Rat, x: &Rat) -> i64 {
    assert!(*base > Rat::one(), "ceil_log needs base > 1");
    assert!(x.is_positive(), "ceil_log needs x > 0");
    let mut a: i64 = 0;
    let mut v = Rat::one();
    if v >= *x {
        loop {
            let down = &v / base;
            if down >= *x {
                v = down;
                a -= 1;
            } else {
                return a;
            }
        }
    }
    while v < *x {
        v *= base;
        a += 1;
    }
    a
}

/// Largest integer `a` with base^a <= x. Requires base > 1 and x > 0.
pub fn floor_log(base: &Rat, x: &Rat) -> i64 {
    assert!(*base > Rat::one(), "floor_log needs base > 1");
    assert!(x.is_positive(), "floor_log needs x > 0");
    let mut a: i64 = 0;
    let mut v = Rat::one();
    if v <= *x {
        loop {
            let up = &v * base;
            if up <= *x {
                v = up;
                a += 1;
            } else {
                return a;
            }
        }
    }
    while v > *x {
        v /= base;
        a -= 1;
    }
    a
}

/// x^phi for x >= 0.
///
/// Exact when phi is an integer; otherwise evaluated in f64 (relative error
/// well below 1e-12 at the magnitudes this crate produces) and returned as
/// the exact rational value of that f64.
pub fn pow_phi(x: &Rat, phi: &Rat) -> Rat {
    assert!(!x.is_negative(), "pow_phi needs x >= 0");
    if x.is_zero() {
        return Rat::zero();
    }
    if phi.is_integer() {
        let e = phi
            .to_integer()
            .to_i64()
            .expect("integer exponent out of range");
        pow_int(x, e)
    } else {
        let v = to_f64(x).powf(to_f64(phi));
        Rat::from_float(v).expect("non-finite power")
    }
}

/// Best-effort f64 view of a rational (reporting only).
pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of truncated parts for gigantic operands.
        let n = r.numer().to_f64().unwrap_or(f64::MAX);
        let d = r.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

/// Exact rational value of an f64, snapping values within `tol` of an
/// integer onto that integer. Used when adopting float-LP solutions.
pub fn from_f64_snapped(v: f64, tol: f64) -> Rat {
    let nearest = v.round();
    if (v - nearest).abs() <= tol {
        return Rat::from_float(nearest).expect("finite");
    }
    Rat::from_float(v).expect("finite")
}

/// Serde adapter for `Option<Rat>` fields.
pub mod opt_rat_serde {
    use super::{format_rat, parse_rat, Rat};
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&format_rat(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        raw.map(|s| parse_rat(&s).map_err(D::Error::custom)).transpose()
    }
}

/// Serde adapter: rationals as `"num/den"` strings.
pub mod rat_serde {
    use super::{format_rat, parse_rat, Rat};
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let raw = String::deserialize(d)?;
        parse_rat(&raw).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        let r = parse_rat("3/1").unwrap();
        assert_eq!(r, int(3));
        assert_eq!(format_rat(&r), "3/1");
        assert_eq!(parse_rat("7").unwrap(), int(7));
        assert_eq!(parse_rat("-4/6").unwrap(), rat(-2, 3));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn pow_int_handles_negative_exponents() {
        let b = rat(3, 2);
        assert_eq!(pow_int(&b, 0), int(1));
        assert_eq!(pow_int(&b, 3), rat(27, 8));
        assert_eq!(pow_int(&b, -2), rat(4, 9));
    }

    #[test]
    fn logs_round_exactly_at_powers() {
        let b = int(2);
        assert_eq!(ceil_log(&b, &int(8)), 3);
        assert_eq!(ceil_log(&b, &int(9)), 4);
        assert_eq!(ceil_log(&b, &rat(1, 8)), -3);
        assert_eq!(ceil_log(&b, &rat(3, 16)), -2);
        assert_eq!(floor_log(&b, &int(8)), 3);
        assert_eq!(floor_log(&b, &int(7)), 2);
        assert_eq!(floor_log(&b, &rat(1, 8)), -3);
        assert_eq!(floor_log(&b, &rat(3, 16)), -3);
        // Non-integer base.
        let b = rat(3, 2);
        assert_eq!(ceil_log(&b, &int(2)), 2); // 1.5 < 2 <= 2.25
        assert_eq!(floor_log(&b, &int(2)), 1);
    }

    #[test]
    fn pow_phi_exact_for_integer_exponent() {
        assert_eq!(pow_phi(&rat(3, 2), &int(2)), rat(9, 4));
        assert_eq!(pow_phi(&int(0), &rat(5, 2)), int(0));
        let approx = pow_phi(&int(4), &rat(3, 2));
        assert_eq!(approx, int(8)); // 4^1.5 is exactly representable
    }

    #[test]
    fn snapping_recovers_near_integers() {
        assert_eq!(from_f64_snapped(2.9999999996, 1e-6), int(3));
        assert_eq!(from_f64_snapped(0.5, 1e-6), rat(1, 2));
    }
}

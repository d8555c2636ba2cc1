//! Exact rational numbers and their textual forms.
//!
//! Every probability, prediction and metric value in this crate is a
//! [`Rational`]. Floating point appears only in [`to_f64`] and the decimal
//! renderings, which exist for reporting.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision fraction, always in lowest terms with positive denominator.
pub type Rational = BigRational;

/// Significant digits used by every decimal rendering.
pub const RENDER_DIGITS: usize = 30;

/// `num/den` as a rational. Panics if `den == 0`.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Parses `"p/q"`, an integer, or a plain decimal such as `"-0.125"` or `"2.5e-3"`.
/// Decimals are converted exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::ParseRational(s.to_string());
    let t = s.trim();
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = t[i + 1..].parse().map_err(|_| bad())?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, body) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let n: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let scale = exp - frac.len() as i64;
    let mut r = Rational::from_integer(n);
    if scale >= 0 {
        r *= Rational::from_integer(pow10(scale as u32));
    } else {
        r /= Rational::from_integer(pow10((-scale) as u32));
    }
    Ok(if neg { -r } else { r })
}

/// Canonical serialized form: always `"num/den"`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn pow10(e: u32) -> BigInt {
    num_traits::pow(BigInt::from(10u32), e as usize)
}

fn round_half_even(r: &Rational) -> BigInt {
    let floor = r.floor().to_integer();
    let frac = r - Rational::from_integer(floor.clone());
    match frac.cmp(&q(1, 2)) {
        Ordering::Less => floor,
        Ordering::Greater => floor + 1,
        Ordering::Equal => {
            if floor.is_even() {
                floor
            } else {
                floor + 1
            }
        }
    }
}

/// Positional decimal with `digits` significant digits, rounded half-to-even,
/// trailing fractional zeros removed.
pub fn render_decimal_with(r: &Rational, digits: usize) -> String {
    if r.is_zero() {
        return "0".to_string();
    }
    let neg = r.is_negative();
    let x = r.abs();
    let p = digits.max(1) as i64;

    let mut e = x.numer().to_string().len() as i64 - x.denom().to_string().len() as i64;
    let scale = |k: i64| -> Rational {
        if k >= 0 {
            Rational::from_integer(pow10(k as u32))
        } else {
            Rational::new(BigInt::one(), pow10((-k) as u32))
        }
    };
    while scale(e) > x {
        e -= 1;
    }
    while scale(e + 1) <= x {
        e += 1;
    }
    let mut qd = round_half_even(&(&x * scale(p - 1 - e)));
    if qd == pow10(p as u32) {
        qd = pow10((p - 1) as u32);
        e += 1;
    }
    let s = qd.to_string();
    let last_exp = e - (p - 1);
    let mut out = if last_exp >= 0 {
        format!("{s}{}", "0".repeat(last_exp as usize))
    } else {
        let frac_len = (-last_exp) as usize;
        let padded = if s.len() <= frac_len {
            format!("{}{s}", "0".repeat(frac_len - s.len() + 1))
        } else {
            s
        };
        let (w, f) = padded.split_at(padded.len() - frac_len);
        let f = f.trim_end_matches('0');
        if f.is_empty() {
            w.to_string()
        } else {
            format!("{w}.{f}")
        }
    };
    if neg {
        out.insert(0, '-');
    }
    out
}

pub fn render_decimal(r: &Rational) -> String {
    render_decimal_with(r, RENDER_DIGITS)
}

/// Floor of `sqrt(r)` scaled by `10^k`, i.e. `sqrt(r)` truncated to `k` decimals.
pub fn sqrt_floor_scaled(r: &Rational, k: u32) -> BigInt {
    assert!(!r.is_negative(), "square root of a negative rational");
    let scaled = (r * Rational::from_integer(pow10(2 * k))).floor().to_integer();
    let (_, mag) = scaled.into_parts();
    BigInt::from_biguint(Sign::Plus, BigUint::sqrt(&mag))
}

/// An exact value of the form `coef * sqrt(a) + sqrt(b)` with rational `a, b >= 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SqrtSum {
    pub coef: Rational,
    pub a: Rational,
    pub b: Rational,
}

impl SqrtSum {
    const GUARD: u32 = 60;

    /// Rational approximation from below with error under `(coef + 1) * 10^-60`.
    pub fn approx(&self) -> Rational {
        let k = Self::GUARD;
        let sa = Rational::from_integer(sqrt_floor_scaled(&self.a, k));
        let sb = Rational::from_integer(sqrt_floor_scaled(&self.b, k));
        (&self.coef * sa + sb) / Rational::from_integer(pow10(k))
    }

    pub fn render(&self) -> String {
        render_decimal(&self.approx())
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.approx())
    }

    /// Exact test of `x <= self` up to the 10^-60 approximation slack, which
    /// only matters for values closer than that to the boundary.
    pub fn ge_rational(&self, x: &Rational) -> bool {
        if x.is_negative() || x.is_zero() {
            return true;
        }
        if self.b.is_zero() {
            // x <= c*sqrt(a)  <=>  x^2 <= c^2 a
            return x * x <= &self.coef * &self.coef * &self.a;
        }
        let slack = (&self.coef + int(1)) / Rational::from_integer(pow10(Self::GUARD));
        *x <= self.approx() + slack
    }

    pub fn expression(&self) -> String {
        format!(
            "{}*sqrt({}) + sqrt({})",
            format_rational(&self.coef),
            format_rational(&self.a),
            format_rational(&self.b)
        )
    }
}

/// Serde adapters for rationals as `"num/den"` strings (decimals accepted on input).
pub mod serde_str {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        from_value(&v).map_err(de::Error::custom)
    }

    pub(crate) fn from_value(v: &serde_json::Value) -> Result<Rational> {
        match v {
            serde_json::Value::String(s) => parse_rational(s),
            serde_json::Value::Number(n) => parse_rational(&n.to_string()),
            other => Err(Error::ParseRational(other.to_string())),
        }
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(
            v: &[Rational],
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&format_rational(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<Rational>, D::Error> {
            let vals = Vec::<serde_json::Value>::deserialize(d)?;
            vals.iter()
                .map(|v| from_value(v).map_err(de::Error::custom))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_literal_forms() {
        assert_eq!(parse_rational("0.8").unwrap(), q(4, 5));
        assert_eq!(parse_rational("-0.125").unwrap(), q(-1, 8));
        assert_eq!(parse_rational("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert_eq!(parse_rational("2.5e-3").unwrap(), q(1, 400));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn canonical_format_is_lowest_terms() {
        assert_eq!(format_rational(&q(6, -4)), "-3/2");
        assert_eq!(format_rational(&int(0)), "0/1");
    }

    #[test]
    fn decimal_rendering_rounds_half_even() {
        assert_eq!(render_decimal(&q(3, 10)), "0.3");
        assert_eq!(render_decimal(&q(1, 3)), "0.333333333333333333333333333333");
        assert_eq!(render_decimal(&q(2, 3)), "0.666666666666666666666666666667");
        assert_eq!(render_decimal(&int(-12)), "-12");
        assert_eq!(render_decimal_with(&q(25, 10), 1), "2");
        assert_eq!(render_decimal_with(&q(35, 10), 1), "4");
        assert_eq!(render_decimal_with(&q(999, 1000), 2), "1");
        assert_eq!(render_decimal_with(&q(123456, 1), 2), "120000");
        assert_eq!(render_decimal(&q(1, 1000)), "0.001");
    }

    #[test]
    fn sqrt_sum_renders_and_compares() {
        let s = SqrtSum { coef: int(4), a: q(1, 4), b: int(0) };
        assert_eq!(s.render(), "2");
        assert!(s.ge_rational(&int(2)));
        assert!(!s.ge_rational(&q(2001, 1000)));
        let t = SqrtSum { coef: int(1), a: int(2), b: int(0) };
        assert_eq!(t.render(), "1.41421356237309504880168872421");
    }
}

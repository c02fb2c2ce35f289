//! Decimal literals: correctly rounded parsing and shortest round-trip printing.
//!
//! Literals follow `[-]digits[.digits][e[-]digits]`. Parsing computes the
//! literal's exact rational value and converts it with [`to_fp`]. Printing
//! searches digit counts 1..=17 for the first correctly rounded decimal that
//! parses back to the same value.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::format::{fpp, FloatFormat};
use crate::rational::Rational;
use crate::rounding::{to_fp, RangeFault};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecimalError {
    #[error("malformed decimal literal {0:?}")]
    Malformed(String),
    #[error(transparent)]
    Fault(#[from] RangeFault),
}

/// A decimal literal as written, with its exact (unrounded) value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecimalLiteral {
    text: String,
    value: Rational,
}

impl DecimalLiteral {
    pub fn parse(text: &str) -> Result<Self, DecimalError> {
        let value = exact_value(text)?;
        Ok(DecimalLiteral {
            text: text.to_string(),
            value,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// The literal's exact value, before rounding.
    pub fn value(&self) -> &Rational {
        &self.value
    }

    pub fn to_fp(&self) -> Result<Rational, RangeFault> {
        to_fp(&self.value)
    }
}

impl fmt::Display for DecimalLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Decimal exponents beyond these bounds are decided without building the
/// exact value: `10^309` exceeds the largest double and `10^-324` is below
/// half the smallest subnormal.
const MAX_DECIMAL_EXP: i64 = 309;
const MIN_DECIMAL_EXP: i64 = -324;

struct Parts {
    negative: bool,
    digits: BigInt,
    /// Count of significant digits in `digits` (0 when zero).
    ndigits: i64,
    exp10: i64,
}

fn split(text: &str) -> Option<Parts> {
    let malformed_digits = |s: &str| s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit());
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (mantissa, exp) = match body.split_once(['e', 'E']) {
        Some((m, e)) => (m, Some(e)),
        None => (body, None),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (mantissa, None),
    };
    if malformed_digits(int_part) || frac_part.is_some_and(malformed_digits) {
        return None;
    }
    let mut exp10: i64 = match exp {
        None => 0,
        Some(e) => {
            let (neg, digits) = match e.strip_prefix('-') {
                Some(d) => (true, d),
                None => (false, e),
            };
            if malformed_digits(digits) {
                return None;
            }
            // saturate: anything this large is decided by the range checks
            let mag = digits
                .parse::<i64>()
                .unwrap_or(i64::MAX / 4)
                .min(i64::MAX / 4);
            if neg {
                -mag
            } else {
                mag
            }
        }
    };
    let frac = frac_part.unwrap_or("");
    exp10 -= frac.len() as i64;
    let all: String = format!("{int_part}{frac}");
    let trimmed = all.trim_start_matches('0');
    let digits: BigInt = if trimmed.is_empty() {
        BigInt::zero()
    } else {
        trimmed.parse().ok()?
    };
    Some(Parts {
        negative,
        digits,
        ndigits: trimmed.len() as i64,
        exp10,
    })
}

/// Exact values are only built for literals whose magnitude is within
/// `10^±EXACT_EXP_LIMIT`.
const EXACT_EXP_LIMIT: i64 = 10_000;

fn exact_value(text: &str) -> Result<Rational, DecimalError> {
    let p = split(text).ok_or_else(|| DecimalError::Malformed(text.to_string()))?;
    if p.digits.is_zero() {
        return Ok(Rational::zero());
    }
    if (p.exp10 + p.ndigits).abs() > EXACT_EXP_LIMIT {
        return Err(DecimalError::Malformed(format!(
            "{text} (exponent out of range)"
        )));
    }
    let v = Rational::from_integer(p.digits) * pow10(p.exp10);
    Ok(if p.negative { -v } else { v })
}

/// Correctly rounded binary64 value of a decimal literal.
pub fn parse_decimal(text: &str) -> Result<Rational, DecimalError> {
    let p = split(text).ok_or_else(|| DecimalError::Malformed(text.to_string()))?;
    if p.digits.is_zero() {
        return Ok(Rational::zero());
    }
    if p.exp10 + p.ndigits - 1 > MAX_DECIMAL_EXP {
        return Err(RangeFault {
            kind: crate::rounding::FaultKind::Overflow,
            input: text.to_string(),
        }
        .into());
    }
    if p.exp10 + p.ndigits < MIN_DECIMAL_EXP {
        return Ok(Rational::zero());
    }
    let v = Rational::from_integer(p.digits) * pow10(p.exp10);
    Ok(to_fp(&if p.negative { -v } else { v })?)
}

fn pow10(e: i64) -> Rational {
    let p = BigInt::from(10u8).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p).expect("nonzero power of ten")
    }
}

/// `floor(log10 x)` for positive `x`.
fn floor_log10(x: &Rational) -> i64 {
    let e2 = x.floor_log2().expect("positive input");
    // log10(2) ~ 0.30103; the estimate is within one of the answer
    let mut k = ((e2 as f64) * std::f64::consts::LOG10_2).floor() as i64;
    while &pow10(k) > x {
        k -= 1;
    }
    while &pow10(k + 1) <= x {
        k += 1;
    }
    k
}

/// The shortest decimal that parses back to `x`, in positional notation for
/// `10^-3 <= |x| < 10^16` and scientific notation otherwise.
///
/// # Panics
/// If `x` is not a binary64 value.
pub fn shortest_decimal(x: &Rational) -> String {
    let (digits, exp10) = shortest_digits(x);
    render(x, &digits, exp10)
}

/// Significant digits (no trailing zeros) and exponent with
/// `|x| ~ digits * 10^exp10`; `("0", 0)` for zero.
pub fn shortest_digits(x: &Rational) -> (String, i64) {
    assert!(fpp(x, FloatFormat::BINARY64), "{x} is not a binary64 value");
    if x.is_zero() {
        return ("0".to_string(), 0);
    }
    let mag = x.abs();
    let k = floor_log10(&mag);
    for d in 1..=17i64 {
        let scale = d - 1 - k;
        let y = &mag * &pow10(scale);
        let (floor, rem) = y.numer().div_rem(y.denom());
        let ceil = &floor + 1;
        // nearest first; equal distance prefers the even digit
        let twice = (rem << 1u8).cmp(y.denom());
        let ordered = match twice {
            Ordering::Less => [floor, ceil],
            Ordering::Greater => [ceil, floor],
            Ordering::Equal if floor.is_even() => [floor, ceil],
            Ordering::Equal => [ceil, floor],
        };
        for c in ordered {
            if c.is_zero() {
                continue;
            }
            let candidate = Rational::from_integer(c.clone()) * pow10(-scale);
            if to_fp(&candidate).ok().as_ref() == Some(&mag) {
                return strip(c, -scale);
            }
        }
    }
    unreachable!("17 significant digits always round-trip a binary64 value")
}

fn strip(mut c: BigInt, mut exp10: i64) -> (String, i64) {
    let ten = BigInt::from(10u8);
    loop {
        let (q, r) = c.div_rem(&ten);
        if !r.is_zero() {
            break;
        }
        c = q;
        exp10 += 1;
    }
    (c.abs().to_string(), exp10)
}

fn render(x: &Rational, digits: &str, exp10: i64) -> String {
    let sign = if x.is_negative() { "-" } else { "" };
    if x.is_zero() {
        return "0.0".to_string();
    }
    let mag = x.abs();
    let positional = mag >= pow10(-3) && mag < pow10(16);
    let n = digits.len() as i64;
    // exponent of the leading digit
    let lead = exp10 + n - 1;
    if positional {
        let body = if lead < 0 {
            format!("0.{}{}", "0".repeat((-lead - 1) as usize), digits)
        } else if exp10 >= 0 {
            format!("{}{}.0", digits, "0".repeat(exp10 as usize))
        } else {
            let (int, frac) = digits.split_at((lead + 1) as usize);
            format!("{int}.{frac}")
        };
        format!("{sign}{body}")
    } else {
        let (first, rest) = digits.split_at(1);
        let rest = if rest.is_empty() { "0" } else { rest };
        format!("{sign}{first}.{rest}e{lead}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::bits_to_value;
    use crate::ops::fp_add;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn from_f64(x: f64) -> Rational {
        bits_to_value(x.to_bits(), FloatFormat::BINARY64)
            .unwrap()
            .value()
            .unwrap()
            .clone()
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_decimal("0.1").unwrap(), to_fp(&q("1/10")).unwrap());
        assert_eq!(parse_decimal("1.0").unwrap(), Rational::one());
        assert_eq!(parse_decimal("-2.5e-3").unwrap(), from_f64(-2.5e-3));
        assert_eq!(
            parse_decimal("0.6000000000000001").unwrap(),
            from_f64((0.1 + 0.2) + 0.3)
        );
        assert_eq!(parse_decimal("-0.0").unwrap(), Rational::zero());
        assert_eq!(parse_decimal("000").unwrap(), Rational::zero());
        assert_eq!(parse_decimal("1e-400").unwrap(), Rational::zero());
        assert_eq!(parse_decimal("5e-324").unwrap(), Rational::pow2(-1074));
        assert_eq!(
            parse_decimal("2.4703282292062328e-324").unwrap(),
            Rational::pow2(-1074)
        );
        assert_eq!(
            parse_decimal("2.4703282292062327e-324").unwrap(),
            Rational::zero()
        );
        assert_eq!(
            parse_decimal("1.7976931348623157e308").unwrap(),
            from_f64(f64::MAX)
        );
        assert!(matches!(
            parse_decimal("1e309"),
            Err(DecimalError::Fault(_))
        ));
        assert!(matches!(
            parse_decimal("1.8e308"),
            Err(DecimalError::Fault(_))
        ));
        assert!(matches!(
            parse_decimal("1e99999999999999999999"),
            Err(DecimalError::Fault(_))
        ));
        assert_eq!(
            parse_decimal("0.0e99999999999999999999").unwrap(),
            Rational::zero()
        );
    }

    #[test]
    fn malformed() {
        for bad in [
            "", "-", ".5", "5.", "1e", "1e+5", "1.2.3", "0x10", "1/2", "--1", " 1", "1 ", "1,5",
        ] {
            assert!(
                matches!(parse_decimal(bad), Err(DecimalError::Malformed(_))),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn literal_keeps_exact_value() {
        let lit = DecimalLiteral::parse("0.1").unwrap();
        assert_eq!(lit.value(), &q("1/10"));
        assert_eq!(lit.to_string(), "0.1");
        assert_eq!(lit.to_fp().unwrap(), parse_decimal("0.1").unwrap());
        assert!(DecimalLiteral::parse("1e400").unwrap().to_fp().is_err());
        assert!(DecimalLiteral::parse("1e20000").is_err());
    }

    #[test]
    fn transcript_strings() {
        let tenth = |n| to_fp(&Rational::new(n, 10).unwrap()).unwrap();
        let right = fp_add(&tenth(1), &fp_add(&tenth(2), &tenth(3)).unwrap()).unwrap();
        let left = fp_add(&fp_add(&tenth(1), &tenth(2)).unwrap(), &tenth(3)).unwrap();
        assert_eq!(shortest_decimal(&right), "0.6");
        assert_eq!(shortest_decimal(&left), "0.6000000000000001");
    }

    #[test]
    fn rendering() {
        assert_eq!(shortest_decimal(&q("1/4")), "0.25");
        assert_eq!(shortest_decimal(&Rational::zero()), "0.0");
        assert_eq!(shortest_decimal(&q("2")), "2.0");
        assert_eq!(shortest_decimal(&q("-1500")), "-1500.0");
        assert_eq!(shortest_decimal(&from_f64(123.456)), "123.456");
        assert_eq!(shortest_decimal(&from_f64(0.001)), "0.001");
        assert_eq!(shortest_decimal(&from_f64(0.000999)), "9.99e-4");
        assert_eq!(shortest_decimal(&from_f64(1e16)), "1.0e16");
        assert_eq!(
            shortest_decimal(&from_f64(9999999999999998.0)),
            "9999999999999998.0"
        );
        assert_eq!(shortest_decimal(&Rational::pow2(-1074)), "5.0e-324");
        assert_eq!(
            shortest_decimal(&from_f64(f64::MAX)),
            "1.7976931348623157e308"
        );
        assert_eq!(
            shortest_decimal(&from_f64(-f64::MIN_POSITIVE)),
            "-2.2250738585072014e-308"
        );
        assert_eq!(shortest_decimal(&from_f64(0.3)), "0.3");
        assert_eq!(
            shortest_decimal(&from_f64(0.1 + 0.2)),
            "0.30000000000000004"
        );
    }

    #[test]
    fn asymmetric_interval_at_power_of_two() {
        // just above a power of two the interval below is half as wide; the
        // digit search must still find a value that round-trips
        for bits in [
            0x4340_0000_0000_0000u64,
            0x0010_0000_0000_0000,
            0x7FE0_0000_0000_0000,
        ] {
            let x = from_f64(f64::from_bits(bits));
            let s = shortest_decimal(&x);
            assert_eq!(parse_decimal(&s).unwrap(), x, "{s}");
        }
    }

    #[test]
    fn floor_log10_exact() {
        assert_eq!(floor_log10(&q("1")), 0);
        assert_eq!(floor_log10(&q("999/1000")), -1);
        assert_eq!(floor_log10(&q("1000")), 3);
        assert_eq!(floor_log10(&Rational::pow2(-1074)), -324);
        assert_eq!(floor_log10(&from_f64(f64::MAX)), 308);
    }
}

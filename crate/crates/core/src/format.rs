//! Binary floating-point formats and the bit-level model of their values.
//!
//! [`FloatFormat::BINARY64`] is the format everything is ultimately about;
//! smaller instances exist so that tests can enumerate every value of a
//! format and check rounding against a linear scan.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("invalid format: precision {precision}, emin {emin}, emax {emax}")]
    InvalidFormat {
        precision: u32,
        emin: i64,
        emax: i64,
    },
    #[error("{0} is not representable in the format")]
    NotRepresentable(Rational),
    #[error("format has no IEEE bit layout that fits in 64 bits")]
    NoBitLayout,
    #[error("format has {count} finite values, more than the enumeration limit {limit}")]
    TooLarge { count: u128, limit: u128 },
}

/// Precision counts the hidden bit; normal values are `m * 2^(e - precision + 1)`
/// with `2^(precision-1) <= m < 2^precision` and `emin <= e <= emax`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FloatFormat {
    precision: u32,
    emin: i64,
    emax: i64,
}

impl FloatFormat {
    pub const BINARY64: FloatFormat = FloatFormat {
        precision: 53,
        emin: -1022,
        emax: 1023,
    };

    /// Default ceiling for [`enumerate_values`].
    pub const ENUMERATION_LIMIT: u128 = 1 << 20;

    pub fn new(precision: u32, emin: i64, emax: i64) -> Result<Self, FormatError> {
        if !(2..=4096).contains(&precision) || emin >= 0 || emax <= 0 {
            return Err(FormatError::InvalidFormat {
                precision,
                emin,
                emax,
            });
        }
        Ok(FloatFormat {
            precision,
            emin,
            emax,
        })
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn emin(&self) -> i64 {
        self.emin
    }

    pub fn emax(&self) -> i64 {
        self.emax
    }

    /// Exponent of the smallest subnormal, which is also the spacing of the
    /// whole subnormal range.
    pub fn min_quantum_exp(&self) -> i64 {
        self.emin - self.precision as i64 + 1
    }

    pub fn min_subnormal(&self) -> Rational {
        Rational::pow2(self.min_quantum_exp())
    }

    pub fn min_normal(&self) -> Rational {
        Rational::pow2(self.emin)
    }

    /// `(2^p - 1) * 2^(emax - p + 1)`.
    pub fn max_finite(&self) -> Rational {
        let m = (BigInt::one() << self.precision) - 1;
        Rational::from_integer(m).scale_pow2(self.emax - self.precision as i64 + 1)
    }

    /// Smallest magnitude that no longer rounds to a finite value:
    /// `2^(emax+1) - 2^(emax-p)`, the midpoint between the largest finite
    /// value and `2^(emax+1)`.
    pub fn overflow_threshold(&self) -> Rational {
        &Rational::pow2(self.emax + 1) - &Rational::pow2(self.emax - self.precision as i64)
    }

    /// Number of finite values, counting zero once.
    pub fn finite_count(&self) -> u128 {
        let half = 1u128 << (self.precision - 1).min(100);
        let binades = (self.emax - self.emin + 1) as u128;
        2 * (half * binades + half - 1) + 1
    }

    /// Exponent field width for an IEEE-shaped layout, if one exists.
    fn exponent_width(&self) -> Option<u32> {
        let bias = self.emax;
        if self.emin != 1 - bias {
            return None;
        }
        let span = bias as u64 + 1;
        if !span.is_power_of_two() {
            return None;
        }
        let width = span.trailing_zeros() + 1;
        (1 + width + self.precision - 1 <= 64).then_some(width)
    }
}

impl Default for FloatFormat {
    fn default() -> Self {
        Self::BINARY64
    }
}

impl fmt::Display for FloatFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.precision, self.emin, self.emax)
    }
}

/// One decoded datum. Finite values carry their exact rational; the sign of
/// zero survives only as a flag so bit patterns round-trip.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Binary64Value {
    Finite {
        value: Rational,
        negative_zero: bool,
    },
    PosInf,
    NegInf,
    Nan,
}

impl Binary64Value {
    pub fn finite(value: Rational) -> Self {
        Binary64Value::Finite {
            value,
            negative_zero: false,
        }
    }

    pub fn negative_zero() -> Self {
        Binary64Value::Finite {
            value: Rational::zero(),
            negative_zero: true,
        }
    }

    pub fn value(&self) -> Option<&Rational> {
        match self {
            Binary64Value::Finite { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Binary64Value::Finite { .. })
    }

    pub fn class_name(&self) -> &'static str {
        match self {
            Binary64Value::Finite { .. } => "finite",
            Binary64Value::PosInf => "+inf",
            Binary64Value::NegInf => "-inf",
            Binary64Value::Nan => "nan",
        }
    }
}

/// Decodes an IEEE bit pattern of `fmt` (binary64 by default) to its exact value.
pub fn bits_to_value(bits: u64, fmt: FloatFormat) -> Result<Binary64Value, FormatError> {
    let width = fmt.exponent_width().ok_or(FormatError::NoBitLayout)?;
    let frac_bits = fmt.precision - 1;
    let total = 1 + width + frac_bits;
    let bits = if total < 64 {
        bits & ((1u64 << total) - 1)
    } else {
        bits
    };
    let negative = (bits >> (total - 1)) & 1 == 1;
    let exp_field = (bits >> frac_bits) & ((1u64 << width) - 1);
    let frac = bits & ((1u64 << frac_bits) - 1);
    let all_ones = (1u64 << width) - 1;

    if exp_field == all_ones {
        return Ok(match (frac, negative) {
            (0, false) => Binary64Value::PosInf,
            (0, true) => Binary64Value::NegInf,
            _ => Binary64Value::Nan,
        });
    }
    let (significand, exp) = if exp_field == 0 {
        (frac, fmt.min_quantum_exp())
    } else {
        let e = exp_field as i64 - fmt.emax;
        (frac | (1u64 << frac_bits), e - frac_bits as i64)
    };
    if significand == 0 {
        return Ok(Binary64Value::Finite {
            value: Rational::zero(),
            negative_zero: negative,
        });
    }
    let mut value = Rational::from_integer(significand).scale_pow2(exp);
    if negative {
        value = -value;
    }
    Ok(Binary64Value::finite(value))
}

/// Encodes a value of `fmt`. Finite values must be exactly representable.
pub fn value_to_bits(v: &Binary64Value, fmt: FloatFormat) -> Result<u64, FormatError> {
    let width = fmt.exponent_width().ok_or(FormatError::NoBitLayout)?;
    let frac_bits = fmt.precision - 1;
    let sign_bit = 1u64 << (width + frac_bits);
    let exp_ones = ((1u64 << width) - 1) << frac_bits;
    match v {
        Binary64Value::PosInf => Ok(exp_ones),
        Binary64Value::NegInf => Ok(sign_bit | exp_ones),
        Binary64Value::Nan => Ok(exp_ones | (1u64 << (frac_bits - 1))),
        Binary64Value::Finite {
            value,
            negative_zero,
        } => {
            if value.is_zero() {
                return Ok(if *negative_zero { sign_bit } else { 0 });
            }
            let (m, q) = decompose(value, fmt)
                .ok_or_else(|| FormatError::NotRepresentable(value.clone()))?;
            let sign = if value.is_negative() { sign_bit } else { 0 };
            let m = m.to_u64().expect("significand fits the layout");
            // normalize to the top bit position so the exponent field can be read off
            let top = 63 - m.leading_zeros() as i64;
            let e = q + top;
            if e < fmt.emin {
                let shift = q - fmt.min_quantum_exp();
                return Ok(sign | (m << shift));
            }
            let shift = frac_bits as i64 - top;
            let m = m << shift;
            let biased = (e + fmt.emax) as u64;
            Ok(sign | (biased << frac_bits) | (m & ((1u64 << frac_bits) - 1)))
        }
    }
}

/// Writes a nonzero representable `x` as `|x| = m * 2^q` with odd `m`.
/// Returns `None` when `x` is not a finite value of `fmt`.
fn decompose(x: &Rational, fmt: FloatFormat) -> Option<(BigInt, i64)> {
    if x.is_zero() || !x.is_dyadic() {
        return None;
    }
    let (n, d) = x.magnitudes();
    let m = BigInt::from(n.clone());
    let q = -(d.bits() as i64 - 1);
    // canonical form guarantees m is odd unless d == 1
    let tz = m.trailing_zeros().unwrap_or(0) as i64;
    let m = m >> tz as u64;
    let q = q + tz;
    if m.bits() > fmt.precision as u64 || q < fmt.min_quantum_exp() {
        return None;
    }
    let top = q + m.bits() as i64 - 1;
    if top > fmt.emax {
        return None;
    }
    Some((m, q))
}

/// Recognizer for exactly representable finite values of `fmt`.
pub fn fpp(x: &Rational, fmt: FloatFormat) -> bool {
    x.is_zero() || decompose(x, fmt).is_some()
}

/// Every finite value of `fmt` in ascending order, negatives and zero included.
pub fn enumerate_values(fmt: FloatFormat) -> Result<Vec<Rational>, FormatError> {
    enumerate_values_within(fmt, FloatFormat::ENUMERATION_LIMIT)
}

pub fn enumerate_values_within(
    fmt: FloatFormat,
    limit: u128,
) -> Result<Vec<Rational>, FormatError> {
    if fmt.precision > 100 || fmt.emax - fmt.emin > 1 << 16 {
        return Err(FormatError::TooLarge {
            count: u128::MAX,
            limit,
        });
    }
    let count = fmt.finite_count();
    if count > limit {
        return Err(FormatError::TooLarge { count, limit });
    }
    let p = fmt.precision as i64;
    let half = 1u128 << (p - 1);
    let mut positive = Vec::with_capacity(((count - 1) / 2) as usize);
    for m in 1..half {
        positive.push(Rational::from_integer(BigInt::from(m)).scale_pow2(fmt.min_quantum_exp()));
    }
    for e in fmt.emin..=fmt.emax {
        for m in half..2 * half {
            positive.push(Rational::from_integer(BigInt::from(m)).scale_pow2(e - p + 1));
        }
    }
    let mut all: Vec<Rational> = positive.iter().rev().map(|x| -x).collect();
    all.push(Rational::zero());
    all.extend(positive);
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    const B64: FloatFormat = FloatFormat::BINARY64;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn binary64_parameters() {
        assert_eq!((B64.precision(), B64.emin(), B64.emax()), (53, -1022, 1023));
        assert_eq!(B64.min_quantum_exp(), -1074);
        assert_eq!(
            B64.overflow_threshold(),
            &Rational::pow2(1024) - &Rational::pow2(970)
        );
        assert_eq!(
            B64.max_finite(),
            &Rational::pow2(1024) - &Rational::pow2(971)
        );
        assert!(FloatFormat::new(1, -1, 1).is_err());
        assert!(FloatFormat::new(3, 0, 1).is_err());
    }

    #[test]
    fn decode_known_patterns() {
        assert_eq!(
            bits_to_value(0x3FF0_0000_0000_0000, B64).unwrap(),
            Binary64Value::finite(Rational::one())
        );
        // hardware agrees on the smallest subnormal
        assert_eq!(f64::from_bits(1), 2f64.powi(-1074));
        assert_eq!(
            bits_to_value(1, B64).unwrap(),
            Binary64Value::finite(Rational::pow2(-1074))
        );
        assert_eq!(
            bits_to_value(0x8000_0000_0000_0000, B64).unwrap(),
            Binary64Value::negative_zero()
        );
        assert_eq!(
            bits_to_value(0x7FF0_0000_0000_0000, B64).unwrap(),
            Binary64Value::PosInf
        );
        assert_eq!(
            bits_to_value(0xFFF0_0000_0000_0000, B64).unwrap(),
            Binary64Value::NegInf
        );
        assert_eq!(
            bits_to_value(0x7FF8_0000_0000_0000, B64).unwrap(),
            Binary64Value::Nan
        );
        assert_eq!(
            bits_to_value(f64::MAX.to_bits(), B64).unwrap(),
            Binary64Value::finite(B64.max_finite())
        );
    }

    #[test]
    fn encode_known_values() {
        assert_eq!(
            value_to_bits(&Binary64Value::finite(Rational::one()), B64).unwrap(),
            0x3FF0_0000_0000_0000
        );
        let third = Binary64Value::finite(q("6004799503160661/18014398509481984"));
        assert_eq!(
            value_to_bits(&third, B64).unwrap(),
            (1.0f64 / 3.0).to_bits()
        );
        assert_eq!(
            value_to_bits(&Binary64Value::finite(q("1/3")), B64),
            Err(FormatError::NotRepresentable(q("1/3")))
        );
        assert_eq!(
            value_to_bits(&Binary64Value::finite(B64.min_normal()), B64).unwrap(),
            f64::MIN_POSITIVE.to_bits()
        );
    }

    #[test]
    fn recognizer() {
        assert!(fpp(&q("1/4"), B64));
        assert!(!fpp(&q("1/3"), B64));
        assert!(fpp(&q("6004799503160661/18014398509481984"), B64));
        assert!(fpp(&Rational::zero(), B64));
        assert!(fpp(&B64.max_finite(), B64));
        assert!(!fpp(&Rational::pow2(1024), B64));
        assert!(fpp(&Rational::pow2(-1074), B64));
        assert!(!fpp(&Rational::pow2(-1075), B64));
        // 2^53 + 1 needs 54 bits
        assert!(!fpp(&(&Rational::pow2(53) + &Rational::one()), B64));
    }

    #[test]
    fn tiny_format_enumeration() {
        let fmt = FloatFormat::new(3, -1, 1).unwrap();
        let values = enumerate_values(fmt).unwrap();
        // positive: 3 subnormals (k/8), 4 values in each of 3 binades
        assert_eq!(values.len(), 31);
        assert_eq!(values.len() as u128, fmt.finite_count());
        assert!(values.windows(2).all(|w| w[0] < w[1]));
        assert!(values.iter().all(|x| fpp(x, fmt)));
        assert_eq!(values.last().unwrap(), &fmt.max_finite());
        assert_eq!(values[16], q("1/8"));
        assert!(values.contains(&q("7/2")));
        assert!(matches!(
            enumerate_values(B64),
            Err(FormatError::TooLarge { .. })
        ));
    }

    #[test]
    fn tiny_format_bit_layout_covers_every_value() {
        // (3, -2, 3) is IEEE-shaped: 1 sign + 3 exponent + 2 fraction bits
        let fmt = FloatFormat::new(3, -2, 3).unwrap();
        assert!(bits_to_value(0, FloatFormat::new(3, -1, 1).unwrap()).is_err());
        let mut decoded: Vec<Rational> = (0u64..64)
            .filter_map(|b| bits_to_value(b, fmt).unwrap().value().cloned())
            .collect();
        decoded.sort();
        decoded.dedup();
        assert_eq!(decoded, enumerate_values(fmt).unwrap());
        for b in 0u64..64 {
            let v = bits_to_value(b, fmt).unwrap();
            if v.is_finite() {
                assert_eq!(value_to_bits(&v, fmt).unwrap(), b);
            }
        }
    }

    #[test]
    fn round_trip_random_patterns() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 100_000 {
            let bits: u64 = rng.gen();
            let v = bits_to_value(bits, B64).unwrap();
            let Some(x) = v.value() else { continue };
            assert!(fpp(x, B64));
            assert!(fpp(&-x, B64));
            assert_eq!(value_to_bits(&v, B64).unwrap(), bits);
            checked += 1;
        }
    }
}

//! Round-to-nearest-even from arbitrary rationals onto a float format.
//!
//! The only arithmetic is on integers: the input is scaled by a power of two
//! so the target quantum becomes 1, split into quotient and remainder by one
//! integer division, and the remainder is compared against half the divisor.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::format::FloatFormat;
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Exact,
    /// Result is below the input.
    Down,
    /// Result is above the input.
    Up,
    /// Input was a midpoint and the even neighbor was taken.
    TieToEven,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Exact => "EXACT",
            Direction::Down => "DOWN",
            Direction::Up => "UP",
            Direction::TieToEven => "TIE_TO_EVEN",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RoundOutcome {
    pub result: Rational,
    pub direction: Direction,
}

impl RoundOutcome {
    pub fn inexact(&self) -> bool {
        self.direction != Direction::Exact
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultKind {
    Overflow,
    Invalid,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaultKind::Overflow => "OVERFLOW",
            FaultKind::Invalid => "INVALID",
        })
    }
}

/// A result that has no finite rational value in the model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Error)]
#[error("{kind}: {input}")]
pub struct RangeFault {
    pub kind: FaultKind,
    pub input: String,
}

impl RangeFault {
    pub fn overflow(x: &Rational) -> Self {
        RangeFault {
            kind: FaultKind::Overflow,
            input: x.to_string(),
        }
    }

    pub fn invalid(what: impl Into<String>) -> Self {
        RangeFault {
            kind: FaultKind::Invalid,
            input: what.into(),
        }
    }
}

/// How a midpoint is resolved. Only `Even` is IEEE behavior; `Odd` exists so
/// tests can plant a deliberate rounding bug and watch the hardware oracle
/// catch it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TieBreak {
    #[default]
    Even,
    Odd,
}

/// The representable value of `fmt` nearest to `x`, ties to even.
pub fn fp_round(x: &Rational, fmt: FloatFormat) -> Result<RoundOutcome, RangeFault> {
    round_with(x, fmt, TieBreak::Even)
}

/// `fp_round` onto binary64, returning just the value.
pub fn to_fp(x: &Rational) -> Result<Rational, RangeFault> {
    fp_round(x, FloatFormat::BINARY64).map(|o| o.result)
}

pub fn round_with(
    x: &Rational,
    fmt: FloatFormat,
    ties: TieBreak,
) -> Result<RoundOutcome, RangeFault> {
    let Some(top) = x.floor_log2() else {
        return Ok(RoundOutcome {
            result: Rational::zero(),
            direction: Direction::Exact,
        });
    };
    let p = fmt.precision() as i64;
    // exponent of the quantum at the input's binade; subnormals share emin's
    let quantum = top.max(fmt.emin()) - p + 1;
    let (n, d) = x.magnitudes();
    let n = BigInt::from(n.clone());
    let d = BigInt::from(d.clone());

    let (mut m, cmp_half) = if x.is_dyadic() {
        // |x| / 2^quantum = n / 2^(k + quantum) with d = 2^k
        let shift = d.bits() as i64 - 1 + quantum;
        if shift <= 0 {
            (n << (-shift) as u64, None)
        } else {
            let shift = shift as u64;
            let m = &n >> shift;
            let rem = n - (&m << shift);
            let half = BigInt::one() << (shift - 1);
            (m, (!rem.is_zero()).then(|| rem.cmp(&half)))
        }
    } else {
        let (num, den) = if quantum < 0 {
            (n << (-quantum) as u64, d)
        } else {
            (n, d << quantum as u64)
        };
        let (m, rem) = num.div_rem(&den);
        let cmp = (!rem.is_zero()).then(|| (rem << 1u8).cmp(&den));
        (m, cmp)
    };

    use std::cmp::Ordering::*;
    let (away, tie) = match cmp_half {
        None => (false, false),
        Some(Less) => (false, false),
        Some(Greater) => (true, false),
        Some(Equal) => {
            let odd = m.is_odd();
            let away = match ties {
                TieBreak::Even => odd,
                TieBreak::Odd => !odd,
            };
            (away, true)
        }
    };
    if away {
        m += 1;
    }
    let magnitude = Rational::from_integer(m).scale_pow2(quantum);
    if magnitude > fmt.max_finite() {
        return Err(RangeFault::overflow(x));
    }
    let negative = x.is_negative();
    let direction = match (cmp_half, tie) {
        (None, _) => Direction::Exact,
        (_, true) => Direction::TieToEven,
        // moving the magnitude away from zero raises a positive value
        _ if away != negative => Direction::Up,
        _ => Direction::Down,
    };
    let result = if negative { -magnitude } else { magnitude };
    Ok(RoundOutcome { result, direction })
}

/// Spacing of `fmt`'s values in the binade containing `x` (the subnormal
/// quantum below the normal range).
pub fn ulp(x: &Rational, fmt: FloatFormat) -> Rational {
    let top = x.floor_log2().unwrap_or(fmt.emin());
    Rational::pow2(top.max(fmt.emin()) - fmt.precision() as i64 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::fpp;
    use proptest::prelude::*;

    const B64: FloatFormat = FloatFormat::BINARY64;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn one_third() {
        let out = fp_round(&q("1/3"), B64).unwrap();
        assert_eq!(out.result, q("6004799503160661/18014398509481984"));
        assert!(out.inexact());
        assert_eq!(out.direction, Direction::Down);
        assert_eq!(
            to_fp(&q("-1/3")).unwrap(),
            q("-6004799503160661/18014398509481984")
        );
        assert_eq!(fp_round(&q("-1/3"), B64).unwrap().direction, Direction::Up);
    }

    #[test]
    fn exact_inputs() {
        let out = fp_round(&q("1/4"), B64).unwrap();
        assert_eq!(out.result, q("1/4"));
        assert_eq!(out.direction, Direction::Exact);
        assert_eq!(to_fp(&Rational::zero()).unwrap(), Rational::zero());
        assert_eq!(to_fp(&B64.max_finite()).unwrap(), B64.max_finite());
    }

    #[test]
    fn subnormal_midpoints() {
        let out = fp_round(&Rational::pow2(-1075), B64).unwrap();
        assert_eq!(out.result, Rational::zero());
        assert_eq!(out.direction, Direction::TieToEven);
        // 3 * 2^-1075 lies between 1 and 2 quanta; 2 is even
        let out = fp_round(&q("3").scale_pow2(-1075), B64).unwrap();
        assert_eq!(out.result, Rational::pow2(-1073));
        assert_eq!(out.direction, Direction::TieToEven);
        // just above the half-quantum rounds up to the smallest subnormal
        let above = &Rational::pow2(-1075) + &Rational::pow2(-1200);
        assert_eq!(to_fp(&above).unwrap(), Rational::pow2(-1074));
    }

    #[test]
    fn normal_midpoints() {
        let one_plus_half_ulp = &Rational::one() + &Rational::pow2(-53);
        let out = fp_round(&one_plus_half_ulp, B64).unwrap();
        assert_eq!(out.result, Rational::one());
        assert_eq!(out.direction, Direction::TieToEven);
        let odd_mid = &Rational::one() + &q("3").scale_pow2(-53);
        assert_eq!(
            to_fp(&odd_mid).unwrap(),
            &Rational::one() + &Rational::pow2(-51)
        );
        let flipped = round_with(&one_plus_half_ulp, B64, TieBreak::Odd).unwrap();
        assert_eq!(flipped.result, &Rational::one() + &Rational::pow2(-52));
    }

    #[test]
    fn significand_carry_moves_to_next_binade() {
        // 2 - 2^-54 is within a quarter ulp of 2
        let x = &q("2") - &Rational::pow2(-54);
        let out = fp_round(&x, B64).unwrap();
        assert_eq!(out.result, q("2"));
        assert_eq!(out.direction, Direction::Up);
    }

    #[test]
    fn overflow_boundary() {
        let threshold = &Rational::pow2(1024) - &Rational::pow2(970);
        assert_eq!(B64.overflow_threshold(), threshold);
        let fault = fp_round(&threshold, B64).unwrap_err();
        assert_eq!(fault.kind, FaultKind::Overflow);
        assert!(fp_round(&-&threshold, B64).is_err());
        let below = &threshold - &Rational::pow2(960);
        assert_eq!(to_fp(&below).unwrap(), B64.max_finite());
        assert!(to_fp(&Rational::pow2(5000)).is_err());
    }

    #[test]
    fn non_dyadic_path_agrees_with_dyadic() {
        // 3/3 takes the division path, 1 the shift path
        assert_eq!(to_fp(&q("1")).unwrap(), Rational::one());
        assert_eq!(to_fp(&q("10/5")).unwrap(), q("2"));
        assert_eq!(
            to_fp(&q("1/10")).unwrap(),
            q("3602879701896397/36028797018963968")
        );
    }

    #[test]
    fn ulp_values() {
        assert_eq!(ulp(&Rational::one(), B64), Rational::pow2(-52));
        assert_eq!(ulp(&Rational::pow2(-1074), B64), Rational::pow2(-1074));
        assert_eq!(ulp(&Rational::zero(), B64), Rational::pow2(-1074));
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (any::<i64>(), 1u64..=u64::MAX, -1100i64..1000)
            .prop_map(|(n, d, k)| Rational::new(n, d).unwrap().scale_pow2(k))
    }

    proptest! {
        #[test]
        fn rounding_invariants(x in arb_rational()) {
            let Ok(out) = fp_round(&x, B64) else { return Ok(()) };
            prop_assert!(fpp(&out.result, B64));
            prop_assert_eq!(out.direction == Direction::Exact, out.result == x);
            prop_assert_eq!(fpp(&x, B64), out.result == x);
            let again = fp_round(&out.result, B64).unwrap();
            prop_assert_eq!(again.direction, Direction::Exact);
            let neg = fp_round(&-&x, B64).unwrap();
            prop_assert_eq!(neg.result, -&out.result);
            let err = (&out.result - &x).abs();
            let half_ulp = ulp(&out.result, B64).scale_pow2(-1);
            prop_assert!(err <= half_ulp);
            match out.direction {
                Direction::Down => prop_assert!(out.result < x),
                Direction::Up => prop_assert!(out.result > x),
                Direction::TieToEven => prop_assert_eq!(err, half_ulp),
                Direction::Exact => {}
            }
        }

        #[test]
        fn monotone(a in arb_rational(), b in arb_rational()) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            if let (Ok(rl), Ok(rh)) = (to_fp(&lo), to_fp(&hi)) {
                prop_assert!(rl <= rh);
            }
        }

        #[test]
        fn matches_host_conversion_of_small_integer_ratios(n in any::<i32>(), d in 1i32..) {
            // n and d are exact doubles, so IEEE division is the correctly rounded n/d
            let host = n as f64 / d as f64;
            let model = to_fp(&Rational::new(n, d).unwrap()).unwrap();
            let decoded = crate::format::bits_to_value(host.to_bits(), B64).unwrap();
            prop_assert_eq!(decoded.value().unwrap(), &model);
        }
    }
}

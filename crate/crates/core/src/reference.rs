//! Linear-scan rounding over an enumerated tiny format.
//!
//! Shares nothing with [`crate::rounding`] beyond the enumeration of values,
//! so tests use it as an independent oracle. Significand parity is read off
//! the position in the sorted list: neighbors always alternate parity and
//! zero is even.

use crate::format::{enumerate_values, FloatFormat, FormatError};
use crate::rational::Rational;
use crate::rounding::RangeFault;

#[derive(Debug, Clone)]
pub struct ScanRounder {
    fmt: FloatFormat,
    /// `-2^(emax+1)`, every finite value, `+2^(emax+1)`.
    points: Vec<Rational>,
    zero_index: usize,
}

impl ScanRounder {
    pub fn new(fmt: FloatFormat) -> Result<Self, FormatError> {
        let values = enumerate_values(fmt)?;
        let edge = Rational::pow2(fmt.emax() + 1);
        let mut points = Vec::with_capacity(values.len() + 2);
        points.push(-&edge);
        points.extend(values);
        points.push(edge);
        let zero_index = points.len() / 2;
        debug_assert!(points[zero_index].is_zero());
        Ok(ScanRounder {
            fmt,
            points,
            zero_index,
        })
    }

    pub fn format(&self) -> FloatFormat {
        self.fmt
    }

    pub fn round(&self, x: &Rational) -> Result<Rational, RangeFault> {
        let mut best: Option<(usize, Rational)> = None;
        for (i, v) in self.points.iter().enumerate() {
            let dist = (v - x).abs();
            best = match best {
                None => Some((i, dist)),
                Some((j, d)) => {
                    if dist < d || (dist == d && self.is_even(i)) {
                        Some((i, dist))
                    } else {
                        Some((j, d))
                    }
                }
            };
        }
        let (i, _) = best.expect("points are never empty");
        if i == 0 || i == self.points.len() - 1 {
            return Err(RangeFault::overflow(x));
        }
        Ok(self.points[i].clone())
    }

    fn is_even(&self, i: usize) -> bool {
        i.abs_diff(self.zero_index).is_multiple_of(2)
    }
}

/// One-shot form of [`ScanRounder::round`].
pub fn round_generic_bruteforce(
    x: &Rational,
    fmt: FloatFormat,
) -> Result<Result<Rational, RangeFault>, FormatError> {
    Ok(ScanRounder::new(fmt)?.round(x))
}

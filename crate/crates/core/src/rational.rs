//! Exact arbitrary-precision rationals in canonical form.
//!
//! Every constructor and arithmetic operation returns a reduced fraction with
//! a positive denominator, so structural equality is numeric equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("division by zero")]
    DivisionByZero,
    #[error("malformed rational literal {0:?}")]
    Malformed(String),
}

/// A signed fraction `numer / denom` with `denom > 0` and `gcd(|numer|, denom) = 1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rational {
    numer: BigInt,
    denom: BigInt,
}

fn is_power_of_two(n: &BigInt) -> bool {
    n.sign() == Sign::Plus && n.magnitude().count_ones() == 1
}

impl Rational {
    /// `n / d` in canonical form.
    pub fn new(n: impl Into<BigInt>, d: impl Into<BigInt>) -> Result<Self, RationalError> {
        let d = d.into();
        if d.is_zero() {
            return Err(RationalError::ZeroDenominator);
        }
        Ok(Self::normalize(n.into(), d))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational {
            numer: n.into(),
            denom: BigInt::one(),
        }
    }

    pub fn zero() -> Self {
        Self::from_integer(0)
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    /// `2^k` for any signed `k`.
    pub fn pow2(k: i64) -> Self {
        Self::one().scale_pow2(k)
    }

    // Denominator must be nonzero.
    fn normalize(mut n: BigInt, mut d: BigInt) -> Self {
        if d.is_negative() {
            n = -n;
            d = -d;
        }
        if n.is_zero() {
            return Self::zero();
        }
        if is_power_of_two(&d) {
            // gcd with a power of two is decided by trailing zeros alone
            let shift = n
                .trailing_zeros()
                .unwrap_or(0)
                .min(d.trailing_zeros().unwrap_or(0));
            if shift > 0 {
                n >>= shift;
                d >>= shift;
            }
            return Rational { numer: n, denom: d };
        }
        let g = n.gcd(&d);
        if !g.is_one() {
            n /= &g;
            d /= &g;
        }
        Rational { numer: n, denom: d }
    }

    pub fn numer(&self) -> &BigInt {
        &self.numer
    }

    pub fn denom(&self) -> &BigInt {
        &self.denom
    }

    pub fn is_zero(&self) -> bool {
        self.numer.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.numer.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.denom.is_one()
    }

    pub fn abs(&self) -> Self {
        Rational {
            numer: self.numer.abs(),
            denom: self.denom.clone(),
        }
    }

    pub fn signum(&self) -> i32 {
        match self.numer.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    /// True when the denominator is a power of two (every binary float is).
    pub fn is_dyadic(&self) -> bool {
        is_power_of_two(&self.denom)
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Rational, RationalError> {
        if rhs.is_zero() {
            return Err(RationalError::DivisionByZero);
        }
        Ok(Self::normalize(
            &self.numer * &rhs.denom,
            &self.denom * &rhs.numer,
        ))
    }

    /// Exact `self * 2^k`.
    pub fn scale_pow2(&self, k: i64) -> Rational {
        if self.is_zero() || k == 0 {
            return self.clone();
        }
        let shift = k.unsigned_abs();
        if k > 0 {
            Self::normalize(&self.numer << shift, self.denom.clone())
        } else {
            Self::normalize(self.numer.clone(), &self.denom << shift)
        }
    }

    /// `floor(log2 |self|)`. `None` for zero.
    pub fn floor_log2(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        let n = self.numer.magnitude();
        let d = self.denom.magnitude();
        let mut e = n.bits() as i64 - d.bits() as i64;
        // 2^e <= n/d  <=>  n >= d * 2^e
        let below = if e >= 0 {
            n < &(d << e as u64)
        } else {
            &(n << (-e) as u64) < d
        };
        if below {
            e -= 1;
        }
        Some(e)
    }

    /// Magnitude of numerator and denominator.
    pub(crate) fn magnitudes(&self) -> (&BigUint, &BigUint) {
        (self.numer.magnitude(), self.denom.magnitude())
    }

    /// Nearest `f64` only for display and diagnostics; never used on a checked path.
    pub fn approx_f64(&self) -> f64 {
        let n = self.numer.to_f64().unwrap_or(f64::NAN);
        let d = self.denom.to_f64().unwrap_or(f64::NAN);
        n / d
    }
}

impl Default for Rational {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Self::from_integer(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Self::from_integer(n)
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.denom == other.denom {
            return self.numer.cmp(&other.numer);
        }
        (&self.numer * &other.denom).cmp(&(&other.numer * &self.denom))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Rational {
    type Output = Rational;
    fn add(self, rhs: &Rational) -> Rational {
        if self.denom == rhs.denom {
            return Rational::normalize(&self.numer + &rhs.numer, self.denom.clone());
        }
        Rational::normalize(
            &self.numer * &rhs.denom + &rhs.numer * &self.denom,
            &self.denom * &rhs.denom,
        )
    }
}

impl Sub for &Rational {
    type Output = Rational;
    fn sub(self, rhs: &Rational) -> Rational {
        self + &(-rhs)
    }
}

impl Mul for &Rational {
    type Output = Rational;
    fn mul(self, rhs: &Rational) -> Rational {
        Rational::normalize(&self.numer * &rhs.numer, &self.denom * &rhs.denom)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational {
            numer: -&self.numer,
            denom: self.denom.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

/// Canonical text: `n/d`, or just `n` when the denominator is 1.
impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom.is_one() {
            write!(f, "{}", self.numer)
        } else {
            write!(f, "{}/{}", self.numer, self.denom)
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts `n` or `n/d` with an optional leading `-` (or `+`) on `n`; `d` may
/// be any nonzero integer and the result is canonicalized.
impl FromStr for Rational {
    type Err = RationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || RationalError::Malformed(s.to_string());
        let int = |t: &str| -> Result<BigInt, RationalError> {
            let digits = t.strip_prefix(['-', '+']).unwrap_or(t);
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(malformed());
            }
            t.parse::<BigInt>().map_err(|_| malformed())
        };
        match s.split_once('/') {
            None => Ok(Rational::from_integer(int(s)?)),
            Some((n, d)) => Rational::new(int(n)?, int(d)?),
        }
    }
}

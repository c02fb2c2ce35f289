//! Floating-point operations defined as the rounding of their exact result.
//!
//! Each operation implements [`FpOperation`] and is registered by its surface
//! name (`fp+`, `fp-`, `fp*`, `fp/`, `fp-sqrt`). The evaluator, the hardware
//! oracle and the fuzzer all look operations up through [`OpRegistry`].

use std::sync::OnceLock;

use num_bigint::BigUint;
use thiserror::Error;

use crate::format::{fpp, FloatFormat};
use crate::isqrt::isqrt;
use crate::rational::Rational;
use crate::registry::{Named, Registry};
use crate::rounding::{round_with, Direction, RangeFault, RoundOutcome, TieBreak};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpError {
    #[error("guard violation: {op} requires a representable operand, got {operand}")]
    Guard { op: &'static str, operand: Rational },
    #[error(transparent)]
    Fault(#[from] RangeFault),
}

/// One operation of the model, paired with its native binary64 counterpart.
/// [`Named::name`] is the surface name as written in expressions; aliases
/// are the short command-line names (`add`, `sqrt`, ...).
pub trait FpOperation: Named + Send + Sync {
    fn arity(&self) -> usize;

    /// Ledger symbol for operations whose executable version is an opaque
    /// kernel rather than an explicit equation.
    fn kernel(&self) -> Option<&'static str> {
        None
    }

    /// Rounds the exact result. Operands are guard-checked here.
    fn model(&self, args: &[Rational], ties: TieBreak) -> Result<RoundOutcome, OpError>;

    /// The same operation on the host FPU.
    fn hardware(&self, args: &[f64]) -> f64;
}

fn guard(op: &'static str, args: &[Rational]) -> Result<(), OpError> {
    match args.iter().find(|a| !fpp(a, FloatFormat::BINARY64)) {
        Some(bad) => Err(OpError::Guard {
            op,
            operand: bad.clone(),
        }),
        None => Ok(()),
    }
}

fn round(x: &Rational, ties: TieBreak) -> Result<RoundOutcome, OpError> {
    Ok(round_with(x, FloatFormat::BINARY64, ties)?)
}

macro_rules! binary_op {
    ($ty:ident, $name:literal, $aliases:expr, |$a:ident, $b:ident| $exact:expr, |$x:ident, $y:ident| $hw:expr) => {
        pub struct $ty;

        impl Named for $ty {
            fn name(&self) -> &str {
                $name
            }
            fn aliases(&self) -> &[&str] {
                $aliases
            }
        }

        impl FpOperation for $ty {
            fn arity(&self) -> usize {
                2
            }
            fn model(&self, args: &[Rational], ties: TieBreak) -> Result<RoundOutcome, OpError> {
                guard($name, args)?;
                let ($a, $b) = (&args[0], &args[1]);
                let exact: Result<Rational, OpError> = $exact;
                round(&exact?, ties)
            }
            fn hardware(&self, args: &[f64]) -> f64 {
                let ($x, $y) = (args[0], args[1]);
                $hw
            }
        }
    };
}

binary_op!(Add, "fp+", &["add", "+"], |a, b| Ok(a + b), |x, y| x + y);
binary_op!(Sub, "fp-", &["sub", "-"], |a, b| Ok(a - b), |x, y| x - y);
binary_op!(Mul, "fp*", &["mul", "*"], |a, b| Ok(a * b), |x, y| x * y);
binary_op!(
    Div,
    "fp/",
    &["div", "/"],
    |a, b| a
        .checked_div(b)
        .map_err(|_| RangeFault::invalid(format!("{a} / 0")).into()),
    |x, y| x / y
);

pub struct Sqrt;

impl Named for Sqrt {
    fn name(&self) -> &str {
        "fp-sqrt"
    }
    fn aliases(&self) -> &[&str] {
        &["sqrt"]
    }
}

impl FpOperation for Sqrt {
    fn arity(&self) -> usize {
        1
    }
    fn kernel(&self) -> Option<&'static str> {
        Some(SQRT_KERNEL)
    }
    fn model(&self, args: &[Rational], _ties: TieBreak) -> Result<RoundOutcome, OpError> {
        guard("fp-sqrt", args)?;
        Ok(sqrt_rne(&args[0], FloatFormat::BINARY64)?)
    }
    fn hardware(&self, args: &[f64]) -> f64 {
        args[0].sqrt()
    }
}

pub const SQRT_KERNEL: &str = "fp-sqrt-kernel";

/// Correctly rounded square root of a representable `x >= 0`.
///
/// `x` is scaled to an integer `N = x * 4^s` large enough that `isqrt(N)`
/// carries at least `precision + 2` bits. Truncating that root to the target
/// quantum gives the lower candidate; squaring the midpoint above it decides
/// the direction exactly. A midpoint can never equal `sqrt(x)` because its
/// square needs more than `precision` significant bits.
pub fn sqrt_rne(x: &Rational, fmt: FloatFormat) -> Result<RoundOutcome, RangeFault> {
    if x.is_negative() {
        return Err(RangeFault::invalid(format!("sqrt of {x}")));
    }
    if x.is_zero() {
        return Ok(RoundOutcome {
            result: Rational::zero(),
            direction: Direction::Exact,
        });
    }
    assert!(x.is_dyadic(), "sqrt_rne expects a dyadic rational");
    let p = fmt.precision() as i64;
    let (n, d) = x.magnitudes();
    let k = d.bits() as i64 - 1;
    let nbits = n.bits() as i64;
    let s = (k + 1)
        .div_euclid(2)
        .max((2 * p + 4 + k - nbits + 1).div_euclid(2))
        .max(0);
    let big_n: BigUint = n << (2 * s - k) as u64;
    let root = isqrt(&big_n);
    if &root * &root == big_n {
        let exact = Rational::from_integer(num_bigint::BigInt::from(root)).scale_pow2(-s);
        let out = round_with(&exact, fmt, TieBreak::Even)?;
        debug_assert_eq!(out.direction, Direction::Exact);
        return Ok(out);
    }
    let top = root.bits() as i64 - 1 - s;
    let quantum = top.max(fmt.emin()) - p + 1;
    let shift = s + quantum;
    debug_assert!(shift >= 2);
    let lo_int: BigUint = &root >> shift as u64;
    let mid = Rational::from_integer(num_bigint::BigInt::from((&lo_int << 1u8) + 1u8))
        .scale_pow2(quantum - 1);
    let mid_sq = &mid * &mid;
    let (m, direction) = match x.cmp(&mid_sq) {
        std::cmp::Ordering::Less => (lo_int, Direction::Down),
        std::cmp::Ordering::Greater => (lo_int + 1u8, Direction::Up),
        std::cmp::Ordering::Equal => unreachable!("square of a midpoint is never representable"),
    };
    let result = Rational::from_integer(num_bigint::BigInt::from(m)).scale_pow2(quantum);
    Ok(RoundOutcome { result, direction })
}

pub type OpRegistry = Registry<dyn FpOperation>;

/// The five built-in operations, in `+ - * / sqrt` order.
pub fn builtin_ops() -> &'static OpRegistry {
    static OPS: OnceLock<OpRegistry> = OnceLock::new();
    OPS.get_or_init(|| {
        let mut reg: OpRegistry = Registry::new();
        reg.register(Box::new(Add));
        reg.register(Box::new(Sub));
        reg.register(Box::new(Mul));
        reg.register(Box::new(Div));
        reg.register(Box::new(Sqrt));
        reg
    })
}

fn apply(name: &str, args: &[&Rational]) -> Result<Rational, OpError> {
    let op = builtin_ops().get(name).expect("builtin op");
    let args: Vec<Rational> = args.iter().map(|a| (*a).clone()).collect();
    op.model(&args, TieBreak::Even).map(|o| o.result)
}

pub fn fp_add(x: &Rational, y: &Rational) -> Result<Rational, OpError> {
    apply("fp+", &[x, y])
}

pub fn fp_sub(x: &Rational, y: &Rational) -> Result<Rational, OpError> {
    apply("fp-", &[x, y])
}

pub fn fp_mul(x: &Rational, y: &Rational) -> Result<Rational, OpError> {
    apply("fp*", &[x, y])
}

pub fn fp_div(x: &Rational, y: &Rational) -> Result<Rational, OpError> {
    apply("fp/", &[x, y])
}

/// Pure square root; does not touch any ledger. See [`crate::model::Model`]
/// for the recording version.
pub fn fp_sqrt(x: &Rational) -> Result<Rational, OpError> {
    apply("fp-sqrt", &[x])
}

//! Binary64 floating-point values modeled as exact representable rationals.
//!
//! Every logical value is a [`Rational`]. Conversion onto the binary64 grid
//! ([`to_fp`]) and each arithmetic operation ([`ops`]) round an exact rational
//! result to nearest, ties to even. Executed kernel calls leave [`Fact`]s in
//! a [`Ledger`], and the [`oracle`] module replays expressions on the host FPU
//! to confirm that the model and the hardware agree bit for bit.

// Conflict errors carry both results for the report; they are rare.
#![allow(clippy::result_large_err)]

pub mod cli;
pub mod decimal;
pub mod expr;
pub mod format;
pub mod isqrt;
pub mod laws;
pub mod ledger;
pub mod model;
pub mod ops;
pub mod oracle;
pub mod rational;
pub mod reference;
pub mod registry;
pub mod rounding;

pub use decimal::{parse_decimal, shortest_decimal};
pub use expr::{parse_expr, Expr};
pub use format::{bits_to_value, fpp, value_to_bits, Binary64Value, FloatFormat};
pub use ledger::{Fact, Ledger};
pub use model::{model_eval, Value};
pub use oracle::{diff_check, raw_eval};
pub use rational::{Rational, RationalError};
pub use rounding::{fp_round, to_fp, Direction, FaultKind, RangeFault, RoundOutcome};

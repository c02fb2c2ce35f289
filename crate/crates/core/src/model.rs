//! Evaluation of expressions under the rational model.
//!
//! Kernel calls (conversion and square root) are recorded in the attached
//! [`Ledger`]; a conflicting record aborts evaluation.

use std::fmt;

use thiserror::Error;

use crate::expr::{Expr, Literal, Operator};
use crate::format::{fpp, FloatFormat};
use crate::ledger::{Ledger, LedgerError, CONSTRAINED_TO_FP};
use crate::ops::{builtin_ops, OpError, OpRegistry};
use crate::rational::Rational;
use crate::rounding::{round_with, RangeFault, TieBreak};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Num(Rational),
    Bool(bool),
}

impl Value {
    pub fn as_num(&self) -> Option<&Rational> {
        match self {
            Value::Num(r) => Some(r),
            Value::Bool(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(r) => write!(f, "{r}"),
            Value::Bool(true) => f.write_str("T"),
            Value::Bool(false) => f.write_str("NIL"),
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalErrorKind {
    #[error("guard violation: {op} requires a representable operand, got {operand}")]
    Guard { op: &'static str, operand: Rational },
    #[error("{0}")]
    Fault(RangeFault),
    #[error("{op} expects a number")]
    Type { op: &'static str },
    #[error(transparent)]
    Ledger(LedgerError),
}

/// An evaluation failure and the subexpression that raised it.
#[derive(Debug, Error)]
#[error("{kind} in {subexpr}")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub subexpr: String,
}

impl EvalError {
    fn at(kind: EvalErrorKind, expr: &Expr) -> Self {
        EvalError {
            kind,
            subexpr: expr.to_string(),
        }
    }

    pub fn fault(&self) -> Option<&RangeFault> {
        match &self.kind {
            EvalErrorKind::Fault(f) => Some(f),
            _ => None,
        }
    }
}

/// Model-side evaluator bound to a ledger.
pub struct Model<'a> {
    ledger: &'a Ledger,
    ops: &'static OpRegistry,
    ties: TieBreak,
}

impl<'a> Model<'a> {
    pub fn new(ledger: &'a Ledger) -> Self {
        Model {
            ledger,
            ops: builtin_ops(),
            ties: TieBreak::Even,
        }
    }

    /// Replaces round-half-even with a different tie rule. Only useful for
    /// planting a known bug.
    pub fn with_ties(mut self, ties: TieBreak) -> Self {
        self.ties = ties;
        self
    }

    pub fn ledger(&self) -> &Ledger {
        self.ledger
    }

    /// Executable conversion; records `(constrained-to-fp x) = result`.
    pub fn to_fp(&self, x: &Rational) -> Result<Rational, EvalErrorKind> {
        let out = round_with(x, FloatFormat::BINARY64, self.ties).map_err(EvalErrorKind::Fault)?;
        self.ledger
            .record_fact(CONSTRAINED_TO_FP, std::slice::from_ref(x), &out.result)
            .map_err(EvalErrorKind::Ledger)?;
        Ok(out.result)
    }

    pub fn eval(&self, expr: &Expr) -> Result<Value, EvalError> {
        match expr {
            Expr::Lit(Literal::Rational(r)) => Ok(Value::Num(r.clone())),
            Expr::Lit(Literal::Decimal(d)) => self
                .to_fp(d.value())
                .map(Value::Num)
                .map_err(|k| EvalError::at(k, expr)),
            Expr::Call(op, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.eval(a))
                    .collect::<Result<Vec<_>, _>>()?;
                self.apply(*op, &vals).map_err(|k| EvalError::at(k, expr))
            }
        }
    }

    fn apply(&self, op: Operator, vals: &[Value]) -> Result<Value, EvalErrorKind> {
        let sym = op.symbol();
        let nums = || -> Result<Vec<Rational>, EvalErrorKind> {
            vals.iter()
                .map(|v| v.as_num().cloned().ok_or(EvalErrorKind::Type { op: sym }))
                .collect()
        };
        match op {
            Operator::ToFp => Ok(Value::Num(self.to_fp(&nums()?[0])?)),
            Operator::Fpp => Ok(Value::Bool(
                vals[0]
                    .as_num()
                    .is_some_and(|x| fpp(x, FloatFormat::BINARY64)),
            )),
            Operator::Equal => {
                let n = nums()?;
                Ok(Value::Bool(n[0] == n[1]))
            }
            Operator::Arith(name) => {
                let fop = self.ops.get(name).expect("operator resolved at parse time");
                let args = nums()?;
                let out = fop.model(&args, self.ties).map_err(|e| match e {
                    OpError::Guard { op, operand } => EvalErrorKind::Guard { op, operand },
                    OpError::Fault(f) => EvalErrorKind::Fault(f),
                })?;
                if let Some(kernel) = fop.kernel() {
                    self.ledger
                        .record_fact(kernel, &args, &out.result)
                        .map_err(EvalErrorKind::Ledger)?;
                }
                Ok(Value::Num(out.result))
            }
        }
    }
}

/// One-shot evaluation against `ledger`.
pub fn model_eval(expr: &Expr, ledger: &Ledger) -> Result<Value, EvalError> {
    Model::new(ledger).eval(expr)
}

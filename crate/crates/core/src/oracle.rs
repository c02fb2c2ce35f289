//! Native binary64 evaluation and bit-exact comparison with the model.
//!
//! Raw evaluation runs every operation on the host FPU. Decimal leaves are
//! parsed by the host; rational leaves are converted by the model and
//! bit-encoded, since the host has no rational-to-double conversion. The
//! oracle is only meaningful on an IEEE 754 host that evaluates `f64`
//! arithmetic at binary64 width with round-to-nearest-even, which
//! [`platform_self_check`] verifies.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::expr::{Expr, Literal, Operator};
use crate::format::{bits_to_value, value_to_bits, Binary64Value, FloatFormat};
use crate::ledger::Ledger;
use crate::model::{EvalError, EvalErrorKind, Model, Value};
use crate::ops::{builtin_ops, FpOperation};
use crate::rational::Rational;
use crate::registry::{Named, Registry};
use crate::rounding::{to_fp, ulp, FaultKind, TieBreak};

const B64: FloatFormat = FloatFormat::BINARY64;

/// Result of raw evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawValue {
    Float(f64),
    Bool(bool),
}

impl RawValue {
    pub fn decoded(&self) -> Option<Binary64Value> {
        match self {
            RawValue::Float(x) => Some(bits_to_value(x.to_bits(), B64).expect("binary64 layout")),
            RawValue::Bool(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{op} expects a number in {subexpr}")]
pub struct RawTypeError {
    pub op: &'static str,
    pub subexpr: String,
}

// Exact rationals stay exact until an operation needs a double, the way
// Lisp keeps a rational literal rational until float contagion.
#[derive(Debug, Clone)]
enum Term {
    Exact(Rational),
    Float(f64),
    Bool(bool),
}

/// Bit pattern of the double nearest `x`, via the model (the host has no
/// rational conversion). Overflow becomes a signed infinity.
fn convert_exact(x: &Rational) -> f64 {
    match to_fp(x) {
        Ok(r) => f64::from_bits(
            value_to_bits(&Binary64Value::finite(r), B64).expect("rounded value encodes"),
        ),
        Err(_) if x.is_negative() => f64::NEG_INFINITY,
        Err(_) => f64::INFINITY,
    }
}

fn decode_finite(x: f64) -> Option<Rational> {
    bits_to_value(x.to_bits(), B64).ok()?.value().cloned()
}

fn raw_term(expr: &Expr) -> Result<Term, RawTypeError> {
    match expr {
        Expr::Lit(Literal::Rational(r)) => Ok(Term::Exact(r.clone())),
        Expr::Lit(Literal::Decimal(d)) => Ok(Term::Float(
            d.text()
                .parse::<f64>()
                .expect("decimal grammar is a subset of the host grammar"),
        )),
        Expr::Call(op, args) => {
            let vals = args.iter().map(raw_term).collect::<Result<Vec<_>, _>>()?;
            let type_err = || RawTypeError {
                op: op.symbol(),
                subexpr: expr.to_string(),
            };
            let as_float = |t: &Term| match t {
                Term::Exact(r) => Ok(convert_exact(r)),
                Term::Float(x) => Ok(*x),
                Term::Bool(_) => Err(type_err()),
            };
            match op {
                Operator::ToFp => as_float(&vals[0]).map(Term::Float),
                // (= (to-fp x) x), with = comparing exactly
                Operator::Fpp => Ok(Term::Bool(match &vals[0] {
                    Term::Exact(r) => decode_finite(convert_exact(r)).as_ref() == Some(r),
                    Term::Float(x) => x.is_finite(),
                    Term::Bool(_) => false,
                })),
                Operator::Equal => {
                    let exact = |t: &Term| -> Result<Option<Rational>, RawTypeError> {
                        match t {
                            Term::Exact(r) => Ok(Some(r.clone())),
                            Term::Float(x) => Ok(decode_finite(*x)),
                            Term::Bool(_) => Err(type_err()),
                        }
                    };
                    let eq = match (&vals[0], &vals[1]) {
                        (Term::Float(a), Term::Float(b)) => a == b,
                        (a, b) => match (exact(a)?, exact(b)?) {
                            (Some(x), Some(y)) => x == y,
                            _ => false,
                        },
                    };
                    Ok(Term::Bool(eq))
                }
                Operator::Arith(name) => {
                    let fop = builtin_ops()
                        .get(name)
                        .expect("operator resolved at parse time");
                    let args = vals.iter().map(as_float).collect::<Result<Vec<_>, _>>()?;
                    Ok(Term::Float(fop.hardware(&args)))
                }
            }
        }
    }
}

/// Evaluates bottom-up on the host FPU.
pub fn raw_eval(expr: &Expr) -> Result<RawValue, RawTypeError> {
    Ok(match raw_term(expr)? {
        Term::Exact(r) => RawValue::Float(convert_exact(&r)),
        Term::Float(x) => RawValue::Float(x),
        Term::Bool(b) => RawValue::Bool(b),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSide {
    Bits(u64),
    Bool(bool),
    /// Fault tag: `OVERFLOW`, `INVALID`, `GUARD`, `TYPE` or `LEDGER`.
    Fault(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawSide {
    Bits(u64),
    Bool(bool),
    TypeError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Match,
    Mismatch,
    /// The model faulted (overflow or invalid) and the host produced an
    /// infinity or NaN.
    ModelFaultRawSpecial,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Match => "MATCH",
            Verdict::Mismatch => "MISMATCH",
            Verdict::ModelFaultRawSpecial => "MODEL_FAULT_RAW_SPECIAL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffReport {
    pub expression: Expr,
    pub model: ModelSide,
    pub raw: RawSide,
    pub verdict: Verdict,
}

impl DiffReport {
    pub fn agrees(&self) -> bool {
        self.verdict != Verdict::Mismatch
    }
}

impl fmt::Display for ModelSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSide::Bits(b) => write!(f, "{b:#018x}"),
            ModelSide::Bool(b) => write!(f, "{b}"),
            ModelSide::Fault(tag) => f.write_str(tag),
        }
    }
}

impl fmt::Display for RawSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawSide::Bits(b) => write!(f, "{b:#018x}"),
            RawSide::Bool(b) => write!(f, "{b}"),
            RawSide::TypeError => f.write_str("TYPE"),
        }
    }
}

/// One line: `VERDICT<TAB>expr<TAB>model=...<TAB>raw=...`.
impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\tmodel={}\traw={}",
            self.verdict, self.expression, self.model, self.raw
        )
    }
}

fn model_side(result: &Result<Value, EvalError>) -> ModelSide {
    match result {
        Ok(Value::Num(r)) => ModelSide::Bits(
            value_to_bits(&Binary64Value::finite(r.clone()), B64)
                // an exact rational leaf evaluated on its own need not be representable
                .unwrap_or_else(|_| convert_exact(r).to_bits()),
        ),
        Ok(Value::Bool(b)) => ModelSide::Bool(*b),
        Err(e) => ModelSide::Fault(match &e.kind {
            EvalErrorKind::Fault(f) if f.kind == FaultKind::Overflow => "OVERFLOW",
            EvalErrorKind::Fault(_) => "INVALID",
            EvalErrorKind::Guard { .. } => "GUARD",
            EvalErrorKind::Type { .. } => "TYPE",
            EvalErrorKind::Ledger(_) => "LEDGER",
        }),
    }
}

fn verdict(model: &ModelSide, raw: &RawSide) -> Verdict {
    match (model, raw) {
        (ModelSide::Bits(m), RawSide::Bits(r)) => {
            // -0.0 compares as +0.0
            let r = if *r == 0x8000_0000_0000_0000 { 0 } else { *r };
            if *m == r {
                Verdict::Match
            } else {
                Verdict::Mismatch
            }
        }
        (ModelSide::Bool(a), RawSide::Bool(b)) if a == b => Verdict::Match,
        (ModelSide::Fault("OVERFLOW" | "INVALID"), RawSide::Bits(r))
            if !f64::from_bits(*r).is_finite() =>
        {
            Verdict::ModelFaultRawSpecial
        }
        (ModelSide::Fault("TYPE"), RawSide::TypeError) => Verdict::Match,
        _ => Verdict::Mismatch,
    }
}

/// Evaluates `expr` under the model (recording into the model's ledger) and
/// on the host, and compares bit patterns.
pub fn diff_with(model: &Model<'_>, expr: &Expr) -> DiffReport {
    let m = model_side(&model.eval(expr));
    let r = match raw_eval(expr) {
        Ok(RawValue::Float(x)) => RawSide::Bits(x.to_bits()),
        Ok(RawValue::Bool(b)) => RawSide::Bool(b),
        Err(_) => RawSide::TypeError,
    };
    let verdict = verdict(&m, &r);
    DiffReport {
        expression: expr.clone(),
        model: m,
        raw: r,
        verdict,
    }
}

pub fn diff_check(expr: &Expr, ledger: &Ledger) -> DiffReport {
    diff_with(&Model::new(ledger), expr)
}

/// Confirms the host rounds `f64` arithmetic like the model on a few
/// sensitive cases: the `0.1 + 0.2 + 0.3` association pair, a tie, a
/// subnormal result and a square root.
pub fn platform_self_check() -> Result<(), String> {
    let ledger = Ledger::new();
    let cases = [
        "(fp+ (fp+ 0.1 0.2) 0.3)",
        "(fp+ 0.1 (fp+ 0.2 0.3))",
        "(fp+ 1 1/9007199254740992)",
        "(fp* 3e-308 1e-10)",
        "(fp-sqrt 2)",
        "(fp/ 1 3)",
    ];
    for text in cases {
        let expr: Expr = text.parse().map_err(|e| format!("{e}"))?;
        let report = diff_check(&expr, &ledger);
        if report.verdict != Verdict::Match {
            return Err(format!(
                "host binary64 arithmetic disagrees with the model: {report}"
            ));
        }
    }
    // 80-bit intermediates would make these equal
    let (a, b, c) = (
        std::hint::black_box(0.1f64),
        std::hint::black_box(0.2f64),
        std::hint::black_box(0.3f64),
    );
    if (a + b) + c == a + (b + c) {
        return Err(
            "host addition is associative on 0.1, 0.2, 0.3; extended precision suspected".into(),
        );
    }
    Ok(())
}

/// Produces operand expressions for one fuzz case.
pub trait OperandGenerator: Named + Send + Sync {
    fn operands(&self, rng: &mut ChaCha8Rng, op: &dyn FpOperation) -> Vec<Expr>;
}

fn random_finite(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let x = f64::from_bits(rng.gen());
        if x.is_finite() {
            return x;
        }
    }
}

fn leaf(x: f64) -> Expr {
    Expr::rational(decode_finite(x).expect("finite"))
}

/// Uniformly random finite bit patterns.
pub struct UniformBits;

impl Named for UniformBits {
    fn name(&self) -> &str {
        "uniform"
    }
    fn aliases(&self) -> &[&str] {
        &["uniform-bits", "UNIFORM_BITS"]
    }
}

impl OperandGenerator for UniformBits {
    fn operands(&self, rng: &mut ChaCha8Rng, op: &dyn FpOperation) -> Vec<Expr> {
        // mostly in-domain square roots; negative ones only test the fault path
        let in_domain = op.arity() == 1 && rng.gen_ratio(7, 8);
        (0..op.arity())
            .map(|_| {
                let x = random_finite(rng);
                leaf(if in_domain { x.abs() } else { x })
            })
            .collect()
    }
}

/// Quotients of small integers, computed inside the expression as
/// `(fp/ n d)` so both sides form them independently.
pub struct SmallRational;

impl Named for SmallRational {
    fn name(&self) -> &str {
        "small-rational"
    }
    fn aliases(&self) -> &[&str] {
        &["SMALL_RATIONAL"]
    }
}

impl OperandGenerator for SmallRational {
    fn operands(&self, rng: &mut ChaCha8Rng, op: &dyn FpOperation) -> Vec<Expr> {
        (0..op.arity())
            .map(|_| {
                let n: i64 = rng.gen_range(-1000..=1000);
                let d: i64 = rng.gen_range(1..=1000);
                Expr::apply(
                    "fp/",
                    vec![Expr::rational(n.into()), Expr::rational(d.into())],
                )
            })
            .collect()
    }
}

/// Edge-of-format values and operand pairs whose exact sum is a midpoint.
pub struct Boundary;

impl Named for Boundary {
    fn name(&self) -> &str {
        "boundary"
    }
    fn aliases(&self) -> &[&str] {
        &["BOUNDARY"]
    }
}

/// Positive boundary magnitudes; signs are applied by the generator.
pub fn boundary_values() -> Vec<f64> {
    let mut v = vec![
        0.0,
        f64::from_bits(1),
        f64::from_bits(2),
        f64::from_bits(0x000F_FFFF_FFFF_FFFF),
        f64::MIN_POSITIVE,
        f64::from_bits(0x0010_0000_0000_0001),
        f64::MAX,
        f64::from_bits(0x7FEF_FFFF_FFFF_FFFE),
        1.0,
        1.0 + f64::EPSILON,
        1.0 - f64::EPSILON / 2.0,
        2.0 - f64::EPSILON,
        0.1,
        0.2,
        0.3,
        1.0 / 3.0,
        9007199254740992.0,
        9007199254740993.0f64,
    ];
    for k in [
        -1074, -1073, -1023, -1022, -1021, -537, -53, -52, -1, 1, 52, 53, 54, 511, 512, 1022, 1023,
    ] {
        v.push(2f64.powi(k));
    }
    v
}

impl OperandGenerator for Boundary {
    fn operands(&self, rng: &mut ChaCha8Rng, op: &dyn FpOperation) -> Vec<Expr> {
        let values = boundary_values();
        let pick = |rng: &mut ChaCha8Rng| {
            let x = values[rng.gen_range(0..values.len())];
            if rng.gen_bool(0.5) {
                -x
            } else {
                x
            }
        };
        if op.arity() == 2 && rng.gen_bool(0.3) {
            // x and half an ulp of x (or of a random double): the exact sum is a tie
            let x = if rng.gen_bool(0.5) {
                pick(rng)
            } else {
                random_finite(rng)
            };
            let xr = decode_finite(x).expect("finite");
            let half = ulp(&xr, B64).scale_pow2(-1);
            if crate::format::fpp(&half, B64) {
                let half = if rng.gen_bool(0.5) { -half } else { half };
                return vec![leaf(x), Expr::rational(half)];
            }
        }
        (0..op.arity()).map(|_| leaf(pick(rng))).collect()
    }
}

pub type GeneratorRegistry = Registry<dyn OperandGenerator>;

pub fn builtin_generators() -> GeneratorRegistry {
    let mut reg: GeneratorRegistry = Registry::new();
    reg.register(Box::new(UniformBits));
    reg.register(Box::new(SmallRational));
    reg.register(Box::new(Boundary));
    reg
}

#[derive(Debug, Clone)]
pub struct FuzzConfig {
    pub count: u64,
    pub seed: u64,
    /// Generator name or alias.
    pub generator: String,
    /// Operation names or aliases; empty means all.
    pub ops: Vec<String>,
    /// Tie rule for the model side; anything but `Even` is a planted bug.
    pub ties: TieBreak,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            count: 1000,
            seed: 0,
            generator: "uniform".into(),
            ops: Vec::new(),
            ties: TieBreak::Even,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FuzzSummary {
    pub total: u64,
    /// Cases without a mismatch, including model faults matched by a host
    /// infinity or NaN.
    pub matches: u64,
    pub special: u64,
    pub mismatches: Vec<DiffReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FuzzError {
    #[error("count must be at least 1")]
    EmptyRun,
    #[error("unknown generator {0}")]
    UnknownGenerator(String),
    #[error("unknown operation {0}")]
    UnknownOp(String),
}

/// Cases per shard. Fixed so results do not depend on thread count.
const SHARD: u64 = 2048;
/// Mismatch reports kept per run.
const KEEP_MISMATCHES: usize = 1000;

pub fn fuzz(config: &FuzzConfig) -> Result<FuzzSummary, FuzzError> {
    if config.count == 0 {
        return Err(FuzzError::EmptyRun);
    }
    let generators = builtin_generators();
    let generator = generators
        .get(&config.generator)
        .ok_or_else(|| FuzzError::UnknownGenerator(config.generator.clone()))?;
    let ops: Vec<&dyn FpOperation> = builtin_ops()
        .select(&config.ops.join(","))
        .map_err(FuzzError::UnknownOp)?;
    let shards = config.count.div_ceil(SHARD);
    let parts: Vec<FuzzSummary> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(shard);
            let ledger = Ledger::new();
            let model = Model::new(&ledger).with_ties(config.ties);
            let start = shard * SHARD;
            let end = (start + SHARD).min(config.count);
            let mut part = FuzzSummary::default();
            for i in start..end {
                let op = ops[(i % ops.len() as u64) as usize];
                let args = generator.operands(&mut rng, op);
                let expr = Expr::apply(op.name(), args);
                let report = diff_with(&model, &expr);
                part.total += 1;
                match report.verdict {
                    Verdict::Match => part.matches += 1,
                    Verdict::ModelFaultRawSpecial => {
                        part.matches += 1;
                        part.special += 1;
                    }
                    Verdict::Mismatch => {
                        if part.mismatches.len() < KEEP_MISMATCHES {
                            part.mismatches.push(report);
                        }
                    }
                }
            }
            part
        })
        .collect();
    let mut summary = FuzzSummary::default();
    for part in parts {
        summary.total += part.total;
        summary.matches += part.matches;
        summary.special += part.special;
        let room = KEEP_MISMATCHES.saturating_sub(summary.mismatches.len());
        summary
            .mismatches
            .extend(part.mismatches.into_iter().take(room));
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::shortest_decimal;
    use crate::expr::parse_expr;

    fn raw(text: &str) -> RawValue {
        raw_eval(&parse_expr(text).unwrap()).unwrap()
    }

    fn raw_decimal(text: &str) -> String {
        let RawValue::Float(x) = raw(text) else {
            panic!()
        };
        shortest_decimal(&decode_finite(x).unwrap())
    }

    fn diff(text: &str) -> DiffReport {
        diff_check(&parse_expr(text).unwrap(), &Ledger::new())
    }

    #[test]
    fn transcript_on_the_host() {
        assert_eq!(
            raw_decimal("(fp+ (to-fp 1/10) (fp+ (to-fp 2/10) (to-fp 3/10)))"),
            "0.6"
        );
        assert_eq!(
            raw_decimal("(fp+ (fp+ (to-fp 1/10) (to-fp 2/10)) (to-fp 3/10))"),
            "0.6000000000000001"
        );
        assert_eq!(raw("(fp-sqrt (to-fp 4))"), RawValue::Float(2.0));
        assert_eq!(raw("(= 1 1.0)"), RawValue::Bool(true));
        assert_eq!(raw("(fpp 1/3)"), RawValue::Bool(false));
        assert_eq!(raw("(fpp 1/4)"), RawValue::Bool(true));
    }

    #[test]
    fn verdicts() {
        assert_eq!(
            diff("(fp+ (fp+ (to-fp 1/10) (to-fp 2/10)) (to-fp 3/10))").verdict,
            Verdict::Match
        );
        assert_eq!(diff("(fp* -1 0)").verdict, Verdict::Match);
        assert_eq!(diff("(= (to-fp 1/3) 1/3)").verdict, Verdict::Match);
        let max = crate::format::FloatFormat::BINARY64.max_finite();
        let report = diff(&format!("(fp+ {max} {max})"));
        assert_eq!(report.verdict, Verdict::ModelFaultRawSpecial);
        assert_eq!(report.model, ModelSide::Fault("OVERFLOW"));
        assert_eq!(report.raw, RawSide::Bits(f64::INFINITY.to_bits()));
        assert_eq!(diff("(fp/ 1 0)").verdict, Verdict::ModelFaultRawSpecial);
        assert_eq!(diff("(fp-sqrt -1)").verdict, Verdict::ModelFaultRawSpecial);
        // the model guards, the host coerces 1/3 and carries on
        assert_eq!(diff("(fp+ 1/3 1/3)").verdict, Verdict::Mismatch);
        assert_eq!(diff("(fp+ (fpp 1) 1)").verdict, Verdict::Match);
    }

    #[test]
    fn planted_tie_bug_is_caught() {
        let ledger = Ledger::new();
        let expr = parse_expr("(fp+ 1 1/9007199254740992)").unwrap();
        let bad = Model::new(&ledger).with_ties(TieBreak::Odd);
        let report = diff_with(&bad, &expr);
        assert_eq!(report.verdict, Verdict::Mismatch);
        assert_eq!(report.raw, RawSide::Bits(1f64.to_bits()));
        assert!(report.to_string().starts_with("MISMATCH\t(fp+ 1 1/9007199254740992)\tmodel=0x3ff0000000000001\traw=0x3ff0000000000000"));
    }

    #[test]
    fn self_check_passes_here() {
        platform_self_check().unwrap();
    }

    #[test]
    fn fuzz_is_deterministic_and_clean() {
        for generator in ["uniform", "small-rational", "boundary"] {
            let config = FuzzConfig {
                count: 5000,
                seed: 42,
                generator: generator.into(),
                ..FuzzConfig::default()
            };
            let a = fuzz(&config).unwrap();
            assert_eq!(a.total, 5000);
            assert_eq!(
                a.matches,
                5000,
                "{generator}: {:?}",
                a.mismatches.first().map(|r| r.to_string())
            );
            assert_eq!(a, fuzz(&config).unwrap());
        }
    }

    #[test]
    fn fuzz_catches_planted_bug() {
        let config = FuzzConfig {
            count: 5000,
            seed: 1,
            generator: "boundary".into(),
            ops: vec!["add".into()],
            ties: TieBreak::Odd,
        };
        let summary = fuzz(&config).unwrap();
        assert!(!summary.mismatches.is_empty());
        assert!(summary
            .mismatches
            .iter()
            .all(|r| r.verdict == Verdict::Mismatch));
    }

    #[test]
    fn fuzz_config_errors() {
        let bad = |c: FuzzConfig| fuzz(&c).unwrap_err();
        assert_eq!(
            bad(FuzzConfig {
                count: 0,
                ..Default::default()
            }),
            FuzzError::EmptyRun
        );
        assert_eq!(
            bad(FuzzConfig {
                generator: "gauss".into(),
                ..Default::default()
            }),
            FuzzError::UnknownGenerator("gauss".into())
        );
        assert_eq!(
            bad(FuzzConfig {
                ops: vec!["fma".into()],
                ..Default::default()
            }),
            FuzzError::UnknownOp("fma".into())
        );
    }

    #[test]
    fn boundary_generator_covers_edges() {
        let v = boundary_values();
        for x in [0.0, f64::from_bits(1), f64::MAX, 1.0, f64::MIN_POSITIVE] {
            assert!(v.contains(&x));
        }
    }
}

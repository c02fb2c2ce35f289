//! Command-line driver.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::decimal::{shortest_decimal, DecimalLiteral};
use crate::expr::{parse_expr, Expr};
use crate::format::{bits_to_value, fpp, value_to_bits, Binary64Value, FloatFormat};
use crate::laws::{builtin_laws, check_laws};
use crate::ledger::{Ledger, CONSTRAINED_TO_FP};
use crate::model::{Model, Value};
use crate::oracle::{
    diff_with, fuzz, platform_self_check, raw_eval, FuzzConfig, RawValue, Verdict,
};
use crate::rational::Rational;
use crate::rounding::{fp_round, TieBreak};

pub const LEDGER_ENV: &str = "RAFLOAT_LEDGER";

const GRAMMAR: &str = "\
expression grammar:
  expr     := literal | ( operator expr... )
  operator := to-fp | fpp | = | fp+ | fp- | fp* | fp/ | fp-sqrt
  literal  := integer | integer/integer | decimal   (e.g. 7, -1/3, 0.1, 2.5e-3)
arity: to-fp, fpp, fp-sqrt take 1 argument; the others take 2.
round accepts a rational, a decimal, or a bit pattern 0xXXXXXXXXXXXXXXXX.";

#[derive(Parser, Debug)]
#[command(name = "rafloat", version, about = "Binary64 arithmetic on exact rationals", after_help = GRAMMAR)]
struct Cli {
    /// Persistent facts file (default: $RAFLOAT_LEDGER).
    #[arg(long, global = true, value_name = "PATH")]
    ledger: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one expression.
    Eval {
        expr: String,
        #[arg(long, value_enum, default_value_t = Mode::Model)]
        mode: Mode,
    },
    /// Round a rational, decimal or bit pattern to binary64.
    Round {
        #[arg(allow_hyphen_values = true)]
        value: String,
    },
    /// Check algebraic laws on sampled inputs.
    CheckLaws {
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated law names, or "all".
        #[arg(long, default_value = "all")]
        laws: String,
    },
    /// Differential fuzz of the model against the host FPU.
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Operand generator: uniform, small-rational or boundary.
        #[arg(long = "gen", default_value = "uniform")]
        generator: String,
        /// Comma-separated operations, or "all".
        #[arg(long, default_value = "all")]
        ops: String,
        /// Write every mismatch report to this file.
        #[arg(long, value_name = "PATH")]
        mismatches: Option<PathBuf>,
        /// Tie rule used by the model side; "odd" plants a rounding bug.
        #[arg(long, value_enum, default_value_t = Ties::Even, hide = true)]
        ties: Ties,
    },
    /// Inspect the fact ledger.
    Axioms {
        #[command(subcommand)]
        action: AxiomsAction,
    },
}

#[derive(Subcommand, Debug)]
enum AxiomsAction {
    /// Write all facts to a file.
    Export { path: PathBuf },
    /// Check the ledger for conflicts and kernel property violations.
    Check,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Model,
    Raw,
    Diff,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Ties {
    Even,
    Odd,
}

const OK: i32 = 0;
const FOUND: i32 = 1;
const USAGE: i32 = 2;

/// Runs the CLI on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return OK;
            }
            let _ = write!(err, "{}", e.render());
            let _ = writeln!(err, "\n{GRAMMAR}");
            return USAGE;
        }
    };
    let ledger_path = cli.ledger.clone().or_else(|| {
        std::env::var_os(LEDGER_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
    });
    let ledger = match &ledger_path {
        Some(p) => match Ledger::load(p) {
            Ok(l) => l,
            Err(e) => {
                let _ = writeln!(err, "cannot load ledger {}: {e}", p.display());
                return FOUND;
            }
        },
        None => Ledger::new(),
    };
    let before = ledger.len();
    let code = dispatch(cli.command, &ledger, out, err);
    if let Some(p) = ledger_path {
        if ledger.len() != before {
            if let Err(e) = ledger.save(&p) {
                let _ = writeln!(err, "cannot save ledger {}: {e}", p.display());
                return FOUND;
            }
        }
    }
    code
}

fn usage(err: &mut dyn Write, message: &str) -> i32 {
    let _ = writeln!(err, "error: {message}\n\n{GRAMMAR}");
    USAGE
}

fn dispatch(command: Command, ledger: &Ledger, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match command {
        Command::Eval { expr, mode } => match parse_expr(&expr) {
            Ok(e) => eval(&e, mode, ledger, out, err),
            Err(e) => usage(err, &format!("{e}\n  {expr}\n  {}^", " ".repeat(e.pos))),
        },
        Command::Round { value } => round(&value, ledger, out, err),
        Command::CheckLaws {
            samples,
            seed,
            laws,
        } => {
            let registry = builtin_laws();
            let selected = match registry.select(&laws) {
                Ok(s) => s,
                Err(name) => {
                    return usage(
                        err,
                        &format!("unknown law {name}; known: {}", registry.names().join(", ")),
                    )
                }
            };
            let model = Model::new(ledger);
            let mut code = OK;
            for report in check_laws(&model, &selected, samples, seed) {
                let _ = writeln!(out, "{report}");
                if !report.as_expected() {
                    code = FOUND;
                }
            }
            code
        }
        Command::Fuzz {
            count,
            seed,
            generator,
            ops,
            mismatches,
            ties,
        } => {
            if let Err(e) = platform_self_check() {
                let _ = writeln!(err, "{e}");
                return FOUND;
            }
            let config = FuzzConfig {
                count,
                seed,
                generator,
                ops: if ops == "all" {
                    Vec::new()
                } else {
                    ops.split(',').map(str::to_string).collect()
                },
                ties: match ties {
                    Ties::Even => TieBreak::Even,
                    Ties::Odd => TieBreak::Odd,
                },
            };
            let summary = match fuzz(&config) {
                Ok(s) => s,
                Err(e) => return usage(err, &e.to_string()),
            };
            if let Some(path) = mismatches {
                let body: String = summary
                    .mismatches
                    .iter()
                    .map(|r| format!("{r}\n"))
                    .collect();
                if let Err(e) = std::fs::write(&path, body) {
                    let _ = writeln!(err, "cannot write {}: {e}", path.display());
                    return FOUND;
                }
            }
            for report in summary.mismatches.iter().take(10) {
                let _ = writeln!(out, "{report}");
            }
            let _ = writeln!(out, "{}/{} match", summary.matches, summary.total);
            if summary.special > 0 {
                let _ = writeln!(
                    out,
                    "{} model faults matched by a host infinity or NaN",
                    summary.special
                );
            }
            if summary.matches == summary.total {
                OK
            } else {
                FOUND
            }
        }
        Command::Axioms { action } => match action {
            AxiomsAction::Export { path } => match ledger.save(&path) {
                Ok(n) => {
                    let _ = writeln!(out, "exported {} to {}", facts(n), path.display());
                    OK
                }
                Err(e) => {
                    let _ = writeln!(err, "cannot export to {}: {e}", path.display());
                    FOUND
                }
            },
            AxiomsAction::Check => {
                let report = ledger.check_consistency();
                for v in &report.violations {
                    let _ = writeln!(out, "{v}");
                }
                if report.is_consistent() {
                    let _ = writeln!(out, "consistent ({})", facts(report.facts));
                    OK
                } else {
                    let _ = writeln!(
                        out,
                        "inconsistent: {} violation(s) in {}",
                        report.violations.len(),
                        facts(report.facts)
                    );
                    FOUND
                }
            }
        },
    }
}

fn facts(n: usize) -> String {
    if n == 1 {
        "1 fact".into()
    } else {
        format!("{n} facts")
    }
}

fn bits_of(x: &Rational) -> String {
    match value_to_bits(&Binary64Value::finite(x.clone()), FloatFormat::BINARY64) {
        Ok(b) => format!("{b:#018x}"),
        Err(_) => "-".into(),
    }
}

fn show_value(v: &Value) -> String {
    match v {
        Value::Num(r) if fpp(r, FloatFormat::BINARY64) => format!("{r}  {}", shortest_decimal(r)),
        v => v.to_string(),
    }
}

fn show_raw(v: &RawValue) -> String {
    match v {
        RawValue::Float(x) if x.is_nan() => "NaN".into(),
        RawValue::Float(x) if x.is_infinite() => {
            if *x > 0.0 { "+Infinity" } else { "-Infinity" }.into()
        }
        RawValue::Float(_) => {
            let decoded = v.decoded().expect("float");
            shortest_decimal(decoded.value().expect("finite"))
        }
        RawValue::Bool(true) => "T".into(),
        RawValue::Bool(false) => "NIL".into(),
    }
}

fn eval(expr: &Expr, mode: Mode, ledger: &Ledger, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let model = Model::new(ledger);
    match mode {
        Mode::Model => match model.eval(expr) {
            Ok(v) => {
                let _ = writeln!(out, "{}", show_value(&v));
                OK
            }
            Err(e) => {
                let _ = writeln!(err, "{e}");
                FOUND
            }
        },
        Mode::Raw => match raw_eval(expr) {
            Ok(v) => {
                let _ = writeln!(out, "{}", show_raw(&v));
                OK
            }
            Err(e) => {
                let _ = writeln!(err, "{e}");
                FOUND
            }
        },
        Mode::Diff => {
            let model_value = model.eval(expr);
            let report = diff_with(&model, expr);
            let _ = writeln!(out, "{}", report.verdict);
            match &model_value {
                Ok(Value::Num(r)) => {
                    let _ = writeln!(out, "{}", shortest_decimal(r));
                    let _ = writeln!(out, "model {}  {}", r, report.model);
                }
                Ok(v) => {
                    let _ = writeln!(out, "model {v}");
                }
                Err(e) => {
                    let _ = writeln!(out, "model {}: {e}", report.model);
                }
            }
            let raw = raw_eval(expr)
                .map(|v| show_raw(&v))
                .unwrap_or_else(|e| e.to_string());
            let _ = writeln!(out, "raw   {raw}  {}", report.raw);
            if report.verdict == Verdict::Mismatch {
                FOUND
            } else {
                OK
            }
        }
    }
}

/// Reads a rational, a decimal (exact value) or a `0x` bit pattern.
fn parse_round_input(text: &str) -> Result<Rational, String> {
    if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        let bits =
            u64::from_str_radix(hex, 16).map_err(|e| format!("bad bit pattern {text}: {e}"))?;
        let decoded = bits_to_value(bits, FloatFormat::BINARY64).map_err(|e| e.to_string())?;
        return decoded.value().cloned().ok_or_else(|| {
            format!(
                "{text} encodes {}, which has no rational value",
                decoded.class_name()
            )
        });
    }
    if text.contains(['.', 'e', 'E']) {
        return DecimalLiteral::parse(text)
            .map(|d| d.value().clone())
            .map_err(|e| e.to_string());
    }
    text.parse::<Rational>().map_err(|e| e.to_string())
}

fn round(text: &str, ledger: &Ledger, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let x = match parse_round_input(text) {
        Ok(x) => x,
        Err(e) => return usage(err, &e),
    };
    match fp_round(&x, FloatFormat::BINARY64) {
        Ok(o) => {
            if let Err(e) =
                ledger.record_fact(CONSTRAINED_TO_FP, std::slice::from_ref(&x), &o.result)
            {
                let _ = writeln!(err, "{e}");
                return FOUND;
            }
            let _ = writeln!(out, "result     {}", o.result);
            let _ = writeln!(out, "decimal    {}", shortest_decimal(&o.result));
            let _ = writeln!(out, "direction  {}", o.direction);
            let _ = writeln!(out, "inexact    {}", o.inexact());
            let _ = writeln!(out, "bits       {}", bits_of(&o.result));
            OK
        }
        Err(fault) => {
            let _ = writeln!(err, "{fault}");
            FOUND
        }
    }
}

//! S-expression surface syntax.
//!
//! ```text
//! expr     := literal | "(" operator expr* ")"
//! operator := to-fp | fpp | = | fp+ | fp- | fp* | fp/ | fp-sqrt
//! literal  := integer | integer "/" integer | decimal
//! ```
//!
//! Decimal leaves (anything with a `.` or exponent) stand for the binary64
//! value nearest the literal; integer and `n/d` leaves are exact rationals.

use std::fmt;

use thiserror::Error;

use crate::decimal::DecimalLiteral;
use crate::ops::builtin_ops;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Rational(Rational),
    Decimal(DecimalLiteral),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Rational(r) => write!(f, "{r}"),
            Literal::Decimal(d) => write!(f, "{d}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    ToFp,
    Fpp,
    Equal,
    /// A registered arithmetic operation, by canonical name.
    Arith(&'static str),
}

impl Operator {
    pub fn lookup(symbol: &str) -> Option<Operator> {
        match symbol {
            "to-fp" => Some(Operator::ToFp),
            "fpp" => Some(Operator::Fpp),
            "=" => Some(Operator::Equal),
            _ => builtin_ops()
                .iter()
                .find(|op| op.name() == symbol)
                .map(|op| Operator::Arith(op.name())),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Operator::ToFp => "to-fp",
            Operator::Fpp => "fpp",
            Operator::Equal => "=",
            Operator::Arith(name) => name,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Operator::ToFp | Operator::Fpp => 1,
            Operator::Equal => 2,
            Operator::Arith(name) => builtin_ops().get(name).map_or(2, |op| op.arity()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(Literal),
    Call(Operator, Vec<Expr>),
}

impl Expr {
    pub fn rational(r: Rational) -> Expr {
        Expr::Lit(Literal::Rational(r))
    }

    pub fn call(op: Operator, args: Vec<Expr>) -> Expr {
        debug_assert_eq!(op.arity(), args.len());
        Expr::Call(op, args)
    }

    /// `(op args...)` for a symbol known to [`Operator::lookup`].
    pub fn apply(symbol: &str, args: Vec<Expr>) -> Expr {
        let op = Operator::lookup(symbol).unwrap_or_else(|| panic!("unknown operator {symbol}"));
        Expr::call(op, args)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(l) => write!(f, "{l}"),
            Expr::Call(op, args) => {
                write!(f, "({}", op.symbol())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {pos}: {message}")]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

fn err<T>(pos: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        pos,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(text: &str) -> Vec<(usize, Token<'_>)> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            '(' => {
                tokens.push((i, Token::Open));
                chars.next();
            }
            ')' => {
                tokens.push((i, Token::Close));
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let start = i;
                let mut end = text.len();
                while let Some(&(j, c)) = chars.peek() {
                    if c == '(' || c == ')' || c.is_whitespace() {
                        end = j;
                        break;
                    }
                    chars.next();
                }
                tokens.push((start, Token::Atom(&text[start..end])));
            }
        }
    }
    tokens
}

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let expr = parse_at(&tokens, &mut pos, text.len())?;
    if let Some((at, _)) = tokens.get(pos) {
        return err(*at, "unexpected input after expression");
    }
    Ok(expr)
}

fn parse_at(
    tokens: &[(usize, Token<'_>)],
    pos: &mut usize,
    end: usize,
) -> Result<Expr, ParseError> {
    let Some((at, tok)) = tokens.get(*pos) else {
        return err(end, "unexpected end of input");
    };
    *pos += 1;
    match tok {
        Token::Close => err(*at, "unbalanced ')'"),
        Token::Atom(a) => parse_literal(a, *at).map(Expr::Lit),
        Token::Open => {
            let Some((op_at, Token::Atom(sym))) = tokens.get(*pos) else {
                return err(
                    tokens.get(*pos).map_or(end, |t| t.0),
                    "expected an operator",
                );
            };
            *pos += 1;
            let op = Operator::lookup(sym).ok_or_else(|| ParseError {
                pos: *op_at,
                message: format!("unknown operator {sym}"),
            })?;
            let mut args = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return err(*at, "unbalanced '(': missing ')'"),
                    Some((_, Token::Close)) => {
                        *pos += 1;
                        break;
                    }
                    Some(_) => args.push(parse_at(tokens, pos, end)?),
                }
            }
            if args.len() != op.arity() {
                return err(
                    *at,
                    format!(
                        "{} takes {} argument(s), got {}",
                        op.symbol(),
                        op.arity(),
                        args.len()
                    ),
                );
            }
            Ok(Expr::Call(op, args))
        }
    }
}

fn parse_literal(atom: &str, at: usize) -> Result<Literal, ParseError> {
    if atom.contains(['.', 'e', 'E']) {
        return DecimalLiteral::parse(atom)
            .map(Literal::Decimal)
            .or_else(|e| err(at, e.to_string()));
    }
    atom.parse::<Rational>()
        .map(Literal::Rational)
        .or_else(|e| err(at, e.to_string()))
}

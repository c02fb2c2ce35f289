//! Append-only record of executed kernel calls.
//!
//! The conversion kernel (`constrained-to-fp`) and the square-root kernel
//! have no closed-form definition in the model; every time one is executed
//! its argument/result pair becomes a [`Fact`]. The facts must stay
//! functionally consistent and must satisfy the kernels' exported
//! properties: results are representable and conversion is idempotent.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::RwLock;

use thiserror::Error;

use crate::format::{fpp, FloatFormat};
use crate::ops::SQRT_KERNEL;
use crate::rational::Rational;
use crate::rounding::to_fp;

pub const CONSTRAINED_TO_FP: &str = "constrained-to-fp";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fact {
    pub seq: u64,
    pub function: String,
    pub args: Vec<Rational>,
    pub result: Rational,
}

impl Fact {
    fn key(&self) -> (String, Vec<Rational>) {
        (self.function.clone(), self.args.clone())
    }
}

/// `seq<TAB>function<TAB>arg1,arg2,...<TAB>result`
impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t", self.seq, self.function)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "\t{}", self.result)
    }
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("conflict: ({function} {args}) already recorded as {existing} at seq {seq}, new result {attempted}")]
    Conflict {
        function: String,
        args: String,
        existing: Rational,
        attempted: Rational,
        seq: u64,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recorded {
    Appended(u64),
    /// The identical triple was already present at this seq.
    Duplicate(u64),
}

#[derive(Debug, Default)]
struct Inner {
    facts: Vec<Fact>,
    index: HashMap<(String, Vec<Rational>), usize>,
    next_seq: u64,
}

#[derive(Debug, Default)]
pub struct Ledger {
    inner: RwLock<Inner>,
    supporters: Vec<String>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a ledger from stored facts without any conflict check, so a
    /// damaged file can still be loaded and then diagnosed by
    /// [`Ledger::check_consistency`].
    pub fn from_facts(facts: Vec<Fact>) -> Self {
        let mut inner = Inner::default();
        for fact in facts {
            inner.next_seq = inner.next_seq.max(fact.seq + 1);
            inner.index.entry(fact.key()).or_insert(inner.facts.len());
            inner.facts.push(fact);
        }
        Ledger {
            inner: RwLock::new(inner),
            supporters: Vec::new(),
        }
    }

    pub fn record_fact(
        &self,
        function: &str,
        args: &[Rational],
        result: &Rational,
    ) -> Result<Recorded, LedgerError> {
        let mut inner = self.inner.write().expect("ledger lock poisoned");
        let key = (function.to_string(), args.to_vec());
        if let Some(&i) = inner.index.get(&key) {
            let existing = &inner.facts[i];
            if &existing.result == result {
                return Ok(Recorded::Duplicate(existing.seq));
            }
            return Err(LedgerError::Conflict {
                function: function.to_string(),
                args: join(args),
                existing: existing.result.clone(),
                attempted: result.clone(),
                seq: existing.seq,
            });
        }
        let seq = inner.next_seq;
        inner.next_seq += 1;
        let pos = inner.facts.len();
        inner.facts.push(Fact {
            seq,
            function: function.to_string(),
            args: args.to_vec(),
            result: result.clone(),
        });
        inner.index.insert(key, pos);
        Ok(Recorded::Appended(seq))
    }

    pub fn lookup(&self, function: &str, args: &[Rational]) -> Option<Rational> {
        let inner = self.inner.read().expect("ledger lock poisoned");
        let key = (function.to_string(), args.to_vec());
        inner
            .index
            .get(&key)
            .map(|&i| inner.facts[i].result.clone())
    }

    pub fn facts(&self) -> Vec<Fact> {
        self.inner
            .read()
            .expect("ledger lock poisoned")
            .facts
            .clone()
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("ledger lock poisoned").facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Always empty.
    pub fn supporters(&self) -> &[String] {
        &self.supporters
    }

    pub fn check_consistency(&self) -> ConsistencyReport {
        let inner = self.inner.read().expect("ledger lock poisoned");
        let mut first: HashMap<(String, Vec<Rational>), &Fact> = HashMap::new();
        let mut violations = Vec::new();
        let mut last_seq: Option<u64> = None;
        for fact in &inner.facts {
            let mut kinds = Vec::new();
            if last_seq.is_some_and(|s| fact.seq <= s) {
                kinds.push(ViolationKind::SequenceOrder);
            }
            last_seq = Some(fact.seq);
            match first.get(&fact.key()) {
                Some(earlier) if earlier.result != fact.result => {
                    kinds.push(ViolationKind::Conflict {
                        seq: earlier.seq,
                        result: earlier.result.clone(),
                    })
                }
                Some(_) => {}
                None => {
                    first.insert(fact.key(), fact);
                }
            }
            let kernel = fact.function == CONSTRAINED_TO_FP || fact.function == SQRT_KERNEL;
            if kernel && !fpp(&fact.result, FloatFormat::BINARY64) {
                kinds.push(ViolationKind::NotRepresentable);
            }
            if fact.function == CONSTRAINED_TO_FP {
                match to_fp(&fact.result) {
                    Ok(r) if r == fact.result => {}
                    Ok(r) => kinds.push(ViolationKind::NotIdempotent { rounded: Some(r) }),
                    Err(_) => kinds.push(ViolationKind::NotIdempotent { rounded: None }),
                }
                if let [arg] = &fact.args[..] {
                    if fpp(arg, FloatFormat::BINARY64) && arg != &fact.result {
                        kinds.push(ViolationKind::ArgumentNotFixed);
                    }
                }
                let own = (CONSTRAINED_TO_FP.to_string(), vec![fact.result.clone()]);
                if let Some(&i) = inner.index.get(&own) {
                    let other = &inner.facts[i];
                    if other.result != fact.result {
                        kinds.push(ViolationKind::ResultNotFixed {
                            seq: other.seq,
                            result: other.result.clone(),
                        });
                    }
                }
            }
            if fact.function == SQRT_KERNEL && fact.result.is_negative() {
                kinds.push(ViolationKind::NegativeRoot);
            }
            if !kinds.is_empty() {
                violations.push(Violation {
                    fact: fact.clone(),
                    kinds,
                });
            }
        }
        ConsistencyReport {
            facts: inner.facts.len(),
            violations,
        }
    }

    /// Writes one line per fact in seq order.
    pub fn export_facts<W: Write>(&self, mut sink: W) -> io::Result<usize> {
        let inner = self.inner.read().expect("ledger lock poisoned");
        for fact in &inner.facts {
            writeln!(sink, "{fact}")?;
        }
        sink.flush()?;
        Ok(inner.facts.len())
    }

    pub fn import_facts<R: BufRead>(source: R) -> Result<Ledger, LedgerError> {
        let mut facts = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            facts.push(parse_fact(&line).map_err(|reason| LedgerError::Parse {
                line: i + 1,
                reason,
            })?);
        }
        Ok(Ledger::from_facts(facts))
    }

    /// Loads a `.facts` file; a missing file is an empty ledger.
    pub fn load(path: &Path) -> Result<Ledger, LedgerError> {
        match File::open(path) {
            Ok(f) => Self::import_facts(BufReader::new(f)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Ledger::new()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<usize, LedgerError> {
        let f = File::create(path)?;
        Ok(self.export_facts(BufWriter::new(f))?)
    }
}

fn join(args: &[Rational]) -> String {
    args.iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_fact(line: &str) -> Result<Fact, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    let [seq, function, args, result] = fields[..] else {
        return Err(format!(
            "expected 4 tab-separated fields, found {}",
            fields.len()
        ));
    };
    let seq = seq
        .parse::<u64>()
        .map_err(|e| format!("bad seq {seq:?}: {e}"))?;
    if function.is_empty() {
        return Err("empty function name".into());
    }
    let args = if args.is_empty() {
        Vec::new()
    } else {
        args.split(',')
            .map(|a| a.parse::<Rational>().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?
    };
    let result = result.parse::<Rational>().map_err(|e| e.to_string())?;
    Ok(Fact {
        seq,
        function: function.to_string(),
        args,
        result,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    /// Same function and arguments as an earlier fact, different result.
    Conflict {
        seq: u64,
        result: Rational,
    },
    NotRepresentable,
    /// Converting the result again moves it (or overflows).
    NotIdempotent {
        rounded: Option<Rational>,
    },
    /// The ledger's own fact for the result maps it elsewhere.
    ResultNotFixed {
        seq: u64,
        result: Rational,
    },
    /// A representable argument was converted to something other than itself.
    ArgumentNotFixed,
    NegativeRoot,
    SequenceOrder,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::Conflict { seq, result } => {
                write!(f, "conflicts with seq {seq} (result {result})")
            }
            ViolationKind::NotRepresentable => f.write_str("result is not representable"),
            ViolationKind::NotIdempotent { rounded: Some(r) } => {
                write!(f, "result converts to {r}")
            }
            ViolationKind::NotIdempotent { rounded: None } => {
                f.write_str("result overflows on conversion")
            }
            ViolationKind::ResultNotFixed { seq, result } => {
                write!(f, "seq {seq} maps the result to {result}")
            }
            ViolationKind::ArgumentNotFixed => f.write_str("representable argument was moved"),
            ViolationKind::NegativeRoot => f.write_str("square root result is negative"),
            ViolationKind::SequenceOrder => f.write_str("sequence number does not increase"),
        }
    }
}

/// All problems found with one fact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub fact: Fact,
    pub kinds: Vec<ViolationKind>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seq {} ({} {}): ",
            self.fact.seq,
            self.fact.function,
            join(&self.fact.args)
        )?;
        for (i, k) in self.kinds.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{k}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyReport {
    pub facts: usize,
    pub violations: Vec<Violation>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

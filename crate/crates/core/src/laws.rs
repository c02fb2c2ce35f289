//! Algebraic laws checked against the model.
//!
//! A law either should hold on every sample (commutativity, identity,
//! idempotence of rounding) or is expected to fail, in which case the
//! checker reports the first counterexample it finds.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decimal::shortest_decimal;
use crate::format::FloatFormat;
use crate::model::Model;
use crate::ops::{fp_add, OpError};
use crate::rational::Rational;
use crate::registry::{Named, Registry};
use crate::rounding::to_fp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Holds,
    Fails,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LawOutcome {
    /// Every checked sample satisfied the law.
    Held { checked: u64 },
    Counterexample {
        inputs: Vec<Rational>,
        lhs: Rational,
        rhs: Rational,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawReport {
    pub law: String,
    pub expectation: Expectation,
    pub outcome: LawOutcome,
}

impl LawReport {
    /// True when the outcome is what the law's expectation predicts.
    pub fn as_expected(&self) -> bool {
        matches!(
            (self.expectation, &self.outcome),
            (Expectation::Holds, LawOutcome::Held { .. })
                | (Expectation::Fails, LawOutcome::Counterexample { .. })
        )
    }
}

impl fmt::Display for LawReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.as_expected() {
            "ok"
        } else {
            "UNEXPECTED"
        };
        match &self.outcome {
            LawOutcome::Held { checked } => {
                write!(f, "{}: holds on {checked} samples ({status})", self.law)
            }
            LawOutcome::Counterexample { inputs, lhs, rhs } => {
                let shown: Vec<String> = inputs.iter().map(shortest_decimal).collect();
                write!(
                    f,
                    "{}: counterexample [{}]: {} /= {} ({status})",
                    self.law,
                    shown.join(", "),
                    shortest_decimal(lhs),
                    shortest_decimal(rhs)
                )
            }
        }
    }
}

pub trait Law: Named + Send + Sync {
    fn expectation(&self) -> Expectation;
    fn check(&self, model: &Model<'_>, samples: u64, rng: &mut ChaCha8Rng) -> LawReport;
}

/// A random double with a moderate exponent, so sums of a few of them
/// stay far from overflow.
pub fn moderate_double(rng: &mut ChaCha8Rng) -> Rational {
    let mantissa: i64 = rng.gen_range(0..(1i64 << 53));
    let sign = if rng.gen_bool(0.5) { -1 } else { 1 };
    let exp = rng.gen_range(-80..=30);
    Rational::from_integer(sign * mantissa).scale_pow2(exp - 52)
}

fn report(law: &dyn Law, outcome: LawOutcome) -> LawReport {
    LawReport {
        law: law.name().to_string(),
        expectation: law.expectation(),
        outcome,
    }
}

// Samples whose intermediate results overflow do not count.
fn search<const N: usize>(
    law: &dyn Law,
    samples: u64,
    rng: &mut ChaCha8Rng,
    seeds: &[[Rational; N]],
    sides: impl Fn(&[Rational; N]) -> Result<(Rational, Rational), OpError>,
) -> LawReport {
    let mut checked = 0;
    let random = std::iter::repeat_with(|| std::array::from_fn(|_| moderate_double(rng)));
    for input in seeds
        .iter()
        .cloned()
        .chain(random)
        .take(samples.max(seeds.len() as u64) as usize)
    {
        let Ok((lhs, rhs)) = sides(&input) else {
            continue;
        };
        checked += 1;
        if lhs != rhs {
            return report(
                law,
                LawOutcome::Counterexample {
                    inputs: input.to_vec(),
                    lhs,
                    rhs,
                },
            );
        }
    }
    report(law, LawOutcome::Held { checked })
}

fn tenths(n: i64) -> Rational {
    to_fp(&Rational::new(n, 10).expect("nonzero")).expect("in range")
}

pub struct AddAssociativity;

impl Named for AddAssociativity {
    fn name(&self) -> &str {
        "add-associativity"
    }
}

impl Law for AddAssociativity {
    fn expectation(&self) -> Expectation {
        Expectation::Fails
    }

    fn check(&self, _model: &Model<'_>, samples: u64, rng: &mut ChaCha8Rng) -> LawReport {
        search(
            self,
            samples,
            rng,
            &[[tenths(1), tenths(2), tenths(3)]],
            |[a, b, c]| Ok((fp_add(&fp_add(a, b)?, c)?, fp_add(a, &fp_add(b, c)?)?)),
        )
    }
}

pub struct AddCommutativity;

impl Named for AddCommutativity {
    fn name(&self) -> &str {
        "add-commutativity"
    }
}

impl Law for AddCommutativity {
    fn expectation(&self) -> Expectation {
        Expectation::Holds
    }

    fn check(&self, _model: &Model<'_>, samples: u64, rng: &mut ChaCha8Rng) -> LawReport {
        search(self, samples, rng, &[], |[a, b]| {
            Ok((fp_add(a, b)?, fp_add(b, a)?))
        })
    }
}

pub struct AddIdentity;

impl Named for AddIdentity {
    fn name(&self) -> &str {
        "add-identity"
    }
}

impl Law for AddIdentity {
    fn expectation(&self) -> Expectation {
        Expectation::Holds
    }

    fn check(&self, _model: &Model<'_>, samples: u64, rng: &mut ChaCha8Rng) -> LawReport {
        let max = FloatFormat::BINARY64.max_finite();
        let seeds = [
            [Rational::zero()],
            [FloatFormat::BINARY64.min_subnormal()],
            [max.clone()],
            [-max],
        ];
        search(self, samples, rng, &seeds, |[a]| {
            Ok((fp_add(a, &Rational::zero())?, a.clone()))
        })
    }
}

/// `to-fp` is the identity on its own results, checked through the model
/// so the conversions land in the ledger.
pub struct RoundIdempotence;

impl Named for RoundIdempotence {
    fn name(&self) -> &str {
        "round-idempotence"
    }
}

impl Law for RoundIdempotence {
    fn expectation(&self) -> Expectation {
        Expectation::Holds
    }

    fn check(&self, model: &Model<'_>, samples: u64, rng: &mut ChaCha8Rng) -> LawReport {
        let mut checked = 0;
        for _ in 0..samples {
            let n: i64 = rng.gen_range(-(1i64 << 62)..(1i64 << 62));
            let d: i64 = rng.gen_range(1..(1i64 << 62));
            let x = Rational::new(n, d)
                .expect("nonzero")
                .scale_pow2(rng.gen_range(-1100..1000));
            let Ok(once) = model.to_fp(&x) else { continue };
            let Ok(twice) = model.to_fp(&once) else {
                return report(
                    self,
                    LawOutcome::Counterexample {
                        inputs: vec![x],
                        lhs: once.clone(),
                        rhs: once,
                    },
                );
            };
            checked += 1;
            if once != twice {
                return report(
                    self,
                    LawOutcome::Counterexample {
                        inputs: vec![x],
                        lhs: twice,
                        rhs: once,
                    },
                );
            }
        }
        report(self, LawOutcome::Held { checked })
    }
}

pub type LawRegistry = Registry<dyn Law>;

pub fn builtin_laws() -> LawRegistry {
    let mut reg: LawRegistry = Registry::new();
    reg.register(Box::new(AddAssociativity));
    reg.register(Box::new(AddCommutativity));
    reg.register(Box::new(AddIdentity));
    reg.register(Box::new(RoundIdempotence));
    reg
}

/// Runs every selected law with its own stream derived from `seed`.
pub fn check_laws(model: &Model<'_>, laws: &[&dyn Law], samples: u64, seed: u64) -> Vec<LawReport> {
    laws.iter()
        .enumerate()
        .map(|(i, law)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            law.check(model, samples, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::Ledger;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn associativity_fails_on_tenths() {
        let ledger = Ledger::new();
        let model = Model::new(&ledger);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = AddAssociativity.check(&model, 10, &mut rng);
        assert!(r.as_expected());
        let LawOutcome::Counterexample { inputs, lhs, rhs } = &r.outcome else {
            panic!()
        };
        assert_eq!(inputs, &[tenths(1), tenths(2), tenths(3)]);
        assert_eq!(shortest_decimal(lhs), "0.6000000000000001");
        assert_eq!(shortest_decimal(rhs), "0.6");
        assert_eq!(
            r.to_string(),
            "add-associativity: counterexample [0.1, 0.2, 0.3]: 0.6000000000000001 /= 0.6 (ok)"
        );
    }

    #[test]
    fn associativity_fails_without_the_seed_too() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = search(&AddAssociativity, 1000, &mut rng, &[], |[a, b, c]| {
            Ok((fp_add(&fp_add(a, b)?, c)?, fp_add(a, &fp_add(b, c)?)?))
        });
        assert!(matches!(r.outcome, LawOutcome::Counterexample { .. }));
    }

    #[test]
    fn holding_laws_hold() {
        let ledger = Ledger::new();
        let model = Model::new(&ledger);
        let laws = builtin_laws();
        let selected = laws.select("all").unwrap();
        for r in check_laws(&model, &selected, 2000, 7) {
            assert!(r.as_expected(), "{r}");
            if let LawOutcome::Held { checked } = r.outcome {
                assert!(checked >= 1900, "{r}");
            }
        }
        assert!(!ledger.is_empty());
        assert!(ledger.check_consistency().is_consistent());
    }

    #[test]
    fn moderate_doubles_are_representable() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = moderate_double(&mut rng);
            assert_eq!(to_fp(&x).unwrap(), x);
        }
        assert_eq!(tenths(5), q("1/2"));
    }
}

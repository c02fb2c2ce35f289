use rafloat::ledger::Ledger;
use rafloat::oracle::{diff_check, Verdict};
use rafloat::parse_expr;

// Guard-satisfying expressions: both evaluators must agree bit for bit.
const CORPUS: &[&str] = &[
    "(fp+ (fp+ (to-fp 1/10) (to-fp 2/10)) (to-fp 3/10))",
    "(fp+ (to-fp 1/10) (fp+ (to-fp 2/10) (to-fp 3/10)))",
    "(fp+ (fp+ 0.1 0.2) 0.3)",
    "(to-fp 1/3)",
    "(to-fp 1/4)",
    "(fpp 1/4)",
    "(fpp 1/3)",
    "(fpp (to-fp 1/3))",
    "(= 1 (to-fp 1))",
    "(= 1 1.0)",
    "(= (to-fp 1/3) 1/3)",
    "(fp-sqrt 2)",
    "(fp-sqrt (to-fp 1/10))",
    "(fp-sqrt 0)",
    "(fp* (fp-sqrt 2) (fp-sqrt 2))",
    "(fp/ 1 3)",
    "(fp/ -1 3)",
    "(fp- 0.3 0.1)",
    "(fp+ 1 1/9007199254740992)",
    "(fp+ 1 3/9007199254740992)",
    "(fp* 1e-160 1e-160)",
    "(fp* 1e-200 1e-200)",
    "(fp/ 5e-324 2)",
    "(fp/ 1.5e-323 2)",
    "(fp- 2.2250738585072014e-308 2.225073858507201e-308)",
    "(to-fp 1.7976931348623157e308)",
    "(fp* 1e300 1e8)",
    "(fp- (fp* 0.1 3) 0.3)",
    "(to-fp 2.4703282292062328e-324)",
    "(to-fp 2.4703282292062327e-324)",
    "(to-fp 9007199254740993)",
    "(fp* -1 0)",
    "(fp- 5 5)",
];

#[test]
fn corpus_matches_the_host() {
    let ledger = Ledger::new();
    for text in CORPUS {
        let report = diff_check(&parse_expr(text).unwrap(), &ledger);
        assert_eq!(report.verdict, Verdict::Match, "{report}");
    }
    assert!(ledger.check_consistency().is_consistent());
}

#[test]
fn faults_pair_with_host_specials() {
    let ledger = Ledger::new();
    for text in [
        "(fp* 1e300 1e300)",
        "(fp/ 1 0)",
        "(fp/ 0 0)",
        "(fp-sqrt -2)",
        "(fp+ 1.7976931348623157e308 1e292)",
        "(to-fp 1e400)",
    ] {
        let report = diff_check(&parse_expr(text).unwrap(), &ledger);
        assert_eq!(report.verdict, Verdict::ModelFaultRawSpecial, "{report}");
    }
}

#[test]
fn unsoundness_demos_are_mismatches() {
    // the host coerces a non-representable operand instead of refusing it
    let ledger = Ledger::new();
    for text in ["(fp+ 1/3 0)", "(fp-sqrt 1/10)", "(fp* 1/3 3)"] {
        let report = diff_check(&parse_expr(text).unwrap(), &ledger);
        assert_eq!(report.verdict, Verdict::Mismatch, "{report}");
    }
}

#[test]
fn report_lines_use_hex_bits() {
    let report = diff_check(&parse_expr("(fp/ 1 3)").unwrap(), &Ledger::new());
    assert_eq!(
        report.to_string(),
        "MATCH\t(fp/ 1 3)\tmodel=0x3fd5555555555555\traw=0x3fd5555555555555"
    );
}

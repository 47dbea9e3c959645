use proptest::prelude::*;
use zeroledger::ledger::{
    case_assemble_head, case_assemble_single, case_assemble_split, delta_search, gap_profile, split_s, subcases,
    verify_all, verify_case, verify_tables, LedgerOptions, SearchOutcome, CASE1_PAPER_H, PAPER_TOLERANCE,
};
use zeroledger::Error;

const D: f64 = 0.291;

#[test]
fn case_three_arithmetic_at_stated_inputs() {
    let v = case_assemble_single(0.1061, 0.0837, 8.211, (-0.3 / D).exp());
    assert!(v <= 0.9015 + PAPER_TOLERANCE, "{v}");
    assert!((v - 0.9015).abs() <= PAPER_TOLERANCE);
}

#[test]
fn case_five_second_part_budget() {
    let second = case_assemble_head(&[], 0.0985, 0.3175, 0.0856, 8.030, 0.0956);
    assert!((second - 0.7730).abs() <= PAPER_TOLERANCE, "{second}");
    for i0 in 1..=2usize {
        let heads = vec![(0.0, 0.0); i0];
        let v = case_assemble_head(&heads, 0.0985, 0.3175, 0.0856, 8.030, 0.0956);
        assert!(v <= second - i0 as f64 * 0.0081 + 1e-12, "i0 = {i0}: {v}");
    }
}

#[test]
fn case_four_common_class_uses_the_doubled_head() {
    // (0.4808 + 0.1076)^2 + 0.0699 * 8.359
    let v = case_assemble_split(&[0.4808 + 0.1076], 0.0, 0.0, 0.0699, 8.359);
    assert!((v - 0.9307).abs() <= PAPER_TOLERANCE, "{v}");
}

#[test]
fn head_assembly_subtracts_counted_tails() {
    let split = case_assemble_split(&[0.5, 0.4], 0.1, 0.3, 0.08, 8.0);
    let head = case_assemble_head(&[(0.4, 0.1), (0.3, 0.1)], 0.1, 0.3, 0.08, 8.0, 0.09);
    assert!((split - head - 0.08 * 2.0 * 0.09).abs() < 1e-15);
}

proptest! {
    #[test]
    fn split_identity(lambdas in prop::collection::vec(0.0f64..8.0, 0..60), delta in 0.05f64..0.95, cap in 0.05f64..6.0) {
        let s = split_s(&lambdas, delta, cap).unwrap();
        prop_assert!((s.s - (s.t + s.r)).abs() <= 1e-15 * s.s.max(f64::MIN_POSITIVE));
        prop_assert!(s.t >= 0.0 && s.r >= 0.0);
    }
}

#[test]
fn split_domain_errors() {
    assert!(matches!(split_s(&[0.1, -0.2], D, 1.0), Err(Error::Domain(_))));
    assert!(split_s(&[0.1], 0.0, 1.0).is_err());
    assert!(split_s(&[f64::INFINITY], D, 1.0).is_err());
}

#[test]
fn gap_profiles() {
    assert_eq!(gap_profile(4, 0.01).unwrap().gap_rules.len(), 2);
    assert_eq!(gap_profile(6, 0.01).unwrap().lambda11_range.1, f64::INFINITY);
    assert!(gap_profile(1, 0.2).is_err());
    assert!(gap_profile(7, 0.01).is_err());
    assert_eq!(subcases(5).unwrap().len(), 3);
}

#[test]
fn tables_and_certificates_at_the_stated_delta() {
    let opts = LedgerOptions::default();
    let report = verify_all(D, 0.01, &opts).unwrap();
    assert!(report.tables_pass());
    assert!(report.main_cases_pass());
    assert!(report.overall_pass);
    for c in &report.cases {
        assert!(c.checks.values().all(|&ok| ok), "{} {}", c.case_id, c.subcase);
        if c.case_id != 1 {
            assert!(c.sum_bound <= c.paper_value.unwrap() + PAPER_TOLERANCE);
        }
    }
    let worst = report.cases.iter().map(|c| c.sum_bound).fold(0.0, f64::max);
    assert_eq!(report.c1, 1.0 - worst);

    // Per-case runs reuse the same bounds.
    let four = verify_case(4, D, 0.01, &opts).unwrap();
    let from_report: Vec<_> = report.cases.iter().filter(|c| c.case_id == 4).cloned().collect();
    assert_eq!(four, from_report);

    let rows = verify_tables(D, &opts).unwrap();
    assert_eq!(rows, report.tables);
}

#[test]
fn case_one_audit_fields() {
    let certs = verify_case(1, D, 0.01, &LedgerOptions::default()).unwrap();
    let c = &certs[0];
    assert_eq!(c.paper_value, Some(CASE1_PAPER_H));
    for key in ["h_boundary", "h_0.08", "h_c0", "constant", "decay_coefficient"] {
        assert!(c.components.contains_key(key), "{key}");
    }
    assert!(c.checks["convex branch"] && c.checks["decreasing branch"]);
    assert!(c.discrepancy.is_some());
}

#[test]
fn inputs_are_validated() {
    let opts = LedgerOptions::default();
    assert!(verify_all(1.0, 0.01, &opts).is_err());
    assert!(verify_all(D, 0.0, &opts).is_err());
    assert!(verify_all(D, 0.01, &LedgerOptions { eps_num: -1.0, ..opts }).is_err());
    assert!(verify_case(9, D, 0.01, &opts).is_err());
}

#[test]
fn narrow_search_is_a_single_probe() {
    let s = delta_search(0.291, 0.292, 1e-3, 0.01, &LedgerOptions::default()).unwrap();
    assert_eq!(s.outcome, SearchOutcome::SingleProbe);
    assert!(s.is_degenerate());
    assert_eq!(s.trace.len(), 1);
    assert_eq!(s.frontier, Some(0.291));
}

#[test]
fn search_with_both_ends_failing() {
    let s = delta_search(0.33, 0.36, 1e-2, 0.01, &LedgerOptions::default()).unwrap();
    assert_eq!(s.outcome, SearchOutcome::BothFail);
    assert!(s.frontier.is_none());
    assert!(s.is_degenerate());
}

//! The six-case verification of `sum_i S_i^2 <= 1 - c1`, table reproduction,
//! the delta frontier search and the adversarial configuration audit.

mod adversary;
mod book;
mod cases;
mod search;
mod tables;

use serde::Serialize;

pub use adversary::{
    adversary_audit, hypotheses, nominal_configuration, search as adversary_search, AdversaryOutcome, Configuration,
    Hypothesis,
};
pub use book::{evaluate, BoundBook, Evidence, Quantity};
pub use cases::{
    case1_audit, case_assemble_head, case_assemble_single, case_assemble_split, case_quantities, certify_case,
    certify_subcase, gap_profile, subcase_caps, subcases, Assembly, CaseCertificate, CaseGapProfile, GapRule, HeadR,
    RuleMode, Subcase, SubcaseCaps, CASE1_CAP, CASE1_HI, CASE1_PAPER_H,
};
pub use search::{delta_search, DeltaProbe, DeltaSearch, SearchOutcome};
pub use tables::{reproduce_tables, table_quantities, TableEntry, TableRow, TABLE};

use crate::density::STAIRCASE_POINTS;
use crate::error::{ensure_finite, Error, Result};

/// One-sided tolerance for comparisons with tabulated values.
pub const PAPER_TOLERANCE: f64 = 5e-4;
/// Global certification slack: a certificate passes when `bound + eps_num < 1`.
pub const DEFAULT_EPS_NUM: f64 = 1e-9;
pub const DEFAULT_C0: f64 = 0.01;
pub const CASE_IDS: [u8; 6] = [1, 2, 3, 4, 5, 6];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerOptions {
    pub eps_num: f64,
    pub grid_points: usize,
}

impl Default for LedgerOptions {
    fn default() -> Self {
        Self {
            eps_num: DEFAULT_EPS_NUM,
            grid_points: STAIRCASE_POINTS,
        }
    }
}

impl LedgerOptions {
    fn validate(&self) -> Result<()> {
        ensure_finite("eps_num", self.eps_num)?;
        if self.eps_num < 0.0 {
            return Err(Error::Domain(format!(
                "eps_num must be non-negative, got {}",
                self.eps_num
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::Domain(format!(
                "grid_points must be at least 2, got {}",
                self.grid_points
            )));
        }
        Ok(())
    }
}

/// `(T, R, S)` for one class of zeros: `S = sum e^(-lambda/delta)`,
/// `T = sum e^(-max(lambda, Lambda)/delta)`, `R = S - T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Split {
    pub t: f64,
    pub r: f64,
    pub s: f64,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

pub fn split_s(lambdas: &[f64], delta: f64, cap: f64) -> Result<Split> {
    ensure_finite("delta", delta)?;
    ensure_finite("Lambda", cap)?;
    if !(delta > 0.0) || !(cap > 0.0) {
        return Err(Error::Domain(format!(
            "need delta > 0 and Lambda > 0, got {delta}, {cap}"
        )));
    }
    if let Some(&bad) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::Domain(format!(
            "zeros must be finite and non-negative, got {bad}"
        )));
    }
    Ok(split_unchecked(lambdas, 1.0 / delta, cap))
}

pub(crate) fn split_unchecked(lambdas: &[f64], delta_inv: f64, cap: f64) -> Split {
    let e_cap = (-delta_inv * cap).exp();
    let s = compensated_sum(lambdas.iter().map(|l| (-delta_inv * l).exp()));
    let t = compensated_sum(
        lambdas
            .iter()
            .map(|&l| if l < cap { e_cap } else { (-delta_inv * l).exp() }),
    );
    let r = compensated_sum(
        lambdas
            .iter()
            .filter(|&&l| l < cap)
            .map(|l| (-delta_inv * l).exp() - e_cap),
    );
    Split { t, r, s }
}

/// Certificates for one case, computing just the bounds it needs.
pub fn verify_case(case_id: u8, delta: f64, c0: f64, opts: &LedgerOptions) -> Result<Vec<CaseCertificate>> {
    check_inputs(delta, c0)?;
    opts.validate()?;
    let book = BoundBook::compute(delta, &case_quantities(case_id)?, opts.grid_points);
    certify_case(case_id, c0, &book, opts.eps_num)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub delta: f64,
    pub c0: f64,
    pub eps_num: f64,
    pub tables: Vec<TableRow>,
    pub cases: Vec<CaseCertificate>,
    /// `1 - max sum_bound` over all certificates.
    pub c1: f64,
    pub overall_pass: bool,
    pub delta_search_trace: Option<Vec<DeltaProbe>>,
}

impl VerificationReport {
    pub fn tables_pass(&self) -> bool {
        self.tables.iter().all(|t| t.pass)
    }

    /// Certificates for cases (2) to (6).
    pub fn main_cases_pass(&self) -> bool {
        self.cases.iter().filter(|c| c.case_id != 1).all(|c| c.pass)
    }
}

fn check_inputs(delta: f64, c0: f64) -> Result<()> {
    ensure_finite("delta", delta)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    cases::check_c0(c0)
}

pub(crate) fn all_quantities(include_tables: bool) -> Vec<Quantity> {
    let mut q: Vec<Quantity> = CASE_IDS
        .iter()
        .flat_map(|&c| case_quantities(c).expect("valid case id"))
        .collect();
    if include_tables {
        q.extend(table_quantities());
    }
    q
}

pub(crate) fn report_from_book(
    book: &BoundBook,
    c0: f64,
    opts: &LedgerOptions,
    include_tables: bool,
) -> VerificationReport {
    let cases: Vec<CaseCertificate> = CASE_IDS
        .iter()
        .flat_map(|&c| certify_case(c, c0, book, opts.eps_num).expect("valid case id"))
        .collect();
    let worst = cases.iter().map(|c| c.sum_bound).fold(f64::NEG_INFINITY, f64::max);
    VerificationReport {
        delta: book.delta,
        c0,
        eps_num: opts.eps_num,
        tables: if include_tables {
            reproduce_tables(book)
        } else {
            Vec::new()
        },
        overall_pass: cases.iter().all(|c| c.pass),
        c1: 1.0 - worst,
        cases,
        delta_search_trace: None,
    }
}

/// Tables and all six cases at one `delta`. Failures are reported, not thrown;
/// only invalid inputs are errors.
pub fn verify_all(delta: f64, c0: f64, opts: &LedgerOptions) -> Result<VerificationReport> {
    check_inputs(delta, c0)?;
    opts.validate()?;
    let book = BoundBook::compute(delta, &all_quantities(true), opts.grid_points);
    Ok(report_from_book(&book, c0, opts, true))
}

/// Recompute only the tabulated constants.
pub fn verify_tables(delta: f64, opts: &LedgerOptions) -> Result<Vec<TableRow>> {
    ensure_finite("delta", delta)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    opts.validate()?;
    let book = BoundBook::compute(delta, &table_quantities(), opts.grid_points);
    Ok(reproduce_tables(&book))
}

//! Bisection for the largest (or smallest) `delta` at which cases (2)-(6) certify.

use serde::Serialize;

use super::book::BoundBook;
use super::{all_quantities, report_from_book, LedgerOptions};
use crate::error::{ensure_finite, Error, Result};

/// Interior points at which the monotonicity of the pass/fail pattern is checked.
pub const MONOTONICITY_PROBES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaProbe {
    pub delta: f64,
    pub pass: bool,
    /// Smallest `1 - sum_bound` over the certificates of cases (2) to (6).
    pub worst_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchOutcome {
    /// The endpoints disagree; `frontier` is a passing delta within `tol` of a failing one.
    Bracketed,
    BothPass,
    BothFail,
    /// `hi - lo <= tol`: a single probe at `lo`.
    SingleProbe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaSearch {
    pub outcome: SearchOutcome,
    /// Passing delta closest to the pass/fail boundary, when one was found.
    pub frontier: Option<f64>,
    /// True when passing values lie below the frontier.
    pub passes_below: Option<bool>,
    /// Endpoint evaluations followed by bisection steps.
    pub trace: Vec<DeltaProbe>,
    pub monotonicity_probes: Vec<DeltaProbe>,
    pub monotone: bool,
}

impl DeltaSearch {
    pub fn is_degenerate(&self) -> bool {
        self.outcome != SearchOutcome::Bracketed
    }
}

fn probe(delta: f64, c0: f64, opts: &LedgerOptions) -> DeltaProbe {
    let book = BoundBook::compute(delta, &all_quantities(false), opts.grid_points);
    let report = report_from_book(&book, c0, opts, false);
    let main: Vec<_> = report.cases.iter().filter(|c| c.case_id != 1).collect();
    DeltaProbe {
        delta,
        pass: main.iter().all(|c| c.pass),
        worst_margin: main.iter().map(|c| c.margin()).fold(f64::INFINITY, f64::min),
    }
}

pub fn delta_search(lo: f64, hi: f64, tol: f64, c0: f64, opts: &LedgerOptions) -> Result<DeltaSearch> {
    for (n, v) in [("lo", lo), ("hi", hi), ("tol", tol)] {
        ensure_finite(n, v)?;
    }
    if !(lo > 0.0 && hi < 1.0 && lo < hi) {
        return Err(Error::Domain(format!("need 0 < lo < hi < 1, got [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    super::cases::check_c0(c0)?;
    opts.validate()?;

    // Relative slack so that e.g. (0.291, 0.292, 1e-3) counts as a single probe despite rounding.
    if hi - lo <= tol * (1.0 + 1e-9) {
        let p = probe(lo, c0, opts);
        return Ok(DeltaSearch {
            outcome: SearchOutcome::SingleProbe,
            frontier: p.pass.then_some(lo),
            passes_below: None,
            trace: vec![p],
            monotonicity_probes: Vec::new(),
            monotone: true,
        });
    }

    let (p_lo, p_hi) = (probe(lo, c0, opts), probe(hi, c0, opts));
    let mut trace = vec![p_lo, p_hi];
    let interior: Vec<DeltaProbe> = (1..=MONOTONICITY_PROBES)
        .map(|i| probe(lo + (hi - lo) * i as f64 / (MONOTONICITY_PROBES + 1) as f64, c0, opts))
        .collect();
    let mut pattern: Vec<bool> = vec![p_lo.pass];
    pattern.extend(interior.iter().map(|p| p.pass));
    pattern.push(p_hi.pass);
    let changes = pattern.windows(2).filter(|w| w[0] != w[1]).count();
    let monotone = changes <= 1;

    if p_lo.pass == p_hi.pass {
        return Ok(DeltaSearch {
            outcome: if p_lo.pass {
                SearchOutcome::BothPass
            } else {
                SearchOutcome::BothFail
            },
            frontier: None,
            passes_below: None,
            trace,
            monotonicity_probes: interior,
            monotone,
        });
    }
    let passes_below = p_lo.pass;
    let (mut good, mut bad) = if passes_below { (lo, hi) } else { (hi, lo) };
    while (bad - good).abs() > tol {
        let mid = 0.5 * (good + bad);
        let p = probe(mid, c0, opts);
        trace.push(p);
        if p.pass {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(DeltaSearch {
        outcome: SearchOutcome::Bracketed,
        frontier: Some(good),
        passes_below: Some(passes_below),
        trace,
        monotonicity_probes: interior,
        monotone,
    })
}

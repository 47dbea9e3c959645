//! The six-case assembly of `sum_i S_i^2` from tail and head bounds.

use std::collections::BTreeMap;

use serde::Serialize;

use super::book::{BoundBook, Evidence, Quantity};
use super::PAPER_TOLERANCE;
use crate::error::{ensure_finite, Error, Result};

/// Threshold beyond which case (1) uses `Lambda = max(3.08, log(1/lambda_11))`.
pub const CASE1_CAP: f64 = 3.08;
/// Upper end of case (1).
pub const CASE1_HI: f64 = 0.08;

/// "At most `count_limit` terms of the zero set lie in `lambda <= range_end`."
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRule {
    pub count_limit: u32,
    pub range_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseGapProfile {
    pub case_id: u8,
    /// Closed range for the smallest zero `lambda_11`; `hi` is infinite for case (6).
    pub lambda11_range: (f64, f64),
    /// At least one of these holds.
    pub gap_rules: Vec<GapRule>,
    /// In case (1) the single-term range extends to `log(1/lambda_11)` when that exceeds 3.08.
    pub extends_to_log_inverse: bool,
}

pub fn gap_profile(case_id: u8, c0: f64) -> Result<CaseGapProfile> {
    let rule = |count_limit, range_end| GapRule { count_limit, range_end };
    let (range, rules) = match case_id {
        1 => {
            check_c0(c0)?;
            ((c0, CASE1_HI), vec![rule(1, CASE1_CAP)])
        }
        2 => ((0.08, 0.3), vec![rule(1, 1.58)]),
        3 => ((0.3, 0.4), vec![rule(1, 1.29)]),
        4 => ((0.4, 0.5), vec![rule(1, 1.08), rule(2, 1.36)]),
        5 => ((0.5, 0.6), vec![rule(1, 0.92), rule(2, 0.97)]),
        6 => ((0.6, f64::INFINITY), vec![rule(2, 0.702)]),
        _ => return Err(Error::Domain(format!("case id must be 1..=6, got {case_id}"))),
    };
    Ok(CaseGapProfile {
        case_id,
        lambda11_range: range,
        gap_rules: rules,
        extends_to_log_inverse: case_id == 1,
    })
}

pub(crate) fn check_c0(c0: f64) -> Result<()> {
    ensure_finite("c0", c0)?;
    if !(c0 > 0.0 && c0 <= CASE1_HI) {
        return Err(Error::Domain(format!("c0 must lie in (0, 0.08], got {c0}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseCertificate {
    pub case_id: u8,
    pub subcase: String,
    /// Upper bound on `sum_i S_i^2`; infinite when a constituent bound is unavailable.
    pub sum_bound: f64,
    pub components: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
    pub pass: bool,
    pub paper_value: Option<f64>,
    pub discrepancy: Option<String>,
}

impl CaseCertificate {
    /// `1 - sum_bound`.
    pub fn margin(&self) -> f64 {
        1.0 - self.sum_bound
    }
}

/// `(R1 + T1)^2 + maxT_rest * sumT`: one isolated term, nothing else below `Lambda`.
pub fn case_assemble_single(t1: f64, max_t_rest: f64, sum_t: f64, r1: f64) -> f64 {
    (r1 + t1).powi(2) + max_t_rest * sum_t
}

/// `sum_{i<=i0} S_i^2 + maxR sumR + maxT (sumT + 2 sumR)` with `S_i` bounded
/// directly and the `i > i0` tail expanded.
pub fn case_assemble_split(head_s: &[f64], max_r_rest: f64, sum_r_rest: f64, max_t_rest: f64, sum_t: f64) -> f64 {
    head_s.iter().map(|s| s * s).sum::<f64>() + max_r_rest * sum_r_rest + max_t_rest * (sum_t + 2.0 * sum_r_rest)
}

/// As [`case_assemble_split`] with `S_i = R_i + T_i`, minus
/// `maxT_rest * i0 * T_head_cap`, the head tails already counted in `sumT`.
/// Valid when every head `T_i` lies in `[0, T_head_cap]` and `T_head_cap >= maxT_rest`.
pub fn case_assemble_head(
    heads: &[(f64, f64)],
    max_r_rest: f64,
    sum_r_rest: f64,
    max_t_rest: f64,
    sum_t: f64,
    t_head_cap: f64,
) -> f64 {
    let s: Vec<f64> = heads.iter().map(|(r, t)| r + t).collect();
    case_assemble_split(&s, max_r_rest, sum_r_rest, max_t_rest, sum_t) - max_t_rest * heads.len() as f64 * t_head_cap
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Assembly {
    Single,
    Split,
    HeadSubtract,
}

/// Bound on `R_i` for a head class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadR {
    /// `count` terms at `lambda` or above: `count (e^(-lambda/delta) - e^(-Lambda/delta))`.
    Terms {
        lambda: f64,
        count: u32,
    },
    Bound(Quantity),
}

/// How terms below the rule's range end may be distributed over classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleMode {
    AtMost { limit: u32, range_end: f64 },
    TwoDistinct { range_end: f64 },
    TwoCommon { range_end: f64 },
}

/// Recipe for one subcase certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subcase {
    pub case_id: u8,
    pub label: &'static str,
    pub cap: f64,
    pub lambda11_lo: f64,
    pub heads: usize,
    pub head_r: Option<HeadR>,
    pub head_t: Option<Quantity>,
    pub rest_r_max: Option<Quantity>,
    pub rest_r_sum: Option<Quantity>,
    pub rest_t: Quantity,
    pub t_sum: Quantity,
    pub assembly: Assembly,
    pub rule: RuleMode,
    pub paper: f64,
}

fn stair(cap: f64, lambda0: f64) -> Quantity {
    Quantity::TailStaircase { cap, lambda0 }
}

fn general(cap: f64) -> Quantity {
    Quantity::TailGeneral { cap }
}

fn head_g(cap: f64, l1: f64, l2: f64, ls: f64) -> Quantity {
    Quantity::HeadGeneral {
        cap,
        lambda1: l1,
        lambda2: l2,
        lambda_star: ls,
    }
}

fn head_r(cap: f64, l1: f64, l2: f64, ls: f64) -> Quantity {
    Quantity::HeadRestricted {
        cap,
        lambda1: l1,
        lambda2: l2,
        lambda_star: ls,
    }
}

/// Subcase recipes for cases (2) to (6).
pub fn subcases(case_id: u8) -> Result<Vec<Subcase>> {
    let one = |cap: f64, lo: f64, rest_l0: f64, paper: f64, label| Subcase {
        case_id,
        label,
        cap,
        lambda11_lo: lo,
        heads: 1,
        head_r: Some(HeadR::Terms { lambda: lo, count: 1 }),
        head_t: Some(stair(cap, lo)),
        rest_r_max: None,
        rest_r_sum: None,
        rest_t: stair(cap, rest_l0),
        t_sum: general(cap),
        assembly: Assembly::Single,
        rule: RuleMode::AtMost {
            limit: 1,
            range_end: cap,
        },
        paper,
    };
    Ok(match case_id {
        2 => vec![one(1.58, 0.08, 1.58, 0.8919, "one term")],
        3 => vec![one(1.29, 0.3, 1.29, 0.9015, "one term")],
        4 => {
            let cap = 1.273;
            let base = Subcase {
                case_id,
                label: "at most one term up to 1.08",
                cap,
                lambda11_lo: 0.4,
                heads: 1,
                head_r: Some(HeadR::Bound(head_r(cap, 0.4, 1.08, 1.08))),
                head_t: Some(stair(cap, 0.4)),
                rest_r_max: Some(head_r(cap, 1.08, 1.08, 1.08)),
                rest_r_sum: Some(head_g(cap, 1.08, 1.08, 1.08)),
                rest_t: stair(cap, 1.08),
                t_sum: general(cap),
                assembly: Assembly::Split,
                rule: RuleMode::AtMost {
                    limit: 1,
                    range_end: 1.08,
                },
                paper: 0.97,
            };
            let distinct = Subcase {
                label: "two terms up to 1.36, distinct classes",
                heads: 2,
                head_r: Some(HeadR::Terms { lambda: 0.4, count: 1 }),
                rest_r_max: None,
                rest_r_sum: None,
                rest_t: stair(1.36, 1.36),
                rule: RuleMode::TwoDistinct { range_end: 1.36 },
                paper: 0.8266,
                ..base.clone()
            };
            let common = Subcase {
                label: "two terms up to 1.36, common class",
                heads: 1,
                head_r: Some(HeadR::Terms { lambda: 0.4, count: 2 }),
                rule: RuleMode::TwoCommon { range_end: 1.36 },
                paper: 0.9307,
                ..distinct.clone()
            };
            vec![base, distinct, common]
        }
        5 => {
            let cap = 1.311;
            let one = Subcase {
                case_id,
                label: "at most one term up to 0.92",
                cap,
                lambda11_lo: 0.5,
                heads: 1,
                head_r: Some(HeadR::Bound(head_r(cap, 0.5, 0.92, 0.92))),
                head_t: Some(stair(cap, 0.5)),
                rest_r_max: Some(head_r(cap, 0.92, 0.92, 0.92)),
                rest_r_sum: Some(head_g(cap, 0.92, 0.92, 0.92)),
                rest_t: stair(cap, 0.92),
                t_sum: general(cap),
                assembly: Assembly::Split,
                rule: RuleMode::AtMost {
                    limit: 1,
                    range_end: 0.92,
                },
                paper: 0.9550,
            };
            let common = Subcase {
                label: "two terms up to 0.97, common class",
                head_r: Some(HeadR::Bound(head_r(cap, 0.5, 0.5, 0.97))),
                rest_r_max: Some(head_r(cap, 0.97, 0.97, 0.97)),
                rest_r_sum: Some(head_g(cap, 0.97, 0.97, 0.97)),
                rest_t: stair(cap, 0.97),
                assembly: Assembly::HeadSubtract,
                rule: RuleMode::TwoCommon { range_end: 0.97 },
                paper: 0.9737,
                ..one.clone()
            };
            let distinct = Subcase {
                label: "two terms up to 0.97, distinct classes",
                heads: 2,
                head_r: Some(HeadR::Bound(head_r(cap, 0.5, 0.97, 0.97))),
                rule: RuleMode::TwoDistinct { range_end: 0.97 },
                paper: 0.9950,
                ..common.clone()
            };
            vec![one, common, distinct]
        }
        6 => {
            let cap = 1.348;
            vec![Subcase {
                case_id,
                label: "at most two terms up to 0.702",
                cap,
                lambda11_lo: 0.6,
                heads: 0,
                head_r: None,
                head_t: None,
                rest_r_max: Some(head_r(cap, 0.6, 0.6, 0.702)),
                rest_r_sum: Some(head_g(cap, 0.6, 0.6, 0.702)),
                rest_t: stair(cap, 0.6),
                t_sum: general(cap),
                assembly: Assembly::HeadSubtract,
                rule: RuleMode::AtMost {
                    limit: 2,
                    range_end: 0.702,
                },
                paper: 0.9862,
            }]
        }
        1 => return Err(Error::Domain("case (1) is certified by case1_audit".into())),
        _ => return Err(Error::Domain(format!("case id must be 1..=6, got {case_id}"))),
    })
}

impl Subcase {
    pub fn quantities(&self) -> Vec<Quantity> {
        let mut q = vec![self.rest_t, self.t_sum];
        if let Some(HeadR::Bound(h)) = self.head_r {
            q.push(h);
        }
        q.extend(self.head_t);
        q.extend(self.rest_r_max);
        q.extend(self.rest_r_sum);
        q
    }
}

/// Numeric caps a subcase certificate rests on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubcaseCaps {
    pub r_head: f64,
    pub t_head: f64,
    pub r_rest_max: f64,
    pub r_rest_sum: f64,
    pub t_rest: f64,
    pub t_sum: f64,
}

pub fn subcase_caps(sub: &Subcase, book: &BoundBook) -> Result<SubcaseCaps> {
    let delta_inv = 1.0 / book.delta;
    let r_head = match sub.head_r {
        Some(HeadR::Terms { lambda, count }) => {
            count as f64 * ((-delta_inv * lambda).exp() - (-delta_inv * sub.cap).exp())
        }
        Some(HeadR::Bound(q)) => book.value(&q)?,
        None => 0.0,
    };
    let opt = |q: Option<Quantity>| q.map(|q| book.value(&q)).transpose().map(|v| v.unwrap_or(0.0));
    Ok(SubcaseCaps {
        r_head,
        t_head: opt(sub.head_t)?,
        r_rest_max: opt(sub.rest_r_max)?,
        r_rest_sum: opt(sub.rest_r_sum)?,
        t_rest: book.value(&sub.rest_t)?,
        t_sum: book.value(&sub.t_sum)?,
    })
}

fn assemble(sub: &Subcase, c: &SubcaseCaps) -> f64 {
    match sub.assembly {
        Assembly::Single => case_assemble_single(c.t_head, c.t_rest, c.t_sum, c.r_head),
        Assembly::Split => {
            let s = vec![c.r_head + c.t_head; sub.heads];
            case_assemble_split(&s, c.r_rest_max, c.r_rest_sum, c.t_rest, c.t_sum)
        }
        Assembly::HeadSubtract => {
            let heads = vec![(c.r_head, c.t_head); sub.heads];
            case_assemble_head(&heads, c.r_rest_max, c.r_rest_sum, c.t_rest, c.t_sum, c.t_head)
        }
    }
}

fn compare_note(bound: f64, paper: f64) -> Option<String> {
    if !bound.is_finite() || (bound - paper).abs() <= PAPER_TOLERANCE {
        None
    } else if bound > paper {
        Some(format!("computed {bound:.6} exceeds the stated {paper}"))
    } else {
        Some(format!("computed {bound:.6} is below the stated {paper}"))
    }
}

fn failed(case_id: u8, subcase: &str, paper: f64, err: &Error) -> CaseCertificate {
    CaseCertificate {
        case_id,
        subcase: subcase.to_string(),
        sum_bound: f64::INFINITY,
        components: BTreeMap::new(),
        checks: BTreeMap::new(),
        pass: false,
        paper_value: Some(paper),
        discrepancy: Some(format!("constituent bound unavailable: {err}")),
    }
}

pub fn certify_subcase(sub: &Subcase, book: &BoundBook, eps_num: f64) -> CaseCertificate {
    let caps = match subcase_caps(sub, book) {
        Ok(c) => c,
        Err(e) => return failed(sub.case_id, sub.label, sub.paper, &e),
    };
    let mut slacks_ok = true;
    for q in sub.quantities() {
        match book.get(&q) {
            Ok(ev) => slacks_ok &= ev.min_slack() >= 0.0,
            Err(e) => return failed(sub.case_id, sub.label, sub.paper, &e),
        }
    }
    let bound = assemble(sub, &caps);
    let mut components = BTreeMap::new();
    components.insert("Lambda".to_string(), sub.cap);
    components.insert("sumT".to_string(), caps.t_sum);
    components.insert("maxT".to_string(), caps.t_rest);
    if sub.heads > 0 {
        components.insert("T1".to_string(), caps.t_head);
        components.insert("R1".to_string(), caps.r_head);
    }
    if sub.rest_r_max.is_some() {
        components.insert("maxR".to_string(), caps.r_rest_max);
        components.insert("sumR".to_string(), caps.r_rest_sum);
    }
    components.insert("i0".to_string(), sub.heads as f64);
    let mut checks = BTreeMap::new();
    checks.insert("constraint slacks non-negative".to_string(), slacks_ok);
    if sub.assembly == Assembly::HeadSubtract && sub.heads > 0 {
        // (R + T)^2 - maxT T is convex in T and at least R^2 at T = T_head
        // once T_head >= maxT, so the upper bound may be substituted.
        checks.insert("T_head >= maxT".to_string(), caps.t_head >= caps.t_rest);
    }
    let checks_ok = checks.values().all(|&b| b);
    let mut discrepancy = compare_note(bound, sub.paper);
    if let Some(HeadR::Bound(Quantity::HeadRestricted {
        cap,
        lambda1,
        lambda2,
        lambda_star,
    })) = sub.head_r
    {
        if sub.case_id == 5 && sub.heads == 1 && lambda2 == 0.92 {
            let note = format!(
                "R1 is the restricted head bound at ({cap}, {lambda1}, {lambda2}, {lambda_star}) = {:.4}, against 0.2920 stated",
                caps.r_head
            );
            discrepancy = Some(match discrepancy {
                Some(d) => format!("{d}; {note}"),
                None => note,
            });
        }
    }
    CaseCertificate {
        case_id: sub.case_id,
        subcase: sub.label.to_string(),
        sum_bound: bound,
        components,
        checks,
        pass: checks_ok && bound.is_finite() && bound + eps_num < 1.0,
        paper_value: Some(sub.paper),
        discrepancy,
    }
}

/// Quantities case (1) draws on.
pub fn case1_quantities() -> Vec<Quantity> {
    vec![
        Quantity::TailDecay { anchor: CASE1_CAP },
        Quantity::TailGeneral { cap: CASE1_CAP },
    ]
}

/// Stated value of `h(e^-3.08)`.
pub const CASE1_PAPER_H: f64 = 0.951;
/// Stated constant in `h`.
pub const CASE1_PAPER_CONSTANT: f64 = 134.0;
/// Stated `max_i T_i <= 50 e^(-2 Lambda)` and `sum_i T_i <= 0.675`.
pub const CASE1_PAPER_DECAY: f64 = 50.0;
pub const CASE1_PAPER_SUM_T: f64 = 0.675;
/// Sample count for the branch shape checks.
const CASE1_SAMPLES: usize = 1000;

fn case1_h(a: f64, constant: f64, lam: f64) -> f64 {
    let cap = CASE1_CAP.max(-lam.ln());
    (-2.0 * a * lam).exp() + constant * (-2.0 * cap).exp()
}

/// Case (1): `sum S_i^2 <= h(lambda_11) = e^(-2 lambda_11 / delta) + C e^(-2 Lambda)`
/// with `Lambda = max(3.08, log(1/lambda_11))` and `C = c (2 + sumT)`, where
/// `max_i T_i <= c e^(-2 Lambda)`.
pub fn case1_audit(delta: f64, c0: f64, book: &BoundBook, eps_num: f64) -> CaseCertificate {
    let label = "one term up to max(3.08, log 1/lambda)";
    if let Err(e) = check_c0(c0) {
        return failed(1, label, CASE1_PAPER_H, &e);
    }
    let (decay, sum_t) = match (book.get(&case1_quantities()[0]), book.get(&case1_quantities()[1])) {
        (Ok(Evidence::Decay(d)), Ok(t)) => (d.clone(), t.clone()),
        (Err(e), _) | (_, Err(e)) => return failed(1, label, CASE1_PAPER_H, &e),
        _ => {
            return failed(
                1,
                label,
                CASE1_PAPER_H,
                &Error::Precondition("unexpected evidence type".into()),
            );
        }
    };
    let a = 1.0 / delta;
    let constant = decay.coefficient * (2.0 + sum_t.value());
    let boundary = (-CASE1_CAP).exp();
    let h = |lam: f64| case1_h(a, constant, lam);
    let h_paper = |lam: f64| case1_h(a, CASE1_PAPER_CONSTANT, lam);

    // Convex branch on [c0, e^-3.08]: h = e^(-2 a l) + C l^2.
    let convex_hi = boundary.min(CASE1_HI);
    let convex_ok = c0 >= convex_hi
        || (0..=CASE1_SAMPLES).all(|i| {
            let l = c0 + (convex_hi - c0) * i as f64 / CASE1_SAMPLES as f64;
            4.0 * a * a * (-2.0 * a * l).exp() + 2.0 * constant > 0.0
        });
    // Decreasing branch on [e^-3.08, 0.08]: Lambda fixed at 3.08.
    let dec_lo = boundary.max(c0);
    let decreasing_ok = (0..=CASE1_SAMPLES).all(|i| {
        let l = dec_lo + (CASE1_HI - dec_lo) * i as f64 / CASE1_SAMPLES as f64;
        -2.0 * a * (-2.0 * a * l).exp() < 0.0
    });
    let sup = if c0 < boundary { h(c0).max(h(boundary)) } else { h(c0) };
    let sampled_max = (0..=CASE1_SAMPLES)
        .map(|i| h(c0 + (CASE1_HI - c0) * i as f64 / CASE1_SAMPLES as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    let sup_ok = sampled_max <= sup * (1.0 + 1e-12);

    let mut components = BTreeMap::new();
    components.insert("decay_coefficient".to_string(), decay.coefficient);
    components.insert("sumT".to_string(), sum_t.value());
    components.insert("constant".to_string(), constant);
    components.insert("h_boundary".to_string(), h(boundary));
    components.insert("h_0.08".to_string(), h(CASE1_HI));
    components.insert("h_c0".to_string(), h(c0));
    components.insert("constant_stated".to_string(), CASE1_PAPER_CONSTANT);
    components.insert(
        "constant_stated_audit".to_string(),
        CASE1_PAPER_DECAY * (2.0 + CASE1_PAPER_SUM_T),
    );
    components.insert("h_boundary_stated_constant".to_string(), h_paper(boundary));
    components.insert("h_0.08_stated_constant".to_string(), h_paper(CASE1_HI));
    components.insert("h_c0_stated_constant".to_string(), h_paper(c0));
    components.insert("h_boundary_stated".to_string(), CASE1_PAPER_H);

    let mut checks = BTreeMap::new();
    checks.insert("convex branch".to_string(), convex_ok);
    checks.insert("decreasing branch".to_string(), decreasing_ok);
    checks.insert("sampled sup within endpoints".to_string(), sup_ok);
    checks.insert("decay rate slack non-negative".to_string(), decay.rate_slack >= 0.0);
    checks.insert(
        "stated constant covers 50 (2 + 0.675)".to_string(),
        CASE1_PAPER_CONSTANT >= CASE1_PAPER_DECAY * (2.0 + CASE1_PAPER_SUM_T),
    );

    let mut notes = Vec::new();
    if (h(boundary) - CASE1_PAPER_H).abs() > 5e-3 || (h_paper(boundary) - CASE1_PAPER_H).abs() > 5e-3 {
        notes.push(format!(
            "with A = 1/delta, h(e^-3.08) = {:.6} using the constant 134 and {:.6} using the recomputed constant {:.4}; stated {}",
            h_paper(boundary),
            h(boundary),
            constant,
            CASE1_PAPER_H
        ));
    }
    let pass = convex_ok && decreasing_ok && sup_ok && decay.rate_slack >= 0.0 && sup + eps_num < 1.0;
    CaseCertificate {
        case_id: 1,
        subcase: label.to_string(),
        sum_bound: sup,
        components,
        checks,
        pass,
        paper_value: Some(CASE1_PAPER_H),
        discrepancy: if notes.is_empty() { None } else { Some(notes.join("; ")) },
    }
}

pub fn case_quantities(case_id: u8) -> Result<Vec<Quantity>> {
    if case_id == 1 {
        return Ok(case1_quantities());
    }
    Ok(subcases(case_id)?.iter().flat_map(Subcase::quantities).collect())
}

/// Certificates for one case from an already computed book.
pub fn certify_case(case_id: u8, c0: f64, book: &BoundBook, eps_num: f64) -> Result<Vec<CaseCertificate>> {
    if case_id == 1 {
        return Ok(vec![case1_audit(book.delta, c0, book, eps_num)]);
    }
    Ok(subcases(case_id)?
        .iter()
        .map(|s| certify_subcase(s, book, eps_num))
        .collect())
}

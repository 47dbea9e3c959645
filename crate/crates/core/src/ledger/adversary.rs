//! Random-restart hill climbing over explicit zero configurations, looking
//! for a layout that beats a case certificate while respecting every
//! hypothesis the certificate rests on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::book::{BoundBook, Evidence, Quantity};
use super::cases::{
    case1_audit, case1_quantities, certify_subcase, subcase_caps, subcases, RuleMode, CASE1_CAP, CASE1_HI,
};
use super::{check_inputs, split_unchecked, LedgerOptions};
use crate::error::{Error, Result};

/// Zeros are placed in `[lambda11_lo, ZERO_MAX]`.
pub const ZERO_MAX: f64 = 8.0;
/// Upper end for `lambda_11` when the case range is unbounded.
const LAMBDA11_MAX: f64 = 3.0;
const MAX_CLASSES: usize = 160;
const MAX_CLASS_SIZE: usize = 64;
/// Hill-climbing moves per restart.
const CLIMB_STEPS: usize = 40;
const SEED: u64 = 0x5eed_0291;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TCap {
    Fixed(f64),
    /// `coefficient * e^(-2 Lambda)`.
    Decay(f64),
}

impl TCap {
    fn at(&self, cap: f64) -> f64 {
        match *self {
            TCap::Fixed(v) => v,
            TCap::Decay(c) => c * (-2.0 * cap).exp(),
        }
    }
}

/// Count bounds `#{lambda_j <= points[k]} <= counts[k]` for a single class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountGrid {
    pub points: Vec<f64>,
    pub counts: Vec<f64>,
}

impl CountGrid {
    fn from_book(book: &BoundBook, q: Option<Quantity>) -> Option<Self> {
        match book.get(&q?) {
            Ok(Evidence::Tail(t)) => t.staircase().map(|g| Self {
                points: g.points.clone(),
                counts: g.counts.clone(),
            }),
            _ => None,
        }
    }

    fn admits(&self, sorted: &[f64]) -> bool {
        let mut j = 0;
        for (p, &c) in self.points.iter().zip(&self.counts) {
            while j < sorted.len() && sorted[j] <= *p {
                j += 1;
            }
            if j as f64 > c {
                return false;
            }
        }
        true
    }
}

/// Everything a configuration must satisfy for a certificate to apply.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub case_id: u8,
    pub subcase: String,
    pub delta: f64,
    /// Fixed `Lambda`, or `None` for `max(3.08, log(1/lambda_11))`.
    pub cap: Option<f64>,
    pub lambda11: (f64, f64),
    /// Classes `0..heads` carry head caps; class 0 always holds `lambda_11`.
    pub heads: usize,
    pub rule: RuleMode,
    /// The rule's range end is `Lambda` itself.
    pub rule_at_cap: bool,
    pub t_head: TCap,
    pub t_rest: TCap,
    pub t_sum: f64,
    pub r_head: Option<f64>,
    pub r_rest_max: Option<f64>,
    pub r_rest_sum: Option<f64>,
    pub head_counts: Option<CountGrid>,
    pub rest_counts: Option<CountGrid>,
    pub certificate: f64,
    /// Head zeros at their preassigned minima.
    pub nominal_heads: Vec<Vec<f64>>,
}

impl Hypothesis {
    fn cap_for(&self, lambda11: f64) -> f64 {
        self.cap.unwrap_or_else(|| CASE1_CAP.max(-lambda11.ln()))
    }

    fn range_end(&self, cap: f64) -> f64 {
        if self.rule_at_cap {
            return cap;
        }
        match self.rule {
            RuleMode::AtMost { range_end, .. }
            | RuleMode::TwoDistinct { range_end }
            | RuleMode::TwoCommon { range_end } => range_end,
        }
    }

    fn low_limit(&self) -> u32 {
        match self.rule {
            RuleMode::AtMost { limit, .. } => limit,
            RuleMode::TwoDistinct { .. } | RuleMode::TwoCommon { .. } => 2,
        }
    }

    fn slots(&self) -> usize {
        self.heads.max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Configuration {
    pub cap: f64,
    /// Zeros of each class, sorted.
    pub classes: Vec<Vec<f64>>,
}

impl Configuration {
    /// `sum_i S_i^2` evaluated directly.
    pub fn value(&self, delta: f64) -> f64 {
        self.classes
            .iter()
            .map(|c| split_unchecked(c, 1.0 / delta, self.cap).s.powi(2))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversaryOutcome {
    pub case_id: u8,
    pub subcase: String,
    pub value: f64,
    pub certificate: f64,
    pub restarts: usize,
    pub worst: Configuration,
    /// `value <= certificate`.
    pub sound: bool,
}

#[derive(Clone, Copy, Default)]
struct ClassStat {
    t: f64,
    r: f64,
    low: u32,
}

#[derive(Clone)]
struct State {
    cap: f64,
    classes: Vec<Vec<f64>>,
    stats: Vec<ClassStat>,
    sum_t: f64,
    sum_r_rest: f64,
    low: u32,
    value: f64,
}

impl State {
    fn new(h: &Hypothesis, classes: Vec<Vec<f64>>) -> Self {
        let cap = h.cap_for(classes[0][0]);
        let stats: Vec<ClassStat> = classes.iter().map(|c| class_stat(h, c, cap)).collect();
        let mut s = Self {
            cap,
            classes,
            stats,
            sum_t: 0.0,
            sum_r_rest: 0.0,
            low: 0,
            value: 0.0,
        };
        s.sum_t = s.stats.iter().map(|st| st.t).sum();
        s.sum_r_rest = s.stats.iter().skip(h.heads).map(|st| st.r).sum();
        s.low = s.stats.iter().map(|st| st.low).sum();
        s.value = s.stats.iter().map(|st| (st.t + st.r).powi(2)).sum();
        s
    }

    fn config(&self) -> Configuration {
        Configuration {
            cap: self.cap,
            classes: self.classes.clone(),
        }
    }
}

fn class_stat(h: &Hypothesis, zeros: &[f64], cap: f64) -> ClassStat {
    let sp = split_unchecked(zeros, 1.0 / h.delta, cap);
    let end = h.range_end(cap);
    ClassStat {
        t: sp.t,
        r: sp.r,
        low: zeros.iter().filter(|&&l| l <= end).count() as u32,
    }
}

fn class_ok(h: &Hypothesis, i: usize, zeros: &[f64], st: &ClassStat, cap: f64) -> bool {
    if zeros.len() > MAX_CLASS_SIZE {
        return false;
    }
    if i == 0 {
        match zeros.first() {
            Some(&m) if m >= h.lambda11.0 && m <= h.lambda11.1 => {}
            _ => return false,
        }
    }
    if zeros.iter().any(|&l| !(l >= h.lambda11.0 && l <= ZERO_MAX)) {
        return false;
    }
    let head = i < h.heads;
    let (t_cap, r_cap, grid) = if head {
        (h.t_head, h.r_head, &h.head_counts)
    } else {
        (h.t_rest, h.r_rest_max, &h.rest_counts)
    };
    if st.t > t_cap.at(cap) || r_cap.is_some_and(|r| st.r > r) {
        return false;
    }
    if grid.as_ref().is_some_and(|g| !g.admits(zeros)) {
        return false;
    }
    match h.rule {
        RuleMode::AtMost { .. } => true,
        RuleMode::TwoDistinct { .. } => st.low <= 1 && (st.low == 0 || i < 2),
        RuleMode::TwoCommon { .. } => st.low == 0 || i == 0,
    }
}

fn totals_ok(h: &Hypothesis, n_classes: usize, sum_t: f64, sum_r_rest: f64, low: u32) -> bool {
    n_classes <= MAX_CLASSES && low <= h.low_limit() && sum_t <= h.t_sum && h.r_rest_sum.is_none_or(|c| sum_r_rest <= c)
}

fn ordered(s: &State) -> bool {
    let lam11 = s.classes[0][0];
    s.classes.iter().skip(1).all(|c| c.first().is_none_or(|&m| m >= lam11))
}

/// Every hypothesis, checked from scratch.
fn feasible(h: &Hypothesis, s: &State) -> bool {
    let fresh = State::new(h, s.classes.clone());
    fresh
        .classes
        .iter()
        .zip(&fresh.stats)
        .enumerate()
        .all(|(i, (c, st))| class_ok(h, i, c, st, fresh.cap))
        && ordered(&fresh)
        && totals_ok(h, fresh.classes.len(), fresh.sum_t, fresh.sum_r_rest, fresh.low)
}

/// The configuration with head zeros at their preassigned minima and nothing else.
pub fn nominal_configuration(h: &Hypothesis) -> Configuration {
    State::new(h, h.nominal_heads.clone()).config()
}

/// Replace class `i` (append when `i == len`) if the result satisfies every
/// hypothesis and, when `improve` is set, does not lower the value.
fn try_replace(h: &Hypothesis, s: &mut State, i: usize, mut zeros: Vec<f64>, improve: bool) -> bool {
    zeros.sort_by(f64::total_cmp);
    let n = s.classes.len();
    if i == 0 && zeros.is_empty() {
        return false;
    }
    if i == 0 && h.cap.is_none() && h.cap_for(zeros[0]) != s.cap {
        let mut classes = s.classes.clone();
        classes[0] = zeros;
        let next = State::new(h, classes);
        if feasible(h, &next) && (!improve || next.value >= s.value) {
            *s = next;
            return true;
        }
        return false;
    }
    let old = if i < n { s.stats[i] } else { ClassStat::default() };
    let st = if zeros.is_empty() {
        ClassStat::default()
    } else {
        class_stat(h, &zeros, s.cap)
    };
    if !zeros.is_empty() && !class_ok(h, i, &zeros, &st, s.cap) {
        return false;
    }
    let remove = zeros.is_empty() && i >= h.slots();
    let n_next = if i == n {
        n + 1
    } else if remove {
        n - 1
    } else {
        n
    };
    let sum_t = s.sum_t - old.t + st.t;
    let sum_r_rest = if i >= h.heads {
        s.sum_r_rest - old.r + st.r
    } else {
        s.sum_r_rest
    };
    let low = s.low - old.low + st.low;
    let value = s.value - (old.t + old.r).powi(2) + (st.t + st.r).powi(2);
    if !totals_ok(h, n_next, sum_t, sum_r_rest, low) || (improve && value < s.value) {
        return false;
    }
    if let Some(&m) = zeros.first() {
        let lam11 = s.classes[0][0];
        let ok = if i == 0 {
            s.classes.iter().skip(1).all(|c| c.first().is_none_or(|&o| o >= m))
        } else {
            m >= lam11
        };
        if !ok {
            return false;
        }
    }
    if i == n {
        s.classes.push(zeros);
        s.stats.push(st);
    } else if remove {
        s.classes.remove(i);
        s.stats.remove(i);
    } else {
        s.classes[i] = zeros;
        s.stats[i] = st;
    }
    s.sum_t = sum_t;
    s.sum_r_rest = sum_r_rest;
    s.low = low;
    s.value = value;
    true
}

fn nudge(p: f64) -> f64 {
    p + 1e-9 * p.max(1.0)
}

/// Fill class `i` greedily with the smallest admissible zeros at or above `floor`.
fn greedy_fill(h: &Hypothesis, s: &mut State, i: usize, floor: f64) {
    let grid = if i < h.heads { &h.head_counts } else { &h.rest_counts };
    let mut cands = vec![floor];
    if let Some(g) = grid {
        cands.extend(g.points.iter().map(|&p| nudge(p)).filter(|&p| p > floor));
    }
    let mut k = 0;
    while k < cands.len() {
        let len = s.classes.get(i).map_or(0, Vec::len);
        if len >= MAX_CLASS_SIZE {
            break;
        }
        let mut z = s.classes.get(i).cloned().unwrap_or_default();
        z.push(cands[k]);
        if !try_replace(h, s, i, z, false) {
            k += 1;
        }
    }
}

/// Heads filled greedily, then copies of greedily filled classes until a cap binds.
fn extremal_state(h: &Hypothesis) -> State {
    let mut s = State::new(h, h.nominal_heads.clone());
    let low_floor = nudge(h.range_end(s.cap));
    for i in 0..h.slots().min(s.classes.len()) {
        greedy_fill(h, &mut s, i, low_floor);
    }
    for floor in [low_floor, nudge(h.range_end(s.cap).max(s.cap))] {
        loop {
            let n = s.classes.len();
            if n >= MAX_CLASSES {
                break;
            }
            greedy_fill(h, &mut s, n, floor);
            if s.classes.len() == n {
                break;
            }
        }
    }
    s
}

fn random_zero(h: &Hypothesis, rng: &mut ChaCha8Rng, lo: f64) -> f64 {
    let lo = lo.max(h.lambda11.0);
    if rng.random::<f64>() < 0.7 {
        rng.random_range(lo..(lo + 1.5).min(ZERO_MAX))
    } else {
        rng.random_range(lo..ZERO_MAX)
    }
}

fn random_move(h: &Hypothesis, s: &mut State, rng: &mut ChaCha8Rng, improve: bool) -> bool {
    let n = s.classes.len();
    let i = rng.random_range(0..n);
    let rest_floor = h.range_end(s.cap);
    match rng.random_range(0..7u8) {
        0 | 1 => {
            let c = &s.classes[i];
            if c.is_empty() {
                return false;
            }
            let j = rng.random_range(0..c.len());
            let scale = [1.0, 0.1, 0.01, 0.001][rng.random_range(0..4)];
            let mut z = c.clone();
            z[j] = (z[j] + rng.random_range(-scale..scale)).clamp(h.lambda11.0, ZERO_MAX);
            try_replace(h, s, i, z, improve)
        }
        2 => {
            let mut z = s.classes[i].clone();
            let base = if z.is_empty() || rng.random::<bool>() {
                random_zero(h, rng, rest_floor.min(s.cap))
            } else {
                z[rng.random_range(0..z.len())] + rng.random_range(0.0..0.05)
            };
            z.push(base.min(ZERO_MAX));
            try_replace(h, s, i, z, improve)
        }
        3 => {
            let mut z = s.classes[i].clone();
            if z.is_empty() {
                return false;
            }
            z.remove(rng.random_range(0..z.len()));
            try_replace(h, s, i, z, improve)
        }
        4 => {
            let m = rng.random_range(1..4);
            let z: Vec<f64> = (0..m).map(|_| random_zero(h, rng, rest_floor)).collect();
            try_replace(h, s, n, z, improve)
        }
        5 => {
            if n <= h.slots() {
                return false;
            }
            let src = rng.random_range(h.slots()..n);
            let z = s.classes[src].clone();
            try_replace(h, s, n, z, improve)
        }
        _ => {
            let mut z = s.classes[0].clone();
            z[0] = rng.random_range(h.lambda11.0..=z[0]);
            try_replace(h, s, 0, z, improve)
        }
    }
}

/// Either a thinned copy of the extremal layout or a random scatter of classes.
fn random_start(h: &Hypothesis, extremal: &State, rng: &mut ChaCha8Rng) -> State {
    if rng.random::<bool>() {
        let mut s = extremal.clone();
        let drops = rng.random_range(0..=s.classes.len() / 4);
        for _ in 0..drops {
            let n = s.classes.len();
            if n <= h.slots() {
                break;
            }
            let i = rng.random_range(h.slots()..n);
            try_replace(h, &mut s, i, Vec::new(), false);
        }
        for _ in 0..rng.random_range(0..20) {
            random_move(h, &mut s, rng, false);
        }
        return s;
    }
    let mut s = State::new(h, h.nominal_heads.clone());
    let rest_floor = h.range_end(s.cap);
    for _ in 0..rng.random_range(0..120usize) {
        let m = rng.random_range(1..5);
        let z: Vec<f64> = (0..m).map(|_| random_zero(h, rng, rest_floor)).collect();
        let n = s.classes.len();
        try_replace(h, &mut s, n, z, false);
    }
    for i in 0..h.slots().min(s.classes.len()) {
        for _ in 0..rng.random_range(0..4) {
            let mut z = s.classes[i].clone();
            z.push(random_zero(h, rng, rest_floor));
            try_replace(h, &mut s, i, z, false);
        }
    }
    s
}

fn climb(h: &Hypothesis, extremal: &State, index: u64) -> (f64, Configuration) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut s = random_start(h, extremal, &mut rng);
    for _ in 0..CLIMB_STEPS {
        random_move(h, &mut s, &mut rng, true);
    }
    (s.value, s.config())
}

/// Worst configuration found for one hypothesis. `budget = 0` evaluates the
/// nominal configuration only.
pub fn search(h: &Hypothesis, budget: usize) -> AdversaryOutcome {
    let nominal = nominal_configuration(h);
    let mut best = (nominal.value(h.delta), nominal);
    if budget > 0 {
        let extremal = extremal_state(h);
        let runs: Vec<(f64, Configuration)> = (0..budget as u64)
            .into_par_iter()
            .map(|k| climb(h, &extremal, k))
            .collect();
        for run in std::iter::once((extremal.value, extremal.config())).chain(runs) {
            if run.0 > best.0 {
                best = run;
            }
        }
    }
    // Incremental totals can drift; the reported value and feasibility are recomputed.
    let value = best.1.value(h.delta);
    debug_assert!(feasible(h, &State::new(h, best.1.classes.clone())));
    AdversaryOutcome {
        case_id: h.case_id,
        subcase: h.subcase.clone(),
        value,
        certificate: h.certificate,
        restarts: budget,
        sound: value <= h.certificate,
        worst: best.1,
    }
}

/// Hypotheses behind every certificate of `case_id`.
pub fn hypotheses(case_id: u8, c0: f64, book: &BoundBook, opts: &LedgerOptions) -> Result<Vec<Hypothesis>> {
    let delta = book.delta;
    if case_id == 1 {
        let cert = case1_audit(delta, c0, book, opts.eps_num);
        let q = case1_quantities();
        let coef = book.value(&q[0])?;
        let sum_t = book.value(&q[1])?;
        let h = Hypothesis {
            case_id,
            subcase: cert.subcase,
            delta,
            cap: None,
            lambda11: (c0, CASE1_HI),
            heads: 1,
            rule: RuleMode::AtMost {
                limit: 1,
                range_end: CASE1_CAP,
            },
            rule_at_cap: true,
            t_head: TCap::Decay(coef),
            t_rest: TCap::Decay(coef),
            t_sum: sum_t,
            r_head: None,
            r_rest_max: None,
            r_rest_sum: None,
            head_counts: None,
            rest_counts: None,
            certificate: cert.sum_bound,
            nominal_heads: vec![vec![c0]],
        };
        check_nominal(&h)?;
        return Ok(vec![h]);
    }
    subcases(case_id)?
        .iter()
        .map(|sub| {
            let caps = subcase_caps(sub, book)?;
            let cert = certify_subcase(sub, book, opts.eps_num);
            let lo = sub.lambda11_lo;
            let (nominal_heads, rule_at_cap) = match (case_id, sub.rule) {
                (2 | 3, _) => (vec![vec![lo]], true),
                (4 | 5, RuleMode::AtMost { .. }) => (vec![vec![lo]], false),
                (_, RuleMode::TwoDistinct { .. }) => (vec![vec![lo], vec![lo]], false),
                (_, RuleMode::TwoCommon { .. }) => (vec![vec![lo, lo]], false),
                (6, _) => (vec![vec![lo, lo]], false),
                _ => return Err(Error::Precondition(format!("no nominal layout for case {case_id}"))),
            };
            let h = Hypothesis {
                case_id,
                subcase: sub.label.to_string(),
                delta,
                cap: Some(sub.cap),
                lambda11: (lo, if case_id == 6 { LAMBDA11_MAX } else { gap_hi(case_id) }),
                heads: sub.heads,
                rule: sub.rule,
                rule_at_cap,
                t_head: TCap::Fixed(caps.t_head),
                t_rest: TCap::Fixed(caps.t_rest),
                t_sum: caps.t_sum,
                r_head: Some(caps.r_head),
                r_rest_max: Some(caps.r_rest_max),
                r_rest_sum: Some(caps.r_rest_sum),
                head_counts: CountGrid::from_book(book, sub.head_t),
                rest_counts: CountGrid::from_book(book, Some(sub.rest_t)),
                certificate: cert.sum_bound,
                nominal_heads,
            };
            check_nominal(&h)?;
            Ok(h)
        })
        .collect()
}

fn check_nominal(h: &Hypothesis) -> Result<()> {
    if feasible(h, &State::new(h, h.nominal_heads.clone())) {
        Ok(())
    } else {
        Err(Error::Infeasible(format!(
            "nominal layout {:?} violates the hypotheses of case {} ({})",
            h.nominal_heads, h.case_id, h.subcase
        )))
    }
}

fn gap_hi(case_id: u8) -> f64 {
    match case_id {
        2 => 0.3,
        3 => 0.4,
        4 => 0.5,
        5 => 0.6,
        _ => LAMBDA11_MAX,
    }
}

/// Search each subcase of `case_id` for a configuration exceeding its certificate.
pub fn adversary_audit(
    case_id: u8,
    delta: f64,
    c0: f64,
    budget: usize,
    opts: &LedgerOptions,
) -> Result<Vec<AdversaryOutcome>> {
    check_inputs(delta, c0)?;
    let book = BoundBook::compute(delta, &super::case_quantities(case_id)?, opts.grid_points);
    Ok(hypotheses(case_id, c0, &book, opts)?
        .iter()
        .map(|h| search(h, budget))
        .collect())
}

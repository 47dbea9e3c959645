//! Upper bounds on the head sum `R(Lambda) = sum_{lambda_j <= Lambda} (e^(-lambda_j/delta) - e^(-Lambda/delta))`.
//!
//! The smallest two zeros `lambda_1 <= lambda_2` are preassigned and every
//! further zero is assumed to be at least `lambda*`. The budget on
//! `sum (psi_j - psi)` comes from the zero-detecting inequality; the restricted
//! variant additionally conditions on having at least `N0` zeros.

use serde::Serialize;

use crate::density::{x_floor, Slack};
use crate::error::{ensure_finite, Error, Result};
use crate::kernel::{monotone_ratio_coefficient, KernelContext};
use crate::optimizer::{minimize_scalar, Interval};

/// Upper end of the kernel-scale search.
pub const R_X_MAX: f64 = 20.0;
/// Coarse samples in the kernel-scale search.
pub const R_X_SCAN: usize = 128;
/// The admissible values of `N0` in the restricted dichotomy.
pub const N0_CHOICES: [u32; 3] = [4, 5, 6];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeadScenario {
    pub cap: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda_star: f64,
    pub n0: Option<u32>,
    pub restricted: bool,
}

impl HeadScenario {
    pub fn general(cap: f64, lambda1: f64, lambda2: f64, lambda_star: f64) -> Result<Self> {
        let sc = Self {
            cap,
            lambda1,
            lambda2,
            lambda_star,
            n0: None,
            restricted: false,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn restricted(cap: f64, lambda1: f64, lambda2: f64, lambda_star: f64, n0: Option<u32>) -> Result<Self> {
        let sc = Self {
            cap,
            lambda1,
            lambda2,
            lambda_star,
            n0,
            restricted: true,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("Lambda", self.cap),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda*", self.lambda_star),
        ] {
            ensure_finite(name, v)?;
        }
        if self.lambda1 < 0.0 {
            return Err(Error::Domain(format!(
                "lambda1 must be non-negative, got {}",
                self.lambda1
            )));
        }
        if self.lambda1 > self.lambda2 || self.lambda2 > self.cap {
            return Err(Error::Domain(format!(
                "need lambda1 <= lambda2 <= Lambda, got {} {} {}",
                self.lambda1, self.lambda2, self.cap
            )));
        }
        if self.lambda_star < self.lambda1 || self.lambda_star >= self.cap {
            return Err(Error::Domain(format!(
                "need lambda1 <= lambda* < Lambda, got lambda* = {} (lambda1 = {}, Lambda = {})",
                self.lambda_star, self.lambda1, self.cap
            )));
        }
        if let Some(n0) = self.n0 {
            if !self.restricted {
                return Err(Error::Domain("N0 is only meaningful in the restricted regime".into()));
            }
            if !N0_CHOICES.contains(&n0) {
                return Err(Error::Domain(format!("N0 must be one of 4, 5, 6, got {n0}")));
            }
        }
        Ok(())
    }

    /// `lambda0 = lambda1`.
    pub fn lambda0(&self) -> f64 {
        self.lambda1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RBranch {
    Main,
    CountFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RBoundResult {
    pub bound: f64,
    pub branch: RBranch,
    /// The budget-based bound, before any dichotomy.
    pub main_bound: f64,
    /// Bound under `N <= N0 - 1`, restricted regime only.
    pub fallback_bound: Option<f64>,
    pub x_used: f64,
    pub n0: Option<u32>,
    pub scenario: HeadScenario,
    pub slacks: Vec<Slack>,
}

impl RBoundResult {
    pub fn min_slack(&self) -> f64 {
        self.slacks.iter().map(|s| s.margin).fold(f64::INFINITY, f64::min)
    }
}

struct Pieces {
    head: f64,
    coef: f64,
    psi_sum: f64,
    delta_cap: f64,
    xi: f64,
}

fn check_delta(delta: f64) -> Result<f64> {
    ensure_finite("delta", delta)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(1.0 / delta)
}

fn pieces(delta: f64, sc: &HeadScenario, x: f64) -> Result<Pieces> {
    let delta_inv = check_delta(delta)?;
    sc.validate()?;
    ensure_finite("x", x)?;
    let floor = x_floor(delta, sc.lambda0());
    if x < floor {
        return Err(Error::Infeasible(format!(
            "x = {x} is below max(0.8 lambda0, 2 delta) = {floor}"
        )));
    }
    let ctx = KernelContext::new(x, sc.lambda0())?;
    let e_cap = (-delta_inv * sc.cap).exp();
    let head = [sc.lambda1, sc.lambda2]
        .iter()
        .map(|&l| (-delta_inv * l).exp() - e_cap)
        .sum();
    let psi = ctx.psi(sc.cap);
    let psi_sum = [sc.lambda1, sc.lambda2].iter().map(|&l| ctx.psi(l) - psi).sum();
    let coef = monotone_ratio_coefficient(&ctx, delta_inv, sc.cap, sc.lambda_star)?;
    Ok(Pieces {
        head,
        coef,
        psi_sum,
        delta_cap: ctx.delta(sc.cap),
        xi: ctx.xi(),
    })
}

/// General head bound for a fixed kernel scale `x`.
pub fn r_bound_general(delta: f64, sc: &HeadScenario, x: f64) -> Result<RBoundResult> {
    let p = pieces(delta, sc, x)?;
    let d = p.delta_cap;
    if !(d > 0.0 && d * d > p.xi) {
        return Err(Error::Infeasible(format!(
            "Delta = {d} does not exceed sqrt(xi) = {}",
            p.xi.sqrt()
        )));
    }
    let budget = (1.0 - p.xi) / (2.0 * d);
    let main = p.head + p.coef * (budget - p.psi_sum);
    Ok(RBoundResult {
        bound: main,
        branch: RBranch::Main,
        main_bound: main,
        fallback_bound: None,
        x_used: x,
        n0: None,
        scenario: *sc,
        slacks: vec![
            Slack::new("x - max(0.8 lambda0, 2 delta)", x - x_floor(delta, sc.lambda0())),
            Slack::new("Delta^2 - xi", d * d - p.xi),
        ],
    })
}

/// Bound on `R` when there are at most `n0 - 1` zeros up to `Lambda`.
pub fn count_fallback(delta: f64, sc: &HeadScenario, n0: u32) -> Result<f64> {
    let delta_inv = check_delta(delta)?;
    sc.validate()?;
    if !N0_CHOICES.contains(&n0) {
        return Err(Error::Domain(format!("N0 must be one of 4, 5, 6, got {n0}")));
    }
    let e = |l: f64| (-delta_inv * l).exp() - (-delta_inv * sc.cap).exp();
    Ok(e(sc.lambda1) + e(sc.lambda2) + (n0 as f64 - 3.0) * e(sc.lambda_star))
}

/// Restricted head bound for a fixed `x`; `sc.n0` must be set.
pub fn r_bound_restricted(delta: f64, sc: &HeadScenario, x: f64) -> Result<RBoundResult> {
    if !sc.restricted {
        return Err(Error::Domain("restricted bound needs a restricted scenario".into()));
    }
    let n0 = sc.n0.ok_or_else(|| Error::Domain("restricted bound needs N0".into()))?;
    let p = pieces(delta, sc, x)?;
    let d = p.delta_cap;
    if !(d > 0.0) {
        return Err(Error::Infeasible(format!("Delta = {d} is not positive")));
    }
    let budget = (1.0 - n0 as f64 * d * d) / (2.0 * d);
    let main = p.head + p.coef * (budget - p.psi_sum);
    let fallback = count_fallback(delta, sc, n0)?;
    let (bound, branch) = if main >= fallback {
        (main, RBranch::Main)
    } else {
        (fallback, RBranch::CountFallback)
    };
    Ok(RBoundResult {
        bound,
        branch,
        main_bound: main,
        fallback_bound: Some(fallback),
        x_used: x,
        n0: Some(n0),
        scenario: *sc,
        slacks: vec![
            Slack::new("x - max(0.8 lambda0, 2 delta)", x - x_floor(delta, sc.lambda0())),
            Slack::new("Delta", d),
        ],
    })
}

/// Constraint margin at `x`: `Delta^2 - xi` in general, `Delta` when restricted.
fn margin(lambda0: f64, cap: f64, restricted: bool, x: f64) -> f64 {
    let ctx = KernelContext { x, lambda0 };
    let d = ctx.delta(cap);
    if restricted {
        d
    } else if d > 0.0 {
        d * d - ctx.xi()
    } else {
        f64::NEG_INFINITY
    }
}

/// The interval of admissible `x` around the point of largest margin. Near the
/// largest useful `Lambda` this window is far narrower than any fixed scan spacing.
fn feasible_window(delta: f64, sc: &HeadScenario) -> Result<(f64, f64)> {
    let lo = x_floor(delta, sc.lambda0());
    let m_at = |x: f64| margin(sc.lambda0(), sc.cap, sc.restricted, x);
    let m = minimize_scalar(lo, R_X_MAX, R_X_SCAN, |x| -m_at(x), |_| true)?;
    let peak = m.point[0];
    if !(m_at(peak) > 0.0) {
        return Err(Error::NoFeasiblePoint(format!(
            "no x in [{lo}, {R_X_MAX}] makes the head bound applicable at Lambda = {}",
            sc.cap
        )));
    }
    let edge = |outside: f64| {
        if m_at(outside) > 0.0 {
            return outside;
        }
        let (mut good, mut bad) = (peak, outside);
        while (bad - good).abs() > 1e-12 * peak.max(1.0) {
            let mid = 0.5 * (good + bad);
            if m_at(mid) > 0.0 {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };
    Ok((edge(lo), edge(R_X_MAX)))
}

fn search_x(delta: f64, sc: &HeadScenario) -> Result<RBoundResult> {
    let eval = |x: f64| {
        if sc.restricted {
            r_bound_restricted(delta, sc, x)
        } else {
            r_bound_general(delta, sc, x)
        }
    };
    let (a, b) = feasible_window(delta, sc)?;
    if b <= a {
        return eval(a);
    }
    // The restricted fallback does not depend on x, so the search targets the main branch.
    let m = minimize_scalar(
        a,
        b,
        R_X_SCAN,
        |x| eval(x).map(|r| r.main_bound).unwrap_or(f64::INFINITY),
        |_| true,
    )?;
    eval(m.point[0])
}

/// Head bound at the best kernel scale, and in the restricted regime the best
/// `N0` (or the one fixed in `sc`).
pub fn optimize_r(delta: f64, sc: &HeadScenario) -> Result<RBoundResult> {
    check_delta(delta)?;
    sc.validate()?;
    if !sc.restricted {
        return search_x(delta, sc);
    }
    let choices: Vec<u32> = match sc.n0 {
        Some(n) => vec![n],
        None => N0_CHOICES.to_vec(),
    };
    let mut best: Option<RBoundResult> = None;
    let mut last_err = None;
    for n0 in choices {
        let sc_n = HeadScenario { n0: Some(n0), ..*sc };
        match search_x(delta, &sc_n) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.bound < b.bound) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::NoFeasiblePoint("no N0 admissible".into())))
}

/// Largest `Delta^2 - xi` over `x` in `[max(0.8 lambda0, 2 delta), 20]`.
pub fn best_general_margin(delta: f64, lambda0: f64, cap: f64) -> f64 {
    let lo = x_floor(delta, lambda0);
    match minimize_scalar(lo, R_X_MAX, R_X_SCAN, |x| -margin(lambda0, cap, false, x), |_| true) {
        Ok(m) => -m.value,
        Err(_) => f64::NEG_INFINITY,
    }
}

/// The largest `Lambda` in `search` for which some admissible `x` has
/// `Delta^2 > xi`, located by bisection to within `tol`.
pub fn max_useful_cap(delta: f64, lambda0: f64, search: Interval, tol: f64) -> Result<f64> {
    check_delta(delta)?;
    let ok = |cap: f64| cap > lambda0 && best_general_margin(delta, lambda0, cap) > 0.0;
    let (mut lo, mut hi) = (search.lo.max(lambda0), search.hi);
    if !ok(lo) {
        return Err(Error::NoFeasiblePoint(format!(
            "Delta^2 > xi fails already at Lambda = {lo}"
        )));
    }
    if ok(hi) {
        return Ok(hi);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: f64 = 0.291;

    #[test]
    fn scenario_validation() {
        assert!(HeadScenario::general(1.273, 1.08, 1.08, 1.08).is_ok());
        assert!(HeadScenario::general(1.273, 1.1, 1.08, 1.08).is_err());
        assert!(HeadScenario::general(1.273, 1.08, 1.3, 1.08).is_err());
        assert!(HeadScenario::general(1.273, 1.08, 1.08, 1.273).is_err());
        assert!(HeadScenario::restricted(1.273, 1.08, 1.08, 1.08, Some(7)).is_err());
        let bad = HeadScenario {
            n0: Some(4),
            restricted: false,
            ..HeadScenario::general(1.3, 1.0, 1.0, 1.0).unwrap()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn x_below_floor_is_infeasible() {
        let sc = HeadScenario::general(1.273, 1.08, 1.08, 1.08).unwrap();
        assert!(matches!(r_bound_general(D, &sc, 0.5), Err(Error::Infeasible(_))));
    }

    #[test]
    fn restricted_needs_n0() {
        let sc = HeadScenario::restricted(1.311, 0.97, 0.97, 0.97, None).unwrap();
        assert!(r_bound_restricted(D, &sc, 1.2).is_err());
    }

    #[test]
    fn restricted_bound_is_max_of_branches() {
        let sc = HeadScenario::restricted(1.273, 1.08, 1.08, 1.08, Some(5)).unwrap();
        let r = r_bound_restricted(D, &sc, 1.2).unwrap();
        assert_eq!(r.bound, r.main_bound.max(r.fallback_bound.unwrap()));
    }
}

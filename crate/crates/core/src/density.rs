//! Upper bounds on the tail sum `T(Lambda) = sum_j exp(-max(lambda_j, Lambda) / delta)`.
//!
//! Two routes are provided: the smoothed density estimate built from
//! `B(x, y, z, Lambda)`, and, in the restricted (bounded pairwise conductor)
//! regime, a staircase that sums per-threshold zero counts `N <= 1 / Delta^2`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::kernel::KernelContext;
use crate::optimizer::{minimize, minimize_scalar, Interval, SearchSpec};

/// Upper end of the staircase grid.
pub const STAIRCASE_END: f64 = 5.0;
/// Default number of staircase grid points, endpoints included.
pub const STAIRCASE_POINTS: usize = 201;
/// Upper end of the `x` search range for zero counts.
pub const COUNT_X_MAX: f64 = 10.0;
/// Coarse samples in the `x` search for zero counts.
pub const COUNT_X_SCAN: usize = 64;
/// Added to a real-valued count bound before taking its floor, so that
/// rounding never pushes a bound just below an integer it should reach.
const COUNT_FLOOR_GUARD: f64 = 1e-9;
/// Bisection stops once the bracket on a jump location is this narrow.
const JUMP_TOL: f64 = 1e-13;
/// A staircase stops at the first threshold whose count bound exceeds this.
pub const MAX_STAIRCASE_COUNT: f64 = 20_000.0;

/// Free parameters of the smoothed density estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParams {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Bounded pairwise conductor regime.
    pub restricted: bool,
}

impl BoundParams {
    pub fn new(x: f64, y: f64, z: f64, restricted: bool) -> Result<Self> {
        for (name, v) in [("x", x), ("y", y), ("z", z)] {
            ensure_finite(name, v)?;
            if v <= 0.0 {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { x, y, z, restricted })
    }

    /// Exponent `k = 2(2/3 + 3x + y + z)`, or `2(1/3 + 3x + y + z)` when restricted.
    pub fn k(&self) -> f64 {
        let base = if self.restricted { 1.0 / 3.0 } else { 2.0 / 3.0 };
        2.0 * (base + 3.0 * self.x + self.y + self.z)
    }
}

/// A constraint margin; non-negative when the constraint holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slack {
    pub constraint: String,
    pub margin: f64,
}

impl Slack {
    pub fn new(constraint: impl Into<String>, margin: f64) -> Self {
        Self {
            constraint: constraint.into(),
            margin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TMethod {
    Density,
    Staircase,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TParams {
    Density(BoundParams),
    Staircase(Box<StaircaseGrid>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TBoundResult {
    pub bound: f64,
    pub cap: f64,
    pub method: TMethod,
    pub params: TParams,
    pub slacks: Vec<Slack>,
}

impl TBoundResult {
    pub fn min_slack(&self) -> f64 {
        self.slacks.iter().map(|s| s.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn density_params(&self) -> Option<BoundParams> {
        match &self.params {
            TParams::Density(p) => Some(*p),
            TParams::Staircase(_) => None,
        }
    }

    pub fn staircase(&self) -> Option<&StaircaseGrid> {
        match &self.params {
            TParams::Staircase(g) => Some(g),
            TParams::Density(_) => None,
        }
    }
}

/// `B_0(u, lambda) = (1 - e^(-2 u lambda)) / (6 lambda) + (1 - e^(-u lambda))^2 / lambda^2`.
pub fn b0(u: f64, lam: f64) -> Result<f64> {
    ensure_finite("u", u)?;
    ensure_finite("lambda", lam)?;
    if u <= 0.0 || lam <= 0.0 {
        return Err(Error::Domain(format!(
            "B0 needs u > 0 and lambda > 0, got ({u}, {lam})"
        )));
    }
    Ok(b0_unchecked(u, lam))
}

#[inline]
fn b0_unchecked(u: f64, lam: f64) -> f64 {
    let a = -(-2.0 * u * lam).exp_m1() / (6.0 * lam);
    let b = -(-u * lam).exp_m1() / lam;
    a + b * b
}

/// `B(x, y, z, Lambda)`.
pub fn b_bound(p: &BoundParams, cap: f64) -> Result<f64> {
    ensure_finite("Lambda", cap)?;
    if cap <= 0.0 {
        return Err(Error::Domain(format!("Lambda must be positive, got {cap}")));
    }
    Ok(b_unchecked(p.x, p.y, p.z, cap))
}

#[inline]
fn b_unchecked(x: f64, y: f64, z: f64, cap: f64) -> f64 {
    let third = 1.0 / 3.0;
    (0.5 + (third + x) / y) / (x * z) * (b0_unchecked(third + x + y, cap) * b0_unchecked(z, cap)).sqrt()
}

/// `e^(-(1/delta - k) Lambda) B(x, y, z, Lambda)`.
pub fn t_bound_density(delta: f64, cap: f64, p: &BoundParams) -> Result<TBoundResult> {
    check_delta(delta)?;
    let b = b_bound(p, cap)?;
    let gain = 1.0 / delta - p.k();
    if gain < 0.0 {
        return Err(Error::Infeasible(format!(
            "k = {} exceeds 1/delta = {}",
            p.k(),
            1.0 / delta
        )));
    }
    Ok(TBoundResult {
        bound: (-gain * cap).exp() * b,
        cap,
        method: TMethod::Density,
        params: TParams::Density(*p),
        slacks: vec![Slack::new("1/delta - k >= 0", gain)],
    })
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    ensure_finite("delta", delta)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Minimize the smoothed density bound over `(x, y, z)` in `[1e-3, 1]^3`.
///
/// The search runs in log coordinates: an 8-point grid per axis, refined by
/// coordinate sweeps from the four best grid points.
pub fn optimize_t_density(delta: f64, cap: f64, restricted: bool) -> Result<TBoundResult> {
    check_delta(delta)?;
    ensure_finite("Lambda", cap)?;
    if cap <= 0.0 {
        return Err(Error::Domain(format!("Lambda must be positive, got {cap}")));
    }
    let delta_inv = 1.0 / delta;
    let base = if restricted { 1.0 / 3.0 } else { 2.0 / 3.0 };
    let k_of = |x: f64, y: f64, z: f64| 2.0 * (base + 3.0 * x + y + z);
    let lo = 1e-3f64.ln();
    let spec = SearchSpec::new(vec![Interval::new(lo, 0.0); 3], |v: &[f64]| {
        let (x, y, z) = (v[0].exp(), v[1].exp(), v[2].exp());
        (-(delta_inv - k_of(x, y, z)) * cap).exp() * b_unchecked(x, y, z, cap)
    })
    .with_feasible(|v: &[f64]| k_of(v[0].exp(), v[1].exp(), v[2].exp()) <= delta_inv)
    .coarse_points(8)
    .starts(4)
    .refine_tol(1e-13);
    let m = minimize(&spec).map_err(|e| match e {
        Error::NoFeasiblePoint(_) => {
            Error::NoFeasiblePoint(format!("no (x, y, z) in [1e-3, 1]^3 with k <= 1/delta = {delta_inv}"))
        }
        other => other,
    })?;
    let p = BoundParams::new(m.point[0].exp(), m.point[1].exp(), m.point[2].exp(), restricted)?;
    t_bound_density(delta, cap, &p)
}

/// A bound `T(Lambda) <= coefficient * e^(-2 Lambda)` valid for every `Lambda >= anchor`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayBound {
    pub coefficient: f64,
    pub anchor: f64,
    pub params: BoundParams,
    /// `1/delta - k - 2`, which must be non-negative.
    pub rate_slack: f64,
}

impl DecayBound {
    pub fn at(&self, cap: f64) -> f64 {
        self.coefficient * (-2.0 * cap).exp()
    }
}

/// Smallest `B(x, y, z, anchor) e^(-(1/delta - k - 2) anchor)` over `(x, y, z)`
/// with `1/delta - k >= 2`. Since `B` is nonincreasing in `Lambda`, the density
/// bound at any `Lambda >= anchor` is at most `coefficient * e^(-2 Lambda)`.
pub fn decay_coefficient(delta: f64, anchor: f64, restricted: bool) -> Result<DecayBound> {
    check_delta(delta)?;
    ensure_finite("anchor", anchor)?;
    if anchor <= 0.0 {
        return Err(Error::Domain(format!("anchor must be positive, got {anchor}")));
    }
    let delta_inv = 1.0 / delta;
    let base = if restricted { 1.0 / 3.0 } else { 2.0 / 3.0 };
    let k_of = |x: f64, y: f64, z: f64| 2.0 * (base + 3.0 * x + y + z);
    let lo = 1e-3f64.ln();
    let spec = SearchSpec::new(vec![Interval::new(lo, 0.0); 3], |v: &[f64]| {
        let (x, y, z) = (v[0].exp(), v[1].exp(), v[2].exp());
        (-(delta_inv - k_of(x, y, z) - 2.0) * anchor).exp() * b_unchecked(x, y, z, anchor)
    })
    .with_feasible(|v: &[f64]| k_of(v[0].exp(), v[1].exp(), v[2].exp()) + 2.0 <= delta_inv)
    .coarse_points(8)
    .starts(4)
    .refine_tol(1e-13);
    let m = minimize(&spec).map_err(|e| match e {
        Error::NoFeasiblePoint(_) => Error::NoFeasiblePoint(format!(
            "no (x, y, z) in [1e-3, 1]^3 with k <= 1/delta - 2 = {}",
            delta_inv - 2.0
        )),
        other => other,
    })?;
    let params = BoundParams::new(m.point[0].exp(), m.point[1].exp(), m.point[2].exp(), restricted)?;
    Ok(DecayBound {
        coefficient: m.value,
        anchor,
        params,
        rate_slack: delta_inv - params.k() - 2.0,
    })
}

/// `1 / (Delta^2 - eps)`: an upper bound on the number of zeros below `Lambda`
/// in the restricted regime.
pub fn zero_count_bound(ctx: &KernelContext, cap: f64, eps: f64) -> Result<f64> {
    ensure_finite("Lambda", cap)?;
    ensure_finite("eps", eps)?;
    if eps < 0.0 {
        return Err(Error::Domain(format!("eps must be non-negative, got {eps}")));
    }
    if ctx.x < 0.8 * ctx.lambda0 {
        return Err(Error::Infeasible(format!(
            "x = {} is below 0.8 lambda0 = {}",
            ctx.x,
            0.8 * ctx.lambda0
        )));
    }
    let d = ctx.delta(cap);
    if !(d > 0.0 && d * d > eps) {
        return Err(Error::Infeasible(format!(
            "Delta = {d} does not satisfy Delta^2 > eps = {eps}"
        )));
    }
    Ok(1.0 / (d * d - eps))
}

#[inline]
fn count_unchecked(x: f64, lambda0: f64, cap: f64) -> f64 {
    let ctx = KernelContext { x, lambda0 };
    let d = ctx.delta(cap);
    if d > 0.0 {
        1.0 / (d * d)
    } else {
        f64::INFINITY
    }
}

/// Lower end of every kernel-scale search: `max(0.8 lambda0, 2 delta)`.
pub fn x_floor(delta: f64, lambda0: f64) -> f64 {
    (0.8 * lambda0).max(2.0 * delta)
}

/// Smallest `1 / Delta^2` over `x` in `[max(0.8 lambda0, 2 delta), 10]`.
///
/// Returns `(bound, x)`; the bound is `+inf` when no scanned `x` has `Delta > 0`.
pub fn optimal_zero_count(delta: f64, lambda0: f64, cap: f64) -> (f64, f64) {
    let lo = x_floor(delta, lambda0);
    match minimize_scalar(
        lo,
        COUNT_X_MAX,
        COUNT_X_SCAN,
        |x| count_unchecked(x, lambda0, cap),
        |_| true,
    ) {
        Ok(m) => (m.value, m.point[0]),
        Err(_) => (f64::INFINITY, lo),
    }
}

fn floor_count(raw: f64) -> f64 {
    if raw.is_finite() {
        (raw + COUNT_FLOOR_GUARD).floor()
    } else {
        f64::INFINITY
    }
}

/// Per-threshold zero counts and the staircase sums built from them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaircaseGrid {
    pub lambda0: f64,
    /// Equally spaced thresholds, first = `Lambda`, last = 5.
    pub points: Vec<f64>,
    /// Optimized `1 / Delta^2` at each threshold.
    pub raw_counts: Vec<f64>,
    /// Integer count bounds after the nondecreasing envelope.
    pub counts: Vec<f64>,
    pub x_choices: Vec<f64>,
    /// Bound on `T(5)`.
    pub tail: f64,
    /// How the tail was obtained.
    pub tail_source: String,
    /// `e^(-Lambda/delta) N_0 + sum_k (N_k - N_{k-1}) e^(-Lambda_{k-1}/delta)`.
    pub grid_sum: f64,
    /// The same staircase with every count increment charged at its
    /// bisected jump location instead of the left grid point.
    pub refined_sum: f64,
}

impl StaircaseGrid {
    /// The plain grid staircase plus tail, without jump localization.
    pub fn grid_bound(&self) -> f64 {
        self.grid_sum + self.tail
    }
}

/// Options for the staircase construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaircaseOptions {
    pub grid_points: usize,
    /// Extend the tail estimate with a second staircase over `[5, tail_end]`
    /// closed by the density bound at `tail_end`; `None` uses the density
    /// bound at 5 alone.
    pub tail_end: Option<f64>,
}

impl Default for StaircaseOptions {
    fn default() -> Self {
        Self {
            grid_points: STAIRCASE_POINTS,
            tail_end: Some(DEFAULT_TAIL_END),
        }
    }
}

/// Where the extended tail staircase stops.
pub const DEFAULT_TAIL_END: f64 = 6.0;

struct Staircase {
    points: Vec<f64>,
    raw: Vec<f64>,
    counts: Vec<f64>,
    xs: Vec<f64>,
    grid_sum: f64,
    refined_sum: f64,
}

/// Staircase over `n` equally spaced thresholds in `[start, end]`. Stops at
/// the last threshold where a count bound exists; the caller must close the
/// sum with a bound on `T(points.last())`.
fn build_staircase(delta: f64, lambda0: f64, start: f64, end: f64, n: usize, localize: bool) -> Result<Staircase> {
    let delta_inv = 1.0 / delta;
    let all: Vec<f64> = (0..n)
        .map(|i| {
            if i + 1 == n {
                end
            } else {
                start + (end - start) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let evaluated: Vec<(f64, f64)> = all.par_iter().map(|&t| optimal_zero_count(delta, lambda0, t)).collect();
    let feasible_len = evaluated.iter().take_while(|(r, _)| *r <= MAX_STAIRCASE_COUNT).count();
    if feasible_len == 0 {
        return Err(Error::Infeasible(format!(
            "no x in [{}, {COUNT_X_MAX}] gives a usable count bound at Lambda = {start}, lambda0 = {lambda0}",
            x_floor(delta, lambda0)
        )));
    }
    let points = all[..feasible_len].to_vec();
    let raw: Vec<f64> = evaluated[..feasible_len].iter().map(|e| e.0).collect();
    let xs: Vec<f64> = evaluated[..feasible_len].iter().map(|e| e.1).collect();
    let mut counts: Vec<f64> = raw.iter().map(|&r| floor_count(r)).collect();
    for k in 1..counts.len() {
        counts[k] = counts[k].max(counts[k - 1]);
    }

    let weight = |t: f64| (-delta_inv * t).exp();
    let mut grid_sum = weight(points[0]) * counts[0];
    for k in 1..points.len() {
        grid_sum += (counts[k] - counts[k - 1]) * weight(points[k - 1]);
    }

    // Every level m in (N_{k-1}, N_k] is a zero whose position is at least the
    // largest t in [Lambda_{k-1}, Lambda_k] with floor(count(t)) < m.
    if !localize {
        return Ok(Staircase {
            points,
            raw,
            counts,
            xs,
            grid_sum,
            refined_sum: grid_sum,
        });
    }
    let jobs: Vec<(usize, f64)> = (1..points.len())
        .flat_map(|k| ((counts[k - 1] as u64 + 1)..=(counts[k] as u64)).map(move |m| (k, m as f64)))
        .collect();
    let locations: Vec<f64> = jobs
        .par_iter()
        .map(|&(k, m)| {
            let (mut lo, mut hi) = (points[k - 1], points[k]);
            while hi - lo > JUMP_TOL {
                let mid = 0.5 * (lo + hi);
                if floor_count(optimal_zero_count(delta, lambda0, mid).0) < m {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        })
        .collect();
    let mut refined_sum = weight(points[0]) * counts[0];
    for t in locations {
        refined_sum += weight(t);
    }
    Ok(Staircase {
        points,
        raw,
        counts,
        xs,
        grid_sum,
        refined_sum,
    })
}

/// Staircase bound on `T(Lambda)` given only `lambda_1 >= lambda0`, restricted
/// regime.
pub fn t_bound_staircase(delta: f64, cap: f64, lambda0: f64) -> Result<TBoundResult> {
    t_bound_staircase_with(delta, cap, lambda0, StaircaseOptions::default())
}

pub fn t_bound_staircase_with(delta: f64, cap: f64, lambda0: f64, opts: StaircaseOptions) -> Result<TBoundResult> {
    check_delta(delta)?;
    ensure_finite("Lambda", cap)?;
    ensure_finite("lambda0", lambda0)?;
    if !(lambda0 > 0.0 && lambda0 <= cap && cap < STAIRCASE_END) {
        return Err(Error::Domain(format!(
            "staircase needs 0 < lambda0 <= Lambda < 5, got lambda0 = {lambda0}, Lambda = {cap}"
        )));
    }
    if opts.grid_points < 2 {
        return Err(Error::Domain("staircase needs at least two grid points".into()));
    }
    let main = build_staircase(delta, lambda0, cap, STAIRCASE_END, opts.grid_points, true)?;
    let last = *main.points.last().expect("non-empty");
    let (tail, tail_source) = if last < STAIRCASE_END {
        let t = optimize_t_density(delta, last, true)?;
        (
            t.bound,
            format!("density bound at Lambda = {last} (count bound infeasible beyond)"),
        )
    } else {
        tail_bound(delta, lambda0, opts.tail_end)?
    };
    let mut slacks = vec![Slack::new("x >= max(0.8 lambda0, 2 delta)", 0.0)];
    let floor = x_floor(delta, lambda0);
    let min_x_margin = main.xs.iter().map(|x| x - floor).fold(f64::INFINITY, f64::min);
    slacks[0].margin = min_x_margin;
    slacks.push(Slack::new(
        "min Delta^2 over grid",
        main.raw.iter().map(|r| 1.0 / r).fold(f64::INFINITY, f64::min),
    ));
    let grid = StaircaseGrid {
        lambda0,
        points: main.points,
        raw_counts: main.raw,
        counts: main.counts,
        x_choices: main.xs,
        tail,
        tail_source,
        grid_sum: main.grid_sum,
        refined_sum: main.refined_sum,
    };
    Ok(TBoundResult {
        bound: grid.refined_sum + grid.tail,
        cap,
        method: TMethod::Staircase,
        params: TParams::Staircase(Box::new(grid)),
        slacks,
    })
}

/// Bound on `T(5)`: the density estimate at 5, or, when `tail_end` is given,
/// the smaller of that and a further staircase over `[5, tail_end]` closed by
/// the density estimate at `tail_end`.
pub fn tail_bound(delta: f64, lambda0: f64, tail_end: Option<f64>) -> Result<(f64, String)> {
    let at_end = optimize_t_density(delta, STAIRCASE_END, true)?.bound;
    let Some(end) = tail_end else {
        return Ok((at_end, "density bound at Lambda = 5".into()));
    };
    let n = ((end - STAIRCASE_END) / 0.01).round() as usize + 1;
    let extra = match build_staircase(delta, lambda0.min(STAIRCASE_END), STAIRCASE_END, end, n.max(2), false) {
        Ok(s) => s,
        Err(_) => return Ok((at_end, "density bound at Lambda = 5".into())),
    };
    let stop = *extra.points.last().expect("non-empty");
    let closing = optimize_t_density(delta, stop, true)?.bound;
    let extended = extra.grid_sum + closing;
    if extended < at_end {
        Ok((
            extended,
            format!("staircase on [5, {stop}] plus density bound at Lambda = {stop}"),
        ))
    } else {
        Ok((at_end, "density bound at Lambda = 5".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_identity() {
        for &(x, y, z) in &[(0.1, 0.2, 0.3), (0.047065, 0.128170, 0.084299), (1e-3, 0.9, 0.5)] {
            let g = BoundParams::new(x, y, z, false).unwrap().k();
            let r = BoundParams::new(x, y, z, true).unwrap().k();
            assert!((g - r - 2.0 / 3.0).abs() < 1e-15);
        }
        assert!(BoundParams::new(0.0, 1.0, 1.0, false).is_err());
    }

    #[test]
    fn b0_limits() {
        let u = 0.7;
        let small = b0(u, 1e-7).unwrap();
        assert!((small - (u / 3.0 + u * u)).abs() < 1e-6);
        let lam = 200.0;
        let big = b0(u, lam).unwrap();
        assert!((big - (1.0 / (6.0 * lam) + 1.0 / (lam * lam))).abs() < 1e-15);
        assert!(b0(0.0, 1.0).is_err());
        assert!(b0(1.0, -1.0).is_err());
    }

    #[test]
    fn no_exponential_gain_at_k_equal_inverse_delta() {
        let p = BoundParams::new(0.1, 0.2, 0.3, true).unwrap();
        let delta = 1.0 / p.k();
        let t = t_bound_density(delta, 2.0, &p).unwrap();
        assert!((t.bound - b_bound(&p, 2.0).unwrap()).abs() < 1e-12 * t.bound);
        let p = BoundParams::new(0.5, 0.5, 0.5, false).unwrap();
        assert!(matches!(t_bound_density(0.291, 2.0, &p), Err(Error::Infeasible(_))));
    }

    #[test]
    fn zero_count_bound_edges() {
        let ctx = KernelContext::new(0.5, 1.0).unwrap();
        assert!(matches!(zero_count_bound(&ctx, 1.2, 0.0), Err(Error::Infeasible(_))));
        let ctx = KernelContext::new(1.8, 1.58).unwrap();
        let d = ctx.delta(1.6);
        let n = zero_count_bound(&ctx, 1.6, 0.0).unwrap();
        assert!((n - 1.0 / (d * d)).abs() < 1e-12 * n);
        let near = zero_count_bound(&ctx, 1.6, d * d * (1.0 - 1e-9)).unwrap();
        assert!(near > 1e8);
        assert!(zero_count_bound(&ctx, 1.6, d * d).is_err());
    }

    #[test]
    fn staircase_domain() {
        assert!(t_bound_staircase(0.291, 1.0, 1.2).is_err());
        assert!(t_bound_staircase(0.291, 5.0, 1.2).is_err());
        assert!(t_bound_staircase(0.291, 1.2, 0.0).is_err());
    }
}

//! Deterministic derivative-free minimization over a box with a feasibility
//! predicate: a full-grid coarse scan followed by coordinate-wise golden
//! section sweeps from the best few grid points.
//!
//! The returned value is whatever the best feasible evaluation produced. It
//! is an upper bound on the true constrained minimum and nothing more, which
//! is all the certificates built on top of it need.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

/// A minimization problem over `bounds` (1 to 3 dimensions).
pub struct SearchSpec<F, P> {
    pub bounds: Vec<Interval>,
    pub objective: F,
    pub feasible: P,
    /// Grid points per axis in the coarse scan, endpoints included.
    pub coarse_points: usize,
    /// Number of best coarse points refined.
    pub starts: usize,
    /// Sweeps stop once a full sweep improves the value by less than this
    /// (relative to `max(1, |value|)`).
    pub refine_tol: f64,
    /// Maximum number of coordinate sweeps per start.
    pub max_iter: usize,
}

impl<F> SearchSpec<F, fn(&[f64]) -> bool>
where
    F: Fn(&[f64]) -> f64,
{
    pub fn new(bounds: Vec<Interval>, objective: F) -> Self {
        Self {
            bounds,
            objective,
            feasible: always_feasible,
            coarse_points: 16,
            starts: 1,
            refine_tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

fn always_feasible(_: &[f64]) -> bool {
    true
}

impl<F, P> SearchSpec<F, P>
where
    F: Fn(&[f64]) -> f64,
    P: Fn(&[f64]) -> bool,
{
    pub fn with_feasible<Q>(self, feasible: Q) -> SearchSpec<F, Q>
    where
        Q: Fn(&[f64]) -> bool,
    {
        SearchSpec {
            bounds: self.bounds,
            objective: self.objective,
            feasible,
            coarse_points: self.coarse_points,
            starts: self.starts,
            refine_tol: self.refine_tol,
            max_iter: self.max_iter,
        }
    }

    pub fn coarse_points(mut self, n: usize) -> Self {
        self.coarse_points = n;
        self
    }

    pub fn starts(mut self, n: usize) -> Self {
        self.starts = n;
        self
    }

    pub fn refine_tol(mut self, tol: f64) -> Self {
        self.refine_tol = tol;
        self
    }

    pub fn max_iter(mut self, n: usize) -> Self {
        self.max_iter = n;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.bounds.is_empty() || self.bounds.len() > 3 {
            return Err(Error::Domain(format!(
                "search dimension must be 1..=3, got {}",
                self.bounds.len()
            )));
        }
        for b in &self.bounds {
            if !(b.lo.is_finite() && b.hi.is_finite() && b.lo < b.hi) {
                return Err(Error::Domain(format!("degenerate search box [{}, {}]", b.lo, b.hi)));
            }
        }
        if self.coarse_points < 4 {
            return Err(Error::Domain(format!(
                "coarse_points must be at least 4, got {}",
                self.coarse_points
            )));
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::Domain("refine_tol must be positive".into()));
        }
        Ok(())
    }

    /// Objective with infeasible or non-finite points mapped to `+inf`.
    fn score(&self, p: &[f64]) -> f64 {
        if !(self.feasible)(p) {
            return f64::INFINITY;
        }
        let v = (self.objective)(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    /// Best value seen during the coarse scan.
    pub coarse_value: f64,
    pub evaluations: usize,
}

/// Minimize `spec.objective` over the feasible part of `spec.bounds`.
pub fn minimize<F, P>(spec: &SearchSpec<F, P>) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64,
    P: Fn(&[f64]) -> bool,
{
    spec.validate()?;
    let dims = spec.bounds.len();
    let n = spec.coarse_points;
    let axes: Vec<Vec<f64>> = spec
        .bounds
        .iter()
        .map(|b| (0..n).map(|i| b.lo + b.width() * i as f64 / (n - 1) as f64).collect())
        .collect();

    // Lexicographic scan; ties keep the earliest index.
    let total = n.pow(dims as u32);
    let mut evaluations = 0;
    let mut scanned: Vec<(f64, usize)> = Vec::new();
    let mut point = vec![0.0; dims];
    for idx in 0..total {
        let mut rem = idx;
        for d in (0..dims).rev() {
            point[d] = axes[d][rem % n];
            rem /= n;
        }
        let v = spec.score(&point);
        evaluations += 1;
        if v.is_finite() {
            scanned.push((v, idx));
        }
    }
    if scanned.is_empty() {
        return Err(Error::NoFeasiblePoint(format!(
            "{total} coarse points over {dims}-dimensional box"
        )));
    }
    scanned.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let coarse_value = scanned[0].0;

    let cell: Vec<f64> = spec.bounds.iter().map(|b| b.width() / (n - 1) as f64).collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for &(v0, idx) in scanned.iter().take(spec.starts.max(1)) {
        let mut p = vec![0.0; dims];
        let mut rem = idx;
        for d in (0..dims).rev() {
            p[d] = axes[d][rem % n];
            rem /= n;
        }
        let (p, v) = refine(spec, p, v0, &cell, &mut evaluations);
        if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
            best = Some((p, v));
        }
    }
    let (point, value) = best.expect("at least one start");
    Ok(Minimum {
        point,
        value,
        coarse_value,
        evaluations,
    })
}

fn refine<F, P>(
    spec: &SearchSpec<F, P>,
    mut p: Vec<f64>,
    mut v: f64,
    cell: &[f64],
    evaluations: &mut usize,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
    P: Fn(&[f64]) -> bool,
{
    for _ in 0..spec.max_iter {
        let before = v;
        for d in 0..p.len() {
            let bounds = spec.bounds[d];
            let a = bounds.clamp(p[d] - cell[d]);
            let b = bounds.clamp(p[d] + cell[d]);
            let mut trial = p.clone();
            let mut line = |t: f64| {
                trial[d] = t;
                *evaluations += 1;
                spec.score(&trial)
            };
            let (t, vt) = golden_section(&mut line, a, b, 1e-12 * (1.0 + p[d].abs()));
            if vt < v {
                p[d] = t;
                v = vt;
            }
        }
        if before - v < spec.refine_tol * v.abs().max(1.0) {
            break;
        }
    }
    (p, v)
}

/// Golden-section search for a minimum of `f` on `[a, b]`; returns the best
/// point evaluated, endpoints included.
pub fn golden_section<F: FnMut(f64) -> f64>(f: &mut F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let fa = f(a);
    let fb = f(b);
    let (mut best_t, mut best_v) = if fb < fa { (b, fb) } else { (a, fa) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for (t, v) in [(c, fc), (d, fd)] {
        if v < best_v {
            best_t = t;
            best_v = v;
        }
    }
    while (b - a) > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc < best_v {
                best_t = c;
                best_v = fc;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd < best_v {
                best_t = d;
                best_v = fd;
            }
        }
    }
    (best_t, best_v)
}

/// 1-D convenience wrapper: coarse scan with `coarse_points` samples, then golden
/// section on the bracketing cells.
pub fn minimize_scalar<F, P>(lo: f64, hi: f64, coarse_points: usize, objective: F, feasible: P) -> Result<Minimum>
where
    F: Fn(f64) -> f64,
    P: Fn(f64) -> bool,
{
    let spec = SearchSpec::new(vec![Interval::new(lo, hi)], |p: &[f64]| objective(p[0]))
        .with_feasible(|p: &[f64]| feasible(p[0]))
        .coarse_points(coarse_points);
    minimize(&spec)
}

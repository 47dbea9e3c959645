//! The smoothing kernel `g(u) = (2-u)^3 (4 + 6u + u^2) / 30` on `[0, 2]`, its
//! Laplace transform `G`, the rescaled transform `F_x(z) = G(z / x)`, and the
//! ratios `psi`, `xi`, `Delta` that drive both zero-density inequalities.
//!
//! `G` is evaluated in closed form. Expanding `g` as
//! `(32 - 40u^2 + 20u^3 - u^5) / 30` and integrating by parts until the
//! polynomial is exhausted gives
//!
//! ```text
//! G(z) = sum_m [g^(m)(0) - g^(m)(2) e^(-2z)] / z^(m+1)
//!      = 16/(15z) - 8/(3z^3) + 4/z^4 - 4/z^6 + 4 (z+1)^2 e^(-2z) / z^6
//! ```
//!
//! The inverse powers cancel badly as `z -> 0`, so for `|z| < SERIES_RADIUS`
//! the Taylor series in `z` is used instead. Its coefficients are the exact
//! moments `int_0^2 u^k g(u) du = 2^(k+1) * 32 / ((k+1)(k+3)(k+4)(k+6))`.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};

/// `g(0)`.
pub const G_AT_ZERO: f64 = 16.0 / 15.0;

/// Below this `|z|` the Taylor branch of `G` is used.
pub const SERIES_RADIUS: f64 = 1.0;

/// Number of Taylor terms; the truncation error at `|z| = 1` is below 1e-18.
const SERIES_TERMS: usize = 28;

/// `g(u)` for `u` in `[0, 2]`.
pub fn eval_g(u: f64) -> Result<f64> {
    ensure_finite("u", u)?;
    if !(0.0..=2.0).contains(&u) {
        return Err(Error::Domain(format!("g is supported on [0, 2], got u = {u}")));
    }
    Ok(g_unchecked(u))
}

#[inline]
pub(crate) fn g_unchecked(u: f64) -> f64 {
    let w = 2.0 - u;
    w * w * w * (4.0 + u * (6.0 + u)) / 30.0
}

/// `k`-th moment `int_0^2 u^k g(u) du`.
pub fn moment(k: u32) -> f64 {
    let kf = f64::from(k);
    2f64.powi(k as i32 + 1) * 32.0 / ((kf + 1.0) * (kf + 3.0) * (kf + 4.0) * (kf + 6.0))
}

fn series_coefficients() -> &'static [f64; SERIES_TERMS] {
    static COEFFS: OnceLock<[f64; SERIES_TERMS]> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let mut c = [0.0; SERIES_TERMS];
        let mut factorial = 1.0;
        for (k, slot) in c.iter_mut().enumerate() {
            if k > 0 {
                factorial *= k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            *slot = sign * moment(k as u32) / factorial;
        }
        c
    })
}

/// Taylor branch of `G`, accurate for `|z| <= SERIES_RADIUS`.
pub fn laplace_g_series(z: f64) -> f64 {
    series_coefficients().iter().rev().fold(0.0, |acc, &c| acc * z + c)
}

/// Integration-by-parts branch of `G`. Loses accuracy for small `|z|`.
pub fn laplace_g_closed(z: f64) -> f64 {
    let r = 1.0 / z;
    let r2 = r * r;
    let r3 = r2 * r;
    let r4 = r2 * r2;
    let r6 = r4 * r2;
    let zp1 = z + 1.0;
    G_AT_ZERO * r - (8.0 / 3.0) * r3 + 4.0 * r4 - 4.0 * r6 + 4.0 * zp1 * zp1 * r6 * (-2.0 * z).exp()
}

#[inline]
pub(crate) fn laplace_unchecked(z: f64) -> f64 {
    if z.abs() < SERIES_RADIUS {
        laplace_g_series(z)
    } else {
        laplace_g_closed(z)
    }
}

/// `G(z) = int_0^2 g(u) e^(-uz) du`.
pub fn laplace_g(z: f64) -> Result<f64> {
    ensure_finite("z", z)?;
    let v = laplace_unchecked(z);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("G({z}) overflows")))
    }
}

/// The scaled kernel `f_x(u) = x g(ux)` together with the assumed lower bound
/// `lambda0 <= lambda_1` on the smallest normalized zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelContext {
    pub x: f64,
    pub lambda0: f64,
}

impl KernelContext {
    pub fn new(x: f64, lambda0: f64) -> Result<Self> {
        ensure_finite("x", x)?;
        ensure_finite("lambda0", lambda0)?;
        if x <= 0.0 {
            return Err(Error::Domain(format!("kernel scale x must be positive, got {x}")));
        }
        if lambda0 < 0.0 {
            return Err(Error::Domain(format!("lambda0 must be non-negative, got {lambda0}")));
        }
        let ctx = Self { x, lambda0 };
        let base = ctx.f_unchecked(-lambda0);
        if !(base > 0.0 && base.is_finite()) {
            return Err(Error::Domain(format!(
                "F_x(-lambda0) = {base} is not positive and finite"
            )));
        }
        Ok(ctx)
    }

    #[inline]
    pub(crate) fn f_unchecked(&self, z: f64) -> f64 {
        laplace_unchecked(z / self.x)
    }

    /// `f_x(0) = x g(0)`.
    pub fn f_at_zero(&self) -> f64 {
        self.x * G_AT_ZERO
    }

    /// `F_x(-lambda0)`, the common normalizer of every `psi`.
    pub fn base(&self) -> f64 {
        self.f_unchecked(-self.lambda0)
    }

    /// `psi(lambda) = F_x(lambda - lambda0) / F_x(-lambda0)`.
    pub fn psi(&self, lambda: f64) -> f64 {
        self.f_unchecked(lambda - self.lambda0) / self.base()
    }

    /// `xi = f_x(0) / (6 F_x(-lambda0))`.
    pub fn xi(&self) -> f64 {
        self.f_at_zero() / (6.0 * self.base())
    }

    /// `Delta = psi(Lambda) - xi`. May be non-positive.
    pub fn delta(&self, cap: f64) -> f64 {
        let base = self.base();
        (self.f_unchecked(cap - self.lambda0) - self.f_at_zero() / 6.0) / base
    }
}

/// `F_x(z) = G(z / x)`.
pub fn eval_f(ctx: &KernelContext, z: f64) -> Result<f64> {
    ensure_finite("z", z)?;
    laplace_g(z / ctx.x)
}

/// `psi`, `xi` and `Delta` for one kernel and one cut-off `Lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiQuantities {
    pub ctx: KernelContext,
    pub cap: f64,
    /// `psi(Lambda)`.
    pub psi_cap: f64,
    pub xi: f64,
    pub delta: f64,
}

impl PsiQuantities {
    pub fn psi_at(&self, lambda: f64) -> f64 {
        self.ctx.psi(lambda)
    }
}

pub fn psi_quantities(ctx: &KernelContext, cap: f64) -> Result<PsiQuantities> {
    ensure_finite("Lambda", cap)?;
    if cap <= ctx.lambda0 {
        return Err(Error::Domain(format!(
            "Lambda = {cap} must exceed lambda0 = {}",
            ctx.lambda0
        )));
    }
    let psi_cap = ctx.psi(cap);
    let xi = ctx.xi();
    Ok(PsiQuantities {
        ctx: *ctx,
        cap,
        psi_cap,
        xi,
        delta: psi_cap - xi,
    })
}

/// `(e^(-lambda*/delta) - e^(-Lambda/delta)) / (psi* - psi)`: the factor that
/// converts a budget on `sum (psi_j - psi)` into a bound on
/// `sum (e^(-lambda_j/delta) - e^(-Lambda/delta))` over zeros `lambda_j >= lambda*`.
///
/// Valid only for `x >= 2 delta`, where `(psi_j - psi) / (e^((Lambda - lambda_j)/delta) - 1)`
/// is nondecreasing in `lambda_j`.
pub fn monotone_ratio_coefficient(ctx: &KernelContext, delta_inv: f64, cap: f64, lambda_star: f64) -> Result<f64> {
    ensure_finite("delta_inv", delta_inv)?;
    ensure_finite("Lambda", cap)?;
    ensure_finite("lambda_star", lambda_star)?;
    if ctx.x * delta_inv < 2.0 {
        return Err(Error::Precondition(format!(
            "x = {} is below 2 delta = {}",
            ctx.x,
            2.0 / delta_inv
        )));
    }
    if lambda_star < ctx.lambda0 || lambda_star >= cap {
        return Err(Error::Precondition(format!(
            "need lambda0 <= lambda* < Lambda, got lambda0 = {}, lambda* = {lambda_star}, Lambda = {cap}",
            ctx.lambda0
        )));
    }
    Ok(ratio_coefficient_unchecked(ctx, delta_inv, cap, lambda_star))
}

pub(crate) fn ratio_coefficient_unchecked(ctx: &KernelContext, delta_inv: f64, cap: f64, lambda_star: f64) -> f64 {
    let num = (-delta_inv * cap).exp() * (delta_inv * (cap - lambda_star)).exp_m1();
    let den = (ctx.f_unchecked(lambda_star - ctx.lambda0) - ctx.f_unchecked(cap - ctx.lambda0)) / ctx.base();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_values() {
        assert!((eval_g(0.0).unwrap() - 16.0 / 15.0).abs() < 1e-15);
        assert_eq!(eval_g(2.0).unwrap(), 0.0);
        assert!((eval_g(1.0).unwrap() - 11.0 / 30.0).abs() < 1e-15);
        assert!(matches!(eval_g(2.0001), Err(Error::Domain(_))));
        assert!(matches!(eval_g(-0.1), Err(Error::Domain(_))));
        assert!(eval_g(f64::NAN).is_err());
    }

    #[test]
    fn expanded_form_matches_factored() {
        for i in 0..=200 {
            let u = 2.0 * f64::from(i) / 200.0;
            let expanded = (32.0 - 40.0 * u * u + 20.0 * u.powi(3) - u.powi(5)) / 30.0;
            assert!((g_unchecked(u) - expanded).abs() < 1e-14, "u = {u}");
        }
    }

    #[test]
    fn g_is_nonnegative_with_cubic_contact_at_two() {
        for i in 0..=10_000 {
            let u = 2.0 * f64::from(i) / 10_000.0;
            assert!(g_unchecked(u) >= 0.0);
        }
        let h = 1e-5;
        let slope = (g_unchecked(2.0) - g_unchecked(2.0 - h)) / h;
        assert!(slope.abs() < 1e-8);
    }

    #[test]
    fn g_at_zero_is_eight_ninths() {
        assert!((laplace_g(0.0).unwrap() - 8.0 / 9.0).abs() < 1e-15);
        assert!((moment(0) - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn branches_agree_at_switchover() {
        for z in [SERIES_RADIUS, -SERIES_RADIUS, 0.999_999, -0.999_999] {
            let a = laplace_g_series(z);
            let b = laplace_g_closed(z);
            assert!((a - b).abs() <= 1e-11 * a.abs(), "z = {z}: {a} vs {b}");
        }
    }

    #[test]
    fn watson_limit() {
        for z in [1e3, 1e4, 1e6] {
            let v = laplace_g(z).unwrap() * z;
            assert!((v - G_AT_ZERO).abs() < 10.0 / z, "z = {z}: {v}");
        }
    }

    #[test]
    fn scaling_identities() {
        let ctx = KernelContext::new(2.0, 0.5).unwrap();
        assert_eq!(eval_f(&ctx, 2.0).unwrap(), laplace_g(1.0).unwrap());
        let unit = KernelContext::new(1.0, 0.0).unwrap();
        assert!((eval_f(&unit, 0.0).unwrap() - 8.0 / 9.0).abs() < 1e-15);
        for x in [0.3, 1.7, 5.0] {
            let ctx = KernelContext::new(x, 0.0).unwrap();
            let w = 0.37;
            assert!((eval_f(&ctx, -x * w).unwrap() - laplace_g(-w).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_context() {
        assert!(KernelContext::new(0.0, 1.0).is_err());
        assert!(KernelContext::new(1.0, -0.1).is_err());
        assert!(KernelContext::new(f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn psi_at_lambda0_and_xi_numerator() {
        let ctx = KernelContext::new(0.9, 0.7).unwrap();
        let expected = laplace_g(0.0).unwrap() / laplace_g(-0.7 / 0.9).unwrap();
        assert!((ctx.psi(0.7) - expected).abs() < 1e-15);
        assert!(ctx.psi(0.7) < 1.0);
        assert!((ctx.f_at_zero() - 16.0 * 0.9 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn psi_quantities_require_cap_above_lambda0() {
        let ctx = KernelContext::new(1.0, 1.0).unwrap();
        assert!(psi_quantities(&ctx, 1.0).is_err());
        let q = psi_quantities(&ctx, 1.5).unwrap();
        assert!((q.delta - (q.psi_cap - q.xi)).abs() < 1e-16);
        assert_eq!(q.psi_at(1.5), q.psi_cap);
    }

    #[test]
    fn ratio_coefficient_preconditions() {
        let ctx = KernelContext::new(0.5, 0.6).unwrap();
        let delta_inv = 1.0 / 0.291;
        assert!(matches!(
            monotone_ratio_coefficient(&ctx, delta_inv, 1.348, 0.702),
            Err(Error::Precondition(_))
        ));
        let ctx = KernelContext::new(0.8, 0.6).unwrap();
        assert!(monotone_ratio_coefficient(&ctx, delta_inv, 1.348, 1.348).is_err());
        assert!(monotone_ratio_coefficient(&ctx, delta_inv, 1.348, 0.5).is_err());
    }

    #[test]
    fn ratio_coefficient_has_finite_limit() {
        let ctx = KernelContext::new(0.8, 0.6).unwrap();
        let delta_inv = 1.0 / 0.291;
        let a = monotone_ratio_coefficient(&ctx, delta_inv, 1.348, 1.348 - 1e-6).unwrap();
        let b = monotone_ratio_coefficient(&ctx, delta_inv, 1.348, 1.348 - 1e-7).unwrap();
        assert!(a > 0.0 && b > 0.0);
        assert!((a - b).abs() < 1e-5 * a, "{a} vs {b}");
    }
}

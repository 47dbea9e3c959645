#![allow(clippy::excessive_precision)]

mod common;

use common::{laplace_ref, linspace, worst_g_error};
use zeroledger::kernel::{
    eval_f, eval_g, laplace_g, laplace_g_closed, laplace_g_series, moment, monotone_ratio_coefficient, psi_quantities,
    KernelContext, SERIES_RADIUS,
};
use zeroledger::Error;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

#[test]
fn closed_form_matches_quadrature() {
    let (err, z) = worst_g_error();
    assert!(err <= 1e-10, "relative error {err:e} at z = {z}");
}

#[test]
fn quadrature_near_the_branch_switch() {
    for z in [-1.0 - 1e-9, -1.0, -0.999_999, 0.999_999, 1.0, 1.000_001, 1e-8, -1e-8] {
        let exact = laplace_ref(z);
        assert!(close(laplace_g(z).unwrap(), exact, 1e-13), "z = {z}");
    }
}

#[test]
fn transform_at_zero() {
    assert!((laplace_g(0.0).unwrap() - 8.0 / 9.0).abs() <= 1e-12);
    assert!((moment(0) - 8.0 / 9.0).abs() <= 1e-15);
}

#[test]
fn branches_agree_at_the_radius() {
    for z in [SERIES_RADIUS, -SERIES_RADIUS, 0.9, -0.9] {
        assert!(close(laplace_g_series(z), laplace_g_closed(z), 1e-13), "z = {z}");
    }
}

// 50-digit mpmath evaluations of int_0^2 g(u) e^(-uz) du.
const G_FROZEN: [(f64, f64); 12] = [
    (-10.0, 157_193.419_708_772_05),
    (-3.0, 8.641_509_870_896_792_8),
    (-1.0, 1.6),
    (-0.5, 1.170_037_021_378_895_1),
    (1e-6, 0.888_888_431_746_209_52),
    (0.3, 0.766_337_442_549_635_9),
    (0.999_999, 0.565_364_756_004_265_1),
    (1.0, 0.565_364_531_785_803_07),
    (1.000_001, 0.565_364_307_567_486_8),
    (2.5, 0.343_368_332_914_504_45),
    (10.0, 0.104_396_000_000_997_6),
    (60.0, 0.017_765_740_655_006_859),
];

#[test]
fn transform_matches_frozen_values() {
    for (z, want) in G_FROZEN {
        assert!(close(laplace_g(z).unwrap(), want, 1e-13), "G({z})");
    }
}

#[test]
fn psi_xi_delta_frozen() {
    let ctx = KernelContext::new(0.8, 1.0).unwrap();
    let q = psi_quantities(&ctx, 2.0).unwrap();
    assert!(close(ctx.psi(2.0), 0.270_266_822_581_730_83, 1e-13));
    assert!(close(ctx.xi(), 0.074_845_295_426_860_547, 1e-13));
    assert!(close(ctx.delta(2.0), 0.195_421_527_154_870_28, 1e-13));
    assert!(close(q.delta, q.psi_cap - q.xi, 1e-15));
}

#[test]
fn ratio_coefficient_frozen() {
    let ctx = KernelContext::new(1.2, 1.08).unwrap();
    let c = monotone_ratio_coefficient(&ctx, 1.0 / 0.291, 1.273, 1.08).unwrap();
    assert!(close(c, 0.256_742_483_656_543_2, 1e-12), "{c}");
}

#[test]
fn ratio_coefficient_needs_x_at_least_two_delta() {
    let ctx = KernelContext::new(0.5, 0.4).unwrap();
    let r = monotone_ratio_coefficient(&ctx, 1.0 / 0.291, 1.273, 0.5);
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn rescaled_transform() {
    let ctx = KernelContext::new(1.7, 0.3).unwrap();
    for z in linspace(-2.0, 8.0, 41) {
        assert_eq!(eval_f(&ctx, z).unwrap(), laplace_g(z / 1.7).unwrap());
    }
}

#[test]
fn kernel_values_and_domain() {
    assert!((eval_g(1.0).unwrap() - 11.0 / 30.0).abs() < 1e-15);
    assert!(eval_g(-0.5).is_err());
    assert!(KernelContext::new(0.0, 1.0).is_err());
    assert!(KernelContext::new(1.0, -0.1).is_err());
    assert!(laplace_g(f64::NAN).is_err());
    assert!(laplace_g(-500.0).is_err());
}

#[test]
fn moments_match_quadrature() {
    for k in 0..8 {
        let q = common::integrate(&|u| u.powi(k as i32) * common::g_ref(u), 0.0, 2.0, 1e-15);
        assert!(close(moment(k), q, 1e-13), "moment {k}");
    }
}

//! Independent oracles and sampled property suites shared by the test targets.
#![allow(dead_code)]

use zeroledger::density::{b_bound, BoundParams};
use zeroledger::kernel::KernelContext;

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let pair = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature to relative tolerance `rel`.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel: f64) -> f64 {
    fn go(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, err: f64, rel: f64, depth: u32) -> f64 {
        if err <= rel * whole.abs() || depth == 0 {
            return whole;
        }
        let m = 0.5 * (a + b);
        let (l, el) = gk15(f, a, m);
        let (r, er) = gk15(f, m, b);
        go(f, a, m, l, el, rel, depth - 1) + go(f, m, b, r, er, rel, depth - 1)
    }
    let (whole, err) = gk15(f, a, b);
    go(f, a, b, whole, err, rel, 30)
}

pub fn g_ref(u: f64) -> f64 {
    (2.0 - u).powi(3) * (4.0 + 6.0 * u + u * u) / 30.0
}

/// `G(z)` by quadrature of its defining integral.
pub fn laplace_ref(z: f64) -> f64 {
    integrate(&|u| g_ref(u) * (-u * z).exp(), 0.0, 2.0, 1e-15)
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub const DELTA: f64 = 0.291;
pub const GRID: usize = 100;

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// `F_x(z)` strictly decreasing in `z` on 100-point grids.
pub fn suite_f_decreasing() -> Result<(), String> {
    for x in [0.4, 0.8, 1.5, 3.0] {
        let ctx = KernelContext::new(x, 0.0).unwrap();
        let vals: Vec<f64> = linspace(-3.0, 10.0, GRID)
            .iter()
            .map(|&z| zeroledger::kernel::eval_f(&ctx, z).unwrap())
            .collect();
        if !strictly_decreasing(&vals) {
            return Err(format!("F_x not decreasing at x = {x}"));
        }
    }
    Ok(())
}

/// `psi(lambda)` strictly decreasing in `lambda`.
pub fn suite_psi_decreasing() -> Result<(), String> {
    for (x, l0) in [(0.6, 0.3), (0.8, 1.0), (1.4, 1.08), (1.2, 0.5)] {
        let ctx = KernelContext::new(x, l0).unwrap();
        let vals: Vec<f64> = linspace(l0, 5.0, GRID).iter().map(|&l| ctx.psi(l)).collect();
        if !strictly_decreasing(&vals) {
            return Err(format!("psi not decreasing at x = {x}, lambda0 = {l0}"));
        }
    }
    Ok(())
}

/// `B(x, y, z, Lambda)` nonincreasing in `Lambda` on `[3.08, 10]`.
pub fn suite_b_decreasing() -> Result<(), String> {
    for (x, y, z) in [(0.047065, 0.128170, 0.084299), (0.02, 0.2, 0.1), (0.1, 0.05, 0.3)] {
        let p = BoundParams::new(x, y, z, false).unwrap();
        let vals: Vec<f64> = linspace(3.08, 10.0, GRID)
            .iter()
            .map(|&c| b_bound(&p, c).unwrap())
            .collect();
        if !vals.windows(2).all(|w| w[1] <= w[0]) {
            return Err(format!("B not nonincreasing in Lambda at ({x}, {y}, {z})"));
        }
    }
    Ok(())
}

/// `(psi_j - psi) / (e^((Lambda - lambda_j)/delta) - 1)` nondecreasing in `lambda_j`
/// for `x >= 2 delta`.
pub fn suite_ratio_monotone() -> Result<(), String> {
    let di = 1.0 / DELTA;
    for (x, l0, cap) in [
        (2.0 * DELTA, 0.4, 1.273),
        (1.0, 0.5, 1.311),
        (1.3762, 1.08, 1.273),
        (0.74, 0.6, 1.348),
        (1.5, 0.08, 1.58),
    ] {
        let ctx = KernelContext::new(x, l0).unwrap();
        let psi_cap = ctx.psi(cap);
        let hi = cap - (cap - l0) / GRID as f64;
        let vals: Vec<f64> = linspace(l0, hi, GRID)
            .iter()
            .map(|&l| (ctx.psi(l) - psi_cap) / (di * (cap - l)).exp_m1())
            .collect();
        if !vals.windows(2).all(|w| w[1] >= w[0]) {
            return Err(format!("ratio not monotone at x = {x}, lambda0 = {l0}, Lambda = {cap}"));
        }
    }
    Ok(())
}

/// Worst relative error of closed-form `G` against quadrature on 500 points of `[-10, 60]`.
pub fn worst_g_error() -> (f64, f64) {
    let mut worst = (0.0, 0.0);
    for z in linspace(-10.0, 60.0, 500) {
        let exact = laplace_ref(z);
        let rel = ((zeroledger::kernel::laplace_g(z).unwrap() - exact) / exact).abs();
        if rel > worst.0 {
            worst = (rel, z);
        }
    }
    worst
}

use zeroledger::density::{
    b0, b_bound, decay_coefficient, optimal_zero_count, optimize_t_density, t_bound_density, t_bound_staircase_with,
    BoundParams, StaircaseOptions,
};
use zeroledger::Error;

const D: f64 = 0.291;
const TRIPLE: (f64, f64, f64) = (0.047065, 0.128170, 0.084299);

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

fn triple(restricted: bool) -> BoundParams {
    BoundParams::new(TRIPLE.0, TRIPLE.1, TRIPLE.2, restricted).unwrap()
}

// mpmath at 50 digits.
#[test]
fn density_factors_frozen() {
    assert!(close(b0(0.5, 3.08).unwrap(), 0.116_686_832_593_528_17, 1e-13));
    assert!(close(
        b0(TRIPLE.0 + 1.0 / 3.0 + TRIPLE.1, 3.08).unwrap(),
        0.117_742_797_318_603_38,
        1e-13
    ));
    let b = b_bound(&triple(false), 3.08).unwrap();
    assert!(close(b, 49.674_480_672_072_32, 1e-13), "{b}");
    assert!(b <= 49.7);
}

#[test]
fn fixed_triple_tail_frozen() {
    let t = t_bound_density(D, 3.08, &triple(false)).unwrap();
    assert!(close(t.bound, 0.674_715_472_413_476_4, 1e-12), "{}", t.bound);
    assert!(t.min_slack() >= 0.0);
}

#[test]
fn optimized_tail_never_worse_than_fixed_triple() {
    let fixed = t_bound_density(D, 3.08, &triple(false)).unwrap().bound;
    let opt = optimize_t_density(D, 3.08, false).unwrap().bound;
    assert!(opt <= fixed * (1.0 + 1e-12));
}

#[test]
fn tail_bound_decreases_as_cap_grows() {
    for cap in [1.273, 1.29, 1.311, 1.348, 1.58, 3.08] {
        let a = optimize_t_density(D, cap, false).unwrap().bound;
        let b = optimize_t_density(D, cap + 0.05, false).unwrap().bound;
        assert!(b < a, "Lambda = {cap}: {a} -> {b}");
    }
}

#[test]
fn exponent_above_inverse_delta_is_infeasible() {
    let p = BoundParams::new(0.5, 0.5, 0.5, false).unwrap();
    assert!(matches!(t_bound_density(D, 3.08, &p), Err(Error::Infeasible(_))));
    assert!(BoundParams::new(0.0, 0.1, 0.1, false).is_err());
}

#[test]
fn decay_coefficient_at_and_beyond_the_frontier() {
    let d = decay_coefficient(D, 3.08, true).unwrap();
    assert!(d.coefficient <= 50.0);
    assert!(d.rate_slack >= 0.0);
    assert!(close(d.at(4.0), d.coefficient * (-8.0f64).exp(), 1e-15));
    assert!(matches!(
        decay_coefficient(0.5, 3.08, true),
        Err(Error::NoFeasiblePoint(_))
    ));
}

const STAIRCASE_ROWS: [(f64, f64); 11] = [
    (1.58, 1.58),
    (1.58, 0.08),
    (1.36, 1.36),
    (1.348, 0.6),
    (1.311, 0.97),
    (1.311, 0.92),
    (1.311, 0.5),
    (1.29, 1.29),
    (1.29, 0.3),
    (1.273, 1.08),
    (1.273, 0.4),
];

#[test]
fn staircase_invariant_under_grid_doubling() {
    for (cap, l0) in STAIRCASE_ROWS {
        let run = |n| {
            t_bound_staircase_with(
                D,
                cap,
                l0,
                StaircaseOptions {
                    grid_points: n,
                    ..StaircaseOptions::default()
                },
            )
            .unwrap()
            .bound
        };
        let (a, b) = (run(201), run(401));
        assert!((a - b).abs() <= 1e-9, "({cap}, {l0}): {a} vs {b}");
    }
}

#[test]
fn staircase_counts_are_enveloped_integers() {
    for (cap, l0) in STAIRCASE_ROWS {
        let t = t_bound_staircase_with(D, cap, l0, StaircaseOptions::default()).unwrap();
        let g = t.staircase().unwrap();
        assert!(g.counts.windows(2).all(|w| w[1] >= w[0]));
        assert!(g.counts.iter().all(|c| c.fract() == 0.0));
        assert!(g
            .counts
            .iter()
            .zip(&g.raw_counts)
            .all(|(c, r)| *c >= (r + 1e-9).floor()));
        assert!(t.min_slack() >= 0.0);
    }
}

#[test]
fn at_most_six_zeros_below_each_head_cap() {
    for (cap, l0) in [
        (1.273, 1.08),
        (1.273, 0.4),
        (1.311, 0.97),
        (1.311, 0.5),
        (1.311, 0.92),
        (1.348, 0.6),
    ] {
        let (n, _) = optimal_zero_count(D, l0, cap);
        assert!(n.floor() <= 6.0, "({cap}, {l0}): {n}");
    }
}

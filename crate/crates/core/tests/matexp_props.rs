mod common;

use common::{exp_oracle, rng};
use intersample::{augmented_phi, interval_exp, point_exp, Error, ExpParams, Interval, IntervalMatrix, Rounding};
use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::Rng;

const R: Rounding = Rounding::Outward;

fn ulps_apart(a: f64, b: f64) -> u64 {
    (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
}

/// Point matrix inside `[C]`: a vertex or a uniform interior point.
fn sample_in(g: &mut StdRng, c: &IntervalMatrix) -> DMatrix<f64> {
    let vertex = g.random_bool(0.3);
    DMatrix::from_fn(c.rows(), c.cols(), |i, j| {
        let e = c.get(i, j);
        if vertex {
            if g.random_bool(0.5) { e.lo() } else { e.hi() }
        } else {
            g.random_range(e.lo()..=e.hi())
        }
    })
}

fn assert_contains_samples(c: &IntervalMatrix, seed: u64, samples: usize) {
    let d = interval_exp(c, ExpParams::default(), R).unwrap();
    let mut g = rng(seed);
    for _ in 0..samples {
        let m = sample_in(&mut g, c);
        let e = point_exp(&m).unwrap().value;
        assert!(d.contains_point(&e), "point exponential of {m} escapes the enclosure");
    }
}

#[test]
fn enclosure_of_example_matrices_over_horizon() {
    let cases = [
        (dmatrix![0.0, 1.0; 0.0, 0.0], 1.0),
        (dmatrix![-0.7, 0.1; 2.0, -0.1], 0.5),
        (dmatrix![-1.0, 7.0; -7.0, -1.0], 1.0),
        (dmatrix![0.0, 6.0, 5.0; 5.0, 1.0, 0.0; 3.0, 2.0, 1.0], 0.2),
    ];
    for (i, (a, dt)) in cases.iter().enumerate() {
        let c = IntervalMatrix::from_point_scaled(a, Interval::new(0.0, *dt).unwrap(), R).unwrap();
        assert_contains_samples(&c, i as u64, 1000);
    }
}

#[test]
fn enclosure_of_random_interval_matrices() {
    let mut g = rng(99);
    for case in 0..5 {
        let n = 2 + case % 3;
        let data = (0..n * n)
            .map(|_| {
                let lo: f64 = g.random_range(-2.0..2.0);
                Interval::new(lo, lo + g.random_range(0.0..0.3)).unwrap()
            })
            .collect();
        let c = IntervalMatrix::new(n, n, data).unwrap();
        assert_contains_samples(&c, 100 + case as u64, 1000);
    }
}

#[test]
fn stable_degenerate_input_matches_high_precision_series() {
    let mut g = rng(3);
    for _ in 0..20 {
        let m = DMatrix::from_fn(3, 3, |i, j| g.random_range(-1.0..1.0) - if i == j { 2.5 } else { 0.0 });
        let d = interval_exp(&IntervalMatrix::from_point(&m).unwrap(), ExpParams::default(), R).unwrap();
        let oracle = exp_oracle(&m);
        assert!(d.contains_point(&oracle), "{m}");
        assert!(d.max_width() <= 1e-9, "width {}", d.max_width());
    }
}

#[test]
fn zero_matrix_gives_identity() {
    for (k, l) in [(1, 0), (4, 2), (10, 10)] {
        let d = interval_exp(&IntervalMatrix::zeros(3, 3), ExpParams::new(k, l), R).unwrap();
        assert!(d.contains_point(&DMatrix::identity(3, 3)));
        assert!(d.max_width() < 1e-11);
    }
    assert_eq!(point_exp(&DMatrix::zeros(4, 4)).unwrap().value, DMatrix::identity(4, 4));
}

#[test]
fn double_integrator_discretization() {
    let a = dmatrix![0.0, 1.0; 0.0, 0.0];
    let d = interval_exp(&IntervalMatrix::from_point(&a).unwrap(), ExpParams::default(), R).unwrap();
    assert!(d.contains_point(&dmatrix![1.0, 1.0; 0.0, 1.0]));
    assert_eq!(point_exp(&a).unwrap().value, dmatrix![1.0, 1.0; 0.0, 1.0]);
}

#[test]
fn diagonal_point_exponential_within_four_ulps() {
    let mut g = rng(11);
    for _ in 0..200 {
        let d: Vec<f64> = (0..3).map(|_| g.random_range(-5.0..5.0)).collect();
        let e = point_exp(&DMatrix::from_diagonal(&DVector::from_vec(d.clone()))).unwrap();
        for (i, x) in d.iter().enumerate() {
            assert!(ulps_apart(e.value[(i, i)], x.exp()) <= 4, "exp({x}): {} vs {}", e.value[(i, i)], x.exp());
        }
        assert!(e.width < 1e-12 * e.value.amax());
    }
}

#[test]
fn point_exponential_agrees_with_series_oracle() {
    let mut g = rng(5);
    for _ in 0..50 {
        let n = g.random_range(2..=4);
        let m = DMatrix::from_fn(n, n, |_, _| g.random_range(-3.0..3.0));
        let e = point_exp(&m).unwrap().value;
        let oracle = exp_oracle(&m);
        let err = (&e - &oracle).amax() / oracle.amax();
        assert!(err < 1e-13, "relative error {err}");
    }
}

#[test]
fn width_decreases_with_taylor_order() {
    let m = dmatrix![-1.0, 2.0; 0.5, -0.5];
    let c = IntervalMatrix::from_point(&m).unwrap();
    let w5 = interval_exp(&c, ExpParams::new(5, 3), R).unwrap().max_width();
    let w15 = interval_exp(&c, ExpParams::new(15, 3), R).unwrap().max_width();
    assert!(w15 < w5, "{w15} vs {w5}");
}

#[test]
fn scaling_precondition() {
    let c = IntervalMatrix::from_point(&dmatrix![0.0, 60.0; 0.0, 0.0]).unwrap();
    match interval_exp(&c, ExpParams::new(10, 2), R) {
        Err(Error::ScalingTooSmall { min_l, .. }) => {
            // 2^3 * 12 = 96 > 60, 2^2 * 12 = 48 is not
            assert_eq!(min_l, 3);
        }
        other => panic!("{other:?}"),
    }
    assert!(interval_exp(&c, ExpParams::new(10, 3), R).is_ok());
}

#[test]
fn augmented_integral_cases() {
    let a = dmatrix![0.0, 1.0; 0.0, 0.0];
    let v = dvector![-0.5, -1.0];
    assert_eq!(augmented_phi(&a, &v, 0.0).unwrap(), dvector![0.0, 0.0]);
    let phi = augmented_phi(&a, &v, 1.0).unwrap();
    assert!((phi - dvector![-1.0, -1.0]).amax() < 1e-15);
    let z = DMatrix::zeros(3, 3);
    let w = dvector![1.0, -2.0, 0.25];
    let phi = augmented_phi(&z, &w, 0.7).unwrap();
    assert!((phi - &w * 0.7).amax() < 1e-15);
    assert!(augmented_phi(&a, &v, -1.0).is_err());
    assert!(augmented_phi(&a, &v, f64::NAN).is_err());
}

fn interval_matrix(n: usize) -> impl Strategy<Value = (IntervalMatrix, IntervalMatrix)> {
    proptest::collection::vec((-2f64..2.0, 0f64..0.5, 0f64..=1.0, 0f64..=1.0), n * n).prop_map(move |v| {
        let outer: Vec<Interval> = v.iter().map(|(lo, w, _, _)| Interval::new(*lo, lo + w).unwrap()).collect();
        let inner: Vec<Interval> = v
            .iter()
            .map(|(lo, w, s, u)| {
                let (x, y) = (lo + s * w, lo + u * w);
                Interval::new(x.min(y), x.max(y).min(lo + w)).unwrap()
            })
            .collect();
        (IntervalMatrix::new(n, n, outer).unwrap(), IntervalMatrix::new(n, n, inner).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enclosure_is_inclusion_monotone((outer, inner) in interval_matrix(3)) {
        let p = ExpParams::default();
        let big = interval_exp(&outer, p, R).unwrap();
        let small = interval_exp(&inner, p, R).unwrap();
        prop_assert!(small.is_subset_of(&big));
    }

    #[test]
    fn degenerate_enclosure_contains_point_exponential(
        data in proptest::collection::vec(-3f64..3.0, 9),
    ) {
        let m = DMatrix::from_row_slice(3, 3, &data);
        let d = interval_exp(&IntervalMatrix::from_point(&m).unwrap(), ExpParams::default(), R).unwrap();
        prop_assert!(d.contains_point(&point_exp(&m).unwrap().value));
        prop_assert!(d.contains_point(&exp_oracle(&m)));
    }
}

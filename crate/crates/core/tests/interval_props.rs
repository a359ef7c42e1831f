mod common;

use common::{rat, rat_contains, rat_pow, rng};
use intersample::{Error, Interval, IntervalMatrix, Rounding};
use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::Rng;

const R: Rounding = Rounding::Outward;

fn interval() -> impl Strategy<Value = Interval> {
    (-1e3f64..1e3, 0f64..1e3).prop_map(|(lo, w)| Interval::new(lo, lo + w).unwrap())
}

fn small_interval() -> impl Strategy<Value = Interval> {
    (-4f64..4.0, 0f64..4.0).prop_map(|(lo, w)| Interval::new(lo, lo + w).unwrap())
}

/// Position inside an interval, endpoints drawn often.
fn frac() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0f64..=1.0]
}

fn at(a: Interval, s: f64) -> f64 {
    (a.lo() + s * (a.hi() - a.lo())).clamp(a.lo(), a.hi())
}

fn sub_interval(a: Interval, s: f64, u: f64) -> Interval {
    let (x, y) = (at(a, s), at(a, u));
    Interval::new(x.min(y), x.max(y)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn arithmetic_contains_exact_results(a in interval(), b in interval(), s in frac(), u in frac()) {
        let (x, y) = (at(a, s), at(b, u));
        let (xr, yr) = (rat(x), rat(y));
        let sum = a.try_add(b, R).unwrap();
        let diff = a.try_sub(b, R).unwrap();
        let prod = a.try_mul(b, R).unwrap();
        prop_assert!(rat_contains(sum.lo(), sum.hi(), &(&xr + &yr)));
        prop_assert!(rat_contains(diff.lo(), diff.hi(), &(&xr - &yr)));
        prop_assert!(rat_contains(prod.lo(), prod.hi(), &(&xr * &yr)));
    }

    #[test]
    fn power_contains_exact_results(a in small_interval(), s in frac(), k in 1u32..=7) {
        let x = rat(at(a, s));
        let p = a.try_pow(k, R).unwrap();
        prop_assert!(rat_contains(p.lo(), p.hi(), &rat_pow(&x, k)), "{a}^{k} = {p}");
    }

    #[test]
    fn power_is_tighter_than_repeated_product(a in small_interval(), k in 2u32..=6) {
        let p = a.try_pow(k, R).unwrap();
        let mut m = a;
        for _ in 1..k {
            m = m.try_mul(a, R).unwrap();
        }
        prop_assert!(p.is_subset_of(&m), "{a}^{k}: {p} vs {m}");
    }

    #[test]
    fn operations_are_inclusion_monotone(
        a in small_interval(), b in small_interval(),
        s1 in frac(), s2 in frac(), u1 in frac(), u2 in frac(), k in 1u32..=5,
    ) {
        let a2 = sub_interval(a, s1, s2);
        let b2 = sub_interval(b, u1, u2);
        prop_assert!(a2.try_add(b2, R).unwrap().is_subset_of(&a.try_add(b, R).unwrap()));
        prop_assert!(a2.try_mul(b2, R).unwrap().is_subset_of(&a.try_mul(b, R).unwrap()));
        prop_assert!(a2.try_pow(k, R).unwrap().is_subset_of(&a.try_pow(k, R).unwrap()));
    }

    #[test]
    fn matrix_product_is_inclusion_monotone(
        entries in proptest::collection::vec((small_interval(), frac(), frac()), 18),
    ) {
        let big: Vec<Interval> = entries.iter().map(|e| e.0).collect();
        let small: Vec<Interval> = entries.iter().map(|(a, s, u)| sub_interval(*a, *s, *u)).collect();
        let (a, b) = (IntervalMatrix::new(3, 3, big[..9].to_vec()).unwrap(), IntervalMatrix::new(3, 3, big[9..].to_vec()).unwrap());
        let (a2, b2) = (IntervalMatrix::new(3, 3, small[..9].to_vec()).unwrap(), IntervalMatrix::new(3, 3, small[9..].to_vec()).unwrap());
        prop_assert!(a2.mat_mul(&b2, R).unwrap().is_subset_of(&a.mat_mul(&b, R).unwrap()));
    }

    #[test]
    fn inf_norm_is_norm_of_magnitudes(entries in proptest::collection::vec(interval(), 12)) {
        let m = IntervalMatrix::new(3, 4, entries.clone()).unwrap();
        let expected = (0..3)
            .map(|i| (0..4).map(|j| {
                let e = entries[i * 4 + j];
                e.lo().abs().max(e.hi().abs())
            }).sum::<f64>())
            .fold(0.0, f64::max);
        let got = m.inf_norm(R);
        prop_assert!(got >= expected && got <= expected * (1.0 + 1e-14) + f64::MIN_POSITIVE);
        prop_assert_eq!(m.inf_norm(Rounding::Nearest), expected);
    }
}

#[test]
fn matrix_product_contains_sampled_products() {
    let mut g = rng(7);
    let draw = |g: &mut rand::rngs::StdRng| {
        let data = (0..9)
            .map(|_| {
                let lo: f64 = g.random_range(-3.0..3.0);
                Interval::new(lo, lo + g.random_range(0.0..2.0)).unwrap()
            })
            .collect();
        IntervalMatrix::new(3, 3, data).unwrap()
    };
    let (a, b) = (draw(&mut g), draw(&mut g));
    let prod = a.mat_mul(&b, R).unwrap();
    let pick = |g: &mut rand::rngs::StdRng, m: &IntervalMatrix| {
        DMatrix::from_fn(3, 3, |i, j| {
            let e = m.get(i, j);
            match g.random_range(0..4) {
                0 => e.lo(),
                1 => e.hi(),
                _ => g.random_range(e.lo()..=e.hi()),
            }
        })
    };
    for _ in 0..10_000 {
        let (x, y) = (pick(&mut g, &a), pick(&mut g, &b));
        for i in 0..3 {
            for j in 0..3 {
                let exact = (0..3).fold(BigRational::zero(), |acc, k| acc + rat(x[(i, k)]) * rat(y[(k, j)]));
                let e = prod.get(i, j);
                assert!(rat_contains(e.lo(), e.hi(), &exact), "entry ({i},{j})");
            }
        }
    }
}

#[test]
fn identity_is_neutral_for_products() {
    let c = IntervalMatrix::new(
        2,
        2,
        vec![
            Interval::new(-1.0, 2.0).unwrap(),
            Interval::new(0.5, 0.75).unwrap(),
            Interval::new(3.0, 3.0).unwrap(),
            Interval::new(-4.0, -2.0).unwrap(),
        ],
    )
    .unwrap();
    let p = IntervalMatrix::identity(2).mat_mul(&c, Rounding::Nearest).unwrap();
    assert_eq!(p, c);
    let p = IntervalMatrix::identity(2).mat_mul(&c, R).unwrap();
    assert!(c.is_subset_of(&p));
}

#[test]
fn degenerate_matrices_multiply_as_reals() {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
    let b = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 2.0, 0.0]);
    let p = IntervalMatrix::from_point(&a)
        .unwrap()
        .mat_mul(&IntervalMatrix::from_point(&b).unwrap(), Rounding::Nearest)
        .unwrap();
    assert_eq!(p.mid(), &a * &b);
    assert_eq!(p.max_width(), 0.0);
}

#[test]
fn sentinel_is_rejected_by_arithmetic() {
    let one = Interval::ONE;
    for r in [
        Interval::ENTIRE.try_add(one, R),
        one.try_sub(Interval::ENTIRE, R),
        Interval::ENTIRE.try_mul(one, R),
        Interval::ENTIRE.try_pow(2, R),
    ] {
        assert!(matches!(r, Err(Error::Unbounded)));
    }
    assert_eq!(Interval::ENTIRE.width(), f64::INFINITY);
}

#[test]
fn invalid_endpoints_are_rejected() {
    assert!(matches!(Interval::new(2.0, 1.0), Err(Error::InvalidInterval { .. })));
    assert!(Interval::new(f64::NAN, 1.0).is_err());
    assert!(Interval::new(f64::NEG_INFINITY, 0.0).is_err());
}

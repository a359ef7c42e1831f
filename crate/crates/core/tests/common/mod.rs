//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use intersample::verify::{facet_problems, ProblemFile};
use intersample::{ExpParams, FacetProblem, Interval, QueryPoint, Rounding, SystemSpec};
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Exact rational value of a finite double.
pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

const FIXED_BITS: usize = 320;

fn to_fixed(x: f64) -> BigInt {
    (rat(x) * BigRational::from_integer(BigInt::one() << FIXED_BITS))
        .floor()
        .to_integer()
}

fn fixed_to_f64(x: &BigInt) -> f64 {
    BigRational::new(x.clone(), BigInt::one() << FIXED_BITS)
        .to_f64()
        .expect("representable")
}

type Fixed = Vec<BigInt>;

fn fixed_mul(a: &Fixed, b: &Fixed, n: usize) -> Fixed {
    let mut out = vec![BigInt::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = BigInt::zero();
            for k in 0..n {
                acc += &a[i * n + k] * &b[k * n + j];
            }
            out[i * n + j] = acc >> FIXED_BITS;
        }
    }
    out
}

/// `exp(m)` from a 60-term Taylor series in 320-bit fixed point after
/// scaling the norm below 1/2, then repeated squaring.
pub fn exp_oracle(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut s = 0usize;
    while norm / 2f64.powi(s as i32) > 0.5 {
        s += 1;
    }
    let c: Fixed = (0..n * n)
        .map(|idx| to_fixed(m[(idx / n, idx % n)]) >> s)
        .collect();
    let one = BigInt::one() << FIXED_BITS;
    let ident: Fixed = (0..n * n)
        .map(|idx| if idx / n == idx % n { one.clone() } else { BigInt::zero() })
        .collect();
    let mut sum = ident.clone();
    let mut term = ident;
    for j in 1..=60u32 {
        term = fixed_mul(&term, &c, n).into_iter().map(|x| x / j).collect();
        for (acc, t) in sum.iter_mut().zip(&term) {
            *acc += t;
        }
    }
    for _ in 0..s {
        sum = fixed_mul(&sum, &sum, n);
    }
    DMatrix::from_fn(n, n, |i, j| fixed_to_f64(&sum[i * n + j]))
}

/// Exact `x` within the rational closure `[lo, hi]`.
pub fn rat_contains(lo: f64, hi: f64, x: &BigRational) -> bool {
    rat(lo) <= *x && *x <= rat(hi)
}

pub fn rat_pow(x: &BigRational, k: u32) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, _| acc * x)
}

pub fn rat_abs(x: &BigRational) -> BigRational {
    x.abs()
}

/// Dense-grid maximum of `f` on `[0, dt]` with `points` uniform steps.
///
/// Integrates the augmented state `[x; 1]` independently of the library:
/// nalgebra's exponential sets 1000 anchors and each anchor is stepped
/// forward with a fixed one-step propagator.
pub fn grid_max(p: &FacetProblem, points: usize) -> (f64, f64) {
    let n = p.dim();
    let bu = p.b() * p.u0();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(p.a());
    m.view_mut((0, n), (n, 1)).copy_from(&bu);
    let mut z0 = DVector::zeros(n + 1);
    z0.rows_mut(0, n).copy_from(p.x0());
    z0[n] = 1.0;
    let h = p.h();
    let f_of = |z: &DVector<f64>| h.dot(&z.rows(0, n));

    let anchors = points.min(1000);
    let sub = points / anchors;
    let total = anchors * sub;
    let dt = p.dt();
    let step = (&m * (dt / total as f64)).exp();
    let mut best = (f_of(&z0), 0.0);
    for i in 0..anchors {
        let t0 = dt * (i * sub) as f64 / total as f64;
        let mut z = (&m * t0).exp() * &z0;
        for s in 0..sub {
            let f = f_of(&z);
            if f > best.0 {
                best = (f, t0 + dt * s as f64 / total as f64);
            }
            z = &step * z;
        }
    }
    let zend = (&m * dt).exp() * &z0;
    let fend = f_of(&zend);
    if fend > best.0 {
        best = (fend, dt);
    }
    best
}

/// `f` from the same augmented-state formulation as [`grid_max`].
pub fn f_oracle(p: &FacetProblem, t: f64) -> f64 {
    let n = p.dim();
    let bu = p.b() * p.u0();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(p.a());
    m.view_mut((0, n), (n, 1)).copy_from(&bu);
    let mut z0 = DVector::zeros(n + 1);
    z0.rows_mut(0, n).copy_from(p.x0());
    z0[n] = 1.0;
    let z = (&m * t).exp() * z0;
    p.h().dot(&z.rows(0, n))
}

/// Composite Simpson rule for `int_0^dt exp(A s) ds B` with `2 * half`
/// panels.
pub fn simpson_bhat(a: &DMatrix<f64>, b: &DMatrix<f64>, dt: f64, half: usize) -> DMatrix<f64> {
    let panels = 2 * half;
    let hstep = dt / panels as f64;
    let mut acc = DMatrix::zeros(a.nrows(), a.ncols());
    for i in 0..=panels {
        let w = if i == 0 || i == panels {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += (a * (hstep * i as f64)).exp() * w;
    }
    acc * (hstep / 3.0) * b
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random facet problem: entries of `A`, `B` in `[-5, 5]`, `x0`, `u0`, `h`
/// in `[-1, 1]`, `dt` in `[0.1, 1]`.
pub fn random_problem(rng: &mut StdRng, n: usize) -> FacetProblem {
    let m = rng.random_range(1..=2);
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-5.0..=5.0));
    let b = DMatrix::from_fn(n, m, |_, _| rng.random_range(-5.0..=5.0));
    let x0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
    let u0 = DVector::from_fn(m, |_, _| rng.random_range(-1.0..=1.0));
    let h = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
    let dt = rng.random_range(0.1..=1.0);
    FacetProblem::new(a, b, x0, u0, h, dt).expect("valid random problem")
}

pub fn fixture_text(ex: u32) -> String {
    let path = format!("{}/fixtures/example{ex}.json", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).expect("fixture exists")
}

pub fn fixture(ex: u32) -> (SystemSpec, QueryPoint) {
    let pf = ProblemFile::from_json(&fixture_text(ex)).expect("fixture parses");
    (pf.system().expect("valid system"), pf.queries().remove(0))
}

/// The facet each worked example studies.
pub fn studied_facet(ex: u32) -> usize {
    match ex {
        1 => 0,
        2 => 3,
        3 => 4,
        4 => 4,
        _ => panic!("no example {ex}"),
    }
}

pub fn fixture_problem(ex: u32) -> FacetProblem {
    let (s, q) = fixture(ex);
    facet_problems(&s, &q).expect("facets").remove(studied_facet(ex))
}

/// A random problem with a sub-interval of its horizon on which the
/// overestimator hypotheses hold: `f'_lo < 0 < f'_hi` and `f''_hi > 0`.
pub fn admissible(g: &mut StdRng) -> (FacetProblem, Interval, Interval, Interval) {
    loop {
        let n = g.random_range(2..=4);
        let p = random_problem(g, n);
        let (a, b) = (g.random_range(0.0..p.dt()), g.random_range(0.0..p.dt()));
        if (a - b).abs() < 1e-3 {
            continue;
        }
        let tint = Interval::new(a.min(b), a.max(b)).expect("ordered");
        let d = p
            .derivative_inclusions(tint, ExpParams::default(), Rounding::Outward)
            .expect("inclusions");
        if d.fprime.lo() < 0.0 && d.fprime.hi() > 0.0 && d.fsecond.hi() > 0.0 {
            return (p, tint, d.fprime, d.fsecond);
        }
    }
}

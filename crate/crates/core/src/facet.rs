//! One facet problem: maximize
//!
//! ```text
//! f(t) = h^T ( exp(A t) x0 + int_0^t exp(A s) ds B u0 ),   t in [0, dt]
//! ```
//!
//! rewritten as `f(t) = h^T (x0 + int_0^t exp(A s) ds v)` with
//! `v = A x0 + B u0`, so that `f'(t) = h^T exp(A t) v` and
//! `f''(t) = h^T A exp(A t) v`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Interval, Rounding};
use crate::matexp::{augmented_exp, augmented_phi, interval_exp, ExpParams};
use crate::matrix::{dot, point_vector, IntervalMatrix};

/// Default relative tolerance of the eigenvector test.
pub const EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FacetProblem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    x0: DVector<f64>,
    u0: DVector<f64>,
    h: DVector<f64>,
    dt: f64,
    v: DVector<f64>,
    v_enclosure: Vec<Interval>,
    hta_enclosure: Vec<Interval>,
}

/// `f`, `f'` and `f''` at one time instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValues {
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
}

/// Enclosures of `f'` and `f''` over a time interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBounds {
    pub fprime: Interval,
    pub fsecond: Interval,
}

/// Structure that admits a closed-form maximum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticCase {
    #[default]
    None,
    /// `h = 0` or `A x0 + B u0 = 0`: `f` is constant.
    ConstantF,
    /// `A^T h = lambda h`: `f'' = lambda f'`, so `f` is monotone.
    EigenvectorH { lambda: f64 },
    /// `A^r = 0`: `f` is a polynomial of degree `r`.
    NilpotentA { degree: usize },
}

impl FacetProblem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        x0: DVector<f64>,
        u0: DVector<f64>,
        h: DVector<f64>,
        dt: f64,
    ) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || x0.len() != n || h.len() != n || u0.len() != b.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "A {n}x{n}, B {}x{}, x0 {}, u0 {}, h {}",
                b.nrows(),
                b.ncols(),
                x0.len(),
                u0.len(),
                h.len()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidProblem(format!("sampling time must be positive, got {dt}")));
        }
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        if !(finite(a.as_slice())
            && finite(b.as_slice())
            && finite(x0.as_slice())
            && finite(u0.as_slice())
            && finite(h.as_slice()))
        {
            return Err(Error::NonFinite("facet problem data"));
        }

        let r = Rounding::Outward;
        let a_int = IntervalMatrix::from_point(&a)?;
        let b_int = IntervalMatrix::from_point(&b)?;
        let ax0 = a_int.mul_vec(&x0, r)?;
        let bu0 = b_int.mul_vec(&u0, r)?;
        let v_enclosure: Vec<Interval> = ax0.iter().zip(&bu0).map(|(p, q)| p.add_r(*q, r)).collect();
        let h_int = point_vector(&h);
        let hta_enclosure = (0..n)
            .map(|j| {
                let col: Vec<Interval> = (0..n).map(|i| a_int.get(i, j)).collect();
                dot(&h_int, &col, r)
            })
            .collect();
        let v = &a * &x0 + &b * &u0;

        Ok(FacetProblem {
            a,
            b,
            x0,
            u0,
            h,
            dt,
            v,
            v_enclosure,
            hta_enclosure,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn u0(&self) -> &DVector<f64> {
        &self.u0
    }

    pub fn h(&self) -> &DVector<f64> {
        &self.h
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `A x0 + B u0`.
    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `h^T x0`, the value at `t = 0`.
    pub fn initial_value(&self) -> f64 {
        self.h.dot(&self.x0)
    }

    /// `[0, dt]`.
    pub fn horizon(&self) -> Interval {
        Interval::raw(0.0, self.dt)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if (0.0..=self.dt).contains(&t) {
            Ok(())
        } else {
            Err(Error::TimeOutOfRange { t, dt: self.dt })
        }
    }

    /// `f`, `f'`, `f''` at `t` from a single augmented exponential.
    pub fn point_values(&self, t: f64) -> Result<PointValues> {
        self.check_time(t)?;
        let (e, phi) = augmented_exp(&self.a, &self.v, t)?;
        let f = self.h.dot(&(&self.x0 + phi));
        let ev = e * &self.v;
        let df = self.h.dot(&ev);
        let d2f = self.h.dot(&(&self.a * ev));
        Ok(PointValues { f, df, d2f })
    }

    pub fn eval_f(&self, t: f64) -> Result<f64> {
        self.point_values(t).map(|p| p.f)
    }

    pub fn eval_f_prime(&self, t: f64) -> Result<f64> {
        self.point_values(t).map(|p| p.df)
    }

    pub fn eval_f_second(&self, t: f64) -> Result<f64> {
        self.point_values(t).map(|p| p.d2f)
    }

    /// State `phi(t, x0, u0) = x0 + int_0^t exp(A s) ds v`.
    pub fn state(&self, t: f64) -> Result<DVector<f64>> {
        self.check_time(t)?;
        Ok(&self.x0 + augmented_phi(&self.a, &self.v, t)?)
    }

    /// Enclosures of `f'` and `f''` over `tint`, via `[d] = exp(A [t]) v`:
    /// `[f'] = h^T [d]` and `[f''] = h^T A [d]`.
    pub fn derivative_inclusions(
        &self,
        tint: Interval,
        params: ExpParams,
        rounding: Rounding,
    ) -> Result<DerivativeBounds> {
        if !tint.is_finite() || tint.lo() < 0.0 || tint.hi() > self.dt {
            return Err(Error::TimeOutOfRange {
                t: if tint.lo() < 0.0 { tint.lo() } else { tint.hi() },
                dt: self.dt,
            });
        }
        let c = IntervalMatrix::from_point_scaled(&self.a, tint, rounding)?;
        let d = interval_exp(&c, params, rounding)?;
        let dv = d.mul_ivec(&self.v_enclosure, rounding)?;
        let fprime = dot(&point_vector(&self.h), &dv, rounding);
        let fsecond = dot(&self.hta_enclosure, &dv, rounding);
        Ok(DerivativeBounds { fprime, fsecond })
    }

    /// Detects the closed-form cases, with precedence
    /// `ConstantF > EigenvectorH > NilpotentA`.
    pub fn detect_analytic_case(&self, tol: f64) -> AnalyticCase {
        if self.h.iter().all(|x| *x == 0.0) || self.v.iter().all(|x| *x == 0.0) {
            return AnalyticCase::ConstantF;
        }
        let hh = self.h.dot(&self.h);
        let ath = self.a.tr_mul(&self.h);
        let lambda = self.h.dot(&ath) / hh;
        let residual = (&ath - &self.h * lambda).amax();
        if residual <= tol * inf_norm(&self.a) * self.h.amax() {
            return AnalyticCase::EigenvectorH { lambda };
        }
        match nilpotency_degree(&self.a) {
            Some(degree) => AnalyticCase::NilpotentA { degree },
            None => AnalyticCase::None,
        }
    }

    /// `max{h^T x0, f(dt)}`, exact when `h` is an eigenvector of `A^T`.
    pub fn solve_eigenvector_case(&self) -> Result<(f64, f64)> {
        let f0 = self.eval_f(0.0)?;
        let f1 = self.eval_f(self.dt)?;
        Ok(if f1 > f0 { (self.dt, f1) } else { (0.0, f0) })
    }

    /// Coefficients `c_0..c_r` of `f` when `A^r = 0`:
    /// `c_0 = h^T x0` and `c_k = h^T A^(k-1) v / k!` for `k >= 1`.
    pub fn nilpotent_polynomial(&self, degree: usize) -> Result<Vec<f64>> {
        if degree == 0 || matrix_power(&self.a, degree).iter().any(|x| *x != 0.0) {
            return Err(Error::InvalidProblem(format!("A^{degree} is not zero")));
        }
        let mut coeffs = vec![self.initial_value()];
        let mut akv = self.v.clone();
        let mut fact = 1.0;
        for k in 1..=degree {
            fact *= k as f64;
            coeffs.push(self.h.dot(&akv) / fact);
            akv = &self.a * akv;
        }
        Ok(coeffs)
    }
}

pub(crate) fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn matrix_power(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut p = DMatrix::identity(a.nrows(), a.ncols());
    for _ in 0..k {
        p = &p * a;
    }
    p
}

/// Smallest `r <= n` with `A^r = 0` exactly.
fn nilpotency_degree(a: &DMatrix<f64>) -> Option<usize> {
    let mut p = a.clone();
    for r in 1..=a.nrows() {
        if p.iter().all(|x| *x == 0.0) {
            return Some(r);
        }
        p = &p * a;
    }
    None
}

/// Evaluates a coefficient list (lowest degree first) at `t`.
pub fn polyval(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

//! Matrix exponentials: a validated enclosure for interval matrices and a
//! point evaluation built on the same pipeline.
//!
//! The enclosure scales `[C]` by `2^-l`, evaluates the order-`k` Taylor
//! polynomial in nested (Horner) form, adds a remainder ball of radius
//!
//! ```text
//! rho = ||[C*]||^(k+1) / ((k+1)! (1 - ||[C*]|| / (k+2)))
//! ```
//!
//! to every entry, and squares the result `l` times. The scaled norm must
//! satisfy `||[C*]|| < k + 2` for the remainder to exist.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::interval::{Interval, Rounding};
use crate::matrix::IntervalMatrix;

/// Taylor order `k` and scaling exponent `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpParams {
    pub k: u32,
    pub l: u32,
}

impl Default for ExpParams {
    fn default() -> Self {
        ExpParams { k: 10, l: 10 }
    }
}

impl ExpParams {
    pub fn new(k: u32, l: u32) -> Self {
        ExpParams { k, l }
    }

    /// Whether `2^l (k + 2) > norm`.
    pub fn admits(&self, norm: f64) -> bool {
        self.l < 1024 && 2f64.powi(self.l as i32) * (self.k as f64 + 2.0) > norm
    }

    /// Smallest `l` for which `2^l (k + 2) > norm`.
    pub fn min_scaling(k: u32, norm: f64) -> u32 {
        let mut l = 0;
        while l < 1024 && !ExpParams::new(k, l).admits(norm) {
            l += 1;
        }
        l
    }
}

/// Point exponential together with the width of the enclosure it was read
/// from.
#[derive(Debug, Clone, PartialEq)]
pub struct PointExp {
    pub value: DMatrix<f64>,
    /// Largest entry width of the enclosing interval matrix.
    pub width: f64,
}

/// Enclosure `[D]` with `exp(C) in [D]` for every `C in [C]`.
pub fn interval_exp(c: &IntervalMatrix, params: ExpParams, rounding: Rounding) -> Result<IntervalMatrix> {
    if !c.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "exponential of a non-square {}x{} matrix",
            c.rows(),
            c.cols()
        )));
    }
    if !c.is_finite() {
        return Err(Error::Unbounded);
    }
    let ExpParams { k, l } = params;
    let norm = c.inf_norm(rounding);
    if !norm.is_finite() {
        return Err(Error::NonFinite("matrix norm"));
    }
    if !params.admits(norm) {
        return Err(Error::ScalingTooSmall {
            k,
            l,
            norm,
            min_l: ExpParams::min_scaling(k, norm),
        });
    }

    let n = c.rows();
    let pow2 = 2f64.powi(-(l as i32));
    let scaled = c.scale_real(pow2, rounding)?;
    let scaled_norm = scaled.inf_norm(rounding);

    let id = IntervalMatrix::identity(n);
    let mut d = id.clone();
    for j in (1..=k).rev() {
        let term = scaled.scale(Interval::reciprocal(j, rounding), rounding)?;
        d = id.mat_add(&term.mat_mul(&d, rounding)?, rounding)?;
    }

    let rho = remainder_radius(scaled_norm, k, rounding);
    if rho > 0.0 {
        let ball = Interval::raw(-rho, rho);
        for i in 0..n {
            for j in 0..n {
                d.set(i, j, d.get(i, j).add_r(ball, rounding));
            }
        }
    }

    for _ in 0..l {
        d = d.mat_mul(&d, rounding)?;
    }
    if !d.is_finite() {
        return Err(Error::NonFinite("interval exponential"));
    }
    Ok(d)
}

/// Upper bound on the truncation remainder after `k` Taylor terms.
fn remainder_radius(x: f64, k: u32, r: Rounding) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut num = x;
    for _ in 0..k {
        num = r.up(num * x);
    }
    let mut fact = 1.0f64;
    for i in 2..=(k + 1) {
        fact = r.down(fact * i as f64);
    }
    let q = r.up(x / (k as f64 + 2.0));
    let den = r.down(fact * r.down(1.0 - q));
    r.up(num / den)
}

const POINT_TAYLOR_ORDER: u32 = 20;
const POINT_MAX_SCALING: u32 = 40;

/// Smallest `l` with `norm / 2^l <= 1`.
fn point_scaling(norm: f64) -> Result<u32> {
    let mut l = 0;
    while norm * 2f64.powi(-(l as i32)) > 1.0 {
        l += 1;
        if l > POINT_MAX_SCALING {
            return Err(Error::ScalingTooSmall {
                k: POINT_TAYLOR_ORDER,
                l: POINT_MAX_SCALING,
                norm,
                min_l: ExpParams::min_scaling(POINT_TAYLOR_ORDER, norm),
            });
        }
    }
    Ok(l)
}

/// `exp(m)` with the same scaling and Horner scheme as [`interval_exp`],
/// carried out in double-double arithmetic so that the squarings do not
/// amplify rounding beyond the final conversion to `f64`.
fn point_exp_value(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "exponential of a non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix entry"));
    }
    let n = m.nrows();
    let norm = m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let l = point_scaling(norm)?;
    let pow2 = 2f64.powi(-(l as i32));
    let scaled: Vec<TwoFloat> = (0..n * n).map(|i| TwoFloat::from(m[(i / n, i % n)] * pow2)).collect();
    let id: Vec<TwoFloat> = (0..n * n)
        .map(|i| TwoFloat::from(if i / n == i % n { 1.0 } else { 0.0 }))
        .collect();
    let mut d = id.clone();
    for j in (1..=POINT_TAYLOR_ORDER).rev() {
        let inv = TwoFloat::from(1.0) / TwoFloat::from(j as f64);
        d = dd_mul(&scaled, &d, n)
            .into_iter()
            .zip(&id)
            .map(|(x, e)| *e + x * inv)
            .collect();
    }
    for _ in 0..l {
        d = dd_mul(&d, &d, n);
    }
    let value = DMatrix::from_fn(n, n, |i, j| f64::from(d[i * n + j]));
    if value.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix exponential"));
    }
    Ok(value)
}

fn dd_mul(a: &[TwoFloat], b: &[TwoFloat], n: usize) -> Vec<TwoFloat> {
    let mut out = vec![TwoFloat::from(0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == TwoFloat::from(0.0) {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// `exp(m)` to near machine precision.
///
/// The value comes from a Taylor polynomial of order 20 after scaling the
/// norm to at most 1, evaluated in double-double arithmetic. `width` is the largest entry width of the validated
/// enclosure computed with the same `k` and `l`, and the value lies inside
/// that enclosure.
pub fn point_exp(m: &DMatrix<f64>) -> Result<PointExp> {
    let value = point_exp_value(m)?;
    let c = IntervalMatrix::from_point(m)?;
    let l = point_scaling(c.inf_norm(Rounding::Outward))?;
    let d = interval_exp(&c, ExpParams::new(POINT_TAYLOR_ORDER, l), Rounding::Outward)?;
    Ok(PointExp {
        value,
        width: d.max_width(),
    })
}

/// Top row blocks of `exp([[A, v], [0, 0]] t)`: `(exp(A t), int_0^t exp(A s) ds v)`.
pub(crate) fn augmented_exp(
    a: &DMatrix<f64>,
    v: &DVector<f64>,
    t: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = a.nrows();
    if !a.is_square() || v.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "augmented exponential of {}x{} with vector of length {}",
            a.nrows(),
            a.ncols(),
            v.len()
        )));
    }
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&(a * t));
    m.view_mut((0, n), (n, 1)).copy_from(&(v * t));
    let e = point_exp_value(&m)?;
    let top = e.view((0, 0), (n, n)).into_owned();
    let phi = e.view((0, n), (n, 1)).column(0).into_owned();
    Ok((top, phi))
}

/// `int_0^t exp(A s) ds v`, read off the augmented exponential. Works for
/// singular and nilpotent `A`.
pub fn augmented_phi(a: &DMatrix<f64>, v: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::TimeOutOfRange { t, dt: f64::INFINITY });
    }
    augmented_exp(a, v, t).map(|(_, phi)| phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn zero_matrix_encloses_identity() {
        let z = IntervalMatrix::zeros(3, 3);
        let d = interval_exp(&z, ExpParams::default(), Rounding::Outward).unwrap();
        assert!(d.contains_point(&DMatrix::identity(3, 3)));
        assert!(d.max_width() < 1e-11, "{}", d.max_width());
    }

    #[test]
    fn double_integrator_step() {
        let a = dmatrix![0.0, 1.0; 0.0, 0.0];
        let c = IntervalMatrix::from_point(&a).unwrap();
        let d = interval_exp(&c, ExpParams::default(), Rounding::Outward).unwrap();
        assert!(d.contains_point(&dmatrix![1.0, 1.0; 0.0, 1.0]));
        assert!(d.max_width() < 1e-11, "{}", d.max_width());
    }

    #[test]
    fn scaling_precondition_reports_min_l() {
        let c = IntervalMatrix::from_point(&dmatrix![100.0, 0.0; 0.0, 0.0]).unwrap();
        match interval_exp(&c, ExpParams::new(2, 3), Rounding::Outward) {
            Err(Error::ScalingTooSmall { min_l, .. }) => {
                // 2^5 * 4 = 128 > 100 but 2^4 * 4 = 64 is not
                assert_eq!(min_l, 5);
                assert!(interval_exp(&c, ExpParams::new(2, min_l), Rounding::Outward).is_ok());
            }
            other => panic!("expected ScalingTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn non_square_rejected() {
        let c = IntervalMatrix::zeros(2, 3);
        assert!(matches!(
            interval_exp(&c, ExpParams::default(), Rounding::Outward),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn point_exp_of_zero_and_nilpotent() {
        let e = point_exp(&DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(e.value, DMatrix::identity(2, 2));
        let e = point_exp(&dmatrix![0.0, 1.0; 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(e.value, dmatrix![1.0, 1.0; 0.0, 1.0], epsilon = 1e-15);
    }

    #[test]
    fn augmented_phi_cases() {
        let a = dmatrix![0.0, 1.0; 0.0, 0.0];
        let v = dvector![-0.5, -1.0];
        assert_eq!(augmented_phi(&a, &v, 0.0).unwrap(), dvector![0.0, 0.0]);
        // int_0^1 [[1, s], [0, 1]] ds v = [[1, 1/2], [0, 1]] v
        assert_abs_diff_eq!(augmented_phi(&a, &v, 1.0).unwrap(), dvector![-1.0, -1.0], epsilon = 1e-15);
        let z = DMatrix::zeros(2, 2);
        let w = dvector![3.0, -2.0];
        assert_abs_diff_eq!(augmented_phi(&z, &w, 0.7).unwrap(), &w * 0.7, epsilon = 1e-15);
        assert!(augmented_phi(&a, &v, -0.1).is_err());
    }
}

//! Upper bounds on the local maximum of `f` over a time interval where the
//! derivative enclosures do not settle monotonicity or curvature, i.e.
//! `f'_lo < 0 < f'_hi` and `f''_hi > 0`.
//!
//! Three overestimators `g >= f` are available:
//!
//! * piecewise affine: slopes `f'_hi` from the left end and `f'_lo` into the
//!   right end, meeting at `t_c`;
//! * piecewise quadratic: the two Taylor expansions at the ends with
//!   curvature `f''_hi`, meeting at `t_c`;
//! * concave shift: `f(t) + f''_hi / 2 (t - t_lo)(t_hi - t)`, maximized by
//!   golden-section search.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::facet::FacetProblem;
use crate::interval::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum OverestimatorKind {
    #[serde(rename = "pwa")]
    PiecewiseAffine,
    #[default]
    #[serde(rename = "pwq")]
    PiecewiseQuadratic,
    #[serde(rename = "concave")]
    ConcaveShift,
}

impl OverestimatorKind {
    pub const ALL: [OverestimatorKind; 3] = [
        OverestimatorKind::PiecewiseAffine,
        OverestimatorKind::PiecewiseQuadratic,
        OverestimatorKind::ConcaveShift,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            OverestimatorKind::PiecewiseAffine => "pwa",
            OverestimatorKind::PiecewiseQuadratic => "pwq",
            OverestimatorKind::ConcaveShift => "concave",
        }
    }

    /// 1, 2 or 3.
    pub fn type_number(&self) -> u8 {
        match self {
            OverestimatorKind::PiecewiseAffine => 1,
            OverestimatorKind::PiecewiseQuadratic => 2,
            OverestimatorKind::ConcaveShift => 3,
        }
    }
}

impl fmt::Display for OverestimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OverestimatorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pwa" | "1" => Ok(OverestimatorKind::PiecewiseAffine),
            "pwq" | "2" => Ok(OverestimatorKind::PiecewiseQuadratic),
            "concave" | "3" => Ok(OverestimatorKind::ConcaveShift),
            other => Err(format!("unknown overestimator '{other}' (expected pwa, pwq or concave)")),
        }
    }
}

/// The data needed to re-evaluate an overestimator anywhere on its interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Overestimator {
    PiecewiseAffine {
        t_lo: f64,
        t_hi: f64,
        f_lo: f64,
        f_hi: f64,
        /// `f'_hi`, rising slope out of `t_lo`.
        rise: f64,
        /// `f'_lo`, falling slope into `t_hi`.
        fall: f64,
        t_c: f64,
    },
    PiecewiseQuadratic {
        t_lo: f64,
        t_hi: f64,
        f_lo: f64,
        f_hi: f64,
        df_lo: f64,
        df_hi: f64,
        curvature: f64,
        t_c: f64,
    },
    ConcaveShift {
        t_lo: f64,
        t_hi: f64,
        curvature: f64,
    },
}

impl Overestimator {
    pub fn interval(&self) -> (f64, f64) {
        match *self {
            Overestimator::PiecewiseAffine { t_lo, t_hi, .. }
            | Overestimator::PiecewiseQuadratic { t_lo, t_hi, .. }
            | Overestimator::ConcaveShift { t_lo, t_hi, .. } => (t_lo, t_hi),
        }
    }

    /// `g(t)`. Only the concave shift needs `f` itself.
    pub fn eval(&self, p: &FacetProblem, t: f64) -> Result<f64> {
        Ok(match *self {
            Overestimator::PiecewiseAffine {
                t_lo,
                t_hi,
                f_lo,
                f_hi,
                rise,
                fall,
                ..
            } => (f_lo + rise * (t - t_lo)).min(f_hi - fall * (t_hi - t)),
            Overestimator::PiecewiseQuadratic {
                t_lo,
                t_hi,
                f_lo,
                f_hi,
                df_lo,
                df_hi,
                curvature,
                ..
            } => quad_left(f_lo, df_lo, curvature, t_lo, t).min(quad_right(f_hi, df_hi, curvature, t_hi, t)),
            Overestimator::ConcaveShift { t_lo, t_hi, curvature } => {
                p.eval_f(t)? + 0.5 * curvature * (t - t_lo) * (t_hi - t)
            }
        })
    }
}

fn quad_left(f_lo: f64, df_lo: f64, c: f64, t_lo: f64, t: f64) -> f64 {
    let s = t - t_lo;
    f_lo + df_lo * s + 0.5 * c * s * s
}

fn quad_right(f_hi: f64, df_hi: f64, c: f64, t_hi: f64, t: f64) -> f64 {
    let s = t_hi - t;
    f_hi - df_hi * s + 0.5 * c * s * s
}

/// Maximizer of an overestimator and the bounds it certifies for the local
/// maximum: `f_value <= max f <= g_value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub t_dagger: f64,
    pub g_value: f64,
    pub f_value: f64,
    pub convex_op_used: bool,
    pub shape: Overestimator,
}

/// Result of a one-dimensional concave maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcaveMax {
    pub t: f64,
    pub value: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of a function the caller guarantees to be
/// concave on `tint`. Both ends are evaluated as well, and the best
/// evaluated point is returned, so the value is attained.
pub fn concave_max<E>(
    mut eval: impl FnMut(f64) -> std::result::Result<f64, E>,
    tint: Interval,
    tol_t: f64,
) -> std::result::Result<ConcaveMax, E> {
    let (mut a, mut b) = (tint.lo(), tint.hi());
    let mut best = ConcaveMax { t: a, value: eval(a)? };
    let consider = |t: f64, v: f64, best: &mut ConcaveMax| {
        if v > best.value {
            *best = ConcaveMax { t, value: v };
        }
    };
    if b > a {
        let vb = eval(b)?;
        consider(b, vb, &mut best);
    }
    let tol = tol_t.max(0.0);
    if b - a <= tol {
        return Ok(best);
    }

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    consider(c, fc, &mut best);
    consider(d, fd, &mut best);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            if !(c > a && c < d) {
                break;
            }
            fc = eval(c)?;
            consider(c, fc, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            if !(d > c && d < b) {
                break;
            }
            fd = eval(d)?;
            consider(d, fd, &mut best);
        }
    }
    Ok(best)
}

/// Bracket tolerance for golden-section search on a horizon of length `dt`.
pub fn default_tol_t(dt: f64) -> f64 {
    (1e-12 * dt).max(4.0 * f64::EPSILON * dt)
}

/// Margin added to a golden-section maximum so it can serve as an upper
/// bound: the curvature term covers the bracket, the relative term covers
/// evaluation noise.
pub fn concave_pad(curvature_bound: f64, tol_t: f64, value: f64) -> f64 {
    0.5 * curvature_bound.abs() * tol_t * tol_t + 1e-12 * value.abs().max(1.0)
}

fn check_interval(tint: Interval) -> Result<()> {
    if tint.is_finite() && tint.width() > 0.0 {
        Ok(())
    } else {
        Err(Error::HypothesisViolated(format!("time interval {tint} must have positive width")))
    }
}

/// Piecewise-affine bound from `[f']` with `f'_lo < 0 < f'_hi`.
pub fn bound_type1(p: &FacetProblem, tint: Interval, fprime: Interval) -> Result<BoundCertificate> {
    check_interval(tint)?;
    if !(fprime.lo() < 0.0 && fprime.hi() > 0.0) {
        return Err(Error::HypothesisViolated(format!(
            "piecewise-affine bound needs f'_lo < 0 < f'_hi, got {fprime}"
        )));
    }
    let (t_lo, t_hi) = (tint.lo(), tint.hi());
    let f_lo = p.eval_f(t_lo)?;
    let f_hi = p.eval_f(t_hi)?;
    let (rise, fall) = (fprime.hi(), fprime.lo());
    let t_c = (rise * t_lo - fall * t_hi + f_hi - f_lo) / (rise - fall);
    let shape = Overestimator::PiecewiseAffine {
        t_lo,
        t_hi,
        f_lo,
        f_hi,
        rise,
        fall,
        t_c,
    };
    // g = min of a rising and a falling line: its maximum sits at t_c, or at
    // the nearer end if rounding pushed t_c outside.
    let t_dagger = t_c.clamp(t_lo, t_hi);
    let g_value = shape.eval(p, t_dagger)?;
    let f_value = if t_dagger == t_lo {
        f_lo
    } else if t_dagger == t_hi {
        f_hi
    } else {
        p.eval_f(t_dagger)?
    };
    Ok(BoundCertificate {
        t_dagger,
        g_value: g_value.max(f_value),
        f_value,
        convex_op_used: false,
        shape,
    })
}

/// Piecewise-quadratic bound from `f''_hi > 0`.
pub fn bound_type2(p: &FacetProblem, tint: Interval, fsecond: Interval) -> Result<BoundCertificate> {
    check_interval(tint)?;
    if fsecond.hi().is_nan() || fsecond.hi() <= 0.0 {
        return Err(Error::HypothesisViolated(format!(
            "piecewise-quadratic bound needs f''_hi > 0, got {fsecond}"
        )));
    }
    let (t_lo, t_hi) = (tint.lo(), tint.hi());
    let lo = p.point_values(t_lo)?;
    let hi = p.point_values(t_hi)?;
    let c = fsecond.hi();
    let secant = (hi.df - lo.df) / (t_hi - t_lo);
    let denom = c * (t_hi - t_lo) + lo.df - hi.df;
    let t_c = if secant < c && denom > 0.0 {
        let num = 0.5 * c * (t_hi * t_hi - t_lo * t_lo) + lo.df * t_lo - hi.df * t_hi + hi.f - lo.f;
        (num / denom).clamp(t_lo, t_hi)
    } else {
        t_hi
    };
    let shape = Overestimator::PiecewiseQuadratic {
        t_lo,
        t_hi,
        f_lo: lo.f,
        f_hi: hi.f,
        df_lo: lo.df,
        df_hi: hi.df,
        curvature: c,
        t_c,
    };
    // Both pieces are convex, so the maximum of g is at t_lo, t_c or t_hi.
    let mut best: Option<(f64, f64)> = None;
    for t in [t_lo, t_c, t_hi] {
        let g = shape.eval(p, t)?;
        if best.is_none_or(|(_, bg)| g > bg) {
            best = Some((t, g));
        }
    }
    let (t_dagger, g_value) = best.expect("three candidates");
    let f_value = if t_dagger == t_lo {
        lo.f
    } else if t_dagger == t_hi {
        hi.f
    } else {
        p.eval_f(t_dagger)?
    };
    Ok(BoundCertificate {
        t_dagger,
        g_value: g_value.max(f_value),
        f_value,
        convex_op_used: false,
        shape,
    })
}

/// Concave-shift bound, maximized by golden-section search.
pub fn bound_type3(
    p: &FacetProblem,
    tint: Interval,
    fsecond: Interval,
    tol_t: f64,
) -> Result<BoundCertificate> {
    check_interval(tint)?;
    if fsecond.hi().is_nan() || fsecond.hi() <= 0.0 {
        return Err(Error::HypothesisViolated(format!(
            "concave-shift bound needs f''_hi > 0, got {fsecond}"
        )));
    }
    let (t_lo, t_hi) = (tint.lo(), tint.hi());
    let c = fsecond.hi();
    let shape = Overestimator::ConcaveShift {
        t_lo,
        t_hi,
        curvature: c,
    };
    let best = concave_max(
        |t| {
            p.eval_f(t)
                .map(|f| f + 0.5 * c * (t - t_lo) * (t_hi - t))
        },
        tint,
        tol_t,
    )?;
    let f_value = p.eval_f(best.t)?;
    // g'' = f'' - f''_hi lies in [f''_lo - f''_hi, 0].
    let curvature_bound = fsecond.hi() - fsecond.lo();
    let g_value = best.value + concave_pad(curvature_bound, tol_t, best.value);
    Ok(BoundCertificate {
        t_dagger: best.t,
        g_value: g_value.max(f_value),
        f_value,
        convex_op_used: true,
        shape,
    })
}

/// Dispatch on the configured kind; `tol_t` is used only by the concave
/// shift.
pub fn bound(
    kind: OverestimatorKind,
    p: &FacetProblem,
    tint: Interval,
    fprime: Interval,
    fsecond: Interval,
    tol_t: f64,
) -> Result<BoundCertificate> {
    if !(fprime.lo() < 0.0 && fprime.hi() > 0.0 && fsecond.hi() > 0.0) {
        return Err(Error::HypothesisViolated(format!(
            "overestimators need f'_lo < 0 < f'_hi and f''_hi > 0, got {fprime} and {fsecond}"
        )));
    }
    match kind {
        OverestimatorKind::PiecewiseAffine => bound_type1(p, tint, fprime),
        OverestimatorKind::PiecewiseQuadratic => bound_type2(p, tint, fsecond),
        OverestimatorKind::ConcaveShift => bound_type3(p, tint, fsecond, tol_t),
    }
}

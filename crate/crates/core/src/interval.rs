//! Closed real intervals with optional outward rounding.
//!
//! Endpoints are plain `f64`. In [`Rounding::Outward`] mode every endpoint
//! produced by a floating-point operation is moved one representable step
//! away from the interval's interior, so the result encloses the exact real
//! result of the operation. [`Rounding::Nearest`] skips the nudge.
//!
//! The only non-finite interval is the sentinel [`Interval::ENTIRE`], which
//! marks unprocessed branch-and-bound nodes. The checked operations reject
//! it; the operator impls panic on it.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Endpoint rounding policy for interval operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    #[default]
    Outward,
    Nearest,
}

impl Rounding {
    #[inline]
    pub(crate) fn down(self, x: f64) -> f64 {
        match self {
            Rounding::Outward => x.next_down(),
            Rounding::Nearest => x,
        }
    }

    #[inline]
    pub(crate) fn up(self, x: f64) -> f64 {
        match self {
            Rounding::Outward => x.next_up(),
            Rounding::Nearest => x,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    /// The unbounded sentinel `[-inf, inf]`.
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    /// Builds `[lo, hi]`; both endpoints must be finite with `lo <= hi`.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo <= hi {
            Ok(Interval { lo, hi })
        } else {
            Err(Error::InvalidInterval { lo, hi })
        }
    }

    /// Degenerate interval `[x, x]`.
    ///
    /// # Panics
    /// If `x` is not finite.
    pub fn point(x: f64) -> Self {
        assert!(x.is_finite(), "degenerate interval from non-finite {x}");
        Interval { lo: x, hi: x }
    }

    /// Smallest interval holding both `a` and `b`, in either order.
    pub fn spanning(a: f64, b: f64) -> Result<Self> {
        Interval::new(a.min(b), a.max(b))
    }

    pub(crate) const fn raw(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    /// Interval enclosing the real `1 / n`.
    pub fn reciprocal(n: u32, rounding: Rounding) -> Self {
        let q = 1.0 / n as f64;
        Interval {
            lo: rounding.down(q),
            hi: rounding.up(q),
        }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_entire(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// `|[c]| = max(|lo|, |hi|)`.
    pub fn magnitude(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// `w([c]) = hi - lo`; `+inf` for the sentinel.
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        if self.is_entire() {
            return 0.0;
        }
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Splits at the midpoint.
    pub fn bisect(&self) -> (Interval, Interval) {
        let m = self.mid();
        (Interval::raw(self.lo, m), Interval::raw(m, self.hi))
    }

    fn check_bounded(self, other: Interval) -> Result<()> {
        if self.is_finite() && other.is_finite() {
            Ok(())
        } else {
            Err(Error::Unbounded)
        }
    }

    pub fn try_add(self, rhs: Interval, rounding: Rounding) -> Result<Interval> {
        self.check_bounded(rhs)?;
        Ok(self.add_r(rhs, rounding))
    }

    pub fn try_sub(self, rhs: Interval, rounding: Rounding) -> Result<Interval> {
        self.check_bounded(rhs)?;
        Ok(self.sub_r(rhs, rounding))
    }

    pub fn try_mul(self, rhs: Interval, rounding: Rounding) -> Result<Interval> {
        self.check_bounded(rhs)?;
        Ok(self.mul_r(rhs, rounding))
    }

    pub fn try_pow(self, kappa: u32, rounding: Rounding) -> Result<Interval> {
        self.check_bounded(self)?;
        Ok(self.pow_r(kappa, rounding))
    }

    #[inline]
    pub(crate) fn add_r(self, rhs: Interval, r: Rounding) -> Interval {
        Interval {
            lo: r.down(self.lo + rhs.lo),
            hi: r.up(self.hi + rhs.hi),
        }
    }

    #[inline]
    pub(crate) fn sub_r(self, rhs: Interval, r: Rounding) -> Interval {
        Interval {
            lo: r.down(self.lo - rhs.hi),
            hi: r.up(self.hi - rhs.lo),
        }
    }

    #[inline]
    pub(crate) fn mul_r(self, rhs: Interval, r: Rounding) -> Interval {
        let p1 = self.lo * rhs.lo;
        let p2 = self.lo * rhs.hi;
        let p3 = self.hi * rhs.lo;
        let p4 = self.hi * rhs.hi;
        Interval {
            lo: r.down(p1.min(p2).min(p3.min(p4))),
            hi: r.up(p1.max(p2).max(p3.max(p4))),
        }
    }

    /// Product with a real scalar.
    #[inline]
    pub(crate) fn scale_r(self, s: f64, r: Rounding) -> Interval {
        let a = self.lo * s;
        let b = self.hi * s;
        Interval {
            lo: r.down(a.min(b)),
            hi: r.up(a.max(b)),
        }
    }

    /// Power rule with the three sign cases; tighter than repeated products.
    pub(crate) fn pow_r(self, kappa: u32, r: Rounding) -> Interval {
        if kappa == 0 {
            return Interval::ONE;
        }
        let even = kappa.is_multiple_of(2);
        if self.lo > 0.0 || !even {
            Interval {
                lo: signed_pow(self.lo, kappa, false, r),
                hi: signed_pow(self.hi, kappa, true, r),
            }
        } else if self.hi < 0.0 {
            Interval {
                lo: signed_pow(self.hi, kappa, false, r),
                hi: signed_pow(self.lo, kappa, true, r),
            }
        } else {
            Interval {
                lo: 0.0,
                hi: abs_pow(self.magnitude(), kappa, true, r),
            }
        }
    }
}

/// `|x|^k` rounded in the requested direction (one nudge per product).
fn abs_pow(x: f64, k: u32, up: bool, r: Rounding) -> f64 {
    let x = x.abs();
    let mut acc = x;
    for _ in 1..k {
        acc *= x;
        acc = if up { r.up(acc) } else { r.down(acc) };
    }
    if k == 1 {
        acc
    } else {
        acc.max(0.0)
    }
}

/// `x^k` rounded down (`up = false`) or up.
fn signed_pow(x: f64, k: u32, up: bool, r: Rounding) -> f64 {
    if x >= 0.0 || k.is_multiple_of(2) {
        abs_pow(x, k, up, r)
    } else {
        -abs_pow(x, k, !up, r)
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        if v[0] == f64::NEG_INFINITY && v[1] == f64::INFINITY {
            return Ok(Interval::ENTIRE);
        }
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}, {:?}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

// Operator forms use outward rounding and panic on the sentinel, like
// integer overflow in debug builds.

impl Add for Interval {
    type Output = Interval;

    fn add(self, rhs: Interval) -> Interval {
        self.try_add(rhs, Rounding::Outward)
            .expect("interval addition")
    }
}

impl Sub for Interval {
    type Output = Interval;

    fn sub(self, rhs: Interval) -> Interval {
        self.try_sub(rhs, Rounding::Outward)
            .expect("interval subtraction")
    }
}

impl Mul for Interval {
    type Output = Interval;

    fn mul(self, rhs: Interval) -> Interval {
        self.try_mul(rhs, Rounding::Outward)
            .expect("interval multiplication")
    }
}

impl Neg for Interval {
    type Output = Interval;

    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

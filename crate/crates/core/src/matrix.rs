//! Entrywise interval matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::interval::{Interval, Rounding};

/// Dense interval matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Interval>,
}

impl IntervalMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Interval>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|e| !e.is_finite()) {
            return Err(Error::Unbounded);
        }
        Ok(IntervalMatrix { rows, cols, data })
    }

    /// Degenerate interval matrix with `lo = hi = m`.
    pub fn from_point(m: &DMatrix<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("point matrix"));
        }
        let data = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| Interval::point(m[(i, j)]))
            .collect();
        Ok(IntervalMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        })
    }

    /// `m * s` for a real matrix and an interval scalar, e.g. `A [t]`.
    pub fn from_point_scaled(m: &DMatrix<f64>, s: Interval, rounding: Rounding) -> Result<Self> {
        IntervalMatrix::from_point(m)?.scale(s, rounding)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntervalMatrix {
            rows,
            cols,
            data: vec![Interval::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntervalMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Interval::ONE;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Interval {
        self.data[i * self.cols + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: Interval) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Interval] {
        &self.data
    }

    pub fn lower(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.rows, self.cols, self.data.iter().map(|e| e.lo()))
    }

    pub fn upper(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.rows, self.cols, self.data.iter().map(|e| e.hi()))
    }

    pub fn mid(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.rows, self.cols, self.data.iter().map(|e| e.mid()))
    }

    /// Entrywise magnitude `|[C]|`.
    pub fn magnitude(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.data.iter().map(|e| e.magnitude()),
        )
    }

    pub fn max_width(&self) -> f64 {
        self.data.iter().map(|e| e.width()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|e| e.is_finite())
    }

    pub fn contains_point(&self, m: &DMatrix<f64>) -> bool {
        m.nrows() == self.rows
            && m.ncols() == self.cols
            && (0..self.rows).all(|i| (0..self.cols).all(|j| self.get(i, j).contains(m[(i, j)])))
    }

    pub fn is_subset_of(&self, other: &IntervalMatrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.is_subset_of(b))
    }

    pub fn mat_add(&self, other: &IntervalMatrix, rounding: Rounding) -> Result<IntervalMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.add_r(*b, rounding))
            .collect();
        Ok(IntervalMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Naive triple-loop product.
    pub fn mat_mul(&self, other: &IntervalMatrix, rounding: Rounding) -> Result<IntervalMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = IntervalMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Interval::ZERO;
                for k in 0..self.cols {
                    let p = self.get(i, k).mul_r(other.get(k, j), rounding);
                    acc = if k == 0 { p } else { acc.add_r(p, rounding) };
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: Interval, rounding: Rounding) -> Result<IntervalMatrix> {
        if !s.is_finite() {
            return Err(Error::Unbounded);
        }
        Ok(self.map(|e| e.mul_r(s, rounding)))
    }

    pub fn scale_real(&self, s: f64, rounding: Rounding) -> Result<IntervalMatrix> {
        if !s.is_finite() {
            return Err(Error::NonFinite("matrix scale factor"));
        }
        Ok(self.map(|e| e.scale_r(s, rounding)))
    }

    fn map(&self, f: impl Fn(Interval) -> Interval) -> IntervalMatrix {
        IntervalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|e| f(*e)).collect(),
        }
    }

    /// `||[C]||_inf`, the largest row sum of entry magnitudes. Rounded up in
    /// outward mode so it can feed a rigorous remainder bound.
    pub fn inf_norm(&self, rounding: Rounding) -> f64 {
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .fold(0.0, |acc, e| rounding.up(acc + e.magnitude()))
            })
            .fold(0.0, f64::max)
    }

    /// `[C] v` for a real vector.
    pub fn mul_vec(&self, v: &DVector<f64>, rounding: Rounding) -> Result<Vec<Interval>> {
        let iv: Vec<Interval> = v.iter().map(|x| Interval::point(*x)).collect();
        self.mul_ivec(&iv, rounding)
    }

    /// `[C] [v]` for an interval vector.
    pub fn mul_ivec(&self, v: &[Interval], rounding: Rounding) -> Result<Vec<Interval>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| dot(&self.data[i * self.cols..(i + 1) * self.cols], v, rounding))
            .collect())
    }
}

/// Interval dot product.
pub fn dot(a: &[Interval], b: &[Interval], rounding: Rounding) -> Interval {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| x.mul_r(*y, rounding))
        .reduce(|acc, p| acc.add_r(p, rounding))
        .unwrap_or(Interval::ZERO)
}

/// Degenerate interval vector.
pub fn point_vector(v: &DVector<f64>) -> Vec<Interval> {
    v.iter().map(|x| Interval::point(*x)).collect()
}

//! Dense row-major sample matrices and the inner-product kernels every
//! statistic in this crate is built on.

use crate::error::{Error, Result};

/// An `n x p` batch of observations drawn from one population.
///
/// Rows are observations and columns are variables. Entries are always
/// finite; constructors reject NaN and infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Vec<f64>,
    n: usize,
    p: usize,
}

impl SampleMatrix {
    pub fn new(data: Vec<f64>, n: usize, p: usize) -> Result<Self> {
        if data.len() != n * p {
            return Err(Error::InvalidArgument(format!(
                "buffer of length {} cannot hold a {n}x{p} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / p.max(1),
                col: pos % p.max(1),
            });
        }
        Ok(Self { data, n, p })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let p = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * p);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != p {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} entries, expected {p}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(data, rows.len(), p)
    }

    /// Build without the finiteness scan; for generators that only ever
    /// produce finite draws.
    pub(crate) fn from_raw(data: Vec<f64>, n: usize, p: usize) -> Self {
        debug_assert_eq!(data.len(), n * p);
        Self { data, n, p }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.p.max(1)).take(self.n)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }

    /// Column sums, i.e. the sum of all observation vectors.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.p];
        for r in self.rows() {
            for (acc, v) in s.iter_mut().zip(r) {
                *acc += v;
            }
        }
        s
    }

    pub fn column_means(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.column_sums().into_iter().map(|s| s / n).collect()
    }

    /// Returns a new matrix with `shift` added to every row.
    pub fn shifted(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.p {
            return Err(Error::DimensionMismatch {
                left: self.p,
                right: shift.len(),
            });
        }
        let mut data = self.data.clone();
        for r in data.chunks_exact_mut(self.p.max(1)) {
            for (v, c) in r.iter_mut().zip(shift) {
                *v += c;
            }
        }
        Self::new(data, self.n, self.p)
    }

    /// Keeps the listed columns, in the order given.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.n * cols.len());
        for r in self.rows() {
            data.extend(cols.iter().map(|&c| r[c]));
        }
        Self::from_raw(data, self.n, cols.len())
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.p);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Self::from_raw(data, rows.len(), self.p)
    }

    /// Row-wise `self − other`, for paired designs.
    pub fn difference(&self, other: &SampleMatrix) -> Result<Self> {
        same_dimension(self, other)?;
        if self.n != other.n {
            return Err(Error::InvalidArgument(format!(
                "paired samples need equal row counts, got {} and {}",
                self.n, other.n
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self::new(data, self.n, self.p)
    }

    pub fn transpose(&self) -> Self {
        let mut data = vec![0.0; self.n * self.p];
        for i in 0..self.n {
            for j in 0..self.p {
                data[j * self.n + i] = self.data[i * self.p + j];
            }
        }
        Self::from_raw(data, self.p, self.n)
    }

    pub(crate) fn require_rows(&self, what: &'static str, required: usize) -> Result<()> {
        if self.n < required {
            return Err(Error::SampleTooSmall {
                what,
                required,
                actual: self.n,
            });
        }
        Ok(())
    }
}

pub(crate) fn same_dimension(x: &SampleMatrix, y: &SampleMatrix) -> Result<()> {
    if x.p() != y.p() {
        return Err(Error::DimensionMismatch {
            left: x.p(),
            right: y.p(),
        });
    }
    Ok(())
}

const PAIRWISE_BLOCK: usize = 64;

/// Inner product accumulated by pairwise (tree) summation.
///
/// Rounding error grows like `O(log p)` rather than `O(p)`.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= PAIRWISE_BLOCK {
        let mut acc = [0.0f64; 4];
        let mut ca = a.chunks_exact(4);
        let mut cb = b.chunks_exact(4);
        for (x, y) in (&mut ca).zip(&mut cb) {
            acc[0] += x[0] * y[0];
            acc[1] += x[1] * y[1];
            acc[2] += x[2] * y[2];
            acc[3] += x[3] * y[3];
        }
        let mut tail = 0.0;
        for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
            tail += x * y;
        }
        return (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail;
    }
    let mid = a.len() / 2;
    dot(&a[..mid], &b[..mid]) + dot(&a[mid..], &b[mid..])
}

/// Pairwise sum of a slice.
pub fn pairwise_sum(a: &[f64]) -> f64 {
    if a.len() <= PAIRWISE_BLOCK {
        return a.iter().sum();
    }
    let mid = a.len() / 2;
    pairwise_sum(&a[..mid]) + pairwise_sum(&a[mid..])
}

/// Symmetric `m x m` matrix stored densely, row-major.
#[derive(Debug, Clone)]
pub(crate) struct Gram {
    pub m: usize,
    pub g: Vec<f64>,
}

impl Gram {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.m + j]
    }
}

/// Gram matrix of the rows of `rows` (all pairwise inner products).
pub(crate) fn gram(rows: &[&[f64]]) -> Gram {
    let m = rows.len();
    let mut g = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = dot(rows[i], rows[j]);
            g[i * m + j] = v;
            g[j * m + i] = v;
        }
    }
    Gram { m, g }
}

/// Rows of `x` minus `center`, as owned vectors.
pub(crate) fn centered_rows(x: &SampleMatrix, center: &[f64]) -> Vec<Vec<f64>> {
    x.rows()
        .map(|r| r.iter().zip(center).map(|(v, c)| v - c).collect())
        .collect()
}

/// Column means of the two samples stacked together.
pub(crate) fn pooled_mean(x: &SampleMatrix, y: &SampleMatrix) -> Vec<f64> {
    let total = (x.n() + y.n()) as f64;
    x.column_sums()
        .into_iter()
        .zip(y.column_sums())
        .map(|(a, b)| (a + b) / total)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        let err = SampleMatrix::from_rows(&[vec![1.0, 2.0], vec![f64::NAN, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0 }));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(SampleMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn pairwise_dot_matches_naive() {
        let a: Vec<f64> = (0..1001).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..1001).map(|i| (i as f64 * 0.11).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-10);
        assert!((pairwise_sum(&a) - a.iter().sum::<f64>()).abs() < 1e-10);
    }

    #[test]
    fn transpose_and_select() {
        let x = SampleMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let t = x.transpose();
        assert_eq!((t.n(), t.p()), (3, 2));
        assert_eq!(t.row(2), &[3.0, 6.0]);
        assert_eq!(x.select_columns(&[2, 0]).row(1), &[6.0, 4.0]);
        assert_eq!(x.select_rows(&[1]).row(0), &[4.0, 5.0, 6.0]);
    }
}

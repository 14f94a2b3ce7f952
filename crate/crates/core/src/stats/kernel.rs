//! Inner-product reductions shared by the Chen–Qin statistics.
//!
//! Every quantity is a function of pairwise inner products, so one Gram
//! matrix of the stacked observations (`O(N²p)` work, `O(N²)` memory)
//! replaces the `p x p` matrices in the textbook definitions.
//!
//! Rows are centred at a common vector `c` before the Gram is formed.
//! `T_n` and the cross-trace estimate are exactly invariant to a common
//! shift; the within-sample trace estimate is not, so it carries the
//! correction terms `a_j = c'(X_j − c)` to stay equal to the raw-data value.

use crate::matrix::{centered_rows, dot, gram, Gram, SampleMatrix};

pub(crate) struct StackedGram {
    pub n1: usize,
    pub n2: usize,
    g: Gram,
    /// `c'(X_j − c)` for each stacked row.
    a: Vec<f64>,
    /// Row sums of the Gram restricted to each row's own sample.
    own_sum: Vec<f64>,
    /// Row sums of the Gram over the other sample.
    other_sum: Vec<f64>,
}

impl StackedGram {
    /// Gram of both samples centred at `center`. Pass `y = None` for a
    /// single sample.
    pub fn new(x: &SampleMatrix, y: Option<&SampleMatrix>, center: &[f64]) -> Self {
        let mut rows = centered_rows(x, center);
        let n1 = x.n();
        let n2 = y.map_or(0, |y| y.n());
        if let Some(y) = y {
            rows.extend(centered_rows(y, center));
        }
        let a: Vec<f64> = rows.iter().map(|r| dot(center, r)).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let g = gram(&refs);
        let m = n1 + n2;
        let mut own_sum = vec![0.0; m];
        let mut other_sum = vec![0.0; m];
        for i in 0..m {
            let (own, other) = if i < n1 { (0..n1, n1..m) } else { (n1..m, 0..n1) };
            own_sum[i] = own.map(|j| g.at(i, j)).sum();
            other_sum[i] = other.map(|j| g.at(i, j)).sum();
        }
        Self {
            n1,
            n2,
            g,
            a,
            own_sum,
            other_sum,
        }
    }

    fn block(&self, sample: usize) -> std::ops::Range<usize> {
        if sample == 0 {
            0..self.n1
        } else {
            self.n1..self.n1 + self.n2
        }
    }

    /// Σ_{i≠j} X_i'X_j over one sample, computed on centred rows.
    /// Only meaningful when the centring is common to every term, as in
    /// the shift-invariant combinations used by `T_n`.
    fn off_diagonal_sum(&self, sample: usize) -> f64 {
        self.block(sample)
            .map(|i| self.own_sum[i] - self.g.at(i, i))
            .sum()
    }

    fn cross_sum(&self) -> f64 {
        self.block(0).map(|i| self.other_sum[i]).sum()
    }

    /// `T_n = P₁ + P₂ + P₃`.
    pub fn t_n(&self) -> f64 {
        let (a, b) = (self.n1 as f64, self.n2 as f64);
        self.off_diagonal_sum(0) / (a * (a - 1.0)) + self.off_diagonal_sum(1) / (b * (b - 1.0))
            - 2.0 * self.cross_sum() / (a * b)
    }

    /// Leave-two-out estimate of tr(Σ²) for one sample.
    ///
    /// `X_j'(X_k − X̄_(j,k))` with `X̄_(j,k) = (S − X_j − X_k)/(n−2)`.
    pub fn tr_sq(&self, sample: usize) -> f64 {
        let block = self.block(sample);
        let n = block.len();
        let nm2 = (n - 2) as f64;
        let a_total: f64 = block.clone().map(|i| self.a[i]).sum();
        let f = |j: usize, k: usize| {
            let gjk = self.g.at(j, k);
            let inner = gjk - (self.own_sum[j] - self.g.at(j, j) - gjk) / nm2;
            let shift = self.a[k] - (a_total - self.a[j] - self.a[k]) / nm2;
            inner + shift
        };
        let mut total = 0.0;
        for j in block.clone() {
            let mut row = 0.0;
            for k in block.clone() {
                if k > j {
                    row += f(j, k) * f(k, j);
                }
            }
            total += row;
        }
        2.0 * total / (n as f64 * (n as f64 - 1.0))
    }

    /// Leave-one-out estimate of tr(Σ₁Σ₂).
    pub fn tr_cross(&self) -> f64 {
        let (n1, n2) = (self.n1 as f64, self.n2 as f64);
        let mut total = 0.0;
        for l in self.block(0) {
            let mut row = 0.0;
            for k in self.block(1) {
                let c = self.g.at(l, k);
                // X_1l'(X_2k − X̄_2(k)) and X_2k'(X_1l − X̄_1(l))
                let u = c - (self.other_sum[l] - c) / (n2 - 1.0);
                let v = c - (self.other_sum[k] - c) / (n1 - 1.0);
                row += u * v;
            }
            total += row;
        }
        total / (n1 * n2)
    }
}

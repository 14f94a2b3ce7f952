//! Comparison procedures: the Bai–Saranadasa statistic, Hotelling's T² and
//! coordinate-wise pooled t-tests.

use nalgebra::{DMatrix, DVector};

use super::{check_alpha, normal_calibrated, Method, Sidedness, TestResult};
use crate::dist::{f_sf, t_two_sided_pvalue};
use crate::error::{Error, Result};
use crate::matrix::{centered_rows, dot, gram, same_dimension, SampleMatrix};

/// Pooled-covariance pieces of the Bai–Saranadasa construction.
struct PooledScatter {
    /// `n = n₁ + n₂ − 2`.
    dof: f64,
    tr_s: f64,
    tr_s_sq: f64,
}

/// `tr S_n` and `tr S_n²` through the Gram matrix of within-sample centred
/// observations: `tr S_n² = ‖Y Y'‖²_F / n²`, never forming `S_n`.
fn pooled_scatter(x: &SampleMatrix, y: &SampleMatrix) -> PooledScatter {
    let mut rows = centered_rows(x, &x.column_means());
    rows.extend(centered_rows(y, &y.column_means()));
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let g = gram(&refs);
    let dof = (x.n() + y.n() - 2) as f64;
    let trace: f64 = (0..g.m).map(|i| g.at(i, i)).sum();
    let frob: f64 = g.g.iter().map(|v| v * v).sum();
    PooledScatter {
        dof,
        tr_s: trace / dof,
        tr_s_sq: frob / (dof * dof),
    }
}

impl PooledScatter {
    fn bs_trace(&self) -> f64 {
        let n = self.dof;
        n * n / ((n + 2.0) * (n - 1.0)) * (self.tr_s_sq - self.tr_s * self.tr_s / n)
    }
}

/// The Bai–Saranadasa estimate of tr(Σ²) under a common covariance.
pub fn bs_trace_estimate(x: &SampleMatrix, y: &SampleMatrix) -> Result<f64> {
    same_dimension(x, y)?;
    check_pooled_dof(x, y)?;
    Ok(pooled_scatter(x, y).bs_trace())
}

fn check_pooled_dof(x: &SampleMatrix, y: &SampleMatrix) -> Result<()> {
    let total = x.n() + y.n();
    if total < 4 || x.n() == 0 || y.n() == 0 {
        return Err(Error::SampleTooSmall {
            what: "pooled covariance (n1 + n2 - 2 >= 2)",
            required: 4,
            actual: total,
        });
    }
    Ok(())
}

/// Bai–Saranadasa test based on
/// `M_n = ‖X̄₁ − X̄₂‖² − τ·tr(S_n)`, `τ = (n₁+n₂)/(n₁n₂)`.
///
/// Standardized by `√(2τ²·(n+1)/n·tr̂_BS(Σ²))`, the normal-theory variance
/// of `M_n` with the BS trace estimate plugged in. Assumes Σ₁ = Σ₂.
pub fn bai_saranadasa_test(x: &SampleMatrix, y: &SampleMatrix, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    same_dimension(x, y)?;
    check_pooled_dof(x, y)?;
    let (n1, n2) = (x.n() as f64, y.n() as f64);
    let tau = (n1 + n2) / (n1 * n2);
    let diff: Vec<f64> = x
        .column_means()
        .into_iter()
        .zip(y.column_means())
        .map(|(a, b)| a - b)
        .collect();
    let scatter = pooled_scatter(x, y);
    let m_n = dot(&diff, &diff) - tau * scatter.tr_s;
    let n = scatter.dof;
    let var = 2.0 * tau * tau * (n + 1.0) / n * scatter.bs_trace();
    if !(var > 0.0) {
        return Err(Error::DegenerateVariance {
            method: "Bai-Saranadasa",
            value: var,
        });
    }
    normal_calibrated(Method::BaiSaranadasa, m_n, var.sqrt(), alpha, Sidedness::Upper, None)
}

/// Classical two-sample Hotelling T² with its exact F calibration.
///
/// Only defined when `p < n₁ + n₂ − 2` and the pooled covariance is
/// positive definite. `q_value` holds the F ratio and `standard_error` the
/// factor mapping T² onto it.
pub fn hotelling_t2(x: &SampleMatrix, y: &SampleMatrix, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    same_dimension(x, y)?;
    let p = x.p();
    let (n1, n2) = (x.n(), y.n());
    let total = n1 + n2;
    if p == 0 || total < 3 || p >= total - 2 {
        return Err(Error::Singular(format!(
            "p = {p} must be below n1 + n2 - 2 = {}",
            total.saturating_sub(2)
        )));
    }
    let (m1, m2) = (x.column_means(), y.column_means());
    let mut s = DMatrix::<f64>::zeros(p, p);
    for (sample, mean) in [(x, &m1), (y, &m2)] {
        for r in sample.rows() {
            let d = DVector::from_iterator(p, r.iter().zip(mean.iter()).map(|(v, m)| v - m));
            s.ger(1.0, &d, &d, 1.0);
        }
    }
    s /= (total - 2) as f64;
    let diff = DVector::from_iterator(p, m1.iter().zip(&m2).map(|(a, b)| a - b));

    let (n1f, n2f, nf, pf) = (n1 as f64, n2 as f64, total as f64, p as f64);
    let t2 = if diff.iter().all(|v| *v == 0.0) {
        0.0
    } else {
        let chol = s
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("pooled covariance is not positive definite".into()))?;
        let solved = chol.solve(&diff);
        n1f * n2f / nf * diff.dot(&solved)
    };
    let scale = pf * (nf - 2.0) / (nf - pf - 1.0);
    let f = t2 / scale;
    let p_value = f_sf(f, pf, nf - pf - 1.0);
    Ok(TestResult {
        method: Method::Hotelling,
        statistic: t2,
        standard_error: scale,
        q_value: f,
        p_value,
        reject: p_value <= alpha,
        alpha,
        sidedness: Sidedness::Upper,
        diagnostics: None,
    })
}

/// Per-coordinate results of the pooled two-sample t-test.
#[derive(Debug, Clone)]
pub struct UnivariateTests {
    pub statistics: Vec<f64>,
    /// Two-sided P-values, one per coordinate.
    pub p_values: Vec<f64>,
    /// Coordinates with zero pooled variance; their P-value is set to 1.
    pub zero_variance: Vec<usize>,
}

/// Two-sided pooled-variance t-test on every coordinate, `n₁ + n₂ − 2`
/// degrees of freedom.
pub fn univariate_t_pvalues(x: &SampleMatrix, y: &SampleMatrix) -> Result<UnivariateTests> {
    same_dimension(x, y)?;
    x.require_rows("univariate t-test", 2)?;
    y.require_rows("univariate t-test", 2)?;
    let p = x.p();
    let (n1, n2) = (x.n() as f64, y.n() as f64);
    let df = n1 + n2 - 2.0;
    let (m1, m2) = (x.column_means(), y.column_means());
    let mut ss = vec![0.0; p];
    let mut constant = vec![true; p];
    for (sample, mean) in [(x, &m1), (y, &m2)] {
        let first = sample.row(0);
        for r in sample.rows() {
            for j in 0..p {
                let d = r[j] - mean[j];
                ss[j] += d * d;
                constant[j] &= r[j] == first[j];
            }
        }
    }
    let mut statistics = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    let mut zero_variance = Vec::new();
    let scale = (1.0 / n1 + 1.0 / n2).sqrt();
    for j in 0..p {
        let var = ss[j] / df;
        if constant[j] || !(var > 0.0) {
            zero_variance.push(j);
            statistics.push(0.0);
            p_values.push(1.0);
            continue;
        }
        let t = (m1[j] - m2[j]) / (var.sqrt() * scale);
        statistics.push(t);
        p_values.push(t_two_sided_pvalue(t, df));
    }
    Ok(UnivariateTests {
        statistics,
        p_values,
        zero_variance,
    })
}

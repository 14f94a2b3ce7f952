use super::kernel::StackedGram;
use super::{check_alpha, normal_calibrated, Method, Sidedness, TestResult, TraceEstimates};
use crate::error::{Error, Result};
use crate::matrix::{dot, pooled_mean, same_dimension, SampleMatrix};

fn two_sample_gram(x: &SampleMatrix, y: &SampleMatrix) -> StackedGram {
    StackedGram::new(x, Some(y), &pooled_mean(x, y))
}

/// The two-sample U-statistic `T_n`, unbiased for ‖µ₁ − µ₂‖².
///
/// Self inner products `X_i'X_i` are excluded from both within-sample sums.
pub fn t_n_statistic(x: &SampleMatrix, y: &SampleMatrix) -> Result<f64> {
    same_dimension(x, y)?;
    x.require_rows("T_n", 2)?;
    y.require_rows("T_n", 2)?;
    Ok(two_sample_gram(x, y).t_n())
}

/// Leave-two-out estimator of tr(Σ²) for a single sample.
pub fn tr_sigma_sq_hat(x: &SampleMatrix) -> Result<f64> {
    x.require_rows("tr(Σ²) estimate", 4)?;
    Ok(StackedGram::new(x, None, &x.column_means()).tr_sq(0))
}

/// Leave-one-out estimator of tr(Σ₁Σ₂).
pub fn tr_sigma_cross_hat(x: &SampleMatrix, y: &SampleMatrix) -> Result<f64> {
    same_dimension(x, y)?;
    x.require_rows("tr(Σ₁Σ₂) estimate", 3)?;
    y.require_rows("tr(Σ₁Σ₂) estimate", 3)?;
    Ok(two_sample_gram(x, y).tr_cross())
}

fn require_trace_sizes(x: &SampleMatrix, y: &SampleMatrix) -> Result<()> {
    same_dimension(x, y)?;
    x.require_rows("variance estimate of T_n", 4)?;
    y.require_rows("variance estimate of T_n", 4)
}

/// All three trace estimates and the resulting estimate of Var(T_n) under H₀.
///
/// A non-positive `sigma_n1_sq` is returned as is; check
/// [`TraceEstimates::is_degenerate`] before dividing by it.
pub fn sigma_n1_sq_hat(x: &SampleMatrix, y: &SampleMatrix) -> Result<TraceEstimates> {
    require_trace_sizes(x, y)?;
    Ok(estimates_from(&two_sample_gram(x, y)))
}

fn estimates_from(k: &StackedGram) -> TraceEstimates {
    TraceEstimates::assemble(k.n1, k.n2, k.tr_sq(0), k.tr_sq(1), k.tr_cross())
}

/// One-sided Chen–Qin test: reject H₀: µ₁ = µ₂ when `Q_n = T_n/σ̂_{n1}` exceeds
/// the upper α quantile of N(0,1).
pub fn chen_qin_test(x: &SampleMatrix, y: &SampleMatrix, alpha: f64) -> Result<TestResult> {
    chen_qin_test_sided(x, y, alpha, Sidedness::Upper)
}

pub fn chen_qin_test_sided(
    x: &SampleMatrix,
    y: &SampleMatrix,
    alpha: f64,
    sidedness: Sidedness,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    require_trace_sizes(x, y)?;
    let kernel = two_sample_gram(x, y);
    let est = estimates_from(&kernel);
    if est.is_degenerate() {
        return Err(Error::DegenerateVariance {
            method: "Chen-Qin",
            value: est.sigma_n1_sq,
        });
    }
    normal_calibrated(
        Method::ChenQin,
        kernel.t_n(),
        est.sigma_n1_sq.sqrt(),
        alpha,
        sidedness,
        Some(est),
    )
}

/// Paired (one-sample) test of H₀: µ = 0 on the differences `diffs`.
///
/// `F_n = Σ_{i≠j} X_i'X_j / (n(n−1))`, standardized by
/// `√(2·tr̂(Σ²)/(n(n−1)))`.
pub fn paired_test(diffs: &SampleMatrix, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    diffs.require_rows("paired test", 4)?;
    let n = diffs.n() as f64;
    let mean = diffs.column_means();
    let kernel = StackedGram::new(diffs, None, &mean);
    let tr_sq = kernel.tr_sq(0);
    // Σ_{i≠j} X_i'X_j = n(n−1)‖x̄‖² − Σ_i ‖X_i − x̄‖²
    let scatter: f64 = diffs
        .rows()
        .map(|r| {
            let d: Vec<f64> = r.iter().zip(&mean).map(|(v, m)| v - m).collect();
            dot(&d, &d)
        })
        .sum();
    let f_n = dot(&mean, &mean) - scatter / (n * (n - 1.0));
    let var = 2.0 * tr_sq / (n * (n - 1.0));
    let est = TraceEstimates {
        tr_s1_sq: tr_sq,
        tr_s2_sq: f64::NAN,
        tr_s1s2: f64::NAN,
        sigma_n1_sq: var,
    };
    if !(var > 0.0) {
        return Err(Error::DegenerateVariance {
            method: "paired Chen-Qin",
            value: var,
        });
    }
    normal_calibrated(
        Method::PairedChenQin,
        f_n,
        var.sqrt(),
        alpha,
        Sidedness::Upper,
        Some(est),
    )
}

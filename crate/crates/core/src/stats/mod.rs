//! Test statistics: the two-sample U-statistic `T_n`, its trace-based
//! variance estimate, the standardized `Q_n` test, the paired one-sample
//! variant and the comparison baselines.

mod baselines;
mod chen_qin;
mod kernel;

use serde::Serialize;

pub use baselines::{bai_saranadasa_test, bs_trace_estimate, hotelling_t2, univariate_t_pvalues, UnivariateTests};
pub use chen_qin::{
    chen_qin_test, chen_qin_test_sided, paired_test, sigma_n1_sq_hat, t_n_statistic,
    tr_sigma_cross_hat, tr_sigma_sq_hat,
};

use crate::dist::{normal_sf, upper_quantile};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    ChenQin,
    BaiSaranadasa,
    Hotelling,
    PairedChenQin,
}

/// Which tail the normal calibration uses.
///
/// `Upper` rejects for large `Q_n` and is the default. `TwoSided` uses
/// `2(1 − Φ(|Q_n|))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Sidedness {
    #[default]
    Upper,
    TwoSided,
}

/// Unbiased trace estimates and the variance estimate assembled from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEstimates {
    /// Estimate of tr(Σ₁²).
    pub tr_s1_sq: f64,
    /// Estimate of tr(Σ₂²).
    pub tr_s2_sq: f64,
    /// Estimate of tr(Σ₁Σ₂).
    pub tr_s1s2: f64,
    /// Estimated null variance of `T_n`.
    pub sigma_n1_sq: f64,
}

impl TraceEstimates {
    pub fn assemble(n1: usize, n2: usize, tr_s1_sq: f64, tr_s2_sq: f64, tr_s1s2: f64) -> Self {
        let (a, b) = (n1 as f64, n2 as f64);
        let sigma_n1_sq = 2.0 / (a * (a - 1.0)) * tr_s1_sq
            + 2.0 / (b * (b - 1.0)) * tr_s2_sq
            + 4.0 / (a * b) * tr_s1s2;
        Self {
            tr_s1_sq,
            tr_s2_sq,
            tr_s1s2,
            sigma_n1_sq,
        }
    }

    /// A non-positive variance estimate cannot standardize `T_n`.
    pub fn is_degenerate(&self) -> bool {
        !(self.sigma_n1_sq > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub method: Method,
    /// `T_n`, `M_n`, `F_n` or Hotelling's `T²`.
    pub statistic: f64,
    /// Scale the statistic is divided by to give `q_value`.
    pub standard_error: f64,
    /// Standardized statistic (the F ratio for Hotelling).
    pub q_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub sidedness: Sidedness,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<TraceEstimates>,
}

/// Calibrates a standardized statistic against N(0,1).
pub(crate) fn normal_calibrated(
    method: Method,
    statistic: f64,
    standard_error: f64,
    alpha: f64,
    sidedness: Sidedness,
    diagnostics: Option<TraceEstimates>,
) -> Result<TestResult> {
    let q = statistic / standard_error;
    let xi = match sidedness {
        Sidedness::Upper => upper_quantile(alpha)?,
        Sidedness::TwoSided => upper_quantile(alpha / 2.0)?,
    };
    let (p_value, reject) = match sidedness {
        Sidedness::Upper => (normal_sf(q), q > xi),
        Sidedness::TwoSided => ((2.0 * normal_sf(q.abs())).min(1.0), q.abs() > xi),
    };
    Ok(TestResult {
        method,
        statistic,
        standard_error,
        q_value: q,
        p_value,
        reject,
        alpha,
        sidedness,
        diagnostics,
    })
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(crate::Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

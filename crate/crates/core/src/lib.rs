//! Two-sample testing of mean vectors when the dimension far exceeds the
//! sample size.
//!
//! The centrepiece is the U-statistic `T_n` together with unbiased
//! leave-out estimators of tr(Σᵢ²) and tr(Σ₁Σ₂), giving the standardized
//! statistic `Q_n` that is asymptotically N(0,1) under H₀ without any
//! explicit relation between `p` and `n`. Around it the crate provides:
//!
//! - baselines: Bai–Saranadasa, Hotelling's T², coordinate-wise t-tests
//!   ([`stats`])
//! - asymptotic power formulas and regime diagnostics ([`power`])
//! - Bonferroni and Benjamini–Hochberg adjustment ([`multiplicity`])
//! - seeded Monte Carlo studies on moving-average and sparse models
//!   ([`simulation`])
//! - a gene-set screening pipeline ([`geneset`])

pub mod dist;
pub mod error;
pub mod format;
pub mod geneset;
pub mod gof;
pub mod input;
pub mod matrix;
pub mod multiplicity;
mod parallel;
pub mod power;
pub mod simulation;
pub mod stats;

pub use error::{Error, Result};
pub use matrix::SampleMatrix;
pub use stats::{
    bai_saranadasa_test, chen_qin_test, hotelling_t2, paired_test, sigma_n1_sq_hat,
    t_n_statistic, tr_sigma_cross_hat, tr_sigma_sq_hat, univariate_t_pvalues, Method, Sidedness,
    TestResult, TraceEstimates,
};

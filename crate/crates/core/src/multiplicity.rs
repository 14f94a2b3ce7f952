//! Family-wise (Bonferroni) and false-discovery-rate (Benjamini–Hochberg)
//! control over a vector of P-values.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Correction {
    Bonferroni,
    #[serde(rename = "BH")]
    BenjaminiHochberg,
}

impl std::str::FromStr for Correction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bonferroni" | "bonf" => Ok(Self::Bonferroni),
            "bh" | "fdr" | "benjamini-hochberg" => Ok(Self::BenjaminiHochberg),
            other => Err(Error::InvalidArgument(format!("unknown correction '{other}'"))),
        }
    }
}

impl std::fmt::Display for Correction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Bonferroni => "bonferroni",
            Self::BenjaminiHochberg => "bh",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicityResult {
    pub method: Correction,
    pub alpha: f64,
    /// Adjusted P-values in the input order.
    pub adjusted_p: Vec<f64>,
    pub reject: Vec<bool>,
    pub n_rejected: usize,
}

fn validate(pvals: &[f64], alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if let Some((i, p)) = pvals.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("p-value {i} out of [0, 1]: {p}")));
    }
    Ok(())
}

fn finish(method: Correction, alpha: f64, adjusted_p: Vec<f64>) -> MultiplicityResult {
    let reject: Vec<bool> = adjusted_p.iter().map(|&q| q <= alpha).collect();
    let n_rejected = reject.iter().filter(|&&r| r).count();
    MultiplicityResult {
        method,
        alpha,
        adjusted_p,
        reject,
        n_rejected,
    }
}

/// Bonferroni: `adjusted = min(1, m·p)`.
pub fn bonferroni(pvals: &[f64], alpha: f64) -> Result<MultiplicityResult> {
    validate(pvals, alpha)?;
    let m = pvals.len() as f64;
    let adjusted = pvals.iter().map(|&p| (m * p).min(1.0)).collect();
    Ok(finish(Correction::Bonferroni, alpha, adjusted))
}

/// Benjamini–Hochberg step-up.
///
/// Adjusted values are the running minimum of `m·p₍ₖ₎/k` taken from the
/// largest rank down, so rejecting `adjusted ≤ α` is the same as rejecting
/// the `k` smallest P-values for the largest `k` with `p₍ₖ₎ ≤ kα/m`.
/// Ties are ordered by original index.
pub fn bh_fdr(pvals: &[f64], alpha: f64) -> Result<MultiplicityResult> {
    validate(pvals, alpha)?;
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &idx) in order.iter().enumerate().rev() {
        let q = pvals[idx] * m as f64 / (rank + 1) as f64;
        running = running.min(q);
        adjusted[idx] = running;
    }
    Ok(finish(Correction::BenjaminiHochberg, alpha, adjusted))
}

pub fn adjust(pvals: &[f64], alpha: f64, method: Correction) -> Result<MultiplicityResult> {
    match method {
        Correction::Bonferroni => bonferroni(pvals, alpha),
        Correction::BenjaminiHochberg => bh_fdr(pvals, alpha),
    }
}

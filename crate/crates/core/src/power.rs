//! Asymptotic power of the `Q_n` test and checks of when those
//! approximations apply.
//!
//! With `n = n₁ + n₂`, `k = n₁/n` and `Σ̃ = (1−k)Σ₁ + kΣ₂` the standardized
//! signal is `n·k(1−k)·‖µ₁−µ₂‖² / √(2·tr Σ̃²)`. Under local alternatives the
//! power is `Φ(−ξ_α + signal)`; under fixed alternatives the `ξ_α` shift
//! vanishes and the power is `Φ(signal)`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::dist::{normal_cdf, upper_quantile};
use crate::error::{Error, Result};
use crate::simulation::BandedToeplitz;

/// Largest dimension accepted for an explicit covariance matrix.
pub const DENSE_MAX_P: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerInput {
    pub n1: usize,
    pub n2: usize,
    /// ‖µ₁ − µ₂‖².
    pub delta_norm_sq: f64,
    /// tr(Σ̃²).
    pub tr_sigma_tilde_sq: f64,
    pub alpha: f64,
    /// Sample fraction; usually `n₁/(n₁+n₂)`.
    pub k: f64,
}

impl PowerInput {
    /// Input with `k = n₁/(n₁+n₂)`.
    pub fn new(n1: usize, n2: usize, delta_norm_sq: f64, tr_sigma_tilde_sq: f64, alpha: f64) -> Result<Self> {
        let k = n1 as f64 / (n1 + n2).max(1) as f64;
        let inp = Self {
            n1,
            n2,
            delta_norm_sq,
            tr_sigma_tilde_sq,
            alpha,
            k,
        };
        inp.validate()?;
        Ok(inp)
    }

    pub fn with_k(mut self, k: f64) -> Result<Self> {
        self.k = k;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n1 == 0 || self.n2 == 0 {
            return bad("sample sizes must be positive".into());
        }
        if !(self.delta_norm_sq >= 0.0 && self.delta_norm_sq.is_finite()) {
            return bad(format!("delta_norm_sq must be finite and >= 0, got {}", self.delta_norm_sq));
        }
        if !(self.tr_sigma_tilde_sq > 0.0 && self.tr_sigma_tilde_sq.is_finite()) {
            return bad(format!("tr_sigma_tilde_sq must be finite and > 0, got {}", self.tr_sigma_tilde_sq));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.k > 0.0 && self.k < 1.0) {
            return bad(format!("k must lie in (0, 1), got {}", self.k));
        }
        Ok(())
    }

    /// Input for mean difference `mu_diff` between populations with
    /// covariances `s1` and `s2`, at `k = n₁/(n₁+n₂)`.
    pub fn from_model(n1: usize, n2: usize, s1: &Covariance, s2: &Covariance, mu_diff: &[f64], alpha: f64) -> Result<Self> {
        if mu_diff.len() != s1.p() {
            return Err(Error::DimensionMismatch {
                left: s1.p(),
                right: mu_diff.len(),
            });
        }
        let k = n1 as f64 / (n1 + n2).max(1) as f64;
        let delta_norm_sq = mu_diff.iter().map(|d| d * d).sum();
        Self::new(n1, n2, delta_norm_sq, tr_sigma_tilde_sq(s1, s2, k)?, alpha)
    }

    /// `n·k(1−k)·δ² / √(2·tr Σ̃²)`.
    pub fn signal(&self) -> f64 {
        let n = (self.n1 + self.n2) as f64;
        n * self.k * (1.0 - self.k) * self.delta_norm_sq / (2.0 * self.tr_sigma_tilde_sq).sqrt()
    }
}

/// Power under local alternatives.
pub fn power_local(inp: &PowerInput) -> Result<f64> {
    inp.validate()?;
    if inp.delta_norm_sq == 0.0 {
        return Ok(inp.alpha);
    }
    Ok(normal_cdf(inp.signal() - upper_quantile(inp.alpha)?))
}

/// Power under fixed alternatives.
pub fn power_fixed(inp: &PowerInput) -> Result<f64> {
    inp.validate()?;
    Ok(normal_cdf(inp.signal()))
}

/// tr(Σ̃²) for `Σ̃ = (1−k)Σ₁ + kΣ₂`.
pub fn tr_sigma_tilde_sq(s1: &Covariance, s2: &Covariance, k: f64) -> Result<f64> {
    let (a, b) = (1.0 - k, k);
    Ok(a * a * s1.tr_sq() + 2.0 * a * b * s1.tr_product(s2)? + b * b * s2.tr_sq())
}

/// A covariance matrix, explicit or banded Toeplitz.
#[derive(Debug, Clone)]
pub enum Covariance {
    Dense(DMatrix<f64>),
    Banded(BandedToeplitz),
}

impl Covariance {
    /// Checks symmetry and positive semi-definiteness of an explicit matrix.
    pub fn dense(m: DMatrix<f64>) -> Result<Self> {
        let p = m.nrows();
        if p != m.ncols() {
            return Err(Error::DimensionMismatch {
                left: p,
                right: m.ncols(),
            });
        }
        if p == 0 || p > DENSE_MAX_P {
            return Err(Error::InvalidArgument(format!(
                "explicit covariance dimension must lie in 1..={DENSE_MAX_P}, got {p}"
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("covariance has non-finite entries".into()));
        }
        let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-10 * scale {
            return Err(Error::InvalidArgument(format!("covariance is not symmetric (max |Σ−Σ'| = {asym:e})")));
        }
        let sym = (&m + m.transpose()) * 0.5;
        let min_eig = SymmetricEigen::new(sym.clone()).eigenvalues.min();
        if min_eig < -1e-10 * scale * p as f64 {
            return Err(Error::InvalidArgument(format!(
                "covariance is not positive semi-definite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(Covariance::Dense(sym))
    }

    /// An explicit matrix from row-major entries.
    pub fn from_row_major(data: &[f64], p: usize) -> Result<Self> {
        if data.len() != p * p {
            return Err(Error::InvalidArgument(format!("{} entries cannot form a {p}x{p} matrix", data.len())));
        }
        Self::dense(DMatrix::from_row_slice(p, p, data))
    }

    pub fn p(&self) -> usize {
        match self {
            Covariance::Dense(m) => m.nrows(),
            Covariance::Banded(b) => b.p,
        }
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        match self {
            Covariance::Dense(m) => m.clone(),
            Covariance::Banded(b) => DMatrix::from_fn(b.p, b.p, |i, j| b.entry(i, j)),
        }
    }

    pub fn tr_sq(&self) -> f64 {
        match self {
            Covariance::Dense(m) => m.norm_squared(),
            Covariance::Banded(b) => b.tr_sq(),
        }
    }

    pub fn tr_fourth(&self) -> f64 {
        match self {
            Covariance::Dense(m) => (m * m).norm_squared(),
            Covariance::Banded(b) => b.tr_fourth(),
        }
    }

    /// tr(Σ·Ω); both symmetric, so this is the Frobenius inner product.
    pub fn tr_product(&self, other: &Covariance) -> Result<f64> {
        if self.p() != other.p() {
            return Err(Error::DimensionMismatch {
                left: self.p(),
                right: other.p(),
            });
        }
        Ok(match (self, other) {
            (Covariance::Banded(a), Covariance::Banded(b)) => a.tr_product(b),
            (Covariance::Dense(a), Covariance::Dense(b)) => a.dot(b),
            (Covariance::Dense(a), b @ Covariance::Banded(_)) | (b @ Covariance::Banded(_), Covariance::Dense(a)) => {
                a.dot(&b.to_matrix())
            }
        })
    }

    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.p() {
            return Err(Error::DimensionMismatch {
                left: self.p(),
                right: v.len(),
            });
        }
        Ok(match self {
            Covariance::Dense(m) => {
                let x = nalgebra::DVector::from_column_slice(v);
                x.dot(&(m * &x))
            }
            Covariance::Banded(b) => b.quad_form(v),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// µ₁ = µ₂.
    Null,
    /// Ratios below 0.1: the local-alternative power applies.
    Local,
    Intermediate,
    /// Ratios above 10: the fixed-alternative power applies.
    Fixed,
}

pub const LOCAL_THRESHOLD: f64 = 0.1;
pub const FIXED_THRESHOLD: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    /// δ'Σᵢδ / (n⁻¹ tr{(Σ₁+Σ₂)²}) for i = 1, 2.
    pub r1: [f64; 2],
    /// tr(Σᵢ⁴)/tr²(Σᵢ²) for i = 1, 2.
    pub r2: [f64; 2],
    pub regime: Regime,
    pub tr_sum_sq: f64,
}

impl DiagnosticsReport {
    pub fn summary(&self) -> &'static str {
        match self.regime {
            Regime::Null => "null: means equal",
            Regime::Local => "local alternative: local power formula applies",
            Regime::Intermediate => "intermediate: power formulas are approximations",
            Regime::Fixed => "fixed alternative: fixed power formula applies",
        }
    }
}

/// Ratios governing which asymptotic regime applies; `n` is the total
/// sample size.
pub fn condition_diagnostics(
    sigma1: &Covariance,
    sigma2: &Covariance,
    mu_diff: &[f64],
    n: usize,
) -> Result<DiagnosticsReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let tr_sum_sq = sigma1.tr_sq() + 2.0 * sigma1.tr_product(sigma2)? + sigma2.tr_sq();
    if !(tr_sum_sq > 0.0) {
        return Err(Error::InvalidArgument("covariances are both zero".into()));
    }
    let denom = tr_sum_sq / n as f64;
    let r1 = [sigma1.quad_form(mu_diff)? / denom, sigma2.quad_form(mu_diff)? / denom];
    let r2 = [sigma1, sigma2].map(|s| s.tr_fourth() / s.tr_sq().powi(2));
    let worst = r1[0].max(r1[1]);
    let regime = if mu_diff.iter().all(|&d| d == 0.0) {
        Regime::Null
    } else if worst < LOCAL_THRESHOLD {
        Regime::Local
    } else if worst > FIXED_THRESHOLD {
        Regime::Fixed
    } else {
        Regime::Intermediate
    };
    Ok(DiagnosticsReport {
        r1,
        r2,
        regime,
        tr_sum_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{Innovation, MAModel};
    use proptest::prelude::*;

    // 124·0.25·0.1/√2 = 2.1920310216782974; Φ values from mpmath at 30 digits
    const EXAMPLE_LOCAL: f64 = 0.7078715676022048;
    const EXAMPLE_FIXED: f64 = 0.9858113666310063;

    fn example() -> PowerInput {
        // η = δ²/√tr Σ² = 0.1 with tr Σ̃² = 1e4
        PowerInput::new(62, 62, 10.0, 1e4, 0.05).unwrap()
    }

    #[test]
    fn worked_example() {
        let inp = example();
        assert!((inp.signal() - 2.1920310216782974).abs() < 1e-14);
        assert!((power_local(&inp).unwrap() - EXAMPLE_LOCAL).abs() < 1e-12);
        assert!((power_fixed(&inp).unwrap() - EXAMPLE_FIXED).abs() < 1e-12);
    }

    #[test]
    fn null_values() {
        let mut inp = example();
        inp.delta_norm_sq = 0.0;
        assert_eq!(power_local(&inp).unwrap(), 0.05);
        assert_eq!(power_fixed(&inp).unwrap(), 0.5);
    }

    #[test]
    fn domain_errors() {
        assert!(PowerInput::new(0, 5, 1.0, 1.0, 0.05).is_err());
        assert!(PowerInput::new(5, 5, -1.0, 1.0, 0.05).is_err());
        assert!(PowerInput::new(5, 5, 1.0, 0.0, 0.05).is_err());
        assert!(PowerInput::new(5, 5, 1.0, 1.0, 1.0).is_err());
        assert!(example().with_k(1.0).is_err());
    }

    proptest! {
        #[test]
        fn monotone_and_scale_free(d in 0.01f64..50.0, t in 1.0f64..1e6, s in 0.1f64..10.0, n in 8usize..300) {
            let a = PowerInput::new(n, n + 3, d, t, 0.05).unwrap();
            let more_signal = PowerInput { delta_norm_sq: d * 1.5, ..a };
            let more_noise = PowerInput { tr_sigma_tilde_sq: t * 1.5, ..a };
            let scaled = PowerInput { delta_norm_sq: d * s, tr_sigma_tilde_sq: t * s * s, ..a };
            let pl = power_local(&a).unwrap();
            let pf = power_fixed(&a).unwrap();
            prop_assert!(pf >= pl);
            if pl < 1.0 - 1e-15 {
                prop_assert!(power_local(&more_signal).unwrap() > pl);
            }
            if pl > 1e-300 && pl < 1.0 - 1e-15 {
                prop_assert!(power_local(&more_noise).unwrap() < pl);
            }
            prop_assert!((power_local(&scaled).unwrap() - pl).abs() < 1e-12);
            prop_assert!((power_fixed(&scaled).unwrap() - pf).abs() < 1e-12);
        }
    }

    #[test]
    fn local_power_tends_to_one() {
        let inp = PowerInput::new(50, 50, 1e4, 1.0, 0.05).unwrap();
        assert_eq!(power_local(&inp).unwrap(), 1.0);
    }

    #[test]
    fn identity_r2_is_one_over_p() {
        let id = Covariance::Banded(BandedToeplitz::identity(500));
        let r = condition_diagnostics(&id, &id, &vec![0.0; 500], 100).unwrap();
        assert_eq!(r.r2, [1.0 / 500.0; 2]);
        assert_eq!(r.r1, [0.0, 0.0]);
        assert_eq!(r.regime, Regime::Null);
        let dense = Covariance::dense(DMatrix::identity(40, 40)).unwrap();
        let r = condition_diagnostics(&dense, &dense, &vec![0.0; 40], 10).unwrap();
        assert_eq!(r.r2, [1.0 / 40.0; 2]);
    }

    #[test]
    fn banded_matches_dense() {
        let m = MAModel::two_dependence(50, Innovation::StandardNormal).unwrap();
        let banded = Covariance::Banded(m.covariance());
        let dense = Covariance::dense(banded.to_matrix()).unwrap();
        let mu: Vec<f64> = (0..50).map(|i| ((i * 7 % 11) as f64 - 5.0) / 10.0).collect();
        let a = condition_diagnostics(&banded, &banded, &mu, 60).unwrap();
        let b = condition_diagnostics(&dense, &dense, &mu, 60).unwrap();
        let b_mixed = condition_diagnostics(&banded, &dense, &mu, 60).unwrap();
        for (x, y) in a.r1.iter().chain(&a.r2).zip(b.r1.iter().chain(&b.r2)) {
            assert!((x - y).abs() <= 1e-8 * y.abs());
        }
        assert!((a.tr_sum_sq - b_mixed.tr_sum_sq).abs() <= 1e-8 * a.tr_sum_sq);
    }

    #[test]
    fn regime_thresholds() {
        let id = Covariance::Banded(BandedToeplitz::identity(100));
        // r1 = δ'δ / (4·100/n)
        let at = |d2: f64| {
            let mut mu = vec![0.0; 100];
            mu[0] = d2.sqrt();
            condition_diagnostics(&id, &id, &mu, 40).unwrap().regime
        };
        assert_eq!(at(0.5), Regime::Local);
        assert_eq!(at(5.0), Regime::Intermediate);
        assert_eq!(at(200.0), Regime::Fixed);
    }

    #[test]
    fn rejects_bad_covariances() {
        let not_psd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(Covariance::dense(not_psd).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(Covariance::dense(asym).is_err());
        assert!(Covariance::dense(DMatrix::zeros(2, 3)).is_err());
        let id = Covariance::Banded(BandedToeplitz::identity(5));
        let other = Covariance::Banded(BandedToeplitz::identity(6));
        assert!(condition_diagnostics(&id, &other, &[0.0; 5], 10).is_err());
    }

    #[test]
    fn tilde_trace_interpolates() {
        let a = Covariance::Banded(BandedToeplitz::identity(10));
        let b = Covariance::Banded(BandedToeplitz::identity(10).scaled(3.0));
        // Σ̃ = (1−k)I + 3kI
        let k: f64 = 0.25;
        let expect = 10.0 * (1.0 - k + 3.0 * k).powi(2);
        assert!((tr_sigma_tilde_sq(&a, &b, k).unwrap() - expect).abs() < 1e-12);
    }
}

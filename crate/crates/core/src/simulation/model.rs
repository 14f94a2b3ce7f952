//! Data-generating models: the moving-average process with banded Toeplitz
//! covariance and the sparse independent-normal model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;

/// Coefficients of the 2-dependence configuration.
pub const TWO_DEPENDENCE_RHO: [f64; 3] = [2.883, 2.794, 2.849];

/// Seed that freezes the U(2,3) coefficients of the full-dependence model.
pub const FULL_DEPENDENCE_SEED: u64 = 0x5EED_2010;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Innovation {
    StandardNormal,
    /// Gamma(shape 4, scale 1) minus 4: mean 0, variance 4.
    CenteredGamma4,
}

impl Innovation {
    pub fn variance(self) -> f64 {
        match self {
            Innovation::StandardNormal => 1.0,
            Innovation::CenteredGamma4 => 4.0,
        }
    }

    #[inline]
    fn draw(self, rng: &mut impl Rng) -> f64 {
        match self {
            Innovation::StandardNormal => rng.sample(StandardNormal),
            Innovation::CenteredGamma4 => {
                // integer shape: sum of four unit exponentials
                let mut s = 0.0;
                for _ in 0..4 {
                    let u: f64 = rng.random();
                    s -= (1.0 - u).ln();
                }
                s - 4.0
            }
        }
    }
}

/// `X_k = Σ_l ρ_l Z_{k+l−1} + µ_k`, `k = 1..p`, with i.i.d. innovations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MAModel {
    pub p: usize,
    /// Nonzero leading coefficients; the band is `rho.len()`.
    pub rho: Vec<f64>,
    pub innovation: Innovation,
}

impl MAModel {
    pub fn new(p: usize, rho: Vec<f64>, innovation: Innovation) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("dimension p must be positive".into()));
        }
        if rho.is_empty() || rho.len() > p {
            return Err(Error::InvalidArgument(format!(
                "band {} must lie in 1..={p}",
                rho.len()
            )));
        }
        if rho.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidArgument("rho entries must be finite".into()));
        }
        Ok(Self { p, rho, innovation })
    }

    pub fn two_dependence(p: usize, innovation: Innovation) -> Result<Self> {
        let band = TWO_DEPENDENCE_RHO.len().min(p);
        Self::new(p, TWO_DEPENDENCE_RHO[..band].to_vec(), innovation)
    }

    /// All `p` coefficients drawn once from U(2,3) with [`FULL_DEPENDENCE_SEED`].
    pub fn full_dependence(p: usize, innovation: Innovation) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(FULL_DEPENDENCE_SEED);
        let rho = (0..p).map(|_| 2.0 + rng.random::<f64>()).collect();
        Self::new(p, rho, innovation)
    }

    pub fn band(&self) -> usize {
        self.rho.len()
    }

    /// Autocovariances σ_h = var(Z)·Σ_l ρ_l ρ_{l+h}, h = 0..band−1.
    pub fn autocovariances(&self) -> Vec<f64> {
        let b = self.band();
        let v = self.innovation.variance();
        (0..b)
            .map(|h| v * (0..b - h).map(|l| self.rho[l] * self.rho[l + h]).sum::<f64>())
            .collect()
    }

    pub fn covariance(&self) -> BandedToeplitz {
        BandedToeplitz {
            p: self.p,
            autocov: self.autocovariances(),
        }
    }

    /// Draws `n` independent rows with mean `mu`.
    pub fn generate(&self, n: usize, mu: &[f64], rng: &mut impl Rng) -> Result<SampleMatrix> {
        if mu.len() != self.p {
            return Err(Error::DimensionMismatch {
                left: self.p,
                right: mu.len(),
            });
        }
        let b = self.band();
        let mut z = vec![0.0; self.p + b - 1];
        let mut data = Vec::with_capacity(n * self.p);
        for _ in 0..n {
            for zi in z.iter_mut() {
                *zi = self.innovation.draw(rng);
            }
            for (k, m) in mu.iter().enumerate() {
                let window = &z[k..k + b];
                let v: f64 = self.rho.iter().zip(window).map(|(r, zz)| r * zz).sum();
                data.push(v + m);
            }
        }
        Ok(SampleMatrix::from_raw(data, n, self.p))
    }
}

/// Independent N(µ_l, 1) coordinates.
pub fn sparse_generate(p: usize, n: usize, mu: &[f64], rng: &mut impl Rng) -> Result<SampleMatrix> {
    if mu.len() != p {
        return Err(Error::DimensionMismatch {
            left: p,
            right: mu.len(),
        });
    }
    let mut data = Vec::with_capacity(n * p);
    for _ in 0..n {
        for m in mu {
            let z: f64 = rng.sample(StandardNormal);
            data.push(m + z);
        }
    }
    Ok(SampleMatrix::from_raw(data, n, p))
}

/// Symmetric Toeplitz covariance with entries `σ_|i−j|`, zero beyond the band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandedToeplitz {
    pub p: usize,
    /// σ_0, σ_1, …; lags past the end are zero.
    pub autocov: Vec<f64>,
}

impl BandedToeplitz {
    pub fn identity(p: usize) -> Self {
        Self {
            p,
            autocov: vec![1.0],
        }
    }

    fn half_width(&self) -> usize {
        self.autocov.len().saturating_sub(1).min(self.p.saturating_sub(1))
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.autocov.get(i.abs_diff(j)).copied().unwrap_or(0.0)
    }

    /// tr(Σ²) = p·σ₀² + 2·Σ_h (p−h)·σ_h².
    pub fn tr_sq(&self) -> f64 {
        self.tr_product(self)
    }

    /// tr(Σ·Ω) for two banded Toeplitz matrices of the same dimension.
    pub fn tr_product(&self, other: &BandedToeplitz) -> f64 {
        let p = self.p;
        let h = self.half_width().min(other.half_width());
        let mut s = p as f64 * self.autocov[0] * other.autocov[0];
        for lag in 1..=h {
            s += 2.0 * (p - lag) as f64 * self.autocov[lag] * other.autocov[lag];
        }
        s
    }

    /// tr(Σ⁴) = ‖Σ²‖²_F, with Σ² formed only inside its band.
    pub fn tr_fourth(&self) -> f64 {
        let p = self.p;
        let h = self.half_width();
        let mut total = 0.0;
        for i in 0..p {
            let j_lo = i.saturating_sub(2 * h);
            let j_hi = (i + 2 * h).min(p - 1);
            for j in j_lo..=j_hi {
                let k_lo = i.max(j).saturating_sub(h);
                let k_hi = (i.min(j) + h).min(p - 1);
                let mut v = 0.0;
                for k in k_lo..=k_hi {
                    v += self.entry(i, k) * self.entry(k, j);
                }
                total += v * v;
            }
        }
        total
    }

    /// Σ·v in `O(p·band)`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let h = self.half_width();
        (0..self.p)
            .map(|i| {
                let lo = i.saturating_sub(h);
                let hi = (i + h).min(self.p - 1);
                (lo..=hi).map(|k| self.entry(i, k) * v[k]).sum()
            })
            .collect()
    }

    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            p: self.p,
            autocov: self.autocov.iter().map(|a| a * s).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.p)
            .map(|i| (0..self.p).map(|j| self.entry(i, j)).collect())
            .collect()
    }
}

/// Traces of the MA covariance used for η calibration and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaTraces {
    pub tr_sigma_sq: f64,
    pub tr_sigma_4th: f64,
    pub autocov: Vec<f64>,
}

pub fn ma_covariance_traces(model: &MAModel) -> MaTraces {
    let cov = model.covariance();
    MaTraces {
        tr_sigma_sq: cov.tr_sq(),
        tr_sigma_4th: cov.tr_fourth(),
        autocov: cov.autocov,
    }
}

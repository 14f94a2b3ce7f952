//! Reference distributions: standard normal, Student t and Fisher F.
//!
//! `erfc` comes from `libm` (accurate to about one ulp), the incomplete
//! beta function and the starting point for the normal quantile from
//! `statrs`. This module only fixes the parameterisations.

use libm::erfc;
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal distribution function Φ(z).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Upper tail 1 − Φ(z), without cancellation for large z.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Inverse of [`normal_cdf`] on the open unit interval.
pub fn normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "normal quantile needs 0 < u < 1, got {u}"
        )));
    }
    let mut x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u);
    // two Newton steps against the tail that is not cancelling
    for _ in 0..2 {
        let f = if x < 0.0 {
            normal_cdf(x) - u
        } else {
            (1.0 - u) - normal_sf(x)
        };
        let d = normal_pdf(x);
        if d > 0.0 {
            x -= f / d;
        }
    }
    Ok(x)
}

/// Upper α quantile ξ_α of N(0,1), i.e. Φ(ξ_α) = 1 − α.
pub fn upper_quantile(alpha: f64) -> Result<f64> {
    normal_quantile(alpha).map(|q| -q)
}

/// Two-sided P-value of a Student t statistic with `df` degrees of freedom.
pub fn t_two_sided_pvalue(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(0.5 * df, 0.5, x).clamp(0.0, 1.0)
}

/// Upper tail P(F > f) of Fisher's F(d1, d2).
pub fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    let x = d2 / (d2 + d1 * f);
    beta_reg(0.5 * d2, 0.5 * d1, x).clamp(0.0, 1.0)
}

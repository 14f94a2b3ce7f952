//! Goodness-of-fit helpers used to check calibration of P-values and `Q_n`.

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and the continuous distribution function `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs: Vec<f64> = samples.iter().copied().filter(|v| !v.is_nan()).collect();
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((((i + 1) as f64) / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn ks_uniform(samples: &[f64]) -> f64 {
    ks_distance(samples, |x| x.clamp(0.0, 1.0))
}

pub fn ks_standard_normal(samples: &[f64]) -> f64 {
    ks_distance(samples, crate::dist::normal_cdf)
}

/// Sample mean and unbiased sample standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

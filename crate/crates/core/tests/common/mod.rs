#![allow(dead_code)]

//! Shared helpers for the integration suites: independent naive oracles and
//! plain normal sampling that does not go through the crate's generators.

use hdtest::SampleMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut impl Rng, n: usize, p: usize, mean: &[f64], scale: f64) -> SampleMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..p)
                .map(|j| {
                    let z: f64 = rng.sample(StandardNormal);
                    mean.get(j).copied().unwrap_or(0.0) + scale * z
                })
                .collect()
        })
        .collect();
    SampleMatrix::from_rows(&rows).unwrap()
}

/// Rows drawn as `L z + mean` for a given lower-triangular factor `L`.
pub fn correlated_matrix(rng: &mut impl Rng, n: usize, chol: &[Vec<f64>], mean: &[f64]) -> SampleMatrix {
    let p = chol.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
            (0..p)
                .map(|i| mean[i] + (0..=i).map(|k| chol[i][k] * z[k]).sum::<f64>())
                .collect()
        })
        .collect();
    SampleMatrix::from_rows(&rows).unwrap()
}

fn rows(x: &SampleMatrix) -> Vec<Vec<f64>> {
    x.rows().map(|r| r.to_vec()).collect()
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

type Mat = Vec<Vec<f64>>;

fn outer(a: &[f64], b: &[f64]) -> Mat {
    a.iter().map(|x| b.iter().map(|y| x * y).collect()).collect()
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let p = a.len();
    (0..p)
        .map(|i| (0..p).map(|j| (0..p).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn trace(a: &Mat) -> f64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

/// Value together with the sum of absolute contributions, used as the
/// scale for relative comparisons.
pub struct Oracle {
    pub value: f64,
    pub scale: f64,
}

/// `T_n` by its three literal double sums.
pub fn naive_t_n(x: &SampleMatrix, y: &SampleMatrix) -> Oracle {
    let (a, b) = (rows(x), rows(y));
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let mut value = 0.0;
    let mut scale = 0.0;
    for (i, xi) in a.iter().enumerate() {
        for (j, xj) in a.iter().enumerate() {
            if i != j {
                let t = dotv(xi, xj) / (n1 * (n1 - 1.0));
                value += t;
                scale += t.abs();
            }
        }
    }
    for (i, yi) in b.iter().enumerate() {
        for (j, yj) in b.iter().enumerate() {
            if i != j {
                let t = dotv(yi, yj) / (n2 * (n2 - 1.0));
                value += t;
                scale += t.abs();
            }
        }
    }
    for xi in &a {
        for yj in &b {
            let t = -2.0 * dotv(xi, yj) / (n1 * n2);
            value += t;
            scale += t.abs();
        }
    }
    Oracle { value, scale }
}

/// tr̂(Σ²) with the `p x p` rank-one products formed and traced literally.
pub fn naive_tr_sq(x: &SampleMatrix) -> Oracle {
    let a = rows(x);
    let n = a.len();
    let p = x.p();
    let total: Vec<f64> = (0..p).map(|c| a.iter().map(|r| r[c]).sum()).collect();
    let mut value = 0.0;
    let mut scale = 0.0;
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let m: Vec<f64> = (0..p)
                .map(|c| (total[c] - a[j][c] - a[k][c]) / (n as f64 - 2.0))
                .collect();
            let dj: Vec<f64> = (0..p).map(|c| a[j][c] - m[c]).collect();
            let dk: Vec<f64> = (0..p).map(|c| a[k][c] - m[c]).collect();
            let prod = matmul(&outer(&dj, &a[j]), &outer(&dk, &a[k]));
            let t = trace(&prod) / (n as f64 * (n as f64 - 1.0));
            value += t;
            scale += t.abs();
        }
    }
    Oracle { value, scale }
}

/// tr̂(Σ₁Σ₂) with explicit `p x p` matrices.
pub fn naive_tr_cross(x: &SampleMatrix, y: &SampleMatrix) -> Oracle {
    let (a, b) = (rows(x), rows(y));
    let p = x.p();
    let (n1, n2) = (a.len(), b.len());
    let s1: Vec<f64> = (0..p).map(|c| a.iter().map(|r| r[c]).sum()).collect();
    let s2: Vec<f64> = (0..p).map(|c| b.iter().map(|r| r[c]).sum()).collect();
    let mut value = 0.0;
    let mut scale = 0.0;
    for l in 0..n1 {
        let d1: Vec<f64> = (0..p).map(|c| a[l][c] - (s1[c] - a[l][c]) / (n1 as f64 - 1.0)).collect();
        for k in 0..n2 {
            let d2: Vec<f64> = (0..p).map(|c| b[k][c] - (s2[c] - b[k][c]) / (n2 as f64 - 1.0)).collect();
            let prod = matmul(&outer(&d1, &a[l]), &outer(&d2, &b[k]));
            let t = trace(&prod) / (n1 * n2) as f64;
            value += t;
            scale += t.abs();
        }
    }
    Oracle { value, scale }
}

pub fn assert_close(got: f64, want: &Oracle, rel: f64, what: &str) {
    let tol = rel * want.scale.max(want.value.abs()).max(1e-300);
    assert!(
        (got - want.value).abs() <= tol,
        "{what}: got {got}, oracle {} (tol {tol})",
        want.value
    );
}

/// A random orthogonal matrix via Gram–Schmidt on Gaussian columns.
pub fn random_orthogonal(rng: &mut impl Rng, p: usize) -> Mat {
    let mut q: Mat = Vec::with_capacity(p);
    while q.len() < p {
        let mut v: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        for u in &q {
            let d = dotv(&v, u);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= d * ui;
            }
        }
        let norm = dotv(&v, &v).sqrt();
        if norm > 1e-8 {
            q.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    q
}

pub fn rotate(x: &SampleMatrix, q: &Mat) -> SampleMatrix {
    let rows: Vec<Vec<f64>> = x
        .rows()
        .map(|r| q.iter().map(|qi| dotv(qi, r)).collect())
        .collect();
    SampleMatrix::from_rows(&rows).unwrap()
}

/// Sample variance of `xs` and an estimate of its standard error from the
/// fourth central moment.
pub fn variance_with_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    (var, ((m4 - m2 * m2) / n).sqrt())
}

/// Exact Var(T_n) for given covariances and means (all five terms).
pub fn exact_var_t_n(
    n1: usize,
    n2: usize,
    s1: &[Vec<f64>],
    s2: &[Vec<f64>],
    mu1: &[f64],
    mu2: &[f64],
) -> f64 {
    let p = mu1.len();
    let (a, b) = (n1 as f64, n2 as f64);
    let tr = |x: &[Vec<f64>], y: &[Vec<f64>]| -> f64 {
        (0..p).map(|i| (0..p).map(|k| x[i][k] * y[k][i]).sum::<f64>()).sum()
    };
    let d: Vec<f64> = mu1.iter().zip(mu2).map(|(x, y)| x - y).collect();
    let quad = |s: &[Vec<f64>]| -> f64 {
        (0..p).map(|i| (0..p).map(|k| d[i] * s[i][k] * d[k]).sum::<f64>()).sum()
    };
    2.0 / (a * (a - 1.0)) * tr(s1, s1) + 2.0 / (b * (b - 1.0)) * tr(s2, s2) + 4.0 / (a * b) * tr(s1, s2)
        + 4.0 / a * quad(s1)
        + 4.0 / b * quad(s2)
}

//! Scenario description, mean-vector construction and the flat key-value
//! scenario file format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::model::{Innovation, MAModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dependence {
    /// ρ₁..ρ₃ fixed, zero beyond lag 2.
    Two,
    /// All p coefficients from U(2,3), frozen by a fixed seed.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelKind {
    MovingAverage {
        dependence: Dependence,
        innovation: Innovation,
    },
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Allocation {
    Equal,
    Increasing,
    Decreasing,
}

/// One Monte Carlo cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimScenario {
    pub model: ModelKind,
    pub p: usize,
    pub n1: usize,
    pub n2: usize,
    /// Percentage of coordinates with µ₁ₗ = µ₂ₗ. 100 is the global null.
    pub pct_true_null: f64,
    pub allocation: Allocation,
    /// ‖µ₁ − µ₂‖² / √tr(Σ²) for the MA model.
    pub eta: f64,
    /// Sparsity exponent: q = ⌊p^c⌋ nonzero means in the sparse model.
    pub c: f64,
    /// Signal scale: µ_l = ε·√(2 ln p) in the sparse model.
    pub epsilon: f64,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
}

/// `⌈20·ln p⌉`, the default total sample size.
pub fn default_total_n(p: usize) -> usize {
    (20.0 * (p as f64).ln()).ceil() as usize
}

impl SimScenario {
    /// A moving-average cell with the default η = 0.1, 500 replications and
    /// `n₁ = n₂ = ⌈20 ln p⌉ / 2`.
    pub fn moving_average(p: usize, dependence: Dependence, innovation: Innovation) -> Self {
        let total = default_total_n(p);
        Self {
            model: ModelKind::MovingAverage {
                dependence,
                innovation,
            },
            p,
            n1: total / 2,
            n2: total - total / 2,
            pct_true_null: 50.0,
            allocation: Allocation::Equal,
            eta: 0.1,
            c: 0.45,
            epsilon: 0.25,
            alpha: 0.05,
            reps: 500,
            seed: 1,
        }
    }

    pub fn sparse(p: usize, n: usize, c: f64, epsilon: f64) -> Self {
        Self {
            model: ModelKind::Sparse,
            p,
            n1: n,
            n2: n,
            pct_true_null: 0.0,
            allocation: Allocation::Equal,
            eta: 0.1,
            c,
            epsilon,
            alpha: 0.05,
            reps: 500,
            seed: 1,
        }
    }

    pub fn is_global_null(&self) -> bool {
        self.pct_true_null >= 100.0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.p == 0 {
            return bad("p must be positive".into());
        }
        if self.n1 < 4 || self.n2 < 4 {
            return bad(format!("n1 and n2 must be at least 4, got {} and {}", self.n1, self.n2));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(0.0..=100.0).contains(&self.pct_true_null) {
            return bad(format!("pct_true_null must lie in [0, 100], got {}", self.pct_true_null));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be finite and non-negative, got {}", self.eta));
        }
        if let ModelKind::Sparse = self.model {
            if !(self.c > 0.0 && self.c < 1.0) {
                return bad(format!("c must lie in (0, 1), got {}", self.c));
            }
            if !self.epsilon.is_finite() {
                return bad("epsilon must be finite".into());
            }
        }
        Ok(())
    }

    pub fn ma_model(&self) -> Result<Option<MAModel>> {
        match self.model {
            ModelKind::MovingAverage {
                dependence: Dependence::Two,
                innovation,
            } => MAModel::two_dependence(self.p, innovation).map(Some),
            ModelKind::MovingAverage {
                dependence: Dependence::Full,
                innovation,
            } => MAModel::full_dependence(self.p, innovation).map(Some),
            ModelKind::Sparse => Ok(None),
        }
    }

    /// Canonical `key = value` text; the input to the fingerprint and the
    /// format [`parse_scenario`] reads back.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        match self.model {
            ModelKind::MovingAverage {
                dependence,
                innovation,
            } => {
                let _ = writeln!(s, "model = ma");
                let _ = writeln!(
                    s,
                    "dependence = {}",
                    match dependence {
                        Dependence::Two => "two",
                        Dependence::Full => "full",
                    }
                );
                let _ = writeln!(
                    s,
                    "innovation = {}",
                    match innovation {
                        Innovation::StandardNormal => "normal",
                        Innovation::CenteredGamma4 => "gamma",
                    }
                );
            }
            ModelKind::Sparse => {
                let _ = writeln!(s, "model = sparse");
            }
        }
        let alloc = match self.allocation {
            Allocation::Equal => "equal",
            Allocation::Increasing => "increasing",
            Allocation::Decreasing => "decreasing",
        };
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "n1 = {}", self.n1);
        let _ = writeln!(s, "n2 = {}", self.n2);
        let _ = writeln!(s, "pct_true_null = {}", self.pct_true_null);
        let _ = writeln!(s, "allocation = {alloc}");
        let _ = writeln!(s, "eta = {}", self.eta);
        let _ = writeln!(s, "c = {}", self.c);
        let _ = writeln!(s, "epsilon = {}", self.epsilon);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "reps = {}", self.reps);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }

    /// First 16 hex digits of SHA-256 over the canonical config text.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_config_string().as_bytes());
        digest.iter().take(8).fold(String::new(), |mut acc, b| {
            let _ = write!(acc, "{b:02x}");
            acc
        })
    }
}

/// Percentages of true null coordinates in the moving-average grid.
pub const TRUE_NULL_GRID: [f64; 7] = [0.0, 25.0, 50.0, 75.0, 95.0, 99.0, 100.0];

/// The full allocation × true-null grid of moving-average cells at one `p`,
/// with the default sample size.
pub fn ma_grid(p: usize, dependence: Dependence, innovation: Innovation, reps: usize, seed: u64) -> Vec<SimScenario> {
    let mut out = Vec::new();
    for allocation in [Allocation::Equal, Allocation::Increasing, Allocation::Decreasing] {
        for pct in TRUE_NULL_GRID {
            let mut sc = SimScenario::moving_average(p, dependence, innovation);
            sc.allocation = allocation;
            sc.pct_true_null = pct;
            sc.reps = reps;
            sc.seed = seed;
            out.push(sc);
        }
    }
    out
}

/// Mean of the second population; the first is fixed at zero.
#[derive(Debug, Clone, Copy)]
pub enum MeanTarget {
    /// Scale the nonzero block so that ‖µ₂‖²/√tr(Σ²) = eta.
    Eta { eta: f64, tr_sigma_sq: f64 },
    /// First ⌊p^c⌋ coordinates set to ε·√(2 ln p).
    Sparse { c: f64, epsilon: f64 },
}

/// Number of nonzero means in the sparse model, `⌊p^c⌋`.
pub fn sparse_support(p: usize, c: f64) -> usize {
    // guard against p^c landing a hair under an integer
    let q = (p as f64).powf(c);
    ((q + 1e-9).floor() as usize).min(p)
}

pub fn build_mu2(p: usize, pct_true_null: f64, allocation: Allocation, target: MeanTarget) -> Result<Vec<f64>> {
    let mut mu = vec![0.0; p];
    if pct_true_null >= 100.0 {
        return Ok(mu);
    }
    match target {
        MeanTarget::Sparse { c, epsilon } => {
            let q = sparse_support(p, c);
            let v = epsilon * (2.0 * (p as f64).ln()).sqrt();
            mu[..q].iter_mut().for_each(|m| *m = v);
        }
        MeanTarget::Eta { eta, tr_sigma_sq } => {
            let k = ((1.0 - pct_true_null / 100.0) * p as f64).round() as usize;
            let k = k.min(p);
            if k == 0 {
                if eta > 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "no nonzero coordinates at {pct_true_null}% true null with p = {p}, but eta = {eta}"
                    )));
                }
                return Ok(mu);
            }
            let kf = k as f64;
            for (l, m) in mu[..k].iter_mut().enumerate() {
                let l = (l + 1) as f64;
                *m = match allocation {
                    Allocation::Equal => 1.0,
                    Allocation::Increasing => l / kf,
                    Allocation::Decreasing => (kf + 1.0 - l) / kf,
                };
            }
            let norm_sq: f64 = mu.iter().map(|m| m * m).sum();
            let scale = (eta * tr_sigma_sq.sqrt() / norm_sq).sqrt();
            mu.iter_mut().for_each(|m| *m *= scale);
        }
    }
    Ok(mu)
}

fn parse_value<T: std::str::FromStr>(path: &str, line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse {
        path: path.to_string(),
        line,
        msg: format!("invalid value '{v}' for {key}"),
    })
}

/// Reads a scenario from `key = value` text. `#` starts a comment.
///
/// Keys: `model` (`ma`|`sparse`), `dependence` (`two`|`full`),
/// `innovation` (`normal`|`gamma`), `p`, `n` (size of each sample), `n1`,
/// `n2`, `pct_true_null`, `allocation` (`equal`|`increasing`|`decreasing`),
/// `eta`, `c`, `epsilon`, `alpha`, `reps`, `seed`.
pub fn parse_scenario(text: &str, origin: &str) -> Result<SimScenario> {
    let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: origin.to_string(),
            line: i + 1,
            msg: format!("expected key = value, got '{line}'"),
        })?;
        kv.insert(k.trim().to_ascii_lowercase(), (i + 1, v.trim().to_string()));
    }
    let get = |k: &str| kv.get(k).map(|(l, v)| (*l, v.as_str()));

    let p: usize = match get("p") {
        Some((l, v)) => parse_value(origin, l, "p", v)?,
        None => 500,
    };
    let kind = get("model").map_or("ma", |(_, v)| v);
    let model = match kind {
        "ma" | "moving-average" => {
            let dependence = match get("dependence").map_or("two", |(_, v)| v) {
                "two" | "2" => Dependence::Two,
                "full" => Dependence::Full,
                other => {
                    return Err(Error::Parse {
                        path: origin.into(),
                        line: get("dependence").map_or(0, |x| x.0),
                        msg: format!("unknown dependence '{other}'"),
                    })
                }
            };
            let innovation = match get("innovation").map_or("gamma", |(_, v)| v) {
                "normal" => Innovation::StandardNormal,
                "gamma" => Innovation::CenteredGamma4,
                other => {
                    return Err(Error::Parse {
                        path: origin.into(),
                        line: get("innovation").map_or(0, |x| x.0),
                        msg: format!("unknown innovation '{other}'"),
                    })
                }
            };
            ModelKind::MovingAverage {
                dependence,
                innovation,
            }
        }
        "sparse" => ModelKind::Sparse,
        other => {
            return Err(Error::Parse {
                path: origin.into(),
                line: get("model").map_or(0, |x| x.0),
                msg: format!("unknown model '{other}'"),
            })
        }
    };
    let mut sc = match model {
        ModelKind::Sparse => SimScenario::sparse(p, 20, 0.45, 0.25),
        ModelKind::MovingAverage {
            dependence,
            innovation,
        } => SimScenario::moving_average(p, dependence, innovation),
    };
    if let Some((l, v)) = get("n") {
        let n: usize = parse_value(origin, l, "n", v)?;
        sc.n1 = n;
        sc.n2 = n;
    }
    macro_rules! field {
        ($key:literal, $field:ident) => {
            if let Some((l, v)) = get($key) {
                sc.$field = parse_value(origin, l, $key, v)?;
            }
        };
    }
    field!("n1", n1);
    field!("n2", n2);
    field!("pct_true_null", pct_true_null);
    field!("eta", eta);
    field!("c", c);
    field!("epsilon", epsilon);
    field!("alpha", alpha);
    field!("reps", reps);
    field!("seed", seed);
    if let Some((l, v)) = get("allocation") {
        sc.allocation = match v {
            "equal" => Allocation::Equal,
            "increasing" => Allocation::Increasing,
            "decreasing" => Allocation::Decreasing,
            other => {
                return Err(Error::Parse {
                    path: origin.into(),
                    line: l,
                    msg: format!("unknown allocation '{other}'"),
                })
            }
        };
    }
    const KNOWN: [&str; 15] = [
        "model", "dependence", "innovation", "p", "n", "n1", "n2", "pct_true_null", "allocation", "eta", "c",
        "epsilon", "alpha", "reps", "seed",
    ];
    if let Some((k, (l, _))) = kv.iter().find(|(k, _)| !KNOWN.contains(&k.as_str())) {
        return Err(Error::Parse {
            path: origin.into(),
            line: *l,
            msg: format!("unknown key '{k}'"),
        });
    }
    sc.validate()?;
    Ok(sc)
}

pub fn load_scenario(path: &Path) -> Result<SimScenario> {
    let text = crate::error::read_text(path)?;
    parse_scenario(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_null_is_zero() {
        let mu = build_mu2(50, 100.0, Allocation::Equal, MeanTarget::Eta { eta: 0.1, tr_sigma_sq: 50.0 }).unwrap();
        assert!(mu.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn sparse_support_sizes() {
        assert_eq!(sparse_support(1000, 0.45), 22);
        assert_eq!(sparse_support(1000, 0.35), 11);
        assert_eq!(sparse_support(1000, 0.55), 44);
        let mu = build_mu2(1000, 0.0, Allocation::Equal, MeanTarget::Sparse { c: 0.45, epsilon: 0.25 }).unwrap();
        let v = 0.25 * (2.0 * 1000f64.ln()).sqrt();
        assert_eq!(mu.iter().filter(|&&m| m != 0.0).count(), 22);
        assert!(mu[..22].iter().all(|&m| m == v));
    }

    #[test]
    fn eta_calibration_exact_for_all_allocations() {
        let tr = 12345.6;
        for alloc in [Allocation::Equal, Allocation::Increasing, Allocation::Decreasing] {
            for pct in [0.0, 25.0, 50.0, 75.0, 95.0, 99.0] {
                let mu = build_mu2(500, pct, alloc, MeanTarget::Eta { eta: 0.1, tr_sigma_sq: tr }).unwrap();
                let eta = mu.iter().map(|m| m * m).sum::<f64>() / tr.sqrt();
                assert!((eta - 0.1).abs() < 1e-12, "{alloc:?} {pct}");
                let k = mu.iter().filter(|&&m| m != 0.0).count();
                assert_eq!(k, ((1.0 - pct / 100.0) * 500.0f64).round() as usize);
            }
        }
        let inc = build_mu2(10, 0.0, Allocation::Increasing, MeanTarget::Eta { eta: 1.0, tr_sigma_sq: 1.0 }).unwrap();
        assert!(inc.windows(2).all(|w| w[0] < w[1]));
        let dec = build_mu2(10, 0.0, Allocation::Decreasing, MeanTarget::Eta { eta: 1.0, tr_sigma_sq: 1.0 }).unwrap();
        assert!(dec.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn empty_block_with_signal_is_an_error() {
        let r = build_mu2(10, 99.0, Allocation::Equal, MeanTarget::Eta { eta: 0.1, tr_sigma_sq: 10.0 });
        assert!(r.is_err());
    }

    #[test]
    fn config_round_trip_and_fingerprint() {
        let mut sc = SimScenario::sparse(1000, 20, 0.45, 0.25);
        sc.seed = 42;
        let back = parse_scenario(&sc.to_config_string(), "mem").unwrap();
        assert_eq!(back, sc);
        assert_eq!(back.fingerprint(), sc.fingerprint());
        sc.seed = 43;
        assert_ne!(back.fingerprint(), sc.fingerprint());
        let ma = SimScenario::moving_average(200, Dependence::Full, Innovation::StandardNormal);
        assert_eq!(parse_scenario(&ma.to_config_string(), "mem").unwrap(), ma);
    }

    #[test]
    fn config_defaults_and_errors() {
        let sc = parse_scenario("model = ma\np = 200\n# comment\n", "mem").unwrap();
        assert_eq!(sc.n1 + sc.n2, 106);
        let err = parse_scenario("model = ma\np = abc\n", "cfg").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_scenario("bogus = 1\n", "cfg").is_err());
        assert!(parse_scenario("p 10\n", "cfg").is_err());
        assert!(parse_scenario("model = sparse\nc = 1.5\n", "cfg").is_err());
    }
}

//! Replicated size/power and estimator-quality studies.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::model::{ma_covariance_traces, sparse_generate, MAModel};
use super::scenario::{build_mu2, MeanTarget, ModelKind, SimScenario};
use crate::error::Result;
use crate::format::format_num;
use crate::matrix::SampleMatrix;
use crate::multiplicity::{bh_fdr, bonferroni};
use crate::parallel::with_pool;
use crate::stats::{bai_saranadasa_test, bs_trace_estimate, chen_qin_test, univariate_t_pvalues};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StudyMethod {
    ChenQin,
    BaiSaranadasa,
    Bonferroni,
    Fdr,
}

impl StudyMethod {
    pub const ALL: [StudyMethod; 4] = [
        StudyMethod::ChenQin,
        StudyMethod::BaiSaranadasa,
        StudyMethod::Bonferroni,
        StudyMethod::Fdr,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StudyMethod::ChenQin => "ChenQin",
            StudyMethod::BaiSaranadasa => "BS",
            StudyMethod::Bonferroni => "Bonferroni",
            StudyMethod::Fdr => "FDR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRate {
    pub method: StudyMethod,
    pub rejections: usize,
    /// Replications with a usable statistic; the rate denominator.
    pub valid: usize,
    pub degenerate: usize,
    pub rate: f64,
    /// √(r(1−r)/valid).
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub scenario: SimScenario,
    pub fingerprint: String,
    /// ‖µ₁ − µ₂‖².
    pub delta_norm_sq: f64,
    pub tr_sigma_sq: f64,
    pub rates: Vec<MethodRate>,
}

impl StudyResult {
    pub fn rate(&self, method: StudyMethod) -> &MethodRate {
        self.rates
            .iter()
            .find(|r| r.method == method)
            .expect("every study reports all four methods")
    }

    pub const TSV_HEADER: &'static str = "method\trate\tse\treps\tseed\tfingerprint\tdegenerate";

    /// One line per method, columns as in [`Self::TSV_HEADER`].
    pub fn to_tsv(&self, digits: Option<usize>) -> String {
        let mut s = String::from(Self::TSV_HEADER);
        s.push('\n');
        for r in &self.rates {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.method.label(),
                format_num(r.rate, digits),
                format_num(r.se, digits),
                self.scenario.reps,
                self.scenario.seed,
                self.fingerprint,
                r.degenerate
            );
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioSummary {
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
}

impl RatioSummary {
    fn from_values(v: &[f64]) -> Self {
        let n = v.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                sd: f64::NAN,
                count: 0,
            };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, sd, count: n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRatioStudy {
    pub fingerprint: String,
    pub tr_sigma_sq: f64,
    /// Analytic null variance of `T_n` with Σ₁ = Σ₂.
    pub sigma_n1_sq: f64,
    /// Mean of the two per-sample estimates over tr(Σ²).
    pub cq_tr_ratio: RatioSummary,
    pub bs_tr_ratio: RatioSummary,
    pub sigma_ratio: RatioSummary,
}

/// The RNG of replication `rep`: stream `rep` of the ChaCha8 generator keyed
/// by `seed`. Independent of scheduling.
pub fn replication_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

struct Setup {
    ma: Option<MAModel>,
    mu2: Vec<f64>,
    tr_sigma_sq: f64,
}

impl Setup {
    fn new(sc: &SimScenario) -> Result<Self> {
        sc.validate()?;
        let ma = sc.ma_model()?;
        let (tr_sigma_sq, target) = match (&ma, sc.model) {
            (Some(m), _) => {
                let tr = ma_covariance_traces(m).tr_sigma_sq;
                (
                    tr,
                    MeanTarget::Eta {
                        eta: sc.eta,
                        tr_sigma_sq: tr,
                    },
                )
            }
            (None, ModelKind::Sparse) => (
                sc.p as f64,
                MeanTarget::Sparse {
                    c: sc.c,
                    epsilon: sc.epsilon,
                },
            ),
            (None, ModelKind::MovingAverage { .. }) => unreachable!("MA scenarios always build a model"),
        };
        let pct = if matches!(sc.model, ModelKind::Sparse) && sc.pct_true_null < 100.0 {
            0.0
        } else {
            sc.pct_true_null
        };
        let mu2 = build_mu2(sc.p, pct, sc.allocation, target)?;
        Ok(Self { ma, mu2, tr_sigma_sq })
    }

    fn draw(&self, sc: &SimScenario, rep: usize) -> Result<(SampleMatrix, SampleMatrix)> {
        let mut rng = replication_rng(sc.seed, rep);
        let zero = vec![0.0; sc.p];
        match &self.ma {
            Some(m) => Ok((m.generate(sc.n1, &zero, &mut rng)?, m.generate(sc.n2, &self.mu2, &mut rng)?)),
            None => Ok((
                sparse_generate(sc.p, sc.n1, &zero, &mut rng)?,
                sparse_generate(sc.p, sc.n2, &self.mu2, &mut rng)?,
            )),
        }
    }
}

/// `Some(true)` reject, `Some(false)` accept, `None` degenerate.
type Outcome = [Option<bool>; 4];

fn one_replication(sc: &SimScenario, setup: &Setup, rep: usize) -> Result<Outcome> {
    let (x, y) = setup.draw(sc, rep)?;
    let keep = |r: Result<crate::TestResult>| match r {
        Ok(t) => Ok(Some(t.reject)),
        Err(e) if e.is_degenerate() => Ok(None),
        Err(e) => Err(e),
    };
    let cq = keep(chen_qin_test(&x, &y, sc.alpha))?;
    let bs = keep(bai_saranadasa_test(&x, &y, sc.alpha))?;
    let uni = univariate_t_pvalues(&x, &y)?;
    let bonf = bonferroni(&uni.p_values, sc.alpha)?.n_rejected > 0;
    let fdr = bh_fdr(&uni.p_values, sc.alpha)?.n_rejected > 0;
    Ok([cq, bs, Some(bonf), Some(fdr)])
}

/// Runs all replications of `sc` and aggregates rejection rates for the
/// four methods. `threads = None` uses all cores; the result does not
/// depend on the worker count.
pub fn run_study(sc: &SimScenario, threads: Option<usize>) -> Result<StudyResult> {
    let setup = Setup::new(sc)?;
    let outcomes: Vec<Outcome> = with_pool(threads, || {
        (0..sc.reps)
            .into_par_iter()
            .map(|rep| one_replication(sc, &setup, rep))
            .collect::<Result<Vec<_>>>()
    })??;

    let rates = StudyMethod::ALL
        .iter()
        .enumerate()
        .map(|(m, &method)| {
            let rejections = outcomes.iter().filter(|o| o[m] == Some(true)).count();
            let degenerate = outcomes.iter().filter(|o| o[m].is_none()).count();
            let valid = sc.reps - degenerate;
            let rate = if valid > 0 { rejections as f64 / valid as f64 } else { f64::NAN };
            MethodRate {
                method,
                rejections,
                valid,
                degenerate,
                rate,
                se: (rate * (1.0 - rate) / valid as f64).sqrt(),
            }
        })
        .collect();
    if degenerate_total(&outcomes) > 0 {
        log::warn!("{} degenerate replications", degenerate_total(&outcomes));
    }

    Ok(StudyResult {
        scenario: sc.clone(),
        fingerprint: sc.fingerprint(),
        delta_norm_sq: setup.mu2.iter().map(|m| m * m).sum(),
        tr_sigma_sq: setup.tr_sigma_sq,
        rates,
    })
}

fn degenerate_total(outcomes: &[Outcome]) -> usize {
    outcomes.iter().map(|o| o.iter().filter(|x| x.is_none()).count()).sum()
}

/// Ratios of the trace and variance estimates to their analytic values.
pub fn trace_ratio_study(sc: &SimScenario, threads: Option<usize>) -> Result<TraceRatioStudy> {
    let setup = Setup::new(sc)?;
    let tr = setup.tr_sigma_sq;
    let (a, b) = (sc.n1 as f64, sc.n2 as f64);
    let sigma_sq = 2.0 * tr / (a * (a - 1.0)) + 2.0 * tr / (b * (b - 1.0)) + 4.0 * tr / (a * b);

    let rows: Vec<[f64; 3]> = with_pool(threads, || {
        (0..sc.reps)
            .into_par_iter()
            .map(|rep| {
                let (x, y) = setup.draw(sc, rep)?;
                let est = crate::stats::sigma_n1_sq_hat(&x, &y)?;
                let bs = bs_trace_estimate(&x, &y)?;
                Ok([
                    0.5 * (est.tr_s1_sq + est.tr_s2_sq) / tr,
                    bs / tr,
                    est.sigma_n1_sq / sigma_sq,
                ])
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
    Ok(TraceRatioStudy {
        fingerprint: sc.fingerprint(),
        tr_sigma_sq: tr,
        sigma_n1_sq: sigma_sq,
        cq_tr_ratio: RatioSummary::from_values(&col(0)),
        bs_tr_ratio: RatioSummary::from_values(&col(1)),
        sigma_ratio: RatioSummary::from_values(&col(2)),
    })
}

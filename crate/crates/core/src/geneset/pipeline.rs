use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::io::{ExpressionMatrix, GeneSetCatalog, Labels, ResolvedSet};
use crate::error::{Error, Result};
use crate::format::format_num;
use crate::matrix::SampleMatrix;
use crate::multiplicity::{adjust, Correction};
use crate::parallel::with_pool;
use crate::stats::{chen_qin_test, hotelling_t2, Method, TestResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneSetOptions {
    pub alpha: f64,
    pub correction: Correction,
    /// Sets with at most this many genes use Hotelling's T². `None` means
    /// `⌊(n₁+n₂−2)/2⌋`.
    pub hotelling_max_p: Option<usize>,
    pub threads: Option<usize>,
}

impl Default for GeneSetOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            correction: Correction::BenjaminiHochberg,
            hotelling_max_p: None,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneSetRow {
    pub set: String,
    pub p_g: usize,
    /// `None` for sets left empty after resolution.
    pub method: Option<Method>,
    /// `T_n`, or T² for Hotelling.
    pub statistic: Option<f64>,
    /// σ̂, or the F scale for Hotelling.
    pub sigma_hat: Option<f64>,
    /// `Q_n`, or the F ratio for Hotelling.
    pub q_value: Option<f64>,
    pub p_value: Option<f64>,
    pub adjusted_p: Option<f64>,
    pub reject: bool,
    pub degenerate: bool,
    pub unresolved_count: usize,
    /// Catalog position, for stable ordering.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapStats {
    pub pairs: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneSetReport {
    /// Sorted by adjusted P-value; untested sets last in catalog order.
    pub rows: Vec<GeneSetRow>,
    pub correction: Correction,
    pub alpha: f64,
    pub groups: (String, String),
    pub n1: usize,
    pub n2: usize,
    /// Sets entering the correction.
    pub m_tested: usize,
    pub n_degenerate: usize,
    pub n_empty: usize,
    pub rejected_bonferroni: usize,
    pub rejected_bh: usize,
    /// Pairwise gene overlaps among sets rejected by `correction`.
    pub overlap: OverlapStats,
    pub sidedness: &'static str,
}

pub const RESULTS_HEADER: &str =
    "set\tp_g\tT_n\tsigma_hat\tQ_n\tp_value\tadjusted_p\treject\tdegenerate\tunresolved_count\tmethod";

impl GeneSetReport {
    pub fn to_tsv(&self, digits: Option<usize>) -> String {
        let num = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format_num(x, digits));
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# groups={}|{} n1={} n2={} correction={} alpha={} m={} degenerate={} empty={} p_values={}",
            self.groups.0,
            self.groups.1,
            self.n1,
            self.n2,
            self.correction,
            self.alpha,
            self.m_tested,
            self.n_degenerate,
            self.n_empty,
            self.sidedness
        );
        s.push_str(RESULTS_HEADER);
        s.push('\n');
        for r in &self.rows {
            let method = match r.method {
                Some(Method::Hotelling) => "hotelling",
                Some(_) => "chen_qin",
                None => "none",
            };
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.set,
                r.p_g,
                num(r.statistic),
                num(r.sigma_hat),
                num(r.q_value),
                num(r.p_value),
                num(r.adjusted_p),
                r.reject,
                r.degenerate,
                r.unresolved_count,
                method
            );
        }
        s
    }

    /// Rows in catalog order.
    pub fn catalog_order(&self) -> Vec<&GeneSetRow> {
        let mut v: Vec<&GeneSetRow> = self.rows.iter().collect();
        v.sort_by_key(|r| r.index);
        v
    }
}

fn run_one(x: &SampleMatrix, y: &SampleMatrix, set: &ResolvedSet, hotelling_max: usize, alpha: f64) -> Result<Option<TestResult>> {
    let xs = x.select_columns(&set.genes);
    let ys = y.select_columns(&set.genes);
    let out = if set.genes.len() <= hotelling_max {
        hotelling_t2(&xs, &ys, alpha)
    } else {
        chen_qin_test(&xs, &ys, alpha)
    };
    match out {
        Ok(r) => Ok(Some(r)),
        Err(e) if e.is_degenerate() || matches!(e, Error::Singular(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Tests every catalog set between two sample groups given as column
/// indices of `expr`.
pub fn test_gene_sets_between(
    expr: &ExpressionMatrix,
    group1: &[usize],
    group2: &[usize],
    names: (String, String),
    catalog: &GeneSetCatalog,
    opts: &GeneSetOptions,
) -> Result<GeneSetReport> {
    crate::stats::check_alpha(opts.alpha)?;
    for g in [group1, group2] {
        if g.len() < 4 {
            return Err(Error::SampleTooSmall {
                what: "each gene-set group",
                required: 4,
                actual: g.len(),
            });
        }
    }
    let x = expr.observations(group1);
    let y = expr.observations(group2);
    let (n1, n2) = (group1.len(), group2.len());
    let hotelling_max = opts.hotelling_max_p.unwrap_or((n1 + n2 - 2) / 2);
    let resolved = catalog.resolve(expr);

    let outcomes: Vec<Option<Option<TestResult>>> = with_pool(opts.threads, || {
        resolved
            .par_iter()
            .map(|set| {
                if set.genes.is_empty() {
                    Ok(None)
                } else {
                    run_one(&x, &y, set, hotelling_max, opts.alpha).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut rows: Vec<GeneSetRow> = resolved
        .iter()
        .zip(&outcomes)
        .enumerate()
        .map(|(index, (set, out))| {
            if out.is_none() {
                log::warn!("gene set '{}' has no measured genes; not tested", set.name);
            }
            let r = out.as_ref().and_then(|o| o.as_ref());
            GeneSetRow {
                set: set.name.clone(),
                p_g: set.genes.len(),
                method: r.map(|t| t.method),
                statistic: r.map(|t| t.statistic),
                sigma_hat: r.map(|t| t.standard_error),
                q_value: r.map(|t| t.q_value),
                p_value: r.map(|t| t.p_value),
                adjusted_p: None,
                reject: false,
                degenerate: matches!(out, Some(None)),
                unresolved_count: set.unresolved,
                index,
            }
        })
        .collect();

    let tested: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].p_value.is_some()).collect();
    let pvals: Vec<f64> = tested.iter().map(|&i| rows[i].p_value.unwrap_or(1.0)).collect();
    let (mut rejected_bonferroni, mut rejected_bh) = (0, 0);
    if !pvals.is_empty() {
        let chosen = adjust(&pvals, opts.alpha, opts.correction)?;
        for (k, &i) in tested.iter().enumerate() {
            rows[i].adjusted_p = Some(chosen.adjusted_p[k]);
            rows[i].reject = chosen.reject[k];
        }
        rejected_bonferroni = adjust(&pvals, opts.alpha, Correction::Bonferroni)?.n_rejected;
        rejected_bh = adjust(&pvals, opts.alpha, Correction::BenjaminiHochberg)?.n_rejected;
    }

    let rejected_sets: Vec<&ResolvedSet> = rows.iter().filter(|r| r.reject).map(|r| &resolved[r.index]).collect();
    let overlap = overlap_stats(&rejected_sets);

    rows.sort_by(|a, b| match (a.adjusted_p, b.adjusted_p) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.index.cmp(&b.index)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.index.cmp(&b.index),
    });
    let n_degenerate = rows.iter().filter(|r| r.degenerate).count();
    let n_empty = rows.iter().filter(|r| r.p_g == 0).count();
    Ok(GeneSetReport {
        rows,
        correction: opts.correction,
        alpha: opts.alpha,
        groups: names,
        n1,
        n2,
        m_tested: tested.len(),
        n_degenerate,
        n_empty,
        rejected_bonferroni,
        rejected_bh,
        overlap,
        sidedness: "one-sided (upper)",
    })
}

/// Tests every catalog set between the two labelled groups.
pub fn test_gene_sets(
    expr: &ExpressionMatrix,
    labels: &Labels,
    catalog: &GeneSetCatalog,
    opts: &GeneSetOptions,
) -> Result<GeneSetReport> {
    let (a, b) = labels.two_groups()?;
    let g1 = labels.members(expr, &a)?;
    let g2 = labels.members(expr, &b)?;
    test_gene_sets_between(expr, &g1, &g2, (a, b), catalog, opts)
}

fn overlap_stats(sets: &[&ResolvedSet]) -> OverlapStats {
    let mut counts = Vec::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let c = sets[i].genes.iter().filter(|g| sets[j].genes.contains(g)).count();
            counts.push(c as f64);
        }
    }
    if counts.is_empty() {
        return OverlapStats {
            pairs: 0,
            mean: None,
            sd: None,
        };
    }
    let (mean, sd) = crate::gof::mean_sd(&counts);
    OverlapStats {
        pairs: counts.len(),
        mean: Some(mean),
        sd: if counts.len() > 1 { Some(sd) } else { None },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackTest {
    pub group: String,
    pub seed: u64,
    pub half1: Vec<String>,
    pub half2: Vec<String>,
    pub report: GeneSetReport,
}

/// Splits one group at random into two halves and tests every set between
/// them, which gives data under a true null.
pub fn back_test_split(
    expr: &ExpressionMatrix,
    labels: &Labels,
    group: &str,
    seed: u64,
    catalog: &GeneSetCatalog,
    opts: &GeneSetOptions,
) -> Result<BackTest> {
    let mut members = labels.members(expr, group)?;
    if members.len() < 8 {
        return Err(Error::SampleTooSmall {
            what: "back-test group",
            required: 8,
            actual: members.len(),
        });
    }
    members.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let half = members.len() / 2;
    let (mut h1, mut h2) = (members[..half].to_vec(), members[half..].to_vec());
    h1.sort_unstable();
    h2.sort_unstable();
    let ids = |v: &[usize]| v.iter().map(|&i| expr.sample_ids()[i].clone()).collect::<Vec<_>>();
    let report = test_gene_sets_between(
        expr,
        &h1,
        &h2,
        (format!("{group}/A"), format!("{group}/B")),
        catalog,
        opts,
    )?;
    Ok(BackTest {
        group: group.to_string(),
        seed,
        half1: ids(&h1),
        half2: ids(&h2),
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// Counts on equal-width bins of [0, 1].
    pub p_counts: Vec<usize>,
    pub q_min: f64,
    pub q_max: f64,
    /// Counts on equal-width bins of [q_min, q_max]; Chen–Qin rows only.
    pub q_counts: Vec<usize>,
}

fn bin(v: f64, lo: f64, hi: f64, n: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    (((v - lo) / (hi - lo) * n as f64).floor().max(0.0) as usize).min(n - 1)
}

/// Fixed-width bin counts of the P-values and of `Q_n`.
pub fn histogram_data(rows: &[GeneSetRow], n_bins: usize) -> Result<Histogram> {
    if n_bins < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 bins, got {n_bins}")));
    }
    let ps: Vec<f64> = rows.iter().filter_map(|r| r.p_value).collect();
    if ps.is_empty() {
        return Err(Error::Data("no tested sets to bin".into()));
    }
    let mut p_counts = vec![0; n_bins];
    for p in ps {
        p_counts[bin(p, 0.0, 1.0, n_bins)] += 1;
    }
    let qs: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == Some(Method::ChenQin))
        .filter_map(|r| r.q_value)
        .collect();
    let q_min = qs.iter().copied().fold(f64::INFINITY, f64::min);
    let q_max = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut q_counts = vec![0; n_bins];
    for q in &qs {
        q_counts[bin(*q, q_min, q_max, n_bins)] += 1;
    }
    Ok(Histogram {
        p_counts,
        q_min: if qs.is_empty() { f64::NAN } else { q_min },
        q_max: if qs.is_empty() { f64::NAN } else { q_max },
        q_counts,
    })
}

impl Histogram {
    /// Columns: kind (`p_value` or `Q_n`), bin_lo, bin_hi, count.
    pub fn to_tsv(&self, digits: Option<usize>) -> String {
        let mut s = String::from("kind\tbin_lo\tbin_hi\tcount\n");
        let n = self.p_counts.len();
        for (i, c) in self.p_counts.iter().enumerate() {
            let _ = writeln!(
                s,
                "p_value\t{}\t{}\t{c}",
                format_num(i as f64 / n as f64, digits),
                format_num((i + 1) as f64 / n as f64, digits)
            );
        }
        if self.q_min.is_finite() {
            let w = (self.q_max - self.q_min) / n as f64;
            for (i, c) in self.q_counts.iter().enumerate() {
                let lo = self.q_min + w * i as f64;
                let hi = if i + 1 == n { self.q_max } else { self.q_min + w * (i + 1) as f64 };
                let _ = writeln!(s, "Q_n\t{}\t{}\t{c}", format_num(lo, digits), format_num(hi, digits));
            }
        }
        s
    }
}

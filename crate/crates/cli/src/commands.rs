use std::io::Write;
use std::path::Path;

use hdtest::format::format_num;
use hdtest::geneset::{self, GeneSetOptions, GeneSetReport};
use hdtest::input::{load_sample_matrix, load_square, load_vector};
use hdtest::multiplicity::Correction;
use hdtest::power::{self, Covariance, PowerInput};
use hdtest::simulation::{self, Allocation, Dependence, Innovation, MAModel, MeanTarget, SimScenario};
use hdtest::stats::{bai_saranadasa_test, chen_qin_test_sided, hotelling_t2, paired_test};
use hdtest::{Method, Sidedness, TestResult};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{
    AllocationArg, Cli, CliError, Command, CorrectionArg, GeneSetArgs, Global, InnovationArg, ModelArg, TestMethod,
};

type Res<T> = Result<T, CliError>;

pub fn run(cli: &Cli) -> Res<()> {
    let g = &cli.global;
    let text = match &cli.command {
        Command::TwoSample {
            x,
            y,
            alpha,
            method,
            two_sided,
            transpose,
        } => two_sample(g, x, y, *alpha, *method, *two_sided, *transpose)?,
        Command::Paired {
            diffs,
            x,
            y,
            alpha,
            transpose,
        } => {
            let d = match (diffs, x, y) {
                (Some(d), _, _) => load_sample_matrix(d, *transpose)?,
                (None, Some(x), Some(y)) => {
                    load_sample_matrix(x, *transpose)?.difference(&load_sample_matrix(y, *transpose)?)?
                }
                _ => return Err(CliError::Usage("give --diffs or both --x and --y".into())),
            };
            let r = paired_test(&d, *alpha)?;
            render_test(g, &r, d.n(), None, d.p())
        }
        Command::Geneset(a) => {
            let (expr, labels, cat) = load_inputs(a)?;
            let rep = geneset::test_gene_sets(&expr, &labels, &cat, &options(a, g))?;
            render_report(g, a, &rep, None)?
        }
        Command::Backtest { sets, group, seed } => {
            let (expr, labels, cat) = load_inputs(sets)?;
            let bt = geneset::back_test_split(&expr, &labels, group, *seed, &cat, &options(sets, g))?;
            let extra = json!({ "group": bt.group, "seed": bt.seed, "half1": bt.half1, "half2": bt.half2 });
            render_report(g, sets, &bt.report, Some(extra))?
        }
        Command::Simulate {
            config,
            grid,
            p,
            innovation,
            reps,
            seed,
            trace_ratios,
        } => simulate(g, config.as_deref(), *grid, *p, *innovation, *reps, *seed, *trace_ratios)?,
        Command::Power {
            n1,
            n2,
            delta_norm_sq,
            tr_sigma_sq,
            alpha,
            k,
        } => {
            let mut inp = PowerInput::new(*n1, *n2, *delta_norm_sq, *tr_sigma_sq, *alpha)?;
            if let Some(k) = k {
                inp = inp.with_k(*k)?;
            }
            render_power(g, &inp)?
        }
        Command::Diagnose {
            model,
            innovation,
            p,
            sigma1,
            sigma2,
            mu_diff,
            eta,
            pct_true_null,
            allocation,
            n1,
            n2,
            alpha,
        } => {
            let (s1, s2) = match (model, sigma1) {
                (Some(m), _) => {
                    let p = p.ok_or_else(|| CliError::Usage("--model needs --p".into()))?;
                    let c = banded(*m, p, *innovation)?;
                    (c.clone(), c)
                }
                (None, Some(path)) => {
                    let a = dense(path)?;
                    let b = match sigma2 {
                        Some(q) => dense(q)?,
                        None => a.clone(),
                    };
                    (a, b)
                }
                (None, None) => return Err(CliError::Usage("give --model or --sigma1".into())),
            };
            let mu = match (mu_diff, eta) {
                (Some(path), _) => load_vector(path)?,
                (None, Some(eta)) => {
                    let target = MeanTarget::Eta {
                        eta: *eta,
                        tr_sigma_sq: s1.tr_sq(),
                    };
                    simulation::build_mu2(s1.p(), *pct_true_null, allocation_of(*allocation), target)?
                }
                (None, None) => return Err(CliError::Usage("give --mu-diff or --eta".into())),
            };
            diagnose(g, &s1, &s2, &mu, *n1, *n2, *alpha)?
        }
    };
    emit(g, &text)
}

fn emit(g: &Global, text: &str) -> Res<()> {
    match &g.output {
        Some(path) => write_file(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Internal(format!("cannot write output: {e}")))
        }
    }
}

fn write_file(path: &Path, text: &str) -> Res<()> {
    std::fs::write(path, text).map_err(|e| CliError::Lib(hdtest::Error::Io(e)))
}

fn pretty(v: &impl Serialize) -> Res<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Internal(format!("cannot encode JSON: {e}")))
}

fn tsv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join("\t");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join("\t"));
        s.push('\n');
    }
    s
}

/// Column names for statistic, scale and standardized value.
fn names(method: Method) -> [&'static str; 3] {
    match method {
        Method::ChenQin => ["T_n", "sigma_hat", "Q_n"],
        Method::BaiSaranadasa => ["M_n", "sigma_hat", "Z"],
        Method::Hotelling => ["T2", "f_scale", "F"],
        Method::PairedChenQin => ["F_n", "sigma_hat", "Q_n"],
    }
}

fn method_label(method: Method) -> &'static str {
    match method {
        Method::ChenQin => "chen_qin",
        Method::BaiSaranadasa => "bai_saranadasa",
        Method::Hotelling => "hotelling",
        Method::PairedChenQin => "paired_chen_qin",
    }
}

fn two_sample(
    g: &Global,
    x: &Path,
    y: &Path,
    alpha: f64,
    method: TestMethod,
    two_sided: bool,
    transpose: bool,
) -> Res<String> {
    if two_sided && method != TestMethod::ChenQin {
        return Err(CliError::Usage("--two-sided applies to --method chen-qin only".into()));
    }
    let xs = load_sample_matrix(x, transpose)?;
    let ys = load_sample_matrix(y, transpose)?;
    let r = match method {
        TestMethod::ChenQin => {
            let side = if two_sided { Sidedness::TwoSided } else { Sidedness::Upper };
            chen_qin_test_sided(&xs, &ys, alpha, side)?
        }
        TestMethod::Bs => bai_saranadasa_test(&xs, &ys, alpha)?,
        TestMethod::Hotelling => hotelling_t2(&xs, &ys, alpha)?,
    };
    Ok(render_test(g, &r, xs.n(), Some(ys.n()), xs.p()))
}

fn render_test(g: &Global, r: &TestResult, n1: usize, n2: Option<usize>, p: usize) -> String {
    let [stat, scale, q] = names(r.method);
    let side = match r.sidedness {
        Sidedness::Upper => "upper",
        Sidedness::TwoSided => "two-sided",
    };
    if g.json {
        let mut v = json!({ "method": method_label(r.method) });
        v[stat] = json!(r.statistic);
        v[scale] = json!(r.standard_error);
        v[q] = json!(r.q_value);
        v["p_value"] = json!(r.p_value);
        v["reject"] = json!(r.reject);
        v["alpha"] = json!(r.alpha);
        v["sidedness"] = json!(side);
        v["n1"] = json!(n1);
        v["p"] = json!(p);
        if let Some(n2) = n2 {
            v["n2"] = json!(n2);
        }
        if let Some(d) = &r.diagnostics {
            v["diagnostics"] = json!({
                "tr_s1_sq": finite_or_null(d.tr_s1_sq),
                "tr_s2_sq": finite_or_null(d.tr_s2_sq),
                "tr_s1s2": finite_or_null(d.tr_s1s2),
                "sigma_n1_sq": d.sigma_n1_sq,
            });
        }
        return serde_json::to_string_pretty(&v).unwrap_or_default() + "\n";
    }
    let d = g.digits();
    let f = |x: f64| if x.is_nan() { "NA".to_string() } else { format_num(x, d) };
    let mut header = vec!["method", stat, scale, q, "p_value", "reject", "alpha", "sidedness", "n1", "n2", "p"];
    let mut row = vec![
        method_label(r.method).to_string(),
        f(r.statistic),
        f(r.standard_error),
        f(r.q_value),
        f(r.p_value),
        r.reject.to_string(),
        f(r.alpha),
        side.to_string(),
        n1.to_string(),
        n2.map_or_else(|| "NA".to_string(), |n| n.to_string()),
        p.to_string(),
    ];
    if let Some(t) = &r.diagnostics {
        header.extend(["tr_s1_sq", "tr_s2_sq", "tr_s1s2", "sigma_n1_sq"]);
        row.extend([f(t.tr_s1_sq), f(t.tr_s2_sq), f(t.tr_s1s2), f(t.sigma_n1_sq)]);
    }
    tsv(&header, &[row])
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn load_inputs(a: &GeneSetArgs) -> Res<(geneset::ExpressionMatrix, geneset::Labels, geneset::GeneSetCatalog)> {
    Ok((
        geneset::load_expression(&a.expr)?,
        geneset::load_labels(&a.labels)?,
        geneset::load_gmt(&a.gmt)?,
    ))
}

fn options(a: &GeneSetArgs, g: &Global) -> GeneSetOptions {
    GeneSetOptions {
        alpha: a.alpha,
        correction: match a.correction {
            CorrectionArg::Bh => Correction::BenjaminiHochberg,
            CorrectionArg::Bonferroni => Correction::Bonferroni,
        },
        hotelling_max_p: a.hotelling_max_p,
        threads: g.threads,
    }
}

fn summary_json(rep: &GeneSetReport, extra: Option<Value>) -> Value {
    let mut v = json!({
        "groups": [rep.groups.0, rep.groups.1],
        "n1": rep.n1,
        "n2": rep.n2,
        "alpha": rep.alpha,
        "correction": rep.correction.to_string(),
        "m_tested": rep.m_tested,
        "degenerate": rep.n_degenerate,
        "empty": rep.n_empty,
        "significant": { "bonferroni": rep.rejected_bonferroni, "bh": rep.rejected_bh },
        "overlap": rep.overlap,
        "p_values": rep.sidedness,
    });
    if let (Some(Value::Object(extra)), Value::Object(map)) = (extra, &mut v) {
        map.extend(extra);
    }
    v
}

fn render_report(g: &Global, a: &GeneSetArgs, rep: &GeneSetReport, extra: Option<Value>) -> Res<String> {
    let summary = summary_json(rep, extra);
    if let Some(path) = &a.hist {
        let h = geneset::histogram_data(&rep.rows, a.bins)?;
        write_file(path, &h.to_tsv(g.digits()))?;
    }
    if let Some(path) = &a.summary {
        write_file(path, &pretty(&summary)?)?;
    }
    if g.json {
        let mut v = summary;
        v["rows"] = serde_json::to_value(&rep.rows).map_err(|e| CliError::Internal(e.to_string()))?;
        pretty(&v)
    } else {
        Ok(rep.to_tsv(g.digits()))
    }
}

fn innovation_of(i: InnovationArg) -> Innovation {
    match i {
        InnovationArg::Normal => Innovation::StandardNormal,
        InnovationArg::Gamma => Innovation::CenteredGamma4,
    }
}

fn allocation_of(a: AllocationArg) -> Allocation {
    match a {
        AllocationArg::Equal => Allocation::Equal,
        AllocationArg::Increasing => Allocation::Increasing,
        AllocationArg::Decreasing => Allocation::Decreasing,
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    g: &Global,
    config: Option<&Path>,
    grid: Option<ModelArg>,
    p: usize,
    innovation: InnovationArg,
    reps: Option<usize>,
    seed: Option<u64>,
    trace_ratios: bool,
) -> Res<String> {
    if let Some(model) = grid {
        let dependence = match model {
            ModelArg::Two => Dependence::Two,
            ModelArg::Full => Dependence::Full,
            ModelArg::Identity => return Err(CliError::Usage("--grid takes two or full".into())),
        };
        let cells = simulation::ma_grid(p, dependence, innovation_of(innovation), reps.unwrap_or(5000), seed.unwrap_or(1));
        let results = cells
            .iter()
            .map(|sc| simulation::run_study(sc, g.threads))
            .collect::<Result<Vec<_>, _>>()?;
        if g.json {
            return pretty(&results);
        }
        let mut s = format!("allocation\tpct_true_null\t{}\n", simulation::StudyResult::TSV_HEADER);
        for r in &results {
            let prefix = format!("{:?}\t{}\t", r.scenario.allocation, r.scenario.pct_true_null).to_lowercase();
            for line in r.to_tsv(g.digits()).lines().skip(1) {
                s.push_str(&prefix);
                s.push_str(line);
                s.push('\n');
            }
        }
        return Ok(s);
    }
    let path = config.ok_or_else(|| CliError::Usage("give --config or --grid".into()))?;
    let mut sc: SimScenario = simulation::load_scenario(path)?;
    if let Some(r) = reps {
        sc.reps = r;
    }
    if let Some(s) = seed {
        sc.seed = s;
    }
    sc.validate()?;
    if trace_ratios {
        let t = simulation::trace_ratio_study(&sc, g.threads)?;
        if g.json {
            return pretty(&t);
        }
        let d = g.digits();
        let row = |name: &str, s: &simulation::RatioSummary, truth: f64| {
            vec![
                name.to_string(),
                format_num(s.mean, d),
                format_num(s.sd, d),
                s.count.to_string(),
                format_num(truth, d),
                sc.seed.to_string(),
                t.fingerprint.clone(),
            ]
        };
        return Ok(tsv(
            &["quantity", "mean", "sd", "reps", "truth", "seed", "fingerprint"],
            &[
                row("cq_tr_sigma_sq_ratio", &t.cq_tr_ratio, t.tr_sigma_sq),
                row("bs_tr_sigma_sq_ratio", &t.bs_tr_ratio, t.tr_sigma_sq),
                row("sigma_n1_sq_ratio", &t.sigma_ratio, t.sigma_n1_sq),
            ],
        ));
    }
    let r = simulation::run_study(&sc, g.threads)?;
    if g.json {
        pretty(&r)
    } else {
        Ok(r.to_tsv(g.digits()))
    }
}

fn render_power(g: &Global, inp: &PowerInput) -> Res<String> {
    let local = power::power_local(inp)?;
    let fixed = power::power_fixed(inp)?;
    if g.json {
        return pretty(&json!({
            "input": inp,
            "signal": inp.signal(),
            "power_local": local,
            "power_fixed": fixed,
        }));
    }
    let d = g.digits();
    Ok(tsv(
        &["n1", "n2", "k", "delta_norm_sq", "tr_sigma_tilde_sq", "alpha", "signal", "power_local", "power_fixed"],
        &[vec![
            inp.n1.to_string(),
            inp.n2.to_string(),
            format_num(inp.k, d),
            format_num(inp.delta_norm_sq, d),
            format_num(inp.tr_sigma_tilde_sq, d),
            format_num(inp.alpha, d),
            format_num(inp.signal(), d),
            format_num(local, d),
            format_num(fixed, d),
        ]],
    ))
}

fn banded(model: ModelArg, p: usize, innovation: InnovationArg) -> Res<Covariance> {
    let inn = innovation_of(innovation);
    let cov = match model {
        ModelArg::Identity => simulation::BandedToeplitz::identity(p),
        ModelArg::Two => MAModel::two_dependence(p, inn)?.covariance(),
        ModelArg::Full => MAModel::full_dependence(p, inn)?.covariance(),
    };
    Ok(Covariance::Banded(cov))
}

fn dense(path: &Path) -> Res<Covariance> {
    let (data, p) = load_square(path)?;
    Ok(Covariance::from_row_major(&data, p)?)
}

fn diagnose(
    g: &Global,
    s1: &Covariance,
    s2: &Covariance,
    mu: &[f64],
    n1: usize,
    n2: usize,
    alpha: f64,
) -> Res<String> {
    let rep = power::condition_diagnostics(s1, s2, mu, n1 + n2)?;
    let inp = PowerInput::from_model(n1, n2, s1, s2, mu, alpha)?;
    let local = power::power_local(&inp)?;
    let fixed = power::power_fixed(&inp)?;
    if g.json {
        return pretty(&json!({
            "r1": rep.r1,
            "r2": rep.r2,
            "regime": rep.regime,
            "summary": rep.summary(),
            "tr_sum_sq": rep.tr_sum_sq,
            "delta_norm_sq": inp.delta_norm_sq,
            "tr_sigma_tilde_sq": inp.tr_sigma_tilde_sq,
            "power_local": local,
            "power_fixed": fixed,
        }));
    }
    let d = g.digits();
    Ok(tsv(
        &[
            "r1_sample1",
            "r1_sample2",
            "r2_sample1",
            "r2_sample2",
            "regime",
            "delta_norm_sq",
            "tr_sigma_tilde_sq",
            "power_local",
            "power_fixed",
        ],
        &[vec![
            format_num(rep.r1[0], d),
            format_num(rep.r1[1], d),
            format_num(rep.r2[0], d),
            format_num(rep.r2[1], d),
            format!("{:?}", rep.regime).to_lowercase(),
            format_num(inp.delta_norm_sq, d),
            format_num(inp.tr_sigma_tilde_sq, d),
            format_num(local, d),
            format_num(fixed, d),
        ]],
    ))
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hdtest::{chen_qin_test, SampleMatrix};
use serde_json::Value;

fn hdtest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdtest"))
        .args(args)
        .env_remove("HDTEST_THREADS")
        .output()
        .expect("spawn hdtest")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Deterministic pseudo-random table, rows x cols, with an offset.
fn table(rows: usize, cols: usize, seed: u64, offset: f64) -> (String, Vec<Vec<f64>>) {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let data: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| next() + offset).collect()).collect();
    let header: Vec<String> = (0..cols).map(|j| format!("v{j}")).collect();
    let mut text = header.join(",") + "\n";
    for r in &data {
        let cells: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    (text, data)
}

#[test]
fn two_sample_json_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let (tx, dx) = table(9, 15, 1, 0.0);
    let (ty, dy) = table(11, 15, 2, 0.1);
    let x = write(dir.path(), "x.csv", &tx);
    let y = write(dir.path(), "y.csv", &ty);
    let o = hdtest(&["two-sample", "--x", s(&x), "--y", s(&y), "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let lib = chen_qin_test(
        &SampleMatrix::from_rows(&dx).unwrap(),
        &SampleMatrix::from_rows(&dy).unwrap(),
        0.05,
    )
    .unwrap();
    assert_eq!(v["T_n"].as_f64().unwrap(), lib.statistic);
    assert_eq!(v["sigma_hat"].as_f64().unwrap(), lib.standard_error);
    assert_eq!(v["Q_n"].as_f64().unwrap(), lib.q_value);
    assert_eq!(v["p_value"].as_f64().unwrap(), lib.p_value);
    assert_eq!(v["n1"], 9);
    assert_eq!(v["n2"], 11);
    assert_eq!(v["p"], 15);
    assert_eq!(v["sidedness"], "upper");
}

#[test]
fn two_sample_tsv_has_header_and_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.csv", &table(8, 6, 3, 0.0).0);
    let y = write(dir.path(), "y.csv", &table(8, 6, 4, 0.0).0);
    for (method, stat) in [("chen-qin", "T_n"), ("bs", "M_n"), ("hotelling", "T2")] {
        let o = hdtest(&["two-sample", "--x", s(&x), "--y", s(&y), "--method", method]);
        assert!(o.status.success(), "{method}");
        let out = stdout(&o);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 2, "{method}: {out}");
        let header: Vec<&str> = lines[0].split('\t').collect();
        assert_eq!(header[1], stat);
        assert_eq!(header.len(), lines[1].split('\t').count());
    }
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.csv", &table(8, 6, 5, 0.0).0);
    let y = write(dir.path(), "y.csv", &table(8, 6, 6, 0.0).0);
    let out = dir.path().join("res.tsv");
    let o = hdtest(&["two-sample", "--x", s(&x), "--y", s(&y), "-o", s(&out)]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("method\tT_n"));
}

#[test]
fn transposed_input_gives_same_result() {
    let dir = tempfile::tempdir().unwrap();
    let (_, dx) = table(7, 5, 7, 0.0);
    let (_, dy) = table(6, 5, 8, 0.3);
    let as_rows = |d: &[Vec<f64>]| {
        d.iter()
            .map(|r| r.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let transpose = |d: &[Vec<f64>]| (0..d[0].len()).map(|j| d.iter().map(|r| r[j]).collect()).collect::<Vec<Vec<f64>>>();
    let x = write(dir.path(), "x.csv", &as_rows(&dx));
    let y = write(dir.path(), "y.csv", &as_rows(&dy));
    let xt = write(dir.path(), "xt.csv", &as_rows(&transpose(&dx)));
    let yt = write(dir.path(), "yt.csv", &as_rows(&transpose(&dy)));
    let a = hdtest(&["two-sample", "--x", s(&x), "--y", s(&y), "--full-precision"]);
    let b = hdtest(&["two-sample", "--x", s(&xt), "--y", s(&yt), "--transpose", "--full-precision"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn paired_from_pairs_equals_paired_from_differences() {
    let dir = tempfile::tempdir().unwrap();
    let (tx, dx) = table(10, 8, 9, 0.0);
    let (ty, dy) = table(10, 8, 10, 0.0);
    let d: Vec<String> = dx
        .iter()
        .zip(&dy)
        .map(|(a, b)| a.iter().zip(b).map(|(u, v)| format!("{}", u - v)).collect::<Vec<_>>().join(","))
        .collect();
    let x = write(dir.path(), "x.csv", &tx);
    let y = write(dir.path(), "y.csv", &ty);
    let dpath = write(dir.path(), "d.csv", &d.join("\n"));
    let a = hdtest(&["paired", "--x", s(&x), "--y", s(&y), "--json"]);
    let b = hdtest(&["paired", "--diffs", s(&dpath), "--json"]);
    assert!(a.status.success() && b.status.success());
    let va: Value = serde_json::from_str(&stdout(&a)).unwrap();
    let vb: Value = serde_json::from_str(&stdout(&b)).unwrap();
    assert_eq!(va["F_n"], vb["F_n"]);
    assert_eq!(va["Q_n"], vb["Q_n"]);
}

#[test]
fn unknown_flag_is_usage_error() {
    let o = hdtest(&["two-sample", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.to_lowercase().contains("usage"), "{err}");
}

#[test]
fn help_exits_zero() {
    let o = hdtest(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("two-sample"));
}

#[test]
fn bad_alpha_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.csv", &table(8, 6, 11, 0.0).0);
    let o = hdtest(&["two-sample", "--x", s(&x), "--y", s(&x), "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn parse_error_names_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.csv", "a,b\n1,2\n3,oops\n5,6\n7,8\n");
    let y = write(dir.path(), "y.csv", &table(5, 2, 12, 0.0).0);
    let o = hdtest(&["two-sample", "--x", s(&x), "--y", s(&y)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("column 2"), "{err}");
}

#[test]
fn missing_file_is_data_error() {
    let o = hdtest(&["two-sample", "--x", "/nonexistent/x.csv", "--y", "/nonexistent/y.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/x.csv"));
}

#[test]
fn constant_data_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let c = "1,2,3\n".repeat(6);
    let x = write(dir.path(), "x.csv", &c);
    let y = write(dir.path(), "y.csv", &c);
    let o = hdtest(&["two-sample", "--x", s(&x), "--y", s(&y)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn power_matches_worked_example() {
    let o = hdtest(&[
        "power", "--n1", "50", "--n2", "50", "--delta-norm-sq", "10", "--tr-sigma-sq", "1000", "--json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let local = v["power_local"].as_f64().unwrap();
    let fixed = v["power_fixed"].as_f64().unwrap();
    assert!(local > 0.05 && local < 1.0);
    assert!(fixed > 0.05 && fixed <= 1.0);
    let lib = hdtest::power::power_local(&hdtest::power::PowerInput::new(50, 50, 10.0, 1000.0, 0.05).unwrap()).unwrap();
    assert_eq!(local, lib);
}

#[test]
fn diagnose_reports_regime() {
    let o = hdtest(&[
        "diagnose", "--model", "two", "--p", "200", "--eta", "0.1", "--n1", "30", "--n2", "30", "--json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.to_string().contains("regime"), "{v}");
}

fn sim_config(dir: &Path) -> PathBuf {
    write(
        dir,
        "s.cfg",
        "# sparse design\nmodel = sparse\np = 200\nn = 20\nc = 0.45\nepsilon = 0.25\nreps = 40\nseed = 7\n",
    )
}

#[test]
fn simulate_is_reproducible_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sim_config(dir.path());
    let a = hdtest(&["simulate", "--config", s(&cfg), "--threads", "1"]);
    let b = hdtest(&["simulate", "--config", s(&cfg), "--threads", "4"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "method\trate\tse\treps\tseed\tfingerprint\tdegenerate");
    let methods: Vec<&str> = lines.map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(methods, ["ChenQin", "BS", "Bonferroni", "FDR"]);
}

#[test]
fn simulate_seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sim_config(dir.path());
    let a = hdtest(&["simulate", "--config", s(&cfg), "--seed", "1"]);
    let b = hdtest(&["simulate", "--config", s(&cfg), "--seed", "2"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn simulate_rejects_unknown_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "model = sparse\np = 50\nn = 10\nwhatever = 3\n");
    let o = hdtest(&["simulate", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("whatever"));
}

/// Expression file with `genes` rows and two groups of `per` samples; genes
/// g0..g4 are shifted in group B.
fn geneset_inputs(dir: &Path, genes: usize, per: usize) -> (PathBuf, PathBuf, PathBuf) {
    let (_, a) = table(per, genes, 21, 0.0);
    let (_, b) = table(per, genes, 22, 0.0);
    let mut expr = String::from("gene");
    for i in 0..per {
        expr.push_str(&format!(",A{i}"));
    }
    for i in 0..per {
        expr.push_str(&format!(",B{i}"));
    }
    expr.push('\n');
    for g in 0..genes {
        expr.push_str(&format!("g{g}"));
        for row in &a {
            expr.push_str(&format!(",{}", row[g]));
        }
        for row in &b {
            let shift = if g < 5 { 2.0 } else { 0.0 };
            expr.push_str(&format!(",{}", row[g] + shift));
        }
        expr.push('\n');
    }
    let mut labels = String::from("sample_id,group\n");
    for i in 0..per {
        labels.push_str(&format!("A{i},A\n"));
    }
    for i in 0..per {
        labels.push_str(&format!("B{i},B\n"));
    }
    let mut gmt = String::new();
    gmt.push_str("shifted\tdesc\tg0\tg1\tg2\tg3\tg4\tg5\tg6\tg7\tg8\tg9\tg10\tg11\n");
    for k in 1..6 {
        let members: Vec<String> = (0..12).map(|j| format!("g{}", 12 * k + j)).collect();
        gmt.push_str(&format!("null{k}\tdesc\t{}\n", members.join("\t")));
    }
    gmt.push_str("empty\tdesc\tnot_a_gene\n");
    (
        write(dir, "expr.csv", &expr),
        write(dir, "labels.csv", &labels),
        write(dir, "sets.gmt", &gmt),
    )
}

#[test]
fn geneset_writes_results_summary_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let (expr, labels, gmt) = geneset_inputs(dir.path(), 80, 10);
    let summary = dir.path().join("summary.json");
    let hist = dir.path().join("hist.tsv");
    let o = hdtest(&[
        "geneset", "--expr", s(&expr), "--labels", s(&labels), "--gmt", s(&gmt),
        "--summary", s(&summary), "--hist", s(&hist), "--bins", "10",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let body: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(body[0].starts_with("set\tp_g\tT_n"));
    assert_eq!(body.len(), 1 + 7);
    assert!(body[1].starts_with("shifted\t"), "{out}");
    assert!(body.last().unwrap().starts_with("empty\t0\t"));

    let v: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(v["m_tested"], 6);
    assert_eq!(v["empty"], 1);
    assert!(v["significant"]["bh"].as_u64().unwrap() >= 1);

    let h = std::fs::read_to_string(&hist).unwrap();
    assert!(h.starts_with("kind\tbin_lo\tbin_hi\tcount"));
    let p_total: u64 = h
        .lines()
        .filter(|l| l.starts_with("p_value\t"))
        .map(|l| l.rsplit('\t').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(p_total, 6);
}

#[test]
fn backtest_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (expr, labels, gmt) = geneset_inputs(dir.path(), 80, 10);
    let run = |seed: &str| {
        hdtest(&[
            "backtest", "--expr", s(&expr), "--labels", s(&labels), "--gmt", s(&gmt),
            "--group", "A", "--seed", seed, "--json",
        ])
    };
    let a = run("5");
    let b = run("5");
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["half1"].as_array().unwrap().len(), 5);
    assert_eq!(v["half2"].as_array().unwrap().len(), 5);
    assert_eq!(v["groups"][0], "A/A");
}

#[test]
fn geneset_label_mismatch_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let (expr, _, gmt) = geneset_inputs(dir.path(), 30, 5);
    let labels = write(dir.path(), "bad_labels.csv", "sample_id,group\nA0,A\nZZ,B\n");
    let o = hdtest(&["geneset", "--expr", s(&expr), "--labels", s(&labels), "--gmt", s(&gmt)]);
    assert_eq!(o.status.code(), Some(2));
}

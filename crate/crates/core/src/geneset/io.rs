//! Readers for expression matrices, group labels and GMT catalogs.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;

/// Genes × samples expression values, the on-disk orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    gene_ids: Vec<String>,
    sample_ids: Vec<String>,
    /// Row-major, one row per gene.
    values: Vec<f64>,
    gene_index: HashMap<String, usize>,
}

impl ExpressionMatrix {
    pub fn new(gene_ids: Vec<String>, sample_ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != gene_ids.len() * sample_ids.len() {
            return Err(Error::Data(format!(
                "{} values for {} genes x {} samples",
                values.len(),
                gene_ids.len(),
                sample_ids.len()
            )));
        }
        if let Some(d) = first_duplicate(&sample_ids) {
            return Err(Error::Data(format!("duplicate sample id '{d}'")));
        }
        if let Some(d) = first_duplicate(&gene_ids) {
            return Err(Error::Data(format!("duplicate gene id '{d}'")));
        }
        let s = sample_ids.len();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value for gene '{}', sample '{}'",
                gene_ids[i / s],
                sample_ids[i % s]
            )));
        }
        let gene_index = gene_ids.iter().enumerate().map(|(i, g)| (g.clone(), i)).collect();
        Ok(Self {
            gene_ids,
            sample_ids,
            values,
            gene_index,
        })
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn n_genes(&self) -> usize {
        self.gene_ids.len()
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn value(&self, gene: usize, sample: usize) -> f64 {
        self.values[gene * self.sample_ids.len() + sample]
    }

    pub fn gene_position(&self, id: &str) -> Option<usize> {
        self.gene_index.get(id).copied()
    }

    pub fn sample_position(&self, id: &str) -> Option<usize> {
        self.sample_ids.iter().position(|s| s == id)
    }

    /// The chosen samples as observations × genes.
    pub fn observations(&self, samples: &[usize]) -> SampleMatrix {
        let g = self.n_genes();
        let mut data = Vec::with_capacity(samples.len() * g);
        for &s in samples {
            data.extend((0..g).map(|gene| self.value(gene, s)));
        }
        SampleMatrix::from_raw(data, samples.len(), g)
    }

    /// Delimited text with a `gene` header cell, as read by [`load_expression`].
    pub fn to_delimited(&self, delim: char) -> String {
        let mut out = String::from("gene");
        for s in &self.sample_ids {
            out.push(delim);
            out.push_str(s);
        }
        out.push('\n');
        for (gi, g) in self.gene_ids.iter().enumerate() {
            out.push_str(g);
            for si in 0..self.n_samples() {
                out.push(delim);
                out.push_str(&format!("{}", self.value(gi, si)));
            }
            out.push('\n');
        }
        out
    }
}

fn first_duplicate(ids: &[String]) -> Option<&str> {
    let mut seen = HashSet::new();
    ids.iter().find(|id| !seen.insert(id.as_str())).map(String::as_str)
}

/// Tab if the name ends in `.tsv`/`.txt` or the first line has a tab,
/// otherwise comma.
fn sniff_delimiter(path: &Path, text: &str) -> u8 {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    if ext == "tsv" || ext == "txt" || text.lines().next().is_some_and(|l| l.contains('\t')) {
        b'\t'
    } else {
        b','
    }
}

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

fn csv_err(path: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    parse_err(path, line, e.to_string())
}

/// Reads an expression matrix from CSV or TSV text: a header row of sample
/// ids after one leading cell, then one row per gene starting with its id.
pub fn parse_expression(text: &str, origin: &str, delimiter: u8) -> Result<ExpressionMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_err(origin, e))?,
        None => return Err(parse_err(origin, 1, "empty expression file")),
    };
    let sample_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if sample_ids.is_empty() {
        return Err(parse_err(origin, 1, "header has no sample columns"));
    }
    let mut gene_ids = Vec::new();
    let mut values = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_err(origin, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != sample_ids.len() + 1 {
            return Err(parse_err(
                origin,
                line,
                format!("expected {} fields, found {}", sample_ids.len() + 1, rec.len()),
            ));
        }
        let gene = rec[0].to_string();
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(
                    origin,
                    line,
                    format!("gene '{gene}', sample '{}' (column {}): cannot parse '{cell}' as a number", sample_ids[j], j + 2),
                )
            })?;
            if !v.is_finite() {
                return Err(parse_err(
                    origin,
                    line,
                    format!("gene '{gene}', sample '{}' (column {}): non-finite value '{cell}'", sample_ids[j], j + 2),
                ));
            }
            values.push(v);
        }
        gene_ids.push(gene);
    }
    if gene_ids.is_empty() {
        return Err(parse_err(origin, 2, "no gene rows"));
    }
    ExpressionMatrix::new(gene_ids, sample_ids, values)
}

pub fn load_expression(path: &Path) -> Result<ExpressionMatrix> {
    let text = crate::error::read_text(path)?;
    parse_expression(&text, &path.display().to_string(), sniff_delimiter(path, &text))
}

/// Sample → group label, in file order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Labels {
    pub entries: Vec<(String, String)>,
}

impl Labels {
    /// Distinct labels in order of first appearance.
    pub fn groups(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for (_, g) in &self.entries {
            if !out.contains(&g.as_str()) {
                out.push(g);
            }
        }
        out
    }

    pub fn label_of(&self, sample: &str) -> Option<&str> {
        self.entries.iter().find(|(s, _)| s == sample).map(|(_, g)| g.as_str())
    }

    /// Column indices in `expr` of the samples carrying `group`.
    pub fn members(&self, expr: &ExpressionMatrix, group: &str) -> Result<Vec<usize>> {
        self.check_against(expr)?;
        let idx: Vec<usize> = expr
            .sample_ids()
            .iter()
            .enumerate()
            .filter(|(_, s)| self.label_of(s) == Some(group))
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            return Err(Error::Data(format!("no samples carry label '{group}'")));
        }
        Ok(idx)
    }

    /// Every labelled sample must exist and every sample must be labelled.
    pub fn check_against(&self, expr: &ExpressionMatrix) -> Result<()> {
        if let Some((s, _)) = self.entries.iter().find(|(s, _)| expr.sample_position(s).is_none()) {
            return Err(Error::Data(format!("labelled sample '{s}' is not in the expression matrix")));
        }
        if let Some(s) = expr.sample_ids().iter().find(|s| self.label_of(s).is_none()) {
            return Err(Error::Data(format!("sample '{s}' has no label")));
        }
        Ok(())
    }

    /// The two groups to compare: `1` and `2` when those are the labels,
    /// otherwise the two labels in order of first appearance.
    pub fn two_groups(&self) -> Result<(String, String)> {
        let groups = self.groups();
        if groups.len() != 2 {
            return Err(Error::Data(format!(
                "expected exactly two groups, found {}: {}",
                groups.len(),
                groups.join(", ")
            )));
        }
        if groups.contains(&"1") && groups.contains(&"2") {
            return Ok(("1".into(), "2".into()));
        }
        Ok((groups[0].to_string(), groups[1].to_string()))
    }
}

/// Two columns, `sample_id` and `group`, comma or tab separated. A first
/// row whose first cell is `sample` or `sample_id` is a header.
pub fn parse_labels(text: &str, origin: &str, delimiter: u8) -> Result<Labels> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut entries: Vec<(String, String)> = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(origin, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if i == 0 && matches!(rec.get(0).map(str::to_ascii_lowercase).as_deref(), Some("sample" | "sample_id")) {
            continue;
        }
        if rec.len() != 2 || rec[0].is_empty() || rec[1].is_empty() {
            return Err(parse_err(origin, line, "expected two non-empty fields: sample_id, group"));
        }
        if !seen.insert(rec[0].to_string()) {
            return Err(parse_err(origin, line, format!("duplicate sample id '{}'", &rec[0])));
        }
        entries.push((rec[0].to_string(), rec[1].to_string()));
    }
    if entries.is_empty() {
        return Err(parse_err(origin, 1, "no labels"));
    }
    Ok(Labels { entries })
}

pub fn load_labels(path: &Path) -> Result<Labels> {
    let text = crate::error::read_text(path)?;
    parse_labels(&text, &path.display().to_string(), sniff_delimiter(path, &text))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneSet {
    pub name: String,
    pub description: String,
    /// Distinct ids in file order.
    pub gene_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneSetCatalog {
    pub sets: Vec<GeneSet>,
}

/// A set matched against the genes of an expression matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedSet {
    pub name: String,
    pub genes: Vec<usize>,
    pub unresolved: usize,
}

impl GeneSetCatalog {
    /// Drops ids missing from `expr`, keeping a per-set tally.
    pub fn resolve(&self, expr: &ExpressionMatrix) -> Vec<ResolvedSet> {
        self.sets
            .iter()
            .map(|s| {
                let genes: Vec<usize> = s.gene_ids.iter().filter_map(|g| expr.gene_position(g)).collect();
                ResolvedSet {
                    name: s.name.clone(),
                    unresolved: s.gene_ids.len() - genes.len(),
                    genes,
                }
            })
            .collect()
    }
}

/// GMT: one set per line, tab separated: name, description, gene ids.
pub fn parse_gmt(text: &str, origin: &str) -> Result<GeneSetCatalog> {
    let mut sets = Vec::new();
    let mut names = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() < 2 || fields[0].is_empty() {
            return Err(parse_err(origin, i + 1, "expected name<TAB>description<TAB>genes..."));
        }
        if !names.insert(fields[0]) {
            return Err(parse_err(origin, i + 1, format!("duplicate set name '{}'", fields[0])));
        }
        let mut seen = HashSet::new();
        let gene_ids = fields[2..]
            .iter()
            .filter(|g| !g.is_empty() && seen.insert(**g))
            .map(|g| g.to_string())
            .collect();
        sets.push(GeneSet {
            name: fields[0].to_string(),
            description: fields[1].to_string(),
            gene_ids,
        });
    }
    Ok(GeneSetCatalog { sets })
}

pub fn load_gmt(path: &Path) -> Result<GeneSetCatalog> {
    let text = crate::error::read_text(path)?;
    parse_gmt(&text, &path.display().to_string())
}

//! Delimited numeric tables: sample matrices, covariance matrices and
//! vectors.

use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

/// Tab when the first non-comment line holds one, otherwise comma.
pub fn sniff(text: &str) -> u8 {
    let first = text.lines().find(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
    if first.is_some_and(|l| l.contains('\t')) {
        b'\t'
    } else {
        b','
    }
}

/// Reads a numeric table. A first row with any non-numeric cell is a
/// header; a first column that is non-numeric in every data row holds row
/// labels. Both are discarded. `#` lines are comments.
pub fn parse_table(text: &str, origin: &str, delimiter: u8) -> Result<(Vec<f64>, usize, usize)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| parse_err(origin, e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    let numeric = |c: &str| c.parse::<f64>().is_ok();
    if rows.first().is_some_and(|(_, r)| !r.iter().all(|c| numeric(c))) {
        rows.remove(0);
    }
    if rows.is_empty() {
        return Err(parse_err(origin, 1, "no numeric rows"));
    }
    let labelled = rows.iter().all(|(_, r)| r.first().is_some_and(|c| !numeric(c)));
    let skip = usize::from(labelled);
    let width = rows[0].1.len() - skip;
    if width == 0 {
        return Err(parse_err(origin, rows[0].0, "no numeric columns"));
    }
    let mut data = Vec::with_capacity(rows.len() * width);
    for (line, r) in &rows {
        if r.len() - skip != width {
            return Err(parse_err(origin, *line, format!("expected {width} values, found {}", r.len() - skip)));
        }
        for (j, cell) in r.iter().enumerate().skip(skip) {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(origin, *line, format!("column {}: cannot parse '{cell}' as a number", j + 1)))?;
            if !v.is_finite() {
                return Err(parse_err(origin, *line, format!("column {}: non-finite value '{cell}'", j + 1)));
            }
            data.push(v);
        }
    }
    Ok((data, rows.len(), width))
}

/// Observations × variables; with `transpose`, the file is variables ×
/// observations.
pub fn parse_sample_matrix(text: &str, origin: &str, transpose: bool) -> Result<SampleMatrix> {
    let (data, n, p) = parse_table(text, origin, sniff(text))?;
    let m = SampleMatrix::new(data, n, p)?;
    Ok(if transpose { m.transpose() } else { m })
}

pub fn load_sample_matrix(path: &Path, transpose: bool) -> Result<SampleMatrix> {
    let text = crate::error::read_text(path)?;
    parse_sample_matrix(&text, &path.display().to_string(), transpose)
}

/// A vector stored as one row or one column.
pub fn load_vector(path: &Path) -> Result<Vec<f64>> {
    let text = crate::error::read_text(path)?;
    let origin = path.display().to_string();
    let (data, n, p) = parse_table(&text, &origin, sniff(&text))?;
    if n != 1 && p != 1 {
        return Err(parse_err(&origin, 1, format!("expected a single row or column, found {n}x{p}")));
    }
    Ok(data)
}

/// A square matrix in row-major order, with its dimension.
pub fn load_square(path: &Path) -> Result<(Vec<f64>, usize)> {
    let text = crate::error::read_text(path)?;
    let origin = path.display().to_string();
    let (data, n, p) = parse_table(&text, &origin, sniff(&text))?;
    if n != p {
        return Err(parse_err(&origin, 1, format!("expected a square matrix, found {n}x{p}")));
    }
    Ok((data, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_row_labels_are_optional() {
        let plain = parse_sample_matrix("1,2\n3,4\n5,6\n", "a", false).unwrap();
        let fancy = parse_sample_matrix("id,v1,v2\nr1,1,2\nr2,3,4\nr3,5,6\n", "b", false).unwrap();
        assert_eq!(plain, fancy);
        assert_eq!((plain.n(), plain.p()), (3, 2));
        let tsv = parse_sample_matrix("v1\tv2\n1\t2\n3\t4\n5\t6\n", "c", false).unwrap();
        assert_eq!(tsv, plain);
        let t = parse_sample_matrix("1,3,5\n2,4,6\n", "d", true).unwrap();
        assert_eq!(t, plain);
    }

    #[test]
    fn bad_cells_report_line_and_column() {
        let err = parse_sample_matrix("1,2\n3,x\n", "bad", false).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse { line: 2, .. }) && msg.contains("column 2"), "{msg}");
        assert!(parse_sample_matrix("1,2\n3\n", "ragged", false).is_err());
        assert!(parse_sample_matrix("1,inf\n", "inf", false).is_err());
        assert!(parse_sample_matrix("a,b\n", "empty", false).is_err());
    }
}

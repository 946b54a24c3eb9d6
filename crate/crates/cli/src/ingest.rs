//! Reading design matrices and label files.
//!
//! Dense matrices are comma-separated, one sample per row, with an optional
//! header line. Sparse matrices start with a `rows cols nnz` line followed by
//! `nnz` lines of one-based `i j value` triplets. Labels are one per line and
//! are numbered in order of first appearance.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use sgl::{Dataset, DesignMatrix};

use crate::config::MatrixFormat;
use crate::error::{CliError, Result};

/// A dataset with the original label strings, indexed by class.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub data: Dataset,
    pub class_names: Vec<String>,
}

pub fn ingest(matrix: &Path, labels: &Path, format: MatrixFormat) -> Result<Ingested> {
    let x = read_matrix(matrix, format)?;
    let (y, class_names) = parse_labels(&read(labels)?, labels)?;
    if y.len() != x.nrows() {
        return Err(CliError::Input {
            path: labels.to_path_buf(),
            line: y.len(),
            message: format!("{} labels but the matrix has {} rows", y.len(), x.nrows()),
        });
    }
    if class_names.len() < 2 {
        return Err(CliError::Validation(format!(
            "{} has a single class; at least two are needed",
            labels.display()
        )));
    }
    let k = class_names.len();
    Ok(Ingested {
        data: Dataset::new(x, y, k)?,
        class_names,
    })
}

pub fn read_matrix(path: &Path, format: MatrixFormat) -> Result<DesignMatrix> {
    let text = read(path)?;
    let sparse = match format {
        MatrixFormat::Sparse => true,
        MatrixFormat::Dense => false,
        MatrixFormat::Auto => looks_sparse(&text),
    };
    if sparse {
        parse_sparse(&text, path)
    } else {
        parse_dense(&text, path)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

// Three whitespace-separated non-negative integers and no comma.
fn looks_sparse(text: &str) -> bool {
    let first = text.lines().next().unwrap_or("");
    let tokens: Vec<&str> = first.split_whitespace().collect();
    !first.contains(',') && tokens.len() == 3 && tokens.iter().all(|t| t.parse::<usize>().is_ok())
}

struct LineError<'a> {
    path: &'a Path,
}

impl LineError<'_> {
    fn at(&self, line: usize, message: impl Into<String>) -> CliError {
        CliError::Input {
            path: PathBuf::from(self.path),
            line,
            message: message.into(),
        }
    }
}

pub fn parse_dense(text: &str, path: &Path) -> Result<DesignMatrix> {
    let err = LineError { path };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            err.at(line, e.to_string())
        })?;
        let line = record.position().map_or(index + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, usize> = record
            .iter()
            .enumerate()
            .map(|(j, v)| v.parse::<f64>().map_err(|_| j))
            .collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if index == 0 => continue, // header
            Err(j) => return Err(err.at(line, format!("field {} ('{}') is not a number", j + 1, &record[j]))),
        };
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(err.at(line, format!("field {} is not finite", j + 1)));
        }
        match ncols {
            None => ncols = Some(values.len()),
            Some(c) if c != values.len() => {
                return Err(err.at(line, format!("expected {c} fields, found {}", values.len())));
            }
            _ => {}
        }
        data.extend(values);
        nrows += 1;
    }
    let ncols = ncols.ok_or_else(|| err.at(1, "no data rows"))?;
    Ok(DesignMatrix::from_rows(nrows, ncols, &data)?)
}

pub fn parse_sparse(text: &str, path: &Path) -> Result<DesignMatrix> {
    let err = LineError { path };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| err.at(1, "missing 'rows cols nnz' header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| err.at(1, format!("expected 'rows cols nnz', got '{header}'")))?;
    let &[rows, cols, nnz] = dims.as_slice() else {
        return Err(err.at(1, format!("expected 'rows cols nnz', got '{header}'")));
    };
    if rows == 0 || cols == 0 {
        return Err(err.at(1, "matrix has no rows or no columns"));
    }
    let mut triplets = Vec::with_capacity(nnz);
    let mut last_line = 1;
    for (index, line) in lines {
        let n = index + 1;
        last_line = n;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let [i, j, v] = tokens.as_slice() else {
            return Err(err.at(n, format!("expected 'i j value', got '{}'", line.trim())));
        };
        let index_of = |t: &str, bound: usize, what: &str| -> Result<usize> {
            match t.parse::<usize>() {
                Ok(k) if (1..=bound).contains(&k) => Ok(k - 1),
                _ => Err(err.at(n, format!("{what} index '{t}' outside 1..={bound}"))),
            }
        };
        let i = index_of(i, rows, "row")?;
        let j = index_of(j, cols, "column")?;
        let v: f64 = v
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err.at(n, format!("value '{v}' is not a finite number")))?;
        triplets.push((i, j, v));
    }
    if triplets.len() != nnz {
        return Err(err.at(
            last_line,
            format!("header declares {nnz} entries but {} were given", triplets.len()),
        ));
    }
    Ok(DesignMatrix::from_triplets(rows, cols, &triplets)?)
}

/// Class indices in order of first appearance, and the label for each class.
pub fn parse_labels(text: &str, path: &Path) -> Result<(Vec<usize>, Vec<String>)> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut names = Vec::new();
    let mut y = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let label = line.trim();
        if label.is_empty() {
            return Err(CliError::Input {
                path: path.to_path_buf(),
                line: i + 1,
                message: "empty label".into(),
            });
        }
        let next = names.len();
        let class = *index.entry(label).or_insert_with(|| {
            names.push(label.to_string());
            next
        });
        y.push(class);
    }
    Ok((y, names))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("m")
    }

    #[test]
    fn dense_with_and_without_header() {
        let a = parse_dense("1,2\n3,4\n", p()).unwrap();
        let b = parse_dense("x1, x2\n1,2\n3,4", p()).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.nrows(), a.ncols()), (2, 2));
        assert_eq!(a.get(1, 0), 3.0);
    }

    #[test]
    fn ragged_rows_name_the_line() {
        let e = parse_dense("1,2\n3,4\n5\n", p()).unwrap_err();
        assert!(matches!(e, CliError::Input { line: 3, .. }), "{e}");
        let e = parse_dense("1,2\n3,z\n", p()).unwrap_err();
        assert!(matches!(e, CliError::Input { line: 2, .. }), "{e}");
    }

    #[test]
    fn sparse_coordinates_are_one_based() {
        let m = parse_sparse("2 3 1\n1 3 5.0\n", p()).unwrap();
        assert!(m.is_sparse());
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 2), 5.0);
        assert!(looks_sparse("2 3 1\n1 3 5.0\n"));
        assert!(!looks_sparse("1,2\n"));
    }

    #[test]
    fn sparse_errors_name_the_line() {
        let e = parse_sparse("2 3 2\n1 3 5.0\n3 1 1.0\n", p()).unwrap_err();
        assert!(matches!(e, CliError::Input { line: 3, .. }), "{e}");
        let e = parse_sparse("2 3 2\n1 3 5.0\n", p()).unwrap_err();
        assert!(e.to_string().contains("declares 2"), "{e}");
        let e = parse_sparse("2 3\n", p()).unwrap_err();
        assert!(matches!(e, CliError::Input { line: 1, .. }));
    }

    #[test]
    fn labels_in_first_appearance_order() {
        let (y, names) = parse_labels("b\na\nb\nc\n", p()).unwrap();
        assert_eq!(y, vec![0, 1, 0, 2]);
        assert_eq!(names, vec!["b", "a", "c"]);
    }

    #[test]
    fn label_count_mismatch_names_both_counts() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("x.csv");
        let l = dir.path().join("y.txt");
        std::fs::write(&m, "1,2\n3,4\n").unwrap();
        std::fs::write(&l, "a\nb\na\n").unwrap();
        let e = ingest(&m, &l, MatrixFormat::Auto).unwrap_err().to_string();
        assert!(e.contains("3 labels") && e.contains("2 rows"), "{e}");
        std::fs::write(&l, "a\nb\n").unwrap();
        let d = ingest(&m, &l, MatrixFormat::Auto).unwrap();
        assert_eq!((d.data.n_samples(), d.data.n_features(), d.data.n_classes), (2, 2, 2));
    }
}

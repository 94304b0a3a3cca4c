//! Loader for delimited numeric tables such as the UCI credit and Musk files.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::logistic::LogisticDataset;

/// Which column holds the class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub standardize: bool,
    pub add_intercept: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            label_column: LabelColumn::Last,
            standardize: true,
            add_intercept: true,
        }
    }
}

pub fn load_uci_csv(path: impl AsRef<Path>, options: CsvOptions) -> Result<LogisticDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_delimited(&text, path, options)
}

/// Parses comma- or whitespace-delimited text. Blank lines and lines starting
/// with `#` are skipped. Row numbers in errors are 1-based line numbers.
pub fn parse_delimited(text: &str, origin: &Path, options: CsvOptions) -> Result<LogisticDataset> {
    let err = |row: usize, message: String| Error::Dataset {
        path: PathBuf::from(origin),
        row,
        message,
    };

    let mut width = None;
    let mut raw_labels: Vec<(usize, String)> = Vec::new();
    let mut covariates: Vec<f64> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let row = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = if line.contains(',') {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        match width {
            None => {
                if fields.len() < 2 {
                    return Err(err(row, "need at least one covariate and a label".into()));
                }
                width = Some(fields.len());
            }
            Some(w) if w != fields.len() => {
                return Err(err(row, format!("expected {w} columns, found {}", fields.len())));
            }
            _ => {}
        }
        let label_at = match options.label_column {
            LabelColumn::Last => fields.len() - 1,
            LabelColumn::Index(i) if i < fields.len() => i,
            LabelColumn::Index(i) => {
                return Err(err(row, format!("label column {i} out of range")));
            }
        };
        for (j, f) in fields.iter().enumerate() {
            if j == label_at {
                raw_labels.push((row, f.to_string()));
                continue;
            }
            let v: f64 = f
                .parse()
                .map_err(|_| err(row, format!("column {j}: cannot parse {f:?} as a number")))?;
            if !v.is_finite() {
                return Err(err(row, format!("column {j}: non-finite value")));
            }
            covariates.push(v);
        }
    }
    let Some(width) = width else {
        return Err(err(0, "no data rows".into()));
    };
    let dim = width - 1;
    let n = raw_labels.len();

    let mut classes: Vec<&str> = raw_labels.iter().map(|(_, s)| s.as_str()).collect();
    classes.sort_by(|a, b| label_order(a, b));
    classes.dedup();
    if classes.len() > 2 {
        let row = raw_labels
            .iter()
            .find(|(_, s)| s.as_str() != classes[0] && s.as_str() != classes[1])
            .map(|(r, _)| *r)
            .unwrap_or(0);
        return Err(err(row, format!("more than two label values: {:?}", classes)));
    }
    let labels: Vec<u8> = raw_labels
        .iter()
        .map(|(_, s)| u8::from(classes.len() == 2 && s.as_str() == classes[1]))
        .collect();

    if options.standardize {
        for j in 0..dim {
            let mean = (0..n).map(|i| covariates[i * dim + j]).sum::<f64>() / n as f64;
            let var = (0..n)
                .map(|i| (covariates[i * dim + j] - mean).powi(2))
                .sum::<f64>()
                / n as f64;
            let sd = var.sqrt();
            for i in 0..n {
                let c = &mut covariates[i * dim + j];
                *c -= mean;
                // constant columns are only centered
                if sd > 0.0 {
                    *c /= sd;
                }
            }
        }
    }

    let (covariates, dim) = if options.add_intercept {
        let mut out = Vec::with_capacity(n * (dim + 1));
        for i in 0..n {
            out.extend_from_slice(&covariates[i * dim..(i + 1) * dim]);
            out.push(1.0);
        }
        (out, dim + 1)
    } else {
        (covariates, dim)
    };
    LogisticDataset::new(covariates, labels, dim)
}

/// Numeric labels sort numerically, anything else lexicographically.
fn label_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(standardize: bool, add_intercept: bool) -> CsvOptions {
        CsvOptions {
            label_column: LabelColumn::Last,
            standardize,
            add_intercept,
        }
    }

    #[test]
    fn string_labels_map_by_sorted_order() {
        let text = "1.0,2.0,B\n3.0,4.0,A\n5.0,6.0,B\n";
        let ds = parse_delimited(text, Path::new("t.csv"), opts(false, false)).unwrap();
        assert_eq!(ds.labels(), &[1, 0, 1]);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let text = "0.5 10\n0.1 2\n0.7 10\n";
        let ds = parse_delimited(text, Path::new("t"), opts(false, false)).unwrap();
        assert_eq!(ds.labels(), &[1, 0, 1]);
    }

    #[test]
    fn standardization_uses_population_variance() {
        let text = "1,0\n2,1\n3,0\n";
        let ds = parse_delimited(text, Path::new("t"), opts(true, true)).unwrap();
        let s = (1.5f64).sqrt();
        assert_eq!(ds.dim(), 2);
        assert!((ds.row(0)[0] + s).abs() < 1e-14);
        assert!(ds.row(1)[0].abs() < 1e-14);
        assert!((ds.row(2)[0] - s).abs() < 1e-14);
        assert!(ds.row(0)[1] == 1.0 && ds.row(2)[1] == 1.0);
    }

    #[test]
    fn label_column_can_be_first() {
        let text = "yes,1,2\nno,3,4\n";
        let o = CsvOptions {
            label_column: LabelColumn::Index(0),
            standardize: false,
            add_intercept: false,
        };
        let ds = parse_delimited(text, Path::new("t"), o).unwrap();
        assert_eq!(ds.labels(), &[1, 0]);
        assert_eq!(ds.row(0), &[1.0, 2.0]);
    }

    #[test]
    fn errors_carry_row_numbers() {
        let e = parse_delimited("1,2,0\n1,2\n", Path::new("t"), opts(false, false)).unwrap_err();
        assert!(matches!(e, Error::Dataset { row: 2, .. }), "{e}");

        let e = parse_delimited("1,2,0\n\n1,x,1\n", Path::new("t"), opts(false, false)).unwrap_err();
        assert!(matches!(e, Error::Dataset { row: 3, .. }), "{e}");

        let e = parse_delimited("1,0\n2,1\n3,2\n", Path::new("t"), opts(false, false)).unwrap_err();
        assert!(matches!(e, Error::Dataset { row: 3, .. }), "{e}");
    }
}

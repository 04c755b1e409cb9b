//! Loader for the libsvm / SVMlight text format.
//!
//! Each line is `<label> <index>:<value> ...` with 1-based, strictly
//! increasing indices. Labels are mapped to +-1 (0/1 files map to -1/+1).
//! Blank lines and `#` comments are skipped; explicit zero values are
//! dropped. Indices are stored 0-based and the ambient dimension is the
//! largest index seen plus one, unless overridden.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::SparseVector;
use crate::problems::Dataset;

pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    load_libsvm_with_dim(path, None)
}

pub fn load_libsvm_with_dim(path: impl AsRef<Path>, dim: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm_with_dim(&text, dim)
}

pub fn parse_libsvm(text: &str) -> Result<Dataset> {
    parse_libsvm_with_dim(text, None)
}

pub fn parse_libsvm_with_dim(text: &str, dim_override: Option<usize>) -> Result<Dataset> {
    let mut raw_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut max_index: Option<usize> = None;

    for (lineno, raw_line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = match raw_line.split_once('#') {
            Some((before, _comment)) => before,
            None => raw_line,
        };
        let mut tokens = line.split_whitespace();
        let label_token = match tokens.next() {
            Some(t) => t,
            None => continue, // blank or comment-only line
        };
        let label = parse_label(label_token, lineno)?;

        let mut entries: Vec<(usize, f64)> = Vec::new();
        let mut last_index: Option<usize> = None;
        for token in tokens {
            let (idx_str, val_str) = token.split_once(':').ok_or_else(|| {
                Error::parse(lineno, format!("expected `index:value`, found `{token}`"))
            })?;
            let one_based: usize = idx_str
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid feature index `{idx_str}`")))?;
            if one_based == 0 {
                return Err(Error::parse(lineno, "feature indices are 1-based; found 0"));
            }
            let index = one_based - 1;
            if let Some(prev) = last_index {
                if index <= prev {
                    return Err(Error::parse(
                        lineno,
                        format!(
                            "feature indices must be strictly increasing: {} after {}",
                            one_based,
                            prev + 1
                        ),
                    ));
                }
            }
            last_index = Some(index);
            let value: f64 = val_str
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid feature value `{val_str}`")))?;
            if !value.is_finite() {
                return Err(Error::parse(
                    lineno,
                    format!("non-finite feature value `{val_str}`"),
                ));
            }
            if value == 0.0 {
                continue;
            }
            max_index = Some(max_index.map_or(index, |m| m.max(index)));
            entries.push((index, value));
        }
        raw_rows.push(entries);
        labels.push(label);
    }

    let needed = match max_index {
        Some(m) => m
            .checked_add(1)
            .ok_or_else(|| Error::InvalidArgument("feature index overflow".into()))?,
        None => 0,
    };
    let dim = match dim_override {
        Some(d) => {
            if d < needed {
                return Err(Error::InvalidArgument(format!(
                    "dimension override {d} is smaller than the largest feature index ({needed})"
                )));
            }
            d
        }
        None => needed,
    };

    let mut rows = Vec::with_capacity(raw_rows.len());
    for entries in raw_rows {
        rows.push(SparseVector::new(entries, dim)?);
    }
    Ok(Dataset { rows, labels, dim })
}

fn parse_label(token: &str, lineno: usize) -> Result<f64> {
    let value: f64 = token
        .parse()
        .map_err(|_| Error::parse(lineno, format!("invalid label `{token}`")))?;
    if value == 1.0 {
        Ok(1.0)
    } else if value == -1.0 || value == 0.0 {
        Ok(-1.0)
    } else {
        Err(Error::parse(
            lineno,
            format!("unsupported label `{token}`; expected -1, 0, or +1"),
        ))
    }
}

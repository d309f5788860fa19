//! The raw data matrix: parsing, NA policy, and standardization.

use crate::error::{Error, Result};
use crate::float;
use crate::sum;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// How to treat missing values during parsing.
///
/// Missingness is always an explicit policy: silent pairwise deletion
/// would bias every downstream correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaPolicy {
    /// Reject the input, reporting the first offending cell.
    Error,
    /// Drop every row containing a missing value.
    DropRows,
    /// Replace missing values with 0.
    ImputeZero,
}

/// n samples × P variables of reals, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Vec<f64>,
    n: usize,
    p: usize,
    names: Vec<String>,
    centered: bool,
}

impl DataMatrix {
    /// Build from per-variable columns of equal length.
    pub fn from_columns(columns: Vec<Vec<f64>>, names: Vec<String>) -> Result<Self> {
        let p = columns.len();
        if p < 2 {
            return Err(Error::Input("need at least 2 variables".to_string()));
        }
        if names.len() != p {
            return Err(Error::Input(format!(
                "{} column names for {} columns",
                names.len(),
                p
            )));
        }
        let n = columns[0].len();
        if n < 3 {
            return Err(Error::Input(format!("need at least 3 samples, got {n}")));
        }
        let mut values = Vec::with_capacity(n * p);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::Input(format!(
                    "column {} has {} rows, expected {n}",
                    names[j],
                    col.len()
                )));
            }
            for &v in col {
                if !v.is_finite() {
                    return Err(Error::Input(format!("non-finite value in column {}", names[j])));
                }
                values.push(v);
            }
        }
        Ok(DataMatrix { values, n, p, names, centered: false })
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of variables.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Variable names, length P.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Whether columns were mean-centered by [`standardize`].
    pub fn centered(&self) -> bool {
        self.centered
    }

    /// Column `j` as a contiguous slice.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }
}

/// Parse a delimited numeric table (comma or tab, auto-detected) with a
/// header row into a [`DataMatrix`].
///
/// With `transpose`, data rows become variables (named `row1..rowN`) and
/// the original columns become samples. Accepted missing-value tokens:
/// empty, `NA`, `N/A`, `NaN` (case-insensitive).
pub fn parse_delimited(text: &str, transpose: bool, na_policy: NaPolicy) -> Result<DataMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Input("empty input".to_string()))?;
    let delim = if header.contains('\t') { '\t' } else { ',' };
    let names: Vec<String> = header.split(delim).map(|s| s.trim().to_string()).collect();
    let width = names.len();

    // Parse the body into rows, tracking missingness.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut row_has_na: Vec<bool> = Vec::new();
    for (lineno, line) in lines {
        let mut row = Vec::with_capacity(width);
        let mut has_na = false;
        let fields: Vec<&str> = line.split(delim).collect();
        if fields.len() != width {
            return Err(Error::Input(format!(
                "line {}: {} fields, expected {width}",
                lineno + 1,
                fields.len()
            )));
        }
        for (col, field) in fields.iter().enumerate() {
            let t = field.trim();
            if is_na_token(t) {
                match na_policy {
                    NaPolicy::Error => {
                        return Err(Error::Input(format!(
                            "missing value at line {}, column {} ({})",
                            lineno + 1,
                            col + 1,
                            names[col]
                        )))
                    }
                    NaPolicy::DropRows => {
                        has_na = true;
                        row.push(f64::NAN);
                    }
                    NaPolicy::ImputeZero => row.push(0.0),
                }
            } else {
                let v: f64 = t.parse().map_err(|_| {
                    Error::Input(format!(
                        "unparseable number {t:?} at line {}, column {} ({})",
                        lineno + 1,
                        col + 1,
                        names[col]
                    ))
                })?;
                if !v.is_finite() {
                    return Err(Error::Input(format!(
                        "non-finite value at line {}, column {}",
                        lineno + 1,
                        col + 1
                    )));
                }
                row.push(v);
            }
        }
        rows.push(row);
        row_has_na.push(has_na);
    }
    if na_policy == NaPolicy::DropRows {
        let kept: Vec<Vec<f64>> = rows
            .into_iter()
            .zip(&row_has_na)
            .filter(|(_, &na)| !na)
            .map(|(r, _)| r)
            .collect();
        rows = kept;
    }
    if rows.is_empty() {
        return Err(Error::Input("no data rows".to_string()));
    }

    if transpose {
        // Rows become variables; header names applied to samples are
        // discarded and variables get synthetic names.
        let p = rows.len();
        let columns: Vec<Vec<f64>> = rows.into_iter().collect();
        let names = (1..=p).map(|i| format!("row{i}")).collect();
        DataMatrix::from_columns(columns, names)
    } else {
        let n = rows.len();
        let mut columns = alloc::vec![Vec::with_capacity(n); width];
        for row in rows {
            for (j, v) in row.into_iter().enumerate() {
                columns[j].push(v);
            }
        }
        DataMatrix::from_columns(columns, names)
    }
}

fn is_na_token(t: &str) -> bool {
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("n/a") || t.eq_ignore_ascii_case("nan")
}

/// Center (optionally) and scale each column to unit Euclidean norm.
///
/// After centering, dot products of columns are sample correlations;
/// without centering they are raw cosines of the angles between the
/// sample vectors. Constant columns cannot be standardized and are
/// reported by name.
pub fn standardize(m: &DataMatrix, center: bool) -> Result<DataMatrix> {
    let n = m.n;
    let mut values = Vec::with_capacity(n * m.p);
    let mut degenerate: Vec<String> = Vec::new();
    for j in 0..m.p {
        let col = m.column(j);
        let start = values.len();
        if center {
            let mean = sum::pairwise_sum(col) / n as f64;
            values.extend(col.iter().map(|&v| v - mean));
        } else {
            values.extend_from_slice(col);
        }
        let slice = &mut values[start..];
        let norm = float::sqrt(sum::dot(slice, slice));
        if norm <= 0.0 || !norm.is_finite() {
            degenerate.push(m.names[j].clone());
            continue;
        }
        for v in slice.iter_mut() {
            *v /= norm;
        }
    }
    if !degenerate.is_empty() {
        return Err(Error::DegenerateColumns(degenerate));
    }
    Ok(DataMatrix {
        values,
        n,
        p: m.p,
        names: m.names.clone(),
        centered: center,
    })
}

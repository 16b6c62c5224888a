//! Dataset ingestion and sample moments.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symlin::SquareSym;

/// Named numeric columns of equal length.
///
/// Construction validates: at least two columns, at least two rows, unique
/// nonempty names, and finite values only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                actual: columns.len(),
            });
        }
        validate_names(&names)?;
        if names.len() < 2 {
            return Err(Error::TooFewVariables);
        }
        let n = columns[0].len();
        for (c, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: col.len(),
                });
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row: row + 1,
                    column: names[c].clone(),
                });
            }
        }
        if n < 2 {
            return Err(Error::TooFewRows);
        }
        Ok(Dataset { names, columns })
    }

    /// Builds from row-major observations.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let p = names.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); p];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::RaggedRow {
                    row: r + 1,
                    found: row.len(),
                    expected: p,
                });
            }
            for (c, v) in row.iter().enumerate() {
                columns[c].push(*v);
            }
        }
        Dataset::new(names, columns)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Rows picked by index, with repetition allowed (used for resampling).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        Dataset::new(self.names.clone(), columns)
    }

    /// Multiplies column `j` by `factor`.
    pub fn rescale_column(&self, j: usize, factor: f64) -> Result<Dataset> {
        let mut columns = self.columns.clone();
        columns[j].iter_mut().for_each(|v| *v *= factor);
        Dataset::new(self.names.clone(), columns)
    }

    /// Reorders variables: output column `i` is input column `perm[i]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Dataset> {
        Dataset::new(
            perm.iter().map(|&j| self.names[j].clone()).collect(),
            perm.iter().map(|&j| self.columns[j].clone()).collect(),
        )
    }

    /// CSV text with a header row; values use the shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push('\n');
        for i in 0..self.n() {
            let row: Vec<String> = self.columns.iter().map(|c| format!("{:?}", c[i])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn validate_names(names: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for name in names {
        if name.is_empty() {
            return Err(Error::BadHeader("empty column name".into()));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::BadHeader(format!("duplicate column name '{name}'")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CsvOptions {
    /// Drop rows containing an empty or `NA` cell instead of failing.
    pub drop_incomplete_rows: bool,
}

/// Parses comma-separated UTF-8 text with a header row.
pub fn parse_csv(bytes: &[u8]) -> Result<Dataset> {
    parse_csv_with(bytes, CsvOptions::default())
}

pub fn parse_csv_with(bytes: &[u8], opts: CsvOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let header = reader
        .headers()
        .map_err(|e| Error::BadHeader(e.to_string()))?
        .clone();
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    if names.is_empty() || (names.len() == 1 && names[0].is_empty()) {
        return Err(Error::BadHeader("missing header row".into()));
    }
    validate_names(&names)?;

    let p = names.len();
    let mut columns = vec![Vec::new(); p];
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::BadHeader(e.to_string()))?;
        if record.len() != p {
            return Err(Error::RaggedRow {
                row,
                found: record.len(),
                expected: p,
            });
        }
        let mut values = Vec::with_capacity(p);
        let mut incomplete = false;
        for (c, cell) in record.iter().enumerate() {
            if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                if opts.drop_incomplete_rows {
                    incomplete = true;
                    break;
                }
                return Err(Error::MissingValue {
                    row,
                    column: names[c].clone(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row,
                column: names[c].clone(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    column: names[c].clone(),
                });
            }
            values.push(v);
        }
        if incomplete {
            continue;
        }
        for (col, v) in columns.iter_mut().zip(values) {
            col.push(v);
        }
    }

    if p < 2 {
        return Err(Error::TooFewVariables);
    }
    if columns[0].len() < 2 {
        return Err(Error::TooFewRows);
    }
    Dataset::new(names, columns)
}

/// Means, sample covariance (divisor `n − 1`) and correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub names: Vec<String>,
    pub n: usize,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub cov: SquareSym,
    /// Unit diagonal. Off-diagonal entries touching a zero-variance column are NaN.
    pub corr: SquareSym,
    pub zero_variance: Vec<bool>,
}

impl MomentSummary {
    /// Builds a summary directly from moments, e.g. a published covariance matrix.
    pub fn from_moments(
        names: Vec<String>,
        n: usize,
        means: Vec<f64>,
        cov: SquareSym,
    ) -> Result<Self> {
        let p = cov.dim();
        if names.len() != p || means.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                actual: names.len().min(means.len()),
            });
        }
        validate_names(&names)?;
        if p < 2 {
            return Err(Error::TooFewVariables);
        }
        let variances = cov.diag();
        if let Some(j) = variances.iter().position(|v| !(*v >= 0.0)) {
            return Err(Error::OutOfRange(format!(
                "negative variance for '{}'",
                names[j]
            )));
        }
        let stds: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
        let zero_variance: Vec<bool> = variances.iter().map(|&v| v == 0.0).collect();
        let corr = SquareSym::from_fn(p, |i, j| {
            if i == j {
                1.0
            } else if zero_variance[i] || zero_variance[j] {
                f64::NAN
            } else {
                cov.get(i, j) / (stds[i] * stds[j])
            }
        });
        Ok(MomentSummary {
            names,
            n,
            means,
            stds,
            cov,
            corr,
            zero_variance,
        })
    }

    pub fn p(&self) -> usize {
        self.means.len()
    }

    pub fn variance(&self, j: usize) -> f64 {
        self.cov.get(j, j)
    }

    /// First zero-variance column, as an error.
    pub fn require_positive_variances(&self) -> Result<()> {
        match self.zero_variance.iter().position(|&z| z) {
            Some(j) => Err(Error::ZeroVariance {
                column: self.names[j].clone(),
            }),
            None => Ok(()),
        }
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.p() {
            Err(Error::IndexOutOfRange { index, p: self.p() })
        } else {
            Ok(())
        }
    }
}

pub fn summarize(d: &Dataset) -> MomentSummary {
    let n = d.n();
    let means: Vec<f64> = d
        .columns()
        .iter()
        .map(|c| c.iter().sum::<f64>() / n as f64)
        .collect();
    // two-pass: deviations first, then cross products
    let dev: Vec<Vec<f64>> = d
        .columns()
        .iter()
        .zip(&means)
        .map(|(c, m)| c.iter().map(|v| v - m).collect())
        .collect();
    let denom = (n - 1) as f64;
    let cov = SquareSym::from_fn(d.p(), |i, j| {
        dev[i].iter().zip(&dev[j]).map(|(a, b)| a * b).sum::<f64>() / denom
    });
    MomentSummary::from_moments(d.names().to_vec(), n, means, cov)
        .expect("moments of a validated dataset are well formed")
}

/// Centers each column and divides by its sample standard deviation.
pub fn standardize(d: &Dataset) -> Result<Dataset> {
    let s = summarize(d);
    s.require_positive_variances()?;
    let columns = d
        .columns()
        .iter()
        .enumerate()
        .map(|(j, c)| c.iter().map(|v| (v - s.means[j]) / s.stds[j]).collect())
        .collect();
    Dataset::new(d.names().to_vec(), columns)
}

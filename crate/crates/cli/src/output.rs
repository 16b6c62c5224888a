use std::collections::BTreeMap;
use std::fmt::Write;

use impartial::resample::{Interval, MonteCarloReport};
use serde::{Deserialize, Serialize};

/// Everything a subcommand reports. The JSON form is this struct verbatim;
/// the text form is rendered from it, so the two never disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDocument {
    pub command: String,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub symmetric_form: Option<SymmetricForm>,
    /// Solved forms keyed by the isolated variable.
    pub solved: BTreeMap<String, Solved>,
    pub diagnostics: Option<Diagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloReport>,
    pub warnings: Vec<String>,
    pub seed: Option<u64>,
}

impl OutputDocument {
    pub fn new(command: &str) -> Self {
        OutputDocument {
            command: command.to_string(),
            n: None,
            p: None,
            symmetric_form: None,
            solved: BTreeMap::new(),
            diagnostics: None,
            comparison: None,
            bootstrap: None,
            monte_carlo: None,
            warnings: Vec::new(),
            seed: None,
        }
    }
}

/// `Σ coefficients[j] · names[j] = constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricForm {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solved {
    pub intercept: f64,
    pub slopes: BTreeMap<String, f64>,
}

/// Per-variable vectors follow the order of `symmetric_form.names`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub r_squared: Vec<f64>,
    pub residual_variance: Vec<f64>,
    pub coeff_times_residual_sd: Vec<f64>,
    pub partial_correlations: Vec<Vec<f64>>,
    pub sign_consistent: bool,
    pub condition_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub target: String,
    pub rows: Vec<ComparisonRow>,
}

/// Slopes of the target on one regressor under each method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub regressor: String,
    pub impartial: f64,
    pub ols: f64,
    /// Reciprocal of the regressor's own OLS slope on the target.
    pub reverse_ols: Option<f64>,
    pub orthogonal: Option<f64>,
    /// Impartial magnitude lies between the two OLS magnitudes.
    pub sandwiched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedInterval {
    pub name: String,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

impl NamedInterval {
    pub fn new(name: &str, iv: &Interval) -> Self {
        NamedInterval {
            name: name.to_string(),
            point: iv.point,
            lower: iv.lower,
            upper: iv.upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicates: usize,
    pub level: f64,
    pub failed_replicates: usize,
    pub unreliable: bool,
    /// Intervals are for each coefficient divided by this variable's coefficient.
    pub reference: String,
    pub ratio_intervals: Vec<NamedInterval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solved: Option<SolvedIntervals>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedIntervals {
    pub target: String,
    pub intercept: NamedInterval,
    pub slopes: Vec<NamedInterval>,
}

/// Twelve significant digits, trailing zeros dropped.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exponent) {
        let decimals = (11 - exponent).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, exp) = s.split_once('e').expect("exponent form");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exp}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_else(|| "-".to_string())
}

/// Left-aligned columns separated by two spaces.
fn table(out: &mut String, rows: &[Vec<String>]) {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    for r in rows {
        let mut line = String::from(" ");
        for (c, cell) in r.iter().enumerate() {
            let _ = write!(line, " {cell:<w$} ", w = widths[c]);
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}

pub fn render_text(doc: &OutputDocument) -> String {
    let mut out = String::new();
    let _ = write!(out, "{}", doc.command);
    match (doc.n, doc.p) {
        (Some(n), Some(p)) => {
            let _ = writeln!(out, " (n = {n}, p = {p})");
        }
        _ => out.push('\n'),
    }
    if let Some(seed) = doc.seed {
        let _ = writeln!(out, "seed: {seed}");
    }

    if let Some(sf) = &doc.symmetric_form {
        out.push_str("\nsymmetric form: sum of coefficient * variable = constant\n");
        let mut rows = vec![vec!["variable".to_string(), "coefficient".to_string()]];
        for (name, b) in sf.names.iter().zip(&sf.coefficients) {
            rows.push(vec![name.clone(), num(*b)]);
        }
        rows.push(vec!["constant".to_string(), num(sf.constant)]);
        table(&mut out, &rows);
    }

    for (target, s) in &doc.solved {
        let _ = writeln!(out, "\nsolved for {target}");
        let mut rows = vec![vec!["intercept".to_string(), num(s.intercept)]];
        let order: Vec<&String> = match &doc.symmetric_form {
            Some(sf) => sf
                .names
                .iter()
                .filter(|n| s.slopes.contains_key(*n))
                .collect(),
            None => s.slopes.keys().collect(),
        };
        for name in order {
            rows.push(vec![name.clone(), num(s.slopes[name])]);
        }
        table(&mut out, &rows);
    }

    if let (Some(d), Some(sf)) = (&doc.diagnostics, &doc.symmetric_form) {
        out.push_str("\ndiagnostics\n");
        let mut rows = vec![vec![
            "variable".to_string(),
            "r_squared".to_string(),
            "residual_variance".to_string(),
            "coeff_x_residual_sd".to_string(),
        ]];
        for (j, name) in sf.names.iter().enumerate() {
            rows.push(vec![
                name.clone(),
                num(d.r_squared[j]),
                num(d.residual_variance[j]),
                num(d.coeff_times_residual_sd[j]),
            ]);
        }
        table(&mut out, &rows);
        out.push_str("\npartial correlations\n");
        let mut rows = vec![std::iter::once(String::new())
            .chain(sf.names.iter().cloned())
            .collect()];
        for (name, row) in sf.names.iter().zip(&d.partial_correlations) {
            rows.push(
                std::iter::once(name.clone())
                    .chain(row.iter().map(|v| num(*v)))
                    .collect(),
            );
        }
        table(&mut out, &rows);
        let _ = writeln!(out, "\nsign consistent: {}", d.sign_consistent);
        if let Some(c) = d.condition_estimate {
            let _ = writeln!(out, "condition estimate: {}", num(c));
        }
    }

    if let Some(c) = &doc.comparison {
        let _ = writeln!(out, "\nslopes of {} on each regressor", c.target);
        let mut rows = vec![[
            "regressor",
            "impartial",
            "ols",
            "reverse_ols",
            "orthogonal",
            "between_ols_pair",
        ]
        .map(String::from)
        .to_vec()];
        for r in &c.rows {
            rows.push(vec![
                r.regressor.clone(),
                num(r.impartial),
                num(r.ols),
                opt(r.reverse_ols),
                opt(r.orthogonal),
                r.sandwiched.to_string(),
            ]);
        }
        table(&mut out, &rows);
    }

    if let Some(b) = &doc.bootstrap {
        let _ = writeln!(
            out,
            "\nbootstrap: {} replicates, level {}, {} failed",
            b.replicates,
            num(b.level),
            b.failed_replicates
        );
        let _ = writeln!(out, "coefficient ratios to {}", b.reference);
        interval_table(&mut out, &b.ratio_intervals);
        if let Some(s) = &b.solved {
            let _ = writeln!(out, "\nsolved for {}", s.target);
            let all: Vec<NamedInterval> = std::iter::once(s.intercept.clone())
                .chain(s.slopes.iter().cloned())
                .collect();
            interval_table(&mut out, &all);
        }
    }

    if let Some(m) = &doc.monte_carlo {
        let _ = writeln!(out, "\nmonte carlo: {} replicates", m.replicates);
        let mut header = vec!["estimator".to_string(), "failures".to_string()];
        for r in &m.regressors {
            header.push(format!("mean_{r}"));
            header.push(format!("sd_{r}"));
        }
        let mut rows = vec![header];
        let mut truth = vec!["truth".to_string(), "-".to_string()];
        for b in &m.beta {
            truth.push(num(*b));
            truth.push("-".to_string());
        }
        rows.push(truth);
        for e in &m.estimators {
            let mut row = vec![e.name.clone(), e.failures.to_string()];
            for (mean, sd) in e.mean.iter().zip(&e.sd) {
                row.push(num(*mean));
                row.push(num(*sd));
            }
            rows.push(row);
        }
        table(&mut out, &rows);
        out.push_str("\nmean reliability\n");
        let names = m.regressors.iter().cloned().chain(["y".to_string()]);
        let rows: Vec<Vec<String>> = names
            .zip(&m.mean_reliability)
            .map(|(n, r)| vec![n, num(*r)])
            .collect();
        table(&mut out, &rows);
    }

    if !doc.warnings.is_empty() {
        out.push_str("\nwarnings\n");
        for w in &doc.warnings {
            let _ = writeln!(out, "  {w}");
        }
    }
    out
}

fn interval_table(out: &mut String, ivs: &[NamedInterval]) {
    let mut rows = vec![["name", "point", "lower", "upper"]
        .map(String::from)
        .to_vec()];
    for iv in ivs {
        rows.push(vec![
            iv.name.clone(),
            num(iv.point),
            num(iv.lower),
            num(iv.upper),
        ]);
    }
    table(out, &rows);
}

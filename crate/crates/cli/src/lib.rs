//! Command-line front end for the `impartial` library.
//!
//! [`run`] takes the full argument list (program name first) and returns the
//! exit code together with the text meant for stdout and stderr, so the
//! binary is a thin shell around it and tests can call it directly.

mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use impartial::data::{parse_csv_with, summarize, CsvOptions, Dataset, MomentSummary};
use impartial::diagnostics::diagnose;
use impartial::estimators::{impartial_fit, ols_all, orthogonal_fit, ImpartialFit};
use impartial::resample::{bootstrap, generate_lattice, monte_carlo, SimConfig};
use impartial::Error;

pub use output::{
    num, render_text, BootstrapSummary, Comparison, ComparisonRow, Diagnostics, NamedInterval,
    OutputDocument, Solved, SolvedIntervals, SymmetricForm,
};

/// Condition estimates above this draw a near-singularity warning.
const NEAR_SINGULAR: f64 = 1e10;

#[derive(Debug, Parser)]
#[command(
    name = "impartial",
    version,
    about = "Fit symmetric linear relationships among variables that all carry noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct Input {
    /// CSV file with a header row and one numeric column per variable
    #[arg(long)]
    input: PathBuf,
    /// Skip rows with empty or NA cells instead of failing
    #[arg(long)]
    drop_incomplete_rows: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Impartial fit with diagnostics
    Fit {
        #[command(flatten)]
        input: Input,
        /// Also print the relation solved for this variable
        #[arg(long)]
        solve_for: Option<String>,
    },
    /// Compare impartial, OLS, reverse OLS and orthogonal slopes for one variable
    Compare {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        solve_for: String,
    },
    /// Percentile bootstrap intervals for the impartial fit
    Bootstrap {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        replicates: usize,
        #[arg(long)]
        level: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        solve_for: Option<String>,
    },
    /// Generate lattice data from a TOML config, or run a Monte Carlo comparison
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config
        #[arg(long)]
        seed: u64,
        /// Number of Monte Carlo replicates; without it one dataset is printed as CSV
        #[arg(long)]
        monte_carlo: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

/// Exit code and captured output of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidLevel(_) | Error::NoReplicates => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: rendered,
                    stderr: String::new(),
                },
                _ => Outcome {
                    code: 2,
                    stdout: String::new(),
                    stderr: format!("{}\n", one_line(&rendered)),
                },
            };
        }
    };
    match dispatch(cli.command) {
        Ok(stdout) => Outcome {
            code: 0,
            stdout,
            stderr: String::new(),
        },
        Err(Failure::Usage(msg)) => Outcome {
            code: 2,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        },
        Err(Failure::Data(msg)) => Outcome {
            code: 1,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        },
    }
}

fn dispatch(command: Command) -> Result<String, Failure> {
    match command {
        Command::Fit { input, solve_for } => {
            let d = load(&input)?;
            let doc = fit_inner(&d, solve_for.as_deref())?;
            Ok(emit(&doc, input.format))
        }
        Command::Compare { input, solve_for } => {
            let d = load(&input)?;
            let doc = compare_inner(&d, &solve_for)?;
            Ok(emit(&doc, input.format))
        }
        Command::Bootstrap {
            input,
            replicates,
            level,
            seed,
            solve_for,
        } => {
            let d = load(&input)?;
            let doc = bootstrap_inner(&d, replicates, level, seed, solve_for.as_deref())?;
            Ok(emit(&doc, input.format))
        }
        Command::Simulate {
            config,
            seed,
            monte_carlo: replicates,
            format,
        } => {
            let text = read(&config)?;
            let mut cfg = SimConfig::from_toml(&text)?;
            cfg.seed = seed;
            match replicates {
                None => Ok(generate_lattice(&cfg)?.observed.to_csv()),
                Some(r) => {
                    cfg.replicates = r;
                    let mut doc = OutputDocument::new("simulate");
                    doc.seed = Some(seed);
                    let report = monte_carlo(&cfg)?;
                    for e in &report.estimators {
                        if e.failures > 0 {
                            doc.warnings.push(format!(
                                "{} of {} replicates failed for {}",
                                e.failures, report.replicates, e.name
                            ));
                        }
                    }
                    doc.monte_carlo = Some(report);
                    Ok(emit(&doc, format))
                }
            }
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Data(format!("cannot read '{}': {e}", path.display())))
}

fn load(input: &Input) -> Result<Dataset, Failure> {
    let text = read(&input.input)?;
    let opts = CsvOptions {
        drop_incomplete_rows: input.drop_incomplete_rows,
    };
    Ok(parse_csv_with(text.as_bytes(), opts)?)
}

fn emit(doc: &OutputDocument, format: Format) -> String {
    match format {
        Format::Text => render_text(doc),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(doc).expect("document serializes");
            s.push('\n');
            s
        }
    }
}

fn column(d: &Dataset, name: &str) -> Result<usize, Failure> {
    d.index_of(name)
        .ok_or_else(|| Failure::Data(format!("no column named '{name}' in the input")))
}

fn symmetric(f: &ImpartialFit) -> SymmetricForm {
    SymmetricForm {
        names: f.names.clone(),
        coefficients: f.coefficients.clone(),
        constant: f.constant,
    }
}

fn solved(f: &ImpartialFit, target: usize) -> Result<Solved, Failure> {
    let sf = f.solved_form(target)?;
    Ok(Solved {
        intercept: sf.intercept,
        slopes: sf
            .regressors
            .iter()
            .zip(&sf.slopes)
            .map(|(&j, b)| (f.names[j].clone(), *b))
            .collect(),
    })
}

fn fit_warnings(f: &ImpartialFit) -> Vec<String> {
    let mut w = Vec::new();
    if f.exact {
        w.push("data lie exactly on a hyperplane; residual diagnostics omitted".to_string());
    }
    if !f.sign_consistent {
        let pairs: Vec<String> = f
            .sign_violations
            .iter()
            .map(|&(i, j)| format!("({}, {})", f.names[i], f.names[j]))
            .collect();
        w.push(format!(
            "precision-matrix signs disagree with the fitted signs for {}",
            pairs.join(", ")
        ));
    }
    if let Some(c) = f.condition_estimate.filter(|c| *c > NEAR_SINGULAR) {
        w.push(format!(
            "covariance matrix is nearly singular (condition estimate {})",
            num(c)
        ));
    }
    w
}

/// Fit, diagnostics and warnings shared by every data subcommand.
fn base_document(
    command: &str,
    d: &Dataset,
) -> Result<(OutputDocument, ImpartialFit, MomentSummary), Failure> {
    let s = summarize(d);
    let f = impartial_fit(&s)?;
    let mut doc = OutputDocument::new(command);
    doc.n = Some(d.n());
    doc.p = Some(d.p());
    doc.symmetric_form = Some(symmetric(&f));
    doc.warnings = fit_warnings(&f);
    Ok((doc, f, s))
}

fn fit_inner(d: &Dataset, solve_for: Option<&str>) -> Result<OutputDocument, Failure> {
    let (mut doc, f, s) = base_document("fit", d)?;
    if !f.exact {
        let rep = diagnose(&f, &s)?;
        doc.diagnostics = Some(Diagnostics {
            r_squared: rep.r_squared,
            residual_variance: rep.residual_variance,
            coeff_times_residual_sd: rep.coeff_times_residual_sd,
            partial_correlations: rep.partial_corr.to_rows(),
            sign_consistent: f.sign_consistent,
            condition_estimate: f.condition_estimate,
        });
    }
    if let Some(name) = solve_for {
        let t = column(d, name)?;
        doc.solved.insert(name.to_string(), solved(&f, t)?);
    }
    Ok(doc)
}

fn compare_inner(d: &Dataset, target_name: &str) -> Result<OutputDocument, Failure> {
    let (mut doc, f, s) = base_document("compare", d)?;
    let t = column(d, target_name)?;
    let imp = f.solved_form(t)?;
    doc.solved.insert(target_name.to_string(), solved(&f, t)?);

    let ols = ols_all(&s)?;
    let orth = match orthogonal_fit(&s).and_then(|h| h.solved_form(t)) {
        Ok(sf) => Some(sf),
        Err(e) => {
            doc.warnings
                .push(format!("orthogonal regression unavailable: {e}"));
            None
        }
    };
    let rows = imp
        .regressors
        .iter()
        .zip(&imp.slopes)
        .enumerate()
        .map(|(k, (&j, &slope))| {
            let forward = ols[t].slope_on(j).expect("regressor of target");
            let back = ols[j].slope_on(t).expect("target is a regressor");
            let reverse = (back != 0.0).then(|| 1.0 / back);
            let sandwiched = reverse.is_some_and(|r| {
                let (lo, hi) = if forward.abs() <= r.abs() {
                    (forward.abs(), r.abs())
                } else {
                    (r.abs(), forward.abs())
                };
                let tol = 1e-12 * hi;
                lo - tol <= slope.abs() && slope.abs() <= hi + tol
            });
            ComparisonRow {
                regressor: d.names()[j].clone(),
                impartial: slope,
                ols: forward,
                reverse_ols: reverse,
                orthogonal: orth.as_ref().map(|o| o.slopes[k]),
                sandwiched,
            }
        })
        .collect();
    doc.comparison = Some(Comparison {
        target: target_name.to_string(),
        rows,
    });
    Ok(doc)
}

fn bootstrap_inner(
    d: &Dataset,
    replicates: usize,
    level: f64,
    seed: u64,
    solve_for: Option<&str>,
) -> Result<OutputDocument, Failure> {
    let target = solve_for.map(|name| column(d, name)).transpose()?;
    let res = bootstrap(d, replicates, level, seed)?;
    let (mut doc, f, _) = base_document("bootstrap", d)?;
    doc.seed = Some(seed);
    if res.failed_replicates > 0 {
        doc.warnings.push(format!(
            "{} of {} bootstrap replicates failed to fit",
            res.failed_replicates, res.replicates
        ));
    }
    if res.unreliable {
        doc.warnings
            .push("5% or more of the replicates failed; intervals are unreliable".to_string());
    }
    let names = d.names();
    let solved_iv = match target {
        Some(t) => {
            doc.solved.insert(names[t].clone(), solved(&f, t)?);
            let (intercept, slopes) = res.solved_intervals(t)?;
            let regressors = (0..d.p()).filter(|&j| j != t);
            Some(SolvedIntervals {
                target: names[t].clone(),
                intercept: NamedInterval::new("intercept", &intercept),
                slopes: regressors
                    .zip(&slopes)
                    .map(|(j, iv)| NamedInterval::new(&names[j], iv))
                    .collect(),
            })
        }
        None => None,
    };
    doc.bootstrap = Some(BootstrapSummary {
        replicates: res.replicates,
        level: res.level,
        failed_replicates: res.failed_replicates,
        unreliable: res.unreliable,
        reference: names[res.reference_row].clone(),
        ratio_intervals: names
            .iter()
            .zip(&res.intervals)
            .map(|(n, iv)| NamedInterval::new(n, iv))
            .collect(),
        solved: solved_iv,
    });
    Ok(doc)
}

/// Clap's message without the usage block, folded onto one line.
fn one_line(rendered: &str) -> String {
    rendered
        .lines()
        .take_while(|l| !l.trim().is_empty())
        .map(str::trim)
        .collect::<Vec<_>>()
        .join(" ")
}

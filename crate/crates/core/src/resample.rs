//! Bootstrap intervals, synthetic lattice data and the Monte Carlo harness.
//!
//! Randomness comes from ChaCha8. Replicate `r` of any run seeded with `s`
//! draws from stream `r` of the generator keyed by `s`, so results do not
//! depend on how replicates are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{summarize, Dataset};
use crate::diagnostics::reliability;
use crate::error::{Error, Result};
use crate::estimators::{impartial_fit, ols_single, orthogonal_fit, SolvedForm};

/// Generator for replicate `index` of a run keyed by `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

/// One successful bootstrap replicate, sign-aligned to the point estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub coefficients: Vec<f64>,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub names: Vec<String>,
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    pub failed_replicates: usize,
    /// Set when 5% or more of the replicates failed to fit.
    pub unreliable: bool,
    /// Reference variable of the point estimate; intervals are ratios to its coefficient.
    pub reference_row: usize,
    pub coefficients: Vec<f64>,
    pub constant: f64,
    /// Percentile intervals for `b_j / b_reference`.
    pub intervals: Vec<Interval>,
    pub draws: Vec<Draw>,
}

impl BootstrapResult {
    /// Percentile intervals for the intercept and slopes with `target` isolated.
    pub fn solved_intervals(&self, target: usize) -> Result<(Interval, Vec<Interval>)> {
        let point = SolvedForm::from_symmetric(&self.coefficients, self.constant, target)?;
        let mut intercepts = Vec::with_capacity(self.draws.len());
        let mut slopes = vec![Vec::with_capacity(self.draws.len()); point.slopes.len()];
        for d in &self.draws {
            // a replicate whose target coefficient vanished has no solved form
            let Ok(sf) = SolvedForm::from_symmetric(&d.coefficients, d.constant, target) else {
                continue;
            };
            intercepts.push(sf.intercept);
            for (acc, v) in slopes.iter_mut().zip(sf.slopes) {
                acc.push(v);
            }
        }
        if intercepts.is_empty() {
            return Err(Error::ZeroCoefficient { index: target });
        }
        let alpha = 1.0 - self.level;
        let interval = |pt: f64, mut xs: Vec<f64>| {
            xs.sort_by(f64::total_cmp);
            Interval {
                point: pt,
                lower: nearest_rank(&xs, alpha / 2.0),
                upper: nearest_rank(&xs, 1.0 - alpha / 2.0),
            }
        };
        Ok((
            interval(point.intercept, intercepts),
            point
                .slopes
                .iter()
                .zip(slopes)
                .map(|(pt, xs)| interval(*pt, xs))
                .collect(),
        ))
    }
}

/// Nearest-rank percentile of sorted data.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let m = sorted.len();
    let rank = ((q * m as f64) - 1e-9).ceil().clamp(1.0, m as f64) as usize;
    sorted[rank - 1]
}

/// Case-resampling bootstrap of the impartial fit.
pub fn bootstrap(d: &Dataset, replicates: usize, level: f64, seed: u64) -> Result<BootstrapResult> {
    if replicates == 0 {
        return Err(Error::NoReplicates);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    let base = impartial_fit(&summarize(d))?;
    let n = d.n();
    let k = base.reference_row;

    let fits: Vec<Option<Draw>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let sample = d.select_rows(&rows).ok()?;
            let fit = impartial_fit(&summarize(&sample)).ok()?;
            let agree: f64 = fit
                .coefficients
                .iter()
                .zip(&base.coefficients)
                .map(|(a, b)| a * b)
                .sum();
            let flip = if agree < 0.0 { -1.0 } else { 1.0 };
            Some(Draw {
                coefficients: fit.coefficients.iter().map(|b| flip * b).collect(),
                constant: flip * fit.constant,
            })
        })
        .collect();

    let draws: Vec<Draw> = fits.into_iter().flatten().collect();
    let failed = replicates - draws.len();
    if draws.is_empty() {
        return Err(Error::AllReplicatesFailed(replicates));
    }

    let alpha = 1.0 - level;
    let intervals = (0..base.p())
        .map(|j| {
            let mut ratios: Vec<f64> = draws
                .iter()
                .map(|dr| dr.coefficients[j] / dr.coefficients[k])
                .filter(|v| v.is_finite())
                .collect();
            ratios.sort_by(f64::total_cmp);
            let point = base.coefficients[j] / base.coefficients[k];
            if ratios.is_empty() {
                return Interval {
                    point,
                    lower: f64::NAN,
                    upper: f64::NAN,
                };
            }
            Interval {
                point,
                lower: nearest_rank(&ratios, alpha / 2.0),
                upper: nearest_rank(&ratios, 1.0 - alpha / 2.0),
            }
        })
        .collect();

    Ok(BootstrapResult {
        names: d.names().to_vec(),
        replicates,
        level,
        seed,
        failed_replicates: failed,
        unreliable: failed as f64 / replicates as f64 >= 0.05,
        reference_row: k,
        coefficients: base.coefficients,
        constant: base.constant,
        intervals,
        draws,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    #[default]
    Gaussian,
    /// Uniform on `[−√3·sd, √3·sd]`.
    Uniform,
}

/// Simulation setup. The law is `y = constant + Σ beta_j x_j` over a full
/// factorial lattice of the x-levels; every variable, `y` last, receives
/// independent noise with the matching `noise_sd` entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub levels: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub constant: f64,
    pub noise_sd: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub noise: NoiseFamily,
}

fn default_replicates() -> usize {
    1000
}

impl SimConfig {
    /// Six-by-six lattice for `y = 1 + 2 x1 + 3 x2` with unit noise on every
    /// variable. Level spacing 1.68 gives a noise-free x sample variance of
    /// about 8.47; the lattice is centred at (0.9, 0.88).
    pub fn lattice_6x6(seed: u64) -> SimConfig {
        let spaced = |centre: f64| (0..6).map(|k| centre + 1.68 * (k as f64 - 2.5)).collect();
        SimConfig {
            levels: vec![spaced(0.9), spaced(0.88)],
            beta: vec![2.0, 3.0],
            constant: 1.0,
            noise_sd: vec![1.0, 1.0, 1.0],
            seed,
            replicates: 1000,
            noise: NoiseFamily::Gaussian,
        }
    }

    pub fn from_toml(text: &str) -> Result<SimConfig> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.levels.len();
        if m == 0 {
            return Err(Error::InvalidConfig(
                "at least one x-variable is required".into(),
            ));
        }
        for (j, lv) in self.levels.iter().enumerate() {
            if lv.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "levels[{j}] has a non-finite value"
                )));
            }
            let first = lv.first().copied();
            if lv.len() < 2 || lv.iter().all(|v| Some(*v) == first) {
                return Err(Error::InvalidConfig(format!(
                    "levels[{j}] needs at least 2 distinct values"
                )));
            }
        }
        if self.beta.len() != m {
            return Err(Error::InvalidConfig(format!(
                "beta has {} entries, expected {m}",
                self.beta.len()
            )));
        }
        if self.noise_sd.len() != m + 1 {
            return Err(Error::InvalidConfig(format!(
                "noise_sd has {} entries, expected {}",
                self.noise_sd.len(),
                m + 1
            )));
        }
        if self.noise_sd.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "noise_sd entries must be finite and >= 0".into(),
            ));
        }
        if self
            .beta
            .iter()
            .chain([&self.constant])
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidConfig(
                "beta and constant must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        (1..=self.levels.len())
            .map(|j| format!("x{j}"))
            .chain(["y".to_string()])
            .collect()
    }
}

/// Observed (noisy) data together with the noise-free values behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSample {
    pub observed: Dataset,
    pub truth: Dataset,
}

/// Draws one dataset using stream 0 of `cfg.seed`.
pub fn generate_lattice(cfg: &SimConfig) -> Result<LatticeSample> {
    cfg.validate()?;
    generate_lattice_with(cfg, &mut replicate_rng(cfg.seed, 0))
}

pub fn generate_lattice_with<R: Rng>(cfg: &SimConfig, rng: &mut R) -> Result<LatticeSample> {
    let m = cfg.levels.len();
    let total: usize = cfg.levels.iter().map(Vec::len).product();
    let mut truth = vec![Vec::with_capacity(total); m + 1];
    // odometer over the factorial design, last variable fastest
    let mut idx = vec![0usize; m];
    for _ in 0..total {
        let mut y = cfg.constant;
        for j in 0..m {
            let x = cfg.levels[j][idx[j]];
            truth[j].push(x);
            y += cfg.beta[j] * x;
        }
        truth[m].push(y);
        for j in (0..m).rev() {
            idx[j] += 1;
            if idx[j] < cfg.levels[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }

    let mut observed = truth.clone();
    // row-major noise draws so that the stream layout is independent of p
    for i in 0..total {
        for (col, sd) in observed.iter_mut().zip(&cfg.noise_sd) {
            let z = match cfg.noise {
                NoiseFamily::Gaussian => rng.sample::<f64, _>(StandardNormal),
                NoiseFamily::Uniform => 3f64.sqrt() * rng.random_range(-1.0..1.0),
            };
            col[i] += sd * z;
        }
    }
    let names = cfg.names();
    Ok(LatticeSample {
        observed: Dataset::new(names.clone(), observed)?,
        truth: Dataset::new(names, truth)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub name: String,
    /// Mean of the solved-for-y slopes over successful replicates.
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub replicates: usize,
    pub seed: u64,
    pub regressors: Vec<String>,
    pub beta: Vec<f64>,
    pub estimators: Vec<EstimatorSummary>,
    /// Mean over replicates of `var(true) / var(observed)`, per variable.
    pub mean_reliability: Vec<f64>,
}

impl MonteCarloReport {
    pub fn estimator(&self, name: &str) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|e| e.name == name)
    }
}

pub const ESTIMATOR_NAMES: [&str; 3] = ["impartial", "ols", "orthogonal"];

struct ReplicateOutcome {
    slopes: [Option<Vec<f64>>; 3],
    reliability: Option<Vec<f64>>,
}

fn run_replicate(cfg: &SimConfig, r: usize) -> Result<ReplicateOutcome> {
    let sample = generate_lattice_with(cfg, &mut replicate_rng(cfg.seed, r as u64))?;
    let s = summarize(&sample.observed);
    let target = cfg.levels.len();
    let impartial = impartial_fit(&s).and_then(|f| f.solved_form(target));
    let ols = ols_single(&s, target).map(|f| f.slopes);
    let orth = orthogonal_fit(&s).and_then(|h| h.solved_form(target));
    let truth = summarize(&sample.truth);
    let reliability = (0..=target)
        .map(|j| reliability(truth.variance(j), s.variance(j)))
        .collect::<Result<Vec<_>>>()
        .ok();
    Ok(ReplicateOutcome {
        slopes: [
            impartial.ok().map(|f| f.slopes),
            ols.ok(),
            orth.ok().map(|f| f.slopes),
        ],
        reliability,
    })
}

/// Repeats the lattice experiment `cfg.replicates` times and summarizes the
/// solved-for-y slopes of each estimator.
pub fn monte_carlo(cfg: &SimConfig) -> Result<MonteCarloReport> {
    cfg.validate()?;
    if cfg.replicates == 0 {
        return Err(Error::NoReplicates);
    }
    let outcomes: Vec<ReplicateOutcome> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(cfg, r))
        .collect::<Result<_>>()?;

    let m = cfg.levels.len();
    let estimators = ESTIMATOR_NAMES
        .iter()
        .enumerate()
        .map(|(e, name)| {
            let ok: Vec<&Vec<f64>> = outcomes
                .iter()
                .filter_map(|o| o.slopes[e].as_ref())
                .collect();
            let (mean, sd) = mean_sd(&ok, m);
            EstimatorSummary {
                name: name.to_string(),
                mean,
                sd,
                failures: outcomes.len() - ok.len(),
            }
        })
        .collect();
    let rel: Vec<&Vec<f64>> = outcomes
        .iter()
        .filter_map(|o| o.reliability.as_ref())
        .collect();
    Ok(MonteCarloReport {
        replicates: cfg.replicates,
        seed: cfg.seed,
        regressors: cfg.names()[..m].to_vec(),
        beta: cfg.beta.clone(),
        estimators,
        mean_reliability: mean_sd(&rel, m + 1).0,
    })
}

fn mean_sd(rows: &[&Vec<f64>], width: usize) -> (Vec<f64>, Vec<f64>) {
    let count = rows.len() as f64;
    let mean: Vec<f64> = (0..width)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / count)
        .collect();
    let sd = (0..width)
        .map(|j| {
            if rows.len() < 2 {
                return f64::NAN;
            }
            let ss: f64 = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum();
            (ss / (count - 1.0)).sqrt()
        })
        .collect();
    (mean, sd)
}

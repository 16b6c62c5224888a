//! Fitting procedures.
//!
//! The impartial fit writes the relation symmetrically as `Σ b_j x_j = constant`
//! with `|b_j| = √c_jj`, where `c_jj` is the j-th diagonal entry of the inverse
//! sample covariance. The remaining estimators (bivariate GMFR, every OLS
//! regression, orthogonal regression) are here for comparison and diagnostics.

use serde::{Deserialize, Serialize};

use crate::data::MomentSummary;
use crate::error::{Error, Result};
use crate::symlin::{jacobi_eigen_with, spd_inverse_with, NumericOptions, SquareSym};

/// Symmetric-form fit `Σ coefficients[j] · x_j = constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpartialFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub constant: f64,
    /// Variable whose coefficient is positive and whose precision-matrix row supplied the signs.
    pub reference_row: usize,
    /// Whether every off-diagonal sign of the precision matrix agrees with the chosen signs.
    pub sign_consistent: bool,
    /// Pairs `(i, j)`, `i < j`, whose precision-matrix sign disagrees with `sign_i · sign_j`.
    pub sign_violations: Vec<(usize, usize)>,
    /// True when recovered from a singular covariance (noise-free data).
    pub exact: bool,
    /// Diagonal of the inverse covariance; `None` on the exact path.
    pub precision_diag: Option<Vec<f64>>,
    pub condition_estimate: Option<f64>,
    pub means: Vec<f64>,
}

impl ImpartialFit {
    pub fn p(&self) -> usize {
        self.coefficients.len()
    }

    /// Intercept and slopes with `target` isolated on the left-hand side.
    pub fn solved_form(&self, target: usize) -> Result<SolvedForm> {
        SolvedForm::from_symmetric(&self.coefficients, self.constant, target)
    }
}

/// `x_target = intercept + Σ slopes[k] · x_{regressors[k]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedForm {
    pub target: usize,
    pub intercept: f64,
    pub regressors: Vec<usize>,
    pub slopes: Vec<f64>,
}

impl SolvedForm {
    /// Rearranges `Σ coefficients[j] · x_j = constant` to isolate `target`.
    pub fn from_symmetric(
        coefficients: &[f64],
        constant: f64,
        target: usize,
    ) -> Result<SolvedForm> {
        let p = coefficients.len();
        if target >= p {
            return Err(Error::IndexOutOfRange { index: target, p });
        }
        let bt = coefficients[target];
        if bt == 0.0 {
            return Err(Error::ZeroCoefficient { index: target });
        }
        let regressors: Vec<usize> = (0..p).filter(|&j| j != target).collect();
        Ok(SolvedForm {
            target,
            intercept: constant / bt,
            slopes: regressors.iter().map(|&j| -coefficients[j] / bt).collect(),
            regressors,
        })
    }
}

/// Straight line `x_i = intercept + slope · x_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares regression of `dependent` on every other variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub dependent: usize,
    pub regressors: Vec<usize>,
    pub slopes: Vec<f64>,
    pub intercept: f64,
    pub r_squared: f64,
    /// Conditional variance of the dependent variable given the rest, `1 / c_jj`.
    pub residual_variance: f64,
}

impl OlsFit {
    /// Slope on regressor `j`, if `j` is a regressor.
    pub fn slope_on(&self, j: usize) -> Option<f64> {
        self.regressors
            .iter()
            .position(|&r| r == j)
            .map(|k| self.slopes[k])
    }
}

/// Orthogonal (total least squares) hyperplane `normal · x = constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneFit {
    pub normal: Vec<f64>,
    pub constant: f64,
}

impl HyperplaneFit {
    pub fn solved_form(&self, target: usize) -> Result<SolvedForm> {
        SolvedForm::from_symmetric(&self.normal, self.constant, target)
    }
}

fn sign_of(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = j;
        }
    }
    best
}

/// Lowest index whose value is within `REFERENCE_TIE` (relative) of the maximum.
fn argmax_with_ties(values: &[f64]) -> usize {
    let max = values[argmax_first(values)];
    values
        .iter()
        .position(|v| *v >= max * (1.0 - REFERENCE_TIE))
        .unwrap_or(0)
}

// Two variables are always tied on 1/(1 − R²); rounding must not break the tie.
const REFERENCE_TIE: f64 = 1e-9;

/// The impartial (perfect-correlation) fit.
///
/// Magnitudes are `√c_jj`. Signs come from row `k` of the precision matrix,
/// where `k` maximizes `c_kk · s_k²` (equivalently `R²_k`), with `b_k > 0`. When the correlation matrix has exactly
/// one null direction the data satisfy a linear law exactly; that direction
/// is returned with `exact = true`.
pub fn impartial_fit(s: &MomentSummary) -> Result<ImpartialFit> {
    impartial_fit_with(s, &NumericOptions::default())
}

pub fn impartial_fit_with(s: &MomentSummary, opts: &NumericOptions) -> Result<ImpartialFit> {
    let p = s.p();
    if p < 2 {
        return Err(Error::TooFewVariables);
    }
    if s.n <= p {
        return Err(Error::TooFewObservations { n: s.n, p });
    }
    s.require_positive_variances()?;

    // Singularity is judged on the correlation matrix so that the decision
    // does not depend on measurement units.
    let eig = jacobi_eigen_with(&s.corr, opts)?;
    let largest = eig.eigenvalues[p - 1];
    let null_dim = eig
        .eigenvalues
        .iter()
        .take_while(|&&l| l < opts.exact_eigen_ratio * largest)
        .count();
    if null_dim > 1 {
        return Err(Error::DegenerateNullSpace { dim: null_dim });
    }
    if null_dim == 1 {
        return Ok(exact_fit(s, &eig.eigenvectors[0]));
    }

    let inv = spd_inverse_with(&s.cov, opts)?;
    let c = &inv.inverse;
    let diag = c.diag();
    // c_jj · s_j² = 1 / (1 − R²_j): the best-determined variable, in unit-free terms
    let determination: Vec<f64> = diag
        .iter()
        .enumerate()
        .map(|(j, d)| d * s.variance(j))
        .collect();
    let k = argmax_with_ties(&determination);
    let signs: Vec<f64> = (0..p)
        .map(|j| if j == k { 1.0 } else { sign_of(c.get(k, j)) })
        .collect();
    let coefficients: Vec<f64> = diag
        .iter()
        .zip(&signs)
        .map(|(d, sg)| sg * d.sqrt())
        .collect();
    let sign_violations = sign_violations(c, &signs);
    Ok(ImpartialFit {
        names: s.names.clone(),
        constant: dot(&coefficients, &s.means),
        coefficients,
        reference_row: k,
        sign_consistent: sign_violations.is_empty(),
        sign_violations,
        exact: false,
        precision_diag: Some(diag),
        condition_estimate: Some(inv.condition_estimate),
        means: s.means.clone(),
    })
}

fn sign_violations(c: &SquareSym, signs: &[f64]) -> Vec<(usize, usize)> {
    let p = c.dim();
    let mut out = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            // the precision entry of an exact relation has the sign of b_i·b_j
            if sign_of(c.get(i, j)) != signs[i] * signs[j] {
                out.push((i, j));
            }
        }
    }
    out
}

fn exact_fit(s: &MomentSummary, null_vector: &[f64]) -> ImpartialFit {
    // null vector u of the correlation matrix; in original units b_j = u_j / s_j
    let k = argmax_first(&null_vector.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let flip = sign_of(null_vector[k]);
    let coefficients: Vec<f64> = null_vector
        .iter()
        .zip(&s.stds)
        .map(|(u, sd)| flip * u / sd)
        .collect();
    ImpartialFit {
        names: s.names.clone(),
        constant: dot(&coefficients, &s.means),
        coefficients,
        reference_row: k,
        sign_consistent: true,
        sign_violations: Vec::new(),
        exact: true,
        precision_diag: None,
        condition_estimate: None,
        means: s.means.clone(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Geometric-mean functional relationship of variable `i` on variable `j`:
/// slope `sign(r) · s_i / s_j` through the means.
pub fn gmfr_bivariate(s: &MomentSummary, i: usize, j: usize) -> Result<LineFit> {
    gmfr_bivariate_with(s, i, j, &NumericOptions::default())
}

pub fn gmfr_bivariate_with(
    s: &MomentSummary,
    i: usize,
    j: usize,
    opts: &NumericOptions,
) -> Result<LineFit> {
    s.check_index(i)?;
    s.check_index(j)?;
    for v in [i, j] {
        if s.zero_variance[v] {
            return Err(Error::ZeroVariance {
                column: s.names[v].clone(),
            });
        }
    }
    let r = s.corr.get(i, j);
    if !(r.abs() >= opts.sign_tolerance) {
        return Err(Error::SignUndefined { corr: r });
    }
    let slope = sign_of(r) * s.stds[i] / s.stds[j];
    Ok(LineFit {
        slope,
        intercept: s.means[i] - slope * s.means[j],
    })
}

/// Every OLS regression at once, read off the rows of the precision matrix.
///
/// Entry `j` regresses variable `j` on the others: slope on regressor `i`
/// is `−c_ji / c_jj`, `R²_j = 1 − 1/(c_jj · s_j²)`, residual variance `1/c_jj`.
pub fn ols_all(s: &MomentSummary) -> Result<Vec<OlsFit>> {
    ols_all_with(s, &NumericOptions::default())
}

pub fn ols_all_with(s: &MomentSummary, opts: &NumericOptions) -> Result<Vec<OlsFit>> {
    let inv = spd_inverse_with(&s.cov, opts)?.inverse;
    Ok((0..s.p()).map(|j| ols_row(s, &inv, j)).collect())
}

fn ols_row(s: &MomentSummary, inv: &SquareSym, j: usize) -> OlsFit {
    let p = s.p();
    let cjj = inv.get(j, j);
    let regressors: Vec<usize> = (0..p).filter(|&i| i != j).collect();
    let slopes: Vec<f64> = regressors.iter().map(|&i| -inv.get(j, i) / cjj).collect();
    let intercept = s.means[j]
        - regressors
            .iter()
            .zip(&slopes)
            .map(|(&i, b)| b * s.means[i])
            .sum::<f64>();
    // c_jj · s_j² is the j-th diagonal of the inverse correlation matrix
    let inv_corr_jj = cjj * s.variance(j);
    OlsFit {
        dependent: j,
        regressors,
        slopes,
        intercept,
        r_squared: 1.0 - 1.0 / inv_corr_jj,
        residual_variance: 1.0 / cjj,
    }
}

/// OLS of one variable on the rest. Only the regressor block of the
/// covariance is inverted, so an exact linear law in `dep` is allowed.
pub fn ols_single(s: &MomentSummary, dep: usize) -> Result<OlsFit> {
    s.check_index(dep)?;
    s.require_positive_variances()?;
    let regressors: Vec<usize> = (0..s.p()).filter(|&i| i != dep).collect();
    let kxx = SquareSym::from_fn(regressors.len(), |a, b| {
        s.cov.get(regressors[a], regressors[b])
    });
    let kxy: Vec<f64> = regressors.iter().map(|&i| s.cov.get(i, dep)).collect();
    let inv = spd_inverse_with(&kxx, &NumericOptions::default())?.inverse;
    let slopes = inv.mul_vec(&kxy);
    let explained = dot(&slopes, &kxy);
    let var_y = s.variance(dep);
    let residual_variance = (var_y - explained).max(0.0);
    let intercept = s.means[dep]
        - regressors
            .iter()
            .zip(&slopes)
            .map(|(&i, b)| b * s.means[i])
            .sum::<f64>();
    Ok(OlsFit {
        dependent: dep,
        regressors,
        slopes,
        intercept,
        r_squared: 1.0 - residual_variance / var_y,
        residual_variance,
    })
}

/// Orthogonal regression: the hyperplane normal is the eigenvector of the
/// smallest covariance eigenvalue, oriented so its first nonzero entry is positive.
pub fn orthogonal_fit(s: &MomentSummary) -> Result<HyperplaneFit> {
    orthogonal_fit_with(s, &NumericOptions::default())
}

pub fn orthogonal_fit_with(s: &MomentSummary, opts: &NumericOptions) -> Result<HyperplaneFit> {
    let eig = jacobi_eigen_with(&s.cov, opts)?;
    let ev = &eig.eigenvalues;
    let scale = ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if ev.len() > 1 && (ev[1] - ev[0]).abs() <= opts.ambiguity_tolerance * scale {
        return Err(Error::AmbiguousDirection);
    }
    let mut normal = eig.eigenvectors[0].clone();
    let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    let first = normal.iter().copied().find(|v| *v != 0.0).unwrap_or(1.0);
    let flip = sign_of(first) / norm;
    normal.iter_mut().for_each(|v| *v *= flip);
    Ok(HyperplaneFit {
        constant: dot(&normal, &s.means),
        normal,
    })
}

/// Value of `x_target` on the fitted hyperplane given the other variables,
/// listed in index order with `target` skipped.
pub fn solve_for(f: &ImpartialFit, target: usize, others: &[f64]) -> Result<f64> {
    let p = f.p();
    if target >= p {
        return Err(Error::IndexOutOfRange { index: target, p });
    }
    if others.len() != p - 1 {
        return Err(Error::DimensionMismatch {
            expected: p - 1,
            actual: others.len(),
        });
    }
    let bt = f.coefficients[target];
    if bt == 0.0 {
        return Err(Error::ZeroCoefficient { index: target });
    }
    let rest: f64 = (0..p)
        .filter(|&j| j != target)
        .zip(others)
        .map(|(j, v)| f.coefficients[j] * v)
        .sum();
    Ok((f.constant - rest) / bt)
}

/// Partial rate of change of `x_i` with `x_j` on the fitted hyperplane, `−b_j / b_i`.
pub fn pairwise_slope(f: &ImpartialFit, i: usize, j: usize) -> Result<f64> {
    let p = f.p();
    for idx in [i, j] {
        if idx >= p {
            return Err(Error::IndexOutOfRange { index: idx, p });
        }
    }
    let bi = f.coefficients[i];
    if bi == 0.0 {
        return Err(Error::ZeroCoefficient { index: i });
    }
    Ok(-f.coefficients[j] / bi)
}

//! Quantities derived from a fit: partial correlations, R², per-dimension
//! residual variances, reliability and the bivariate inflation factors.

use serde::{Deserialize, Serialize};

use crate::data::MomentSummary;
use crate::error::{Error, Result};
use crate::estimators::{gmfr_bivariate_with, ImpartialFit};
use crate::symlin::{spd_inverse_with, NumericOptions, SquareSym};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub partial_corr: SquareSym,
    pub r_squared: Vec<f64>,
    /// Variance of the fitted-plane residual measured along each variable.
    pub residual_variance: Vec<f64>,
    /// `|b_j| · √residual_variance_j`; identical across j up to rounding.
    pub coeff_times_residual_sd: Vec<f64>,
    pub sign_violations: Vec<(usize, usize)>,
}

/// Off-diagonal `−c_ij / √(c_ii c_jj)`, unit diagonal.
pub fn partial_correlations(inv_cov: &SquareSym) -> SquareSym {
    SquareSym::from_fn(inv_cov.dim(), |i, j| {
        if i == j {
            1.0
        } else {
            -inv_cov.get(i, j) / (inv_cov.get(i, i) * inv_cov.get(j, j)).sqrt()
        }
    })
}

/// `R²_j = 1 − 1 / (R⁻¹)_jj` from the inverse correlation matrix.
pub fn r_squared_all(inv_corr: &SquareSym) -> Result<Vec<f64>> {
    inv_corr
        .diag()
        .into_iter()
        .enumerate()
        .map(|(j, d)| {
            if !(d >= 1.0 - 1e-9) {
                Err(Error::NumericalInconsistency(format!(
                    "inverse correlation diagonal {d} < 1 for variable {j}"
                )))
            } else {
                Ok(1.0 - 1.0 / d)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub residual_variance: Vec<f64>,
    pub coeff_times_residual_sd: Vec<f64>,
}

/// Residual variance along each dimension, `bᵀKb / b_j²`, computed from moments.
pub fn residual_stats(f: &ImpartialFit, s: &MomentSummary) -> Result<ResidualStats> {
    if f.exact {
        return Err(Error::ExactFit);
    }
    if f.p() != s.p() {
        return Err(Error::DimensionMismatch {
            expected: s.p(),
            actual: f.p(),
        });
    }
    if let Some(j) = f.coefficients.iter().position(|b| *b == 0.0) {
        return Err(Error::ZeroCoefficient { index: j });
    }
    let q = s.cov.quadratic_form(&f.coefficients);
    let residual_variance: Vec<f64> = f.coefficients.iter().map(|b| q / (b * b)).collect();
    let coeff_times_residual_sd = f
        .coefficients
        .iter()
        .zip(&residual_variance)
        .map(|(b, v)| b.abs() * v.sqrt())
        .collect();
    Ok(ResidualStats {
        residual_variance,
        coeff_times_residual_sd,
    })
}

/// `var_true / var_observed`.
pub fn reliability(var_true: f64, var_observed: f64) -> Result<f64> {
    if !(var_observed > 0.0) || !(var_true >= 0.0) || var_true > var_observed {
        return Err(Error::OutOfRange(format!(
            "reliability needs 0 <= var_true <= var_observed and var_observed > 0, \
             got {var_true} and {var_observed}"
        )));
    }
    Ok(var_true / var_observed)
}

/// Factors by which the GMFR line inflates the residual sum of squares
/// relative to the least-squares minimum in each direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenallReport {
    /// Residuals measured along variable `i` (regression of `i` on `j`).
    pub inflation_i: f64,
    /// Residuals measured along variable `j`.
    pub inflation_j: f64,
}

pub fn greenall_report(s: &MomentSummary, i: usize, j: usize) -> Result<GreenallReport> {
    let opts = NumericOptions::default();
    let line = gmfr_bivariate_with(s, i, j, &opts)?;
    let r = s.corr.get(i, j);
    let unexplained = 1.0 - r * r;
    if unexplained <= f64::EPSILON {
        // both sums of squares vanish; the ratio tends to 1
        return Ok(GreenallReport {
            inflation_i: 1.0,
            inflation_j: 1.0,
        });
    }
    // residual sum of squares (per n − 1) of u − a − b v through the means
    let sse = |u: usize, v: usize, slope: f64| {
        s.variance(u) - 2.0 * slope * s.cov.get(u, v) + slope * slope * s.variance(v)
    };
    Ok(GreenallReport {
        inflation_i: sse(i, j, line.slope) / (s.variance(i) * unexplained),
        inflation_j: sse(j, i, 1.0 / line.slope) / (s.variance(j) * unexplained),
    })
}

/// Full report for a non-exact fit.
pub fn diagnose(f: &ImpartialFit, s: &MomentSummary) -> Result<DiagnosticsReport> {
    let opts = NumericOptions::default();
    let inv_cov = spd_inverse_with(&s.cov, &opts)?.inverse;
    let inv_corr = spd_inverse_with(&s.corr, &opts)?.inverse;
    let stats = residual_stats(f, s)?;
    Ok(DiagnosticsReport {
        partial_corr: partial_correlations(&inv_cov),
        r_squared: r_squared_all(&inv_corr)?,
        residual_variance: stats.residual_variance,
        coeff_times_residual_sd: stats.coeff_times_residual_sd,
        sign_violations: f.sign_violations.clone(),
    })
}

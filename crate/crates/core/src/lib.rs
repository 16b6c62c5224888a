//! Impartial fitting of a linear functional relationship among several noisy
//! variables.
//!
//! No variable is treated as dependent. The fitted relation is written
//! symmetrically as `Σ b_j x_j = constant`, with coefficient magnitudes equal
//! to the square roots of the diagonal of the inverse sample covariance and
//! signs taken from one row of that inverse. The hyperplane passes through the
//! point of means.
//!
//! ```
//! use impartial::data::{parse_csv, summarize};
//! use impartial::estimators::impartial_fit;
//!
//! let d = parse_csv(b"x,y\n0,0.1\n1,2.2\n2,3.8\n3,6.1\n").unwrap();
//! let fit = impartial_fit(&summarize(&d)).unwrap();
//! let y_on_x = fit.solved_form(1).unwrap();
//! assert!((y_on_x.slopes[0] - 1.97).abs() < 0.01);
//! ```
//!
//! Modules:
//! - [`symlin`]: packed symmetric matrices, Cholesky, SPD inverse, Jacobi eigensolver
//! - [`data`]: CSV ingestion, moments, standardization
//! - [`estimators`]: impartial fit, bivariate GMFR, OLS family, orthogonal regression
//! - [`diagnostics`]: partial correlations, R², residual variances, reliability
//! - [`resample`]: bootstrap, lattice simulation, Monte Carlo comparison

// NaN must fail these checks, hence `!(x >= 0.0)` over `x < 0.0`
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod resample;
pub mod symlin;

pub use error::{Error, Result};

//! Small dense symmetric matrices: Cholesky factorization, SPD inversion and
//! a cyclic Jacobi eigensolver.
//!
//! Everything here is sized for covariance matrices of a handful to a few
//! hundred variables. Storage is packed so that `get(i, j)` and `get(j, i)`
//! read the same slot.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances shared by the numeric routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericOptions {
    /// Cholesky pivots at or below `dim * EPSILON * max_diag * pivot_factor` are rejected.
    pub pivot_factor: f64,
    /// Jacobi stops once every off-diagonal magnitude is below this times the max-abs norm.
    pub jacobi_tolerance: f64,
    pub jacobi_max_sweeps: usize,
    /// Minimum |r| for the bivariate sign rule.
    pub sign_tolerance: f64,
    /// Correlation eigenvalues below this fraction of the largest count as null directions.
    pub exact_eigen_ratio: f64,
    /// Relative gap under which the two smallest covariance eigenvalues count as tied.
    pub ambiguity_tolerance: f64,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions {
            pivot_factor: 1.0,
            jacobi_tolerance: 1e-12,
            jacobi_max_sweeps: 100,
            sign_tolerance: 1e-8,
            exact_eigen_ratio: 1e-12,
            ambiguity_tolerance: 1e-10,
        }
    }
}

/// A `dim × dim` symmetric matrix with one storage slot per unordered pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareSym {
    dim: usize,
    // upper triangle, row-major: (i, j) with i <= j
    packed: Vec<f64>,
}

#[inline]
fn packed_index(dim: usize, i: usize, j: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    r * dim - r * (r + 1) / 2 + c
}

impl SquareSym {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SquareSym needs dim >= 1");
        SquareSym {
            dim,
            packed: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds from a function of the upper triangle (`i <= j`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds from square row-major rows, reading the upper triangle only.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(self.dim, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = packed_index(self.dim, i, j);
        self.packed[k] = value;
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.packed.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `vᵀ M v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Dense product `self · other`; generally not symmetric.
    pub fn matmul(&self, other: &SquareSym) -> Vec<Vec<f64>> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum())
                    .collect()
            })
            .collect()
    }

    /// `D M D` for diagonal `D = diag(scale)`.
    pub fn scaled(&self, scale: &[f64]) -> SquareSym {
        SquareSym::from_fn(self.dim, |i, j| self.get(i, j) * scale[i] * scale[j])
    }

    /// Reorders rows and columns: entry `(i, j)` of the result is `(perm[i], perm[j])` of self.
    pub fn permuted(&self, perm: &[usize]) -> SquareSym {
        SquareSym::from_fn(self.dim, |i, j| self.get(perm[i], perm[j]))
    }
}

/// Lower-triangular Cholesky factor, dense row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerTriangular {
    dim: usize,
    data: Vec<f64>,
}

impl LowerTriangular {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.data[i * self.dim + j]
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Rebuilds `L Lᵀ`.
    pub fn reconstruct(&self) -> SquareSym {
        SquareSym::from_fn(self.dim, |i, j| {
            (0..=i.min(j))
                .map(|k| self.get(i, k) * self.get(j, k))
                .sum()
        })
    }

    /// Inverse of `L Lᵀ`, formed as `L⁻ᵀ L⁻¹`.
    fn inverse_of_product(&self) -> SquareSym {
        let n = self.dim;
        // W = L⁻¹, lower triangular, by forward substitution on each unit column
        let mut w = vec![0.0; n * n];
        for col in 0..n {
            for i in col..n {
                let mut sum = if i == col { 1.0 } else { 0.0 };
                for k in col..i {
                    sum -= self.data[i * n + k] * w[k * n + col];
                }
                w[i * n + col] = sum / self.data[i * n + i];
            }
        }
        SquareSym::from_fn(n, |i, j| {
            let start = i.max(j);
            (start..n).map(|k| w[k * n + i] * w[k * n + j]).sum()
        })
    }
}

/// Cholesky factorization `m = L Lᵀ`.
///
/// Fails with [`Error::NotPositiveDefinite`] (0-based pivot index) when a
/// pivot falls at or below `dim · ε · max_diag`.
pub fn cholesky(m: &SquareSym) -> Result<LowerTriangular> {
    cholesky_with(m, &NumericOptions::default())
}

pub fn cholesky_with(m: &SquareSym, opts: &NumericOptions) -> Result<LowerTriangular> {
    let n = m.dim();
    let max_diag = m.diag().into_iter().fold(0.0_f64, f64::max);
    let threshold = n as f64 * f64::EPSILON * max_diag * opts.pivot_factor;
    let mut data = vec![0.0; n * n];
    for j in 0..n {
        let mut pivot = m.get(j, j);
        for k in 0..j {
            pivot -= data[j * n + k] * data[j * n + k];
        }
        if !(pivot > threshold) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let ljj = pivot.sqrt();
        data[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= data[i * n + k] * data[j * n + k];
            }
            data[i * n + j] = s / ljj;
        }
    }
    Ok(LowerTriangular { dim: n, data })
}

/// Inverse of an SPD matrix together with a cheap condition estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdInverse {
    pub inverse: SquareSym,
    /// `(max Lᵢᵢ / min Lᵢᵢ)²` from the Cholesky factor. A lower bound on the
    /// true 2-norm condition number; exact for diagonal input.
    pub condition_estimate: f64,
}

pub fn spd_inverse(m: &SquareSym) -> Result<SpdInverse> {
    spd_inverse_with(m, &NumericOptions::default())
}

pub fn spd_inverse_with(m: &SquareSym, opts: &NumericOptions) -> Result<SpdInverse> {
    let l = cholesky_with(m, opts)?;
    let (lo, hi) = (0..l.dim()).fold((f64::INFINITY, 0.0_f64), |(lo, hi), i| {
        let d = l.get(i, i);
        (lo.min(d), hi.max(d))
    });
    Ok(SpdInverse {
        inverse: l.inverse_of_product(),
        condition_estimate: (hi / lo).powi(2),
    })
}

/// Eigenvalues ascending, eigenvectors as matching orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` is the unit eigenvector of `eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> SquareSym {
        let n = self.eigenvalues.len();
        SquareSym::from_fn(n, |i, j| {
            self.eigenvalues
                .iter()
                .zip(&self.eigenvectors)
                .map(|(l, v)| l * v[i] * v[j])
                .sum()
        })
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn jacobi_eigen(m: &SquareSym) -> Result<EigenDecomposition> {
    jacobi_eigen_with(m, &NumericOptions::default())
}

pub fn jacobi_eigen_with(m: &SquareSym, opts: &NumericOptions) -> Result<EigenDecomposition> {
    let n = m.dim();
    let mut a = m.to_rows();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let tol = opts.jacobi_tolerance * m.max_abs();

    let off_diag_max = |a: &Vec<Vec<f64>>| {
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max(a[i][j].abs());
            }
        }
        worst
    };

    let mut converged = off_diag_max(&a) <= tol;
    let mut sweeps = 0;
    while !converged {
        if sweeps == opts.jacobi_max_sweeps {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                // rotation angle from the classic stable formulation
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
        converged = off_diag_max(&a) <= tol;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[x][x].total_cmp(&a[y][y]).then(x.cmp(&y)));
    Ok(EigenDecomposition {
        eigenvalues: order.iter().map(|&k| a[k][k]).collect(),
        eigenvectors: order
            .iter()
            .map(|&k| (0..n).map(|i| v[i][k]).collect())
            .collect(),
    })
}

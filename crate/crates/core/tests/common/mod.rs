//! Test-only oracles. Nothing here goes through the precision-matrix route
//! the library uses.
#![allow(dead_code)]

use impartial::data::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("v{j}")).collect()
}

/// `n × p` dataset of correlated Gaussian columns with uneven scales.
///
/// Columns follow a factor model `M f + e` with independent unit noise `e`,
/// so the population covariance is `I + M Mᵀ` and never close to singular.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset {
    let mix: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            (0..p)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let scales: Vec<f64> = (0..p)
        .map(|_| 10f64.powf(rng.random_range(-1.0..1.5)))
        .collect();
    let offsets: Vec<f64> = (0..p).map(|_| rng.random_range(-5.0..5.0)).collect();
    let mut columns = vec![Vec::with_capacity(n); p];
    for _ in 0..n {
        let f: Vec<f64> = (0..p)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        for j in 0..p {
            let e: f64 = rng.sample(StandardNormal);
            let v: f64 = (0..p).map(|k| mix[j][k] * f[k]).sum::<f64>() + e;
            columns[j].push(offsets[j] + scales[j] * v);
        }
    }
    Dataset::new(names(p), columns).unwrap()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Least-squares regression of `y` on `xs` with an intercept, via the raw
/// normal equations. Returns (intercept, slopes, residuals).
pub fn regress(y: &[f64], xs: &[&[f64]]) -> (f64, Vec<f64>, Vec<f64>) {
    let n = y.len();
    let k = xs.len() + 1;
    let design = |i: usize, c: usize| if c == 0 { 1.0 } else { xs[c - 1][i] };
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for i in 0..n {
        for r in 0..k {
            xty[r] += design(i, r) * y[i];
            for c in 0..k {
                xtx[r][c] += design(i, r) * design(i, c);
            }
        }
    }
    let beta = gauss_solve(xtx, xty);
    let resid = (0..n)
        .map(|i| y[i] - (0..k).map(|c| beta[c] * design(i, c)).sum::<f64>())
        .collect();
    (beta[0], beta[1..].to_vec(), resid)
}

/// OLS of column `dep` on every other column of `d`.
pub fn regress_column(d: &Dataset, dep: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let xs: Vec<&[f64]> = (0..d.p())
        .filter(|&j| j != dep)
        .map(|j| d.column(j))
        .collect();
    regress(d.column(dep), &xs)
}

pub fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn centered_sum_sq(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum()
}

/// 1 − SSE/SST for `dep` regressed on the others.
pub fn r_squared_oracle(d: &Dataset, dep: usize) -> f64 {
    let (_, _, resid) = regress_column(d, dep);
    1.0 - sum_sq(&resid) / centered_sum_sq(d.column(dep))
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    sab / (saa * sbb).sqrt()
}

/// Partial correlation of columns `i` and `j` given the rest: correlate the
/// residuals of each regressed on the remaining columns.
pub fn partial_corr_oracle(d: &Dataset, i: usize, j: usize) -> f64 {
    let rest: Vec<&[f64]> = (0..d.p())
        .filter(|&k| k != i && k != j)
        .map(|k| d.column(k))
        .collect();
    let (_, _, ri) = regress(d.column(i), &rest);
    let (_, _, rj) = regress(d.column(j), &rest);
    pearson(&ri, &rj)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Data whose sample covariance equals `cov` (to rounding) and whose means are `means`.
pub fn data_with_covariance(
    cov: &impartial::symlin::SquareSym,
    means: &[f64],
    n: usize,
    seed: u64,
) -> Dataset {
    let p = cov.dim();
    let mut r = rng(seed);
    // Gram–Schmidt on centred random columns gives an orthonormal, centred basis
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < p {
        let mut v: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let m = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= m);
        for _ in 0..2 {
            for b in &basis {
                let proj: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                v.iter_mut().zip(b).for_each(|(a, c)| *a -= proj * c);
            }
        }
        let norm = sum_sq(&v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    let l = impartial::symlin::cholesky(cov).unwrap();
    let scale = ((n - 1) as f64).sqrt();
    let columns = (0..p)
        .map(|j| {
            (0..n)
                .map(|i| means[j] + scale * (0..=j).map(|k| l.get(j, k) * basis[k][i]).sum::<f64>())
                .collect()
        })
        .collect();
    Dataset::new(names(p), columns).unwrap()
}

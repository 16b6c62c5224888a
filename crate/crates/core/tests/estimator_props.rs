#![allow(clippy::needless_range_loop, clippy::approx_constant)]

mod common;

use common::rel_close;
use impartial::data::{standardize, summarize, Dataset};
use impartial::diagnostics::{greenall_report, partial_correlations, residual_stats};
use impartial::estimators::{
    gmfr_bivariate, impartial_fit, ols_all, ols_single, orthogonal_fit, pairwise_slope,
};
use impartial::symlin::{spd_inverse, SquareSym};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn bivariate(seed: u64, n: usize) -> Dataset {
    let mut rng = common::rng(seed);
    let slope = rng.random_range(0.2..5.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let t: f64 = rng.random_range(-3.0..3.0);
        let ex: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        rows.push(vec![t + 0.5 * ex, 1.0 + slope * t + 0.5 * slope.abs() * ey]);
    }
    Dataset::from_rows(vec!["x".into(), "y".into()], &rows).unwrap()
}

/// Σ |Δx·Δy| for the line y = a + b x through the means.
fn sum_of_products(d: &Dataset, b: f64) -> f64 {
    let s = summarize(d);
    let a = s.means[1] - b * s.means[0];
    d.column(0)
        .iter()
        .zip(d.column(1))
        .map(|(x, y)| {
            let dy = y - (a + b * x);
            let dx = dy / b;
            (dx * dy).abs()
        })
        .sum()
}

#[test]
fn ols_single_matches_normal_equations_oracle() {
    let mut rng = common::rng(21);
    for p in 2..=6 {
        let d = common::random_dataset(&mut rng, 40, p);
        let s = summarize(&d);
        let all = ols_all(&s).unwrap();
        for dep in 0..p {
            let fit = ols_single(&s, dep).unwrap();
            assert_eq!(fit.regressors, all[dep].regressors);
            for (a, b) in fit.slopes.iter().zip(&all[dep].slopes) {
                assert!(common::rel_close(*a, *b, 1e-9) || (a - b).abs() < 1e-12);
            }
            let (intercept, slopes, _) = common::regress_column(&d, dep);
            for (a, b) in fit.slopes.iter().zip(&slopes) {
                assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs {b}");
            }
            assert!((fit.intercept - intercept).abs() <= 1e-8 * intercept.abs().max(1.0));
            assert!((fit.r_squared - common::r_squared_oracle(&d, dep)).abs() <= 1e-9);
        }
    }
}

#[test]
fn printed_inverse_row_gives_x1_slopes() {
    let printed = SquareSym::from_rows(&[
        vec![0.318, 0.399, -0.148],
        vec![0.399, 0.920, -0.290],
        vec![-0.148, -0.290, 0.104],
    ])
    .unwrap();
    let cov = spd_inverse(&printed).unwrap().inverse;
    let d = common::data_with_covariance(&cov, &[0.9, 0.88, 5.44], 36, 5);
    let fit = ols_single(&summarize(&d), 0).unwrap();
    let row_formula = [0.399 / -0.318, -0.148 / -0.318];
    assert!((row_formula[0] - -1.255_f64).abs() < 5e-4);
    assert!((row_formula[1] - 0.465_f64).abs() < 5e-4);
    let (_, oracle, _) = common::regress_column(&d, 0);
    for k in 0..2 {
        assert!((fit.slopes[k] - row_formula[k]).abs() < 1e-9);
        assert!((oracle[k] - row_formula[k]).abs() < 1e-9);
    }
}

#[test]
fn least_products_grid_search() {
    for seed in 0..5 {
        let d = bivariate(seed, 60);
        let g = gmfr_bivariate(&summarize(&d), 1, 0).unwrap();
        let best = sum_of_products(&d, g.slope);
        let (lo, hi) = if g.slope > 0.0 {
            (g.slope / 3.0, 3.0 * g.slope)
        } else {
            (3.0 * g.slope, g.slope / 3.0)
        };
        for k in 0..10_000 {
            let b = lo + (hi - lo) * k as f64 / 9_999.0;
            assert!(
                best <= sum_of_products(&d, b) * (1.0 + 1e-12),
                "slope {b} beats GMFR"
            );
        }
    }
}

#[test]
fn greenall_factors_equal_from_raw_sse() {
    for seed in 0..20 {
        let d = bivariate(100 + seed, 30);
        let s = summarize(&d);
        let g = gmfr_bivariate(&s, 1, 0).unwrap();
        let (x, y) = (d.column(0), d.column(1));
        let sse_y =
            |a: f64, b: f64| -> f64 { x.iter().zip(y).map(|(x, y)| (y - a - b * x).powi(2)).sum() };
        let sse_x =
            |a: f64, b: f64| -> f64 { x.iter().zip(y).map(|(x, y)| (x - a - b * y).powi(2)).sum() };
        let (ay, by, _) = common::regress(y, &[x]);
        let (ax, bx, _) = common::regress(x, &[y]);
        let ratio_y = sse_y(g.intercept, g.slope) / sse_y(ay, by[0]);
        let gx = gmfr_bivariate(&s, 0, 1).unwrap();
        let ratio_x = sse_x(gx.intercept, gx.slope) / sse_x(ax, bx[0]);
        assert!((ratio_y - ratio_x).abs() <= 1e-10, "{ratio_y} vs {ratio_x}");
        let rep = greenall_report(&s, 1, 0).unwrap();
        assert!((rep.inflation_i - ratio_y).abs() <= 1e-10);
        assert!((rep.inflation_j - ratio_x).abs() <= 1e-10);
    }
}

#[test]
fn partial_correlations_match_residual_oracle() {
    let mut rng = common::rng(23);
    for p in 3..=5 {
        for _ in 0..10 {
            let d = common::random_dataset(&mut rng, 40, p);
            let s = summarize(&d);
            let pc = partial_correlations(&spd_inverse(&s.cov).unwrap().inverse);
            for i in 0..p {
                for j in (i + 1)..p {
                    let oracle = common::partial_corr_oracle(&d, i, j);
                    assert!(
                        (pc.get(i, j) - oracle).abs() <= 1e-8,
                        "{} vs {oracle}",
                        pc.get(i, j)
                    );
                    assert!(pc.get(i, j).abs() <= 1.0 + 1e-12);
                }
            }
        }
    }
}

#[test]
fn perfect_correlation_limit() {
    // y = 1 + 2 x1 − x2 with shrinking noise on every variable
    let mut previous_gap: Option<f64> = None;
    let mut previous_pc: Option<f64> = None;
    for t in [1.0, 0.1, 0.01] {
        let mut rng = common::rng(24);
        let mut rows = Vec::new();
        for _ in 0..200 {
            let x1: f64 = rng.random_range(-3.0..3.0);
            let x2: f64 = rng.random_range(-3.0..3.0);
            let e: [f64; 3] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            rows.push(vec![
                x1 + t * e[0],
                x2 + t * e[1],
                1.0 + 2.0 * x1 - x2 + t * e[2],
            ]);
        }
        let d = Dataset::from_rows(common::names(3), &rows).unwrap();
        let s = summarize(&d);
        let fit = impartial_fit(&s).unwrap();
        let ols = ols_all(&s).unwrap();
        let pc = partial_correlations(&spd_inverse(&s.cov).unwrap().inverse);
        let min_pc = (0..3)
            .flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| pc.get(i, j).abs())
            .fold(f64::INFINITY, f64::min);
        // largest gap between an OLS slope and the matching impartial rate of change
        let mut gap = 0.0_f64;
        for f in &ols {
            for (&j, b) in f.regressors.iter().zip(&f.slopes) {
                let star = pairwise_slope(&fit, f.dependent, j).unwrap();
                gap = gap.max((b - star).abs() / star.abs());
            }
        }
        if let (Some(g), Some(p)) = (previous_gap, previous_pc) {
            assert!(gap < g, "gap {gap} did not shrink from {g}");
            assert!(min_pc > p, "|partial corr| {min_pc} did not grow from {p}");
        }
        previous_gap = Some(gap);
        previous_pc = Some(min_pc);
    }
    assert!(previous_pc.unwrap() > 0.999);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scale_invariance(seed in any::<u64>(), p in 2usize..6, col in 0usize..6, big in any::<bool>()) {
        let col = col % p;
        let alpha = if big { 1e3 } else { 1e-3 };
        let mut rng = common::rng(seed);
        let d = common::random_dataset(&mut rng, 30, p);
        let f = impartial_fit(&summarize(&d)).unwrap();
        let g = impartial_fit(&summarize(&d.rescale_column(col, alpha).unwrap())).unwrap();
        for j in 0..p {
            let want = if j == col { f.coefficients[j] / alpha } else { f.coefficients[j] };
            prop_assert!(rel_close(g.coefficients[j], want, 1e-9), "b{} {} vs {} cond {:?}", j, g.coefficients[j], want, f.condition_estimate);
        }
        for i in 0..p {
            for j in 0..p {
                if i == j { continue; }
                let before = pairwise_slope(&f, i, j).unwrap();
                let after = pairwise_slope(&g, i, j).unwrap();
                let factor = match (i == col, j == col) {
                    (true, false) => alpha,
                    (false, true) => 1.0 / alpha,
                    _ => 1.0,
                };
                prop_assert!(rel_close(after, factor * before, 1e-9));
            }
        }
    }

    #[test]
    fn permutation_invariance(seed in any::<u64>(), p in 2usize..6) {
        let mut rng = common::rng(seed);
        let d = common::random_dataset(&mut rng, 30, p);
        let mut perm: Vec<usize> = (0..p).collect();
        perm.reverse();
        perm.rotate_left(1 % p);
        let f = impartial_fit(&summarize(&d)).unwrap();
        let g = impartial_fit(&summarize(&d.permute_columns(&perm).unwrap())).unwrap();
        // with two variables the reference row is a tie broken by position,
        // so only the relation (not its global sign) is order-free
        let flip = if p == 2 { g.coefficients[0].signum() * f.coefficients[perm[0]].signum() } else { 1.0 };
        for (new, &old) in perm.iter().enumerate() {
            // a different elimination order changes rounding only
            prop_assert!(rel_close(flip * g.coefficients[new], f.coefficients[old], 1e-10));
        }
    }

    #[test]
    fn three_variable_standardized_magnitudes(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let z = standardize(&common::random_dataset(&mut rng, 30, 3)).unwrap();
        let s = summarize(&z);
        let f = impartial_fit(&s).unwrap();
        let r = |i, j| s.corr.get(i, j);
        let want = [
            (1.0 - r(1, 2).powi(2)).sqrt(),
            (1.0 - r(0, 2).powi(2)).sqrt(),
            (1.0 - r(0, 1).powi(2)).sqrt(),
        ];
        for i in 0..3 {
            for j in 0..3 {
                let got = f.coefficients[i].abs() / f.coefficients[j].abs();
                prop_assert!(rel_close(got, want[i] / want[j], 1e-10));
            }
        }
    }

    #[test]
    fn eq5_and_sandwich(seed in any::<u64>(), p in 2usize..7) {
        let mut rng = common::rng(seed);
        let s = summarize(&common::random_dataset(&mut rng, 40, p));
        let f = impartial_fit(&s).unwrap();
        let ols = ols_all(&s).unwrap();
        for i in 0..p {
            for j in 0..p {
                if i == j { continue; }
                let bij = ols[i].slope_on(j).unwrap();
                let bji = ols[j].slope_on(i).unwrap();
                let star = pairwise_slope(&f, i, j).unwrap().abs();
                prop_assert!(rel_close(star, (bij / bji).abs().sqrt(), 1e-10));
                let (lo, hi) = (bij.abs().min(1.0 / bji.abs()), bij.abs().max(1.0 / bji.abs()));
                prop_assert!(star >= lo * (1.0 - 1e-12) && star <= hi * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn two_coefficient_routes_agree(seed in any::<u64>(), p in 2usize..6) {
        let mut rng = common::rng(seed);
        let s = summarize(&common::random_dataset(&mut rng, 40, p));
        let f = impartial_fit(&s).unwrap();
        let res = residual_stats(&f, &s).unwrap();
        // coefficients ∝ 1 / residual sd
        let via_resid: Vec<f64> = res.residual_variance.iter().map(|v| 1.0 / v.sqrt()).collect();
        for j in 1..p {
            prop_assert!(rel_close(
                f.coefficients[j].abs() / f.coefficients[0].abs(),
                via_resid[j] / via_resid[0],
                1e-9
            ));
        }
        let c0 = res.coeff_times_residual_sd[0];
        for v in &res.coeff_times_residual_sd {
            prop_assert!(rel_close(*v, c0, 1e-9));
        }
    }

    #[test]
    fn gmfr_slope_is_signed_std_ratio(seed in any::<u64>()) {
        let d = bivariate(seed, 25);
        let s = summarize(&d);
        let g = gmfr_bivariate(&s, 1, 0).unwrap();
        let r = s.corr.get(0, 1);
        prop_assert_eq!(g.slope, r.signum() * s.stds[1] / s.stds[0]);
    }

    #[test]
    fn orthogonal_normal_is_unit(seed in any::<u64>(), p in 2usize..6) {
        let mut rng = common::rng(seed);
        let s = summarize(&common::random_dataset(&mut rng, 30, p));
        let h = orthogonal_fit(&s).unwrap();
        let norm: f64 = h.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }
}

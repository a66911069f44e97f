//! Fits checked against independently coded reference computations.

mod common;

use common::{bordered_oracle, centred_basis, close, random_instance, random_shape};
use nis::{build_basis, evaluate, fit_group_lasso_with, fit_joint, fit_marginal, CovariateBlock, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn marginal_fit_matches_bordered_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let n = rng.random_range(20..=60);
        let (dim, degree) = random_shape(&mut rng);
        let (xs, y) = random_instance(&mut rng, n, 1);
        let block = CovariateBlock::new(0, &xs[0], dim, degree).unwrap();
        let fit = fit_marginal(&y, &block.block).unwrap();
        let (beta, fitted) = bordered_oracle(&y, &[centred_basis(&xs[0], dim, degree)]);
        let scale = beta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in fit.coefficients.iter().zip(&beta) {
            assert!(close(*a, *b, scale, 1e-8), "coef {a} vs {b}");
        }
        let norm_sq = fitted.iter().map(|f| f * f).sum::<f64>() / n as f64;
        assert!(close(fit.norm_sq, norm_sq, norm_sq, 1e-8));
        let ybar = y.iter().sum::<f64>() / n as f64;
        let rss = y.iter().zip(&fitted).map(|(y, f)| (y - ybar - f).powi(2)).sum::<f64>() / n as f64;
        assert!(close(fit.rss, rss, rss, 1e-8));
        assert!(close(fit.intercept, ybar, ybar.abs(), 1e-12));
    }
}

#[test]
fn joint_fit_matches_bordered_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let n = rng.random_range(40..=60);
        let k = rng.random_range(1..=3);
        let (dim, degree) = random_shape(&mut rng);
        let (xs, y) = random_instance(&mut rng, n, k);
        let blocks: Vec<CovariateBlock> = xs.iter().enumerate().map(|(j, x)| CovariateBlock::new(j, x, dim, degree).unwrap()).collect();
        let refs: Vec<_> = blocks.iter().map(|b| &b.block).collect();
        let fit = fit_joint(&y, &refs).unwrap();
        let oracle_blocks: Vec<_> = xs.iter().map(|x| centred_basis(x, dim, degree)).collect();
        let (beta, _) = bordered_oracle(&y, &oracle_blocks);
        let got: Vec<f64> = fit.coefficients.iter().flatten().copied().collect();
        let scale = beta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in got.iter().zip(&beta) {
            assert!(close(*a, *b, scale, 1e-8), "coef {a} vs {b}");
        }
    }
}

#[test]
fn pythagorean_identity_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..1000 {
        let n = rng.random_range(15..=120);
        let (dim, degree) = random_shape(&mut rng);
        if dim > n / 2 {
            continue;
        }
        let (xs, y) = random_instance(&mut rng, n, 1);
        let block = CovariateBlock::new(0, &xs[0], dim, degree).unwrap();
        let fit = fit_marginal(&y, &block.block).unwrap();
        let ybar = y.iter().sum::<f64>() / n as f64;
        let total = y.iter().map(|v| (v - ybar).powi(2)).sum::<f64>() / n as f64;
        assert!(((fit.norm_sq + fit.rss) - total).abs() <= 1e-8 * total, "{} + {} vs {total}", fit.norm_sq, fit.rss);
    }
}

/// Cox-de Boor recursion written directly from the definition.
fn bspline(knots: &[f64], i: usize, k: usize, x: f64, last: bool) -> f64 {
    if k == 0 {
        let (a, b) = (knots[i], knots[i + 1]);
        return if (a <= x && x < b) || (last && x == b && a < b) { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let d1 = knots[i + k] - knots[i];
    if d1 > 0.0 {
        v += (x - knots[i]) / d1 * bspline(knots, i, k - 1, x, last);
    }
    let d2 = knots[i + k + 1] - knots[i + 1];
    if d2 > 0.0 {
        v += (knots[i + k + 1] - x) / d2 * bspline(knots, i + 1, k - 1, x, last);
    }
    v
}

#[test]
fn basis_matches_recursive_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..50 {
        let (dim, degree) = random_shape(&mut rng);
        let x: Vec<f64> = (0..80).map(|_| rng.random_range(-1.0..3.0)).collect();
        let basis = build_basis(&x, dim, degree).unwrap();
        let knots = basis.knots().to_vec();
        let (lo, hi) = basis.support();
        let grid: Vec<f64> = (0..=400).map(|i| if i == 400 { hi } else { lo + (hi - lo) * i as f64 / 400.0 }).collect();
        let m = evaluate(&basis, &grid);
        for (r, &g) in grid.iter().enumerate() {
            // the last non-degenerate span is closed on the right
            for k in 0..dim {
                let want = bspline(&knots, k, degree, g, g == hi);
                assert!((m[(r, k)] - want).abs() < 1e-12, "x={g} k={k}: {} vs {want}", m[(r, k)]);
            }
        }
    }
}

fn group_objective(yc: &[f64], blocks: &[Vec<Vec<f64>>], beta: &[Vec<f64>], lambda: f64) -> f64 {
    let n = yc.len();
    let rss: f64 = (0..n)
        .map(|i| {
            let f: f64 = blocks.iter().zip(beta).map(|(b, c)| b[i].iter().zip(c).map(|(a, c)| a * c).sum::<f64>()).sum();
            (yc[i] - f).powi(2)
        })
        .sum();
    let pen: f64 = beta.iter().map(|c| (c.len() as f64).sqrt() * c.iter().map(|v| v * v).sum::<f64>().sqrt()).sum();
    rss / (2.0 * n as f64) + lambda * pen
}

/// Proximal gradient descent on the same objective.
fn ista(yc: &[f64], blocks: &[Vec<Vec<f64>>], lambda: f64, iters: usize) -> Vec<Vec<f64>> {
    let n = yc.len() as f64;
    let dims: Vec<usize> = blocks.iter().map(|b| b[0].len()).collect();
    let rows: Vec<Vec<f64>> = (0..yc.len()).map(|i| blocks.iter().flat_map(|b| b[i].iter().copied()).collect()).collect();
    let d: usize = dims.iter().sum();
    // Lipschitz constant by power iteration on XᵀX/n
    let mut v = vec![1.0; d];
    let mut lip = 0.0;
    for _ in 0..500 {
        let xv: Vec<f64> = rows.iter().map(|r| r.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        let w: Vec<f64> = (0..d).map(|k| rows.iter().zip(&xv).map(|(r, s)| r[k] * s).sum::<f64>() / n).collect();
        lip = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / lip).collect();
    }
    let step = 1.0 / (lip * 1.01);
    let mut beta = vec![0.0; d];
    for _ in 0..iters {
        let fit: Vec<f64> = rows.iter().map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum()).collect();
        let grad: Vec<f64> = (0..d).map(|k| -rows.iter().zip(yc).zip(&fit).map(|((r, y), f)| r[k] * (y - f)).sum::<f64>() / n).collect();
        let z: Vec<f64> = beta.iter().zip(&grad).map(|(b, g)| b - step * g).collect();
        let mut s = 0;
        for &l in &dims {
            let norm = z[s..s + l].iter().map(|x| x * x).sum::<f64>().sqrt();
            let t = step * lambda * (l as f64).sqrt();
            let shrink = if norm > t { 1.0 - t / norm } else { 0.0 };
            for k in s..s + l {
                beta[k] = z[k] * shrink;
            }
            s += l;
        }
    }
    let mut out = Vec::new();
    let mut s = 0;
    for &l in &dims {
        out.push(beta[s..s + l].to_vec());
        s += l;
    }
    out
}

#[test]
fn group_lasso_matches_proximal_gradient_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for trial in 0..5 {
        let (xs, y) = random_instance(&mut rng, 40, 3);
        let blocks: Vec<CovariateBlock> = xs.iter().enumerate().map(|(j, x)| CovariateBlock::new(j, x, 3, 2).unwrap()).collect();
        let oracle_blocks: Vec<_> = xs.iter().map(|x| centred_basis(x, 3, 2)).collect();
        let ybar = y.iter().sum::<f64>() / 40.0;
        let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
        let lambda = [0.01, 0.05, 0.1, 0.2, 0.4][trial];
        let opts = SolverOptions { tol: 1e-10, max_sweeps: 100_000 };
        let fit = fit_group_lasso_with(&y, &blocks, lambda, &opts).unwrap();
        let got: Vec<Vec<f64>> = (0..3)
            .map(|j| fit.model.components.get(&j).map_or(vec![0.0; 3], |c| c.coefficients.clone()))
            .collect();
        let reference = ista(&yc, &oracle_blocks, lambda, 200_000);
        let f_got = group_objective(&yc, &oracle_blocks, &got, lambda);
        let f_ref = group_objective(&yc, &oracle_blocks, &reference, lambda);
        assert!((f_got - f_ref).abs() < 1e-5, "lambda {lambda}: {f_got} vs {f_ref}");
        assert!(f_got <= f_ref + 1e-9, "coordinate descent worse than reference");
        assert!((fit.objective - f_got).abs() < 1e-9);
    }
}

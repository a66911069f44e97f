//! Reference computations shared by the integration tests.

#![allow(dead_code)]

use nis::{build_basis, evaluate};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        assert!(a[col][col].abs() > 1e-14, "singular oracle system");
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Column-centred raw basis rows, built without the library's centring.
pub fn centred_basis(x: &[f64], dim: usize, degree: usize) -> Vec<Vec<f64>> {
    let basis = build_basis(x, dim, degree).unwrap();
    let raw = evaluate(&basis, x);
    let n = x.len();
    let means: Vec<f64> = (0..dim).map(|k| (0..n).map(|i| raw[(i, k)]).sum::<f64>() / n as f64).collect();
    (0..n).map(|i| (0..dim).map(|k| raw[(i, k)] - means[k]).collect()).collect()
}

/// Least squares of centred `y` on stacked centred blocks with each block's
/// coefficients summing to zero, via the bordered normal equations.
pub fn bordered_oracle(y: &[f64], blocks: &[Vec<Vec<f64>>]) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| blocks.iter().flat_map(|b| b[i].iter().copied()).collect()).collect();
    let d: usize = blocks.iter().map(|b| b[0].len()).sum();
    let k = blocks.len();
    let m = d + k;
    let mut a = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for r in 0..d {
        for c in 0..d {
            a[r][c] = (0..n).map(|i| rows[i][r] * rows[i][c]).sum();
        }
        rhs[r] = (0..n).map(|i| rows[i][r] * yc[i]).sum();
    }
    let mut start = 0;
    for (g, b) in blocks.iter().enumerate() {
        for c in start..start + b[0].len() {
            a[c][d + g] = 1.0;
            a[d + g][c] = 1.0;
        }
        start += b[0].len();
    }
    let sol = solve_dense(a, rhs);
    let beta = sol[..d].to_vec();
    let fitted: Vec<f64> = rows.iter().map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum()).collect();
    (beta, fitted)
}

pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let xs: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let y = (0..n)
        .map(|i| xs.iter().map(|x| (x[i] * 1.3).sin() + 0.2 * x[i] * x[i]).sum::<f64>() + rng.random_range(-1.0..1.0))
        .collect();
    (xs, y)
}

pub fn random_shape(rng: &mut ChaCha8Rng) -> (usize, usize) {
    let degree = rng.random_range(1..=3);
    let dim = rng.random_range(degree + 1..=degree + 4);
    (dim, degree)
}

pub fn close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.max(1.0)
}

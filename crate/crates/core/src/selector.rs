//! Group lasso over spline coefficient groups, fitted by cyclic block
//! coordinate descent, with a cross-validated penalty.
//!
//! Objective: `(1/2n) ‖y_c − Σ_j Ψ_j β_j‖² + λ Σ_j √d_j ‖β_j‖₂`.
//!
//! The solver works in covariance form on the stacked Gram matrix, so a sweep
//! costs `O(K²)` in the total number of columns and is independent of `n`.
//! Each block subproblem is solved exactly in the eigenbasis of its Gram
//! block: the shrinkage `μ` with `μ ‖(G_jj + μI)⁻¹ z‖ = λ√d_j` is found by
//! bisection on a bracket that is known in closed form.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::marginal::{centered, mean_sq};
use crate::parallel::Parallelism;
use crate::spline::{evaluate, CovariateBlock, SplineBasis};

/// One fitted additive component.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub basis: SplineBasis,
    /// Training column means subtracted before applying the coefficients.
    pub column_means: Vec<f64>,
    pub coefficients: Vec<f64>,
}

impl Component {
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let raw = evaluate(&self.basis, x);
        let offset: f64 = self.column_means.iter().zip(&self.coefficients).map(|(m, b)| m * b).sum();
        let beta = DVector::from_column_slice(&self.coefficients);
        (raw * beta).iter().map(|v| v - offset).collect()
    }
}

/// Sparse additive model: intercept plus one spline component per selected
/// covariate. Components with all-zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveModel {
    pub intercept: f64,
    pub components: BTreeMap<usize, Component>,
    pub lambda: f64,
}

impl AdditiveModel {
    pub fn intercept_only(intercept: f64) -> Self {
        AdditiveModel { intercept, components: BTreeMap::new(), lambda: 0.0 }
    }

    pub fn selected(&self) -> Vec<usize> {
        self.components.keys().copied().collect()
    }

    pub fn predict(&self, covariates: &DMatrix<f64>) -> Vec<f64> {
        predict(self, covariates)
    }
}

/// `intercept + Σ_j f_j(x_j)` for every row; out-of-support values are
/// clamped to the basis support.
pub fn predict(model: &AdditiveModel, covariates: &DMatrix<f64>) -> Vec<f64> {
    let m = covariates.nrows();
    let mut out = vec![model.intercept; m];
    for (&j, comp) in &model.components {
        let col: Vec<f64> = covariates.column(j).iter().copied().collect();
        for (o, v) in out.iter_mut().zip(comp.evaluate(&col)) {
            *o += v;
        }
    }
    out
}

/// Coordinate-descent controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when no coefficient moves more than this in a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-6, max_sweeps: 10_000 }
    }
}

#[derive(Debug, Clone)]
pub struct GroupLassoFit {
    pub model: AdditiveModel,
    pub converged: bool,
    pub sweeps: usize,
    pub objective: f64,
    /// Largest violation of the optimality conditions at the returned solution.
    pub kkt_violation: f64,
}

struct BlockEigen {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

/// Quadratic form of the group lasso in covariance form.
pub(crate) struct GroupProblem {
    segments: Vec<(usize, usize)>,
    weights: Vec<f64>,
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    yy: f64,
    eig: Vec<BlockEigen>,
}

impl GroupProblem {
    /// `design` must be column-centred, `yc` centred.
    pub(crate) fn new(design: &DMatrix<f64>, yc: &[f64], segments: Vec<(usize, usize)>) -> Self {
        let nf = design.nrows() as f64;
        let gram = design.tr_mul(design) / nf;
        let xty = design.tr_mul(&DVector::from_column_slice(yc)) / nf;
        let eig = segments
            .iter()
            .map(|&(s, l)| {
                let e = gram.view((s, s), (l, l)).into_owned().symmetric_eigen();
                BlockEigen { values: e.eigenvalues, vectors: e.eigenvectors }
            })
            .collect();
        let weights = segments.iter().map(|&(_, l)| (l as f64).sqrt()).collect();
        GroupProblem { segments, weights, gram, xty, yy: mean_sq(yc), eig }
    }

    pub(crate) fn ncols(&self) -> usize {
        self.xty.len()
    }

    pub(crate) fn lambda_max(&self) -> f64 {
        self.segments
            .iter()
            .zip(&self.weights)
            .map(|(&(s, l), w)| self.xty.rows(s, l).norm() / w)
            .fold(0.0, f64::max)
    }

    pub(crate) fn objective(&self, beta: &DVector<f64>, lambda: f64) -> f64 {
        let quad = 0.5 * self.yy - beta.dot(&self.xty) + 0.5 * beta.dot(&(&self.gram * beta));
        let pen: f64 = self
            .segments
            .iter()
            .zip(&self.weights)
            .map(|(&(s, l), w)| w * beta.rows(s, l).norm())
            .sum();
        quad + lambda * pen
    }

    /// Largest KKT violation at `beta`: for nonzero groups
    /// `|‖g_j‖ − λw_j|`, for zero groups `max(0, ‖g_j‖ − λw_j(1 + 1e-6))`,
    /// where `g_j = Ψ_jᵀ(y − Ψβ)/n`.
    pub(crate) fn kkt_violation(&self, beta: &DVector<f64>, lambda: f64) -> f64 {
        let grad = &self.xty - &self.gram * beta;
        self.segments
            .iter()
            .zip(&self.weights)
            .map(|(&(s, l), w)| {
                let g = grad.rows(s, l).norm();
                if beta.rows(s, l).iter().all(|&b| b == 0.0) {
                    (g - lambda * w * (1.0 + 1e-6)).max(0.0)
                } else {
                    (g - lambda * w).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    /// Runs coordinate descent from `beta` in place. Returns
    /// `(converged, sweeps)`; when `trace` is given, the objective after each
    /// sweep is appended.
    pub(crate) fn solve(
        &self,
        lambda: f64,
        beta: &mut DVector<f64>,
        opts: &SolverOptions,
        mut trace: Option<&mut Vec<f64>>,
    ) -> (bool, usize) {
        let mut gb = &self.gram * &*beta;
        for sweep in 1..=opts.max_sweeps {
            let mut max_change: f64 = 0.0;
            for (g, &(s, l)) in self.segments.iter().enumerate() {
                let old = beta.rows(s, l).into_owned();
                let gjj = self.gram.view((s, s), (l, l));
                let z = self.xty.rows(s, l) - gb.rows(s, l) + gjj * &old;
                let new = block_update(&self.eig[g], &z, lambda * self.weights[g]);
                let delta = &new - &old;
                let change = delta.amax();
                if change > 0.0 {
                    gb += self.gram.columns(s, l) * &delta;
                    beta.rows_mut(s, l).copy_from(&new);
                    max_change = max_change.max(change);
                }
            }
            if let Some(t) = trace.as_deref_mut() {
                t.push(self.objective(beta, lambda));
            }
            if max_change < opts.tol {
                return (true, sweep);
            }
        }
        (false, opts.max_sweeps)
    }
}

/// Exact minimiser of `½ βᵀGβ − βᵀz + t‖β‖` given the eigen-decomposition of `G`.
fn block_update(eig: &BlockEigen, z: &DVector<f64>, t: f64) -> DVector<f64> {
    let znorm = z.norm();
    if znorm <= t || znorm == 0.0 {
        return DVector::zeros(z.len());
    }
    let c = eig.vectors.tr_mul(z);
    let scale = eig.values.amax().max(f64::MIN_POSITIVE);
    let null_tol = 1e-12 * scale;
    let mu = if t == 0.0 {
        0.0
    } else {
        let target = t * t;
        // h(μ) = Σ c_k² μ² / (λ_k + μ)² increases from ~0 to ‖z‖²
        let h = |mu: f64| -> f64 {
            c.iter()
                .zip(eig.values.iter())
                .map(|(ck, lk)| {
                    let r = mu / (lk.max(0.0) + mu);
                    ck * ck * r * r
                })
                .sum()
        };
        let s = t / znorm;
        let ratio = s / (1.0 - s);
        let positive = eig.values.iter().copied().filter(|&l| l > null_tol);
        let lmin = positive.clone().fold(f64::INFINITY, f64::min);
        let lmax = positive.fold(0.0, f64::max);
        let (mut lo, mut hi) = if lmin.is_finite() {
            (lmin * ratio, (lmax * ratio).max(lmin * ratio))
        } else {
            (0.0, 1.0)
        };
        while h(hi) < target && hi < 1e300 {
            hi *= 2.0;
        }
        while lo > 0.0 && h(lo) > target {
            lo *= 0.5;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if h(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let scaled = DVector::from_iterator(
        c.len(),
        c.iter().zip(eig.values.iter()).map(|(ck, &lk)| {
            let denom = lk.max(0.0) + mu;
            if mu == 0.0 && lk <= null_tol {
                0.0
            } else {
                ck / denom
            }
        }),
    );
    &eig.vectors * scaled
}

/// Centred stacked design for a set of covariate blocks.
fn stack(n: usize, blocks: &[CovariateBlock]) -> (DMatrix<f64>, Vec<(usize, usize)>) {
    let mut segments = Vec::with_capacity(blocks.len());
    let mut total = 0;
    for b in blocks {
        segments.push((total, b.block.ncols()));
        total += b.block.ncols();
    }
    let mut design = DMatrix::zeros(n, total);
    for (b, &(s, l)) in blocks.iter().zip(&segments) {
        design.view_mut((0, s), (n, l)).copy_from(&b.block.values);
    }
    (design, segments)
}

fn check_rows(y: &[f64], blocks: &[CovariateBlock]) -> Result<()> {
    if let Some(b) = blocks.iter().find(|b| b.block.nrows() != y.len()) {
        return Err(Error::DimensionMismatch(format!(
            "block for covariate {} has {} rows, response has {}",
            b.index,
            b.block.nrows(),
            y.len()
        )));
    }
    Ok(())
}

fn build_model(blocks: &[CovariateBlock], segments: &[(usize, usize)], beta: &DVector<f64>, intercept: f64, lambda: f64) -> AdditiveModel {
    let mut components = BTreeMap::new();
    for (b, &(s, l)) in blocks.iter().zip(segments) {
        let coef = beta.rows(s, l);
        if coef.iter().any(|&c| c != 0.0) {
            components.insert(
                b.index,
                Component {
                    basis: b.basis.clone(),
                    column_means: b.block.column_means.clone(),
                    coefficients: coef.iter().copied().collect(),
                },
            );
        }
    }
    AdditiveModel { intercept, components, lambda }
}

/// Group lasso fit at a single penalty, started from zero.
pub fn fit_group_lasso(y: &[f64], blocks: &[CovariateBlock], lambda: f64) -> Result<GroupLassoFit> {
    fit_group_lasso_with(y, blocks, lambda, &SolverOptions::default())
}

pub fn fit_group_lasso_with(
    y: &[f64],
    blocks: &[CovariateBlock],
    lambda: f64,
    opts: &SolverOptions,
) -> Result<GroupLassoFit> {
    fit_traced(y, blocks, lambda, opts, None)
}

/// Like [`fit_group_lasso_with`], also returning the objective after every sweep.
pub fn fit_group_lasso_traced(
    y: &[f64],
    blocks: &[CovariateBlock],
    lambda: f64,
    opts: &SolverOptions,
) -> Result<(GroupLassoFit, Vec<f64>)> {
    let mut trace = Vec::new();
    let fit = fit_traced(y, blocks, lambda, opts, Some(&mut trace))?;
    Ok((fit, trace))
}

/// Smallest penalty at which every group is zero.
pub fn lambda_max(y: &[f64], blocks: &[CovariateBlock]) -> Result<f64> {
    check_rows(y, blocks)?;
    let (yc, _) = centered(y);
    let (design, segments) = stack(y.len(), blocks);
    Ok(GroupProblem::new(&design, &yc, segments).lambda_max())
}

fn fit_traced(
    y: &[f64],
    blocks: &[CovariateBlock],
    lambda: f64,
    opts: &SolverOptions,
    trace: Option<&mut Vec<f64>>,
) -> Result<GroupLassoFit> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("penalty must be non-negative, got {lambda}")));
    }
    check_rows(y, blocks)?;
    let (yc, ybar) = centered(y);
    let (design, segments) = stack(y.len(), blocks);
    let problem = GroupProblem::new(&design, &yc, segments.clone());
    let mut beta = DVector::zeros(problem.ncols());
    let (converged, sweeps) = problem.solve(lambda, &mut beta, opts, trace);
    if !converged {
        log::warn!("group lasso did not converge in {sweeps} sweeps at lambda {lambda:e}");
    }
    Ok(GroupLassoFit {
        objective: problem.objective(&beta, lambda),
        kkt_violation: problem.kkt_violation(&beta, lambda),
        model: build_model(blocks, &segments, &beta, ybar, lambda),
        converged,
        sweeps,
    })
}

/// Penalty grid and its cross-validation errors.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaPath {
    /// Strictly decreasing, starting at `λ_max`.
    pub values: Vec<f64>,
    /// Pooled mean squared prediction error over the held-out folds.
    pub cv_errors: Vec<f64>,
    /// Standard error of the fold-wise errors.
    pub cv_se: Vec<f64>,
    /// Whether every fold fit converged at each grid point.
    pub converged: Vec<bool>,
    pub selected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig {
    pub n_folds: usize,
    pub grid_size: usize,
    /// Smallest penalty as a fraction of `λ_max`.
    pub min_ratio: f64,
    pub seed: u64,
    /// Pick the largest penalty within one standard error of the minimum.
    pub one_se: bool,
    pub solver: SolverOptions,
    pub parallelism: Parallelism,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            n_folds: 5,
            grid_size: 50,
            min_ratio: 1e-3,
            seed: 0,
            one_se: false,
            solver: SolverOptions::default(),
            parallelism: Parallelism::default(),
        }
    }
}

/// Geometric grid from `lambda_max` down to `min_ratio · lambda_max`.
pub fn lambda_grid(lambda_max: f64, size: usize, min_ratio: f64) -> Vec<f64> {
    if size <= 1 {
        return vec![lambda_max];
    }
    let step = min_ratio.ln() / (size - 1) as f64;
    (0..size).map(|k| lambda_max * (step * k as f64).exp()).collect()
}

struct FoldResult {
    sse: Vec<f64>,
    count: usize,
    converged: Vec<bool>,
}

fn run_fold(raw: &DMatrix<f64>, y: &[f64], test: &[bool], segments: &[(usize, usize)], grid: &[f64], opts: &SolverOptions) -> FoldResult {
    let train_rows: Vec<usize> = (0..y.len()).filter(|&i| !test[i]).collect();
    let test_rows: Vec<usize> = (0..y.len()).filter(|&i| test[i]).collect();
    let mut xtr = raw.select_rows(&train_rows);
    let mut xte = raw.select_rows(&test_rows);
    let ntr = train_rows.len() as f64;
    for k in 0..raw.ncols() {
        let m = xtr.column(k).sum() / ntr;
        xtr.column_mut(k).add_scalar_mut(-m);
        xte.column_mut(k).add_scalar_mut(-m);
    }
    let ytr: Vec<f64> = train_rows.iter().map(|&i| y[i]).collect();
    let (yc, ybar) = centered(&ytr);
    let problem = GroupProblem::new(&xtr, &yc, segments.to_vec());
    let mut beta = DVector::zeros(problem.ncols());
    let mut sse = Vec::with_capacity(grid.len());
    let mut converged = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let (ok, _) = problem.solve(lambda, &mut beta, opts, None);
        converged.push(ok);
        let pred = &xte * &beta;
        sse.push(
            test_rows
                .iter()
                .zip(pred.iter())
                .map(|(&i, p)| (y[i] - ybar - p).powi(2))
                .sum(),
        );
    }
    FoldResult { sse, count: test_rows.len(), converged }
}

/// Cross-validated group lasso: folds from a seeded shuffle, warm starts
/// along a geometric penalty grid, refit on all data at the chosen penalty.
pub fn cv_select(y: &[f64], blocks: &[CovariateBlock], config: &CvConfig) -> Result<(GroupLassoFit, LambdaPath)> {
    check_rows(y, blocks)?;
    let n = y.len();
    if config.n_folds < 2 || config.n_folds > n {
        return Err(Error::InvalidConfig(format!("{} folds for {n} observations", config.n_folds)));
    }
    if config.grid_size == 0 || !(config.min_ratio > 0.0 && config.min_ratio < 1.0) {
        return Err(Error::InvalidConfig("penalty grid needs size ≥ 1 and 0 < min_ratio < 1".into()));
    }
    let (yc, ybar) = centered(y);
    let (design, segments) = stack(y.len(), blocks);
    let problem = GroupProblem::new(&design, &yc, segments.clone());
    let lambda_max = problem.lambda_max();
    if blocks.is_empty() || lambda_max <= 0.0 {
        let path = LambdaPath {
            values: vec![lambda_max],
            cv_errors: vec![mean_sq(&yc)],
            cv_se: vec![0.0],
            converged: vec![true],
            selected: 0,
        };
        let mut model = AdditiveModel::intercept_only(ybar);
        model.lambda = lambda_max;
        return Ok((GroupLassoFit { model, converged: true, sweeps: 0, objective: 0.5 * mean_sq(&yc), kkt_violation: 0.0 }, path));
    }
    let grid = lambda_grid(lambda_max, config.grid_size, config.min_ratio);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % config.n_folds;
    }
    let mut raw = design.clone();
    for b in blocks.iter().zip(&segments) {
        let (blk, &(s, l)) = b;
        for k in 0..l {
            raw.column_mut(s + k).add_scalar_mut(blk.block.column_means[k]);
        }
    }
    let folds = config.parallelism.map(config.n_folds, |f| {
        let test: Vec<bool> = fold_of.iter().map(|&g| g == f).collect();
        run_fold(&raw, y, &test, &segments, &grid, &config.solver)
    });

    let g = grid.len();
    let mut cv_errors = vec![0.0; g];
    let mut cv_se = vec![0.0; g];
    let mut converged = vec![true; g];
    for k in 0..g {
        let total: f64 = folds.iter().map(|f| f.sse[k]).sum();
        cv_errors[k] = total / n as f64;
        let fold_mse: Vec<f64> = folds.iter().map(|f| f.sse[k] / f.count as f64).collect();
        let m = fold_mse.iter().sum::<f64>() / fold_mse.len() as f64;
        let var = fold_mse.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (fold_mse.len() - 1) as f64;
        cv_se[k] = (var / fold_mse.len() as f64).sqrt();
        converged[k] = folds.iter().all(|f| f.converged[k]);
    }
    let best = (0..g).fold(0, |b, k| if cv_errors[k] < cv_errors[b] { k } else { b });
    let selected = if config.one_se {
        let limit = cv_errors[best] + cv_se[best];
        (0..=best).find(|&k| cv_errors[k] <= limit).unwrap_or(best)
    } else {
        best
    };

    let mut beta = DVector::zeros(problem.ncols());
    let mut all_converged = true;
    let mut sweeps = 0;
    for &lambda in &grid[..=selected] {
        let (ok, s) = problem.solve(lambda, &mut beta, &config.solver, None);
        all_converged &= ok;
        sweeps += s;
    }
    let lambda = grid[selected];
    let fit = GroupLassoFit {
        objective: problem.objective(&beta, lambda),
        kkt_violation: problem.kkt_violation(&beta, lambda),
        model: build_model(blocks, &segments, &beta, ybar, lambda),
        converged: all_converged,
        sweeps,
    };
    Ok((fit, LambdaPath { values: grid, cv_errors, cv_se, converged, selected }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn instance(n: usize, groups: usize, dim: usize, seed: u64) -> (Vec<f64>, Vec<CovariateBlock>, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, groups, |_, _| rng.random::<f64>());
        let y: Vec<f64> = (0..n)
            .map(|i| 2.0 * x[(i, 0)] + (6.0 * x[(i, 1.min(groups - 1))]).sin() + 0.5 * (rng.random::<f64>() - 0.5))
            .collect();
        let blocks = (0..groups)
            .map(|j| {
                let col: Vec<f64> = x.column(j).iter().copied().collect();
                CovariateBlock::new(j, &col, dim, 3.min(dim - 1)).unwrap()
            })
            .collect();
        (y, blocks, x)
    }

    fn problem(y: &[f64], blocks: &[CovariateBlock]) -> GroupProblem {
        let (design, segments) = stack(y.len(), blocks);
        GroupProblem::new(&design, &centered(y).0, segments)
    }

    #[test]
    fn lambda_max_gives_empty_model() {
        let (y, blocks, _) = instance(60, 4, 5, 1);
        let lmax = problem(&y, &blocks).lambda_max();
        for l in [lmax, 1.5 * lmax] {
            let fit = fit_group_lasso(&y, &blocks, l).unwrap();
            assert!(fit.model.components.is_empty());
            assert_eq!(fit.model.intercept, centered(&y).1);
        }
        let fit = fit_group_lasso(&y, &blocks, 0.99 * lmax).unwrap();
        assert_eq!(fit.model.components.len(), 1);
    }

    #[test]
    fn kkt_and_monotone_objective() {
        let (y, blocks, _) = instance(80, 5, 5, 2);
        let p = problem(&y, &blocks);
        let lmax = p.lambda_max();
        for frac in [0.5, 0.1, 0.02, 0.001] {
            let mut beta = DVector::zeros(p.ncols());
            let mut trace = vec![p.objective(&beta, frac * lmax)];
            let (ok, _) = p.solve(frac * lmax, &mut beta, &SolverOptions::default(), Some(&mut trace));
            assert!(ok);
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].abs(), "objective rose: {} -> {}", w[0], w[1]);
            }
            let v = p.kkt_violation(&beta, frac * lmax);
            assert!(v <= 1e-6, "kkt violation {v} at {frac}");
        }
    }

    #[test]
    fn unpenalised_single_block_matches_marginal() {
        let (y, blocks, _) = instance(50, 1, 5, 3);
        let opts = SolverOptions { tol: 1e-12, max_sweeps: 10_000 };
        let fit = fit_group_lasso_with(&y, &blocks, 0.0, &opts).unwrap();
        let marginal = crate::marginal::fit_marginal(&y, &blocks[0].block).unwrap();
        let coef = &fit.model.components[&0].coefficients;
        for (a, b) in coef.iter().zip(&marginal.coefficients) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn predictions_average_to_intercept() {
        let (y, blocks, x) = instance(70, 3, 5, 4);
        let fit = fit_group_lasso(&y, &blocks, 0.01).unwrap();
        let pred = predict(&fit.model, &x);
        let m = pred.iter().sum::<f64>() / pred.len() as f64;
        assert!((m - fit.model.intercept).abs() < 1e-10);
        assert!(predict(&AdditiveModel::intercept_only(2.5), &x).iter().all(|&v| v == 2.5));
    }

    #[test]
    fn cv_path_shape() {
        let (y, blocks, _) = instance(60, 4, 5, 5);
        let cfg = CvConfig { seed: 9, ..CvConfig::default() };
        let (fit, path) = cv_select(&y, &blocks, &cfg).unwrap();
        assert_eq!(path.values.len(), 50);
        assert!(path.values.windows(2).all(|w| w[1] < w[0]));
        assert!((path.values[49] / path.values[0] - 1e-3).abs() < 1e-12);
        let min = path.cv_errors.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(path.cv_errors[path.selected], min);
        assert!(fit.model.components.contains_key(&0));
        assert!(fit.model.components.contains_key(&1));
    }

    #[test]
    fn leave_one_out_runs() {
        let (y, blocks, _) = instance(16, 2, 4, 6);
        let cfg = CvConfig { n_folds: 16, grid_size: 10, ..CvConfig::default() };
        let (_, path) = cv_select(&y, &blocks, &cfg).unwrap();
        assert_eq!(path.values.len(), 10);
        assert!(path.cv_errors.iter().all(|e| e.is_finite()));
        let bad = CvConfig { n_folds: 17, ..cfg };
        assert!(cv_select(&y, &blocks, &bad).is_err());
    }

    #[test]
    fn empty_candidate_set() {
        let y = [1.0, 2.0, 3.0];
        let (fit, _) = cv_select(&y, &[], &CvConfig { n_folds: 2, ..CvConfig::default() }).unwrap();
        assert!(fit.model.components.is_empty());
        assert_eq!(fit.model.intercept, 2.0);
    }
}

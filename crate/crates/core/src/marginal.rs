//! Componentwise and joint least-squares spline regression.
//!
//! A centred B-spline block always has the all-ones coefficient vector in its
//! null space (the raw functions sum to one), so coefficients are identified
//! by requiring each block's coefficients to sum to zero. Normal equations are
//! solved with that direction deflated: `(G + Σ_b 1_b 1_bᵀ / d_b) β = Ψᵀ y / n`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::parallel::Parallelism;
use crate::spline::{BasisBlock, CovariateBlock};

/// Smallest admissible eigenvalue of a deflated Gram matrix.
pub const SINGULAR_TOL: f64 = 1e-10;

/// An `n × p` covariate matrix with its response and column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    covariates: DMatrix<f64>,
    response: Vec<f64>,
    names: Vec<String>,
}

impl Dataset {
    pub fn new(covariates: DMatrix<f64>, response: Vec<f64>, names: Vec<String>) -> Result<Self> {
        let (n, p) = covariates.shape();
        if response.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "response has {} rows, covariates have {n}",
                response.len()
            )));
        }
        if names.len() != p {
            return Err(Error::DimensionMismatch(format!("{} names for {p} covariates", names.len())));
        }
        if n < 2 {
            return Err(Error::DimensionMismatch("need at least two observations".into()));
        }
        for j in 0..p {
            for i in 0..n {
                if !covariates[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, column: j });
                }
            }
        }
        if let Some(i) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, column: p });
        }
        Ok(Dataset { covariates, response, names })
    }

    /// Names covariates `X1..Xp`.
    pub fn unnamed(covariates: DMatrix<f64>, response: Vec<f64>) -> Result<Self> {
        let names = (1..=covariates.ncols()).map(|j| format!("X{j}")).collect();
        Dataset::new(covariates, response, names)
    }

    pub fn n(&self) -> usize {
        self.covariates.nrows()
    }

    pub fn p(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.covariates.as_slice()[j * n..(j + 1) * n]
    }

    pub fn subset_rows(&self, rows: &[usize]) -> Dataset {
        let cov = self.covariates.select_rows(rows);
        let resp = rows.iter().map(|&i| self.response[i]).collect();
        Dataset { covariates: cov, response: resp, names: self.names.clone() }
    }

    pub fn with_response(&self, response: Vec<f64>) -> Result<Dataset> {
        Dataset::new(self.covariates.clone(), response, self.names.clone())
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn centered(y: &[f64]) -> (Vec<f64>, f64) {
    let m = mean(y);
    (y.iter().map(|v| v - m).collect(), m)
}

pub(crate) fn mean_sq(xs: &[f64]) -> f64 {
    xs.iter().map(|v| v * v).sum::<f64>() / xs.len() as f64
}

/// Inverse of the Gram matrix with one constant direction per segment
/// deflated. `segments` holds `(start, len)` of each block.
pub(crate) fn deflated_inverse(gram: &DMatrix<f64>, segments: &[(usize, usize)]) -> Result<DMatrix<f64>> {
    let mut g = gram.clone();
    for &(start, len) in segments {
        let w = 1.0 / len as f64;
        g.view_mut((start, start), (len, len)).add_scalar_mut(w);
    }
    let eig = g.symmetric_eigen();
    let min = eig.eigenvalues.min();
    if !(min >= SINGULAR_TOL) {
        return Err(Error::SingularGram { min_eigenvalue: min });
    }
    let inv_vals = eig.eigenvalues.map(|l| 1.0 / l);
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&inv_vals) * v.transpose())
}

/// One covariate's marginal spline fit.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalFit {
    pub index: usize,
    pub coefficients: Vec<f64>,
    /// Empirical norm `(1/n) Σ f̂(x_i)²` of the fitted component.
    pub norm_sq: f64,
    /// Mean squared residual.
    pub rss: f64,
    pub intercept: f64,
    /// The covariate could not be fitted (constant column or singular Gram).
    pub degenerate: bool,
}

impl MarginalFit {
    fn degenerate(index: usize, dim: usize, yc_mean_sq: f64, intercept: f64) -> Self {
        MarginalFit {
            index,
            coefficients: vec![0.0; dim],
            norm_sq: 0.0,
            rss: yc_mean_sq,
            intercept,
            degenerate: true,
        }
    }
}

/// A covariate block with its Gram matrix and deflated inverse, reusable
/// across responses (the Gram is invariant under row permutations).
#[derive(Debug, Clone)]
pub struct PreparedBlock {
    pub cov: CovariateBlock,
    pub gram: DMatrix<f64>,
    pub gram_inv: DMatrix<f64>,
}

impl PreparedBlock {
    pub fn new(cov: CovariateBlock) -> Result<Self> {
        let psi = &cov.block.values;
        let n = psi.nrows() as f64;
        let gram = psi.tr_mul(psi) / n;
        let gram_inv = deflated_inverse(&gram, &[(0, psi.ncols())])?;
        Ok(PreparedBlock { cov, gram, gram_inv })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.cov.block.values
    }

    /// `Ψᵀ y / n` for a centred response.
    pub(crate) fn cross(&self, yc: &[f64]) -> DVector<f64> {
        let psi = self.values();
        let n = psi.nrows() as f64;
        psi.tr_mul(&DVector::from_column_slice(yc)) / n
    }

    /// Marginal norm `bᵀ G⁺ b` for a centred response.
    pub(crate) fn score(&self, yc: &[f64]) -> f64 {
        let b = self.cross(yc);
        b.dot(&(&self.gram_inv * &b)).max(0.0)
    }

    pub(crate) fn fit_centered(&self, yc: &[f64], intercept: f64) -> MarginalFit {
        let b = self.cross(yc);
        let beta = &self.gram_inv * &b;
        let fitted = self.values() * &beta;
        let n = yc.len() as f64;
        let norm_sq = fitted.norm_squared() / n;
        let rss = yc.iter().zip(fitted.iter()).map(|(y, f)| (y - f) * (y - f)).sum::<f64>() / n;
        MarginalFit {
            index: self.cov.index,
            coefficients: beta.iter().copied().collect(),
            norm_sq,
            rss,
            intercept,
            degenerate: false,
        }
    }
}

/// Least-squares fit of the centred response on one centred basis block.
pub fn fit_marginal(y: &[f64], block: &BasisBlock) -> Result<MarginalFit> {
    if y.len() != block.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "response length {} vs block rows {}",
            y.len(),
            block.nrows()
        )));
    }
    let (yc, ybar) = centered(y);
    let n = y.len() as f64;
    let psi = &block.values;
    let gram = psi.tr_mul(psi) / n;
    let inv = deflated_inverse(&gram, &[(0, psi.ncols())])?;
    let b = psi.tr_mul(&DVector::from_column_slice(&yc)) / n;
    let beta = &inv * &b;
    let fitted = psi * &beta;
    let norm_sq = fitted.norm_squared() / n;
    let rss = yc.iter().zip(fitted.iter()).map(|(y, f)| (y - f) * (y - f)).sum::<f64>() / n;
    Ok(MarginalFit {
        index: 0,
        coefficients: beta.iter().copied().collect(),
        norm_sq,
        rss,
        intercept: ybar,
        degenerate: false,
    })
}

/// Builds and prepares the block for covariate `j`; `None` when the
/// covariate is degenerate (too few distinct values or singular Gram).
pub fn prepare_covariate(data: &Dataset, j: usize, dim: usize, degree: usize) -> Result<Option<PreparedBlock>> {
    match CovariateBlock::new(j, data.column(j), dim, degree) {
        Ok(cov) => match PreparedBlock::new(cov) {
            Ok(pb) => Ok(Some(pb)),
            Err(Error::SingularGram { .. }) => Ok(None),
            Err(e) => Err(e),
        },
        Err(Error::TooFewDistinctValues { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

pub(crate) fn prepare_all(
    data: &Dataset,
    dim: usize,
    degree: usize,
    par: Parallelism,
) -> Result<Vec<Option<PreparedBlock>>> {
    if degree < 1 || dim < degree + 1 {
        return Err(Error::InvalidDimension { dim, degree });
    }
    par.map(data.p(), |j| prepare_covariate(data, j, dim, degree))
        .into_iter()
        .collect()
}

/// Fits every covariate marginally. Degenerate covariates come back with
/// `degenerate = true` and zero norm.
pub fn fit_all_marginals(data: &Dataset, dim: usize, degree: usize) -> Result<Vec<MarginalFit>> {
    fit_all_marginals_with(data, dim, degree, Parallelism::default())
}

pub fn fit_all_marginals_with(
    data: &Dataset,
    dim: usize,
    degree: usize,
    par: Parallelism,
) -> Result<Vec<MarginalFit>> {
    if degree < 1 || dim < degree + 1 {
        return Err(Error::InvalidDimension { dim, degree });
    }
    let (yc, ybar) = centered(data.response());
    let yy = mean_sq(&yc);
    let fits: Vec<MarginalFit> = par
        .map(data.p(), |j| {
            prepare_covariate(data, j, dim, degree).map(|pb| match pb {
                Some(pb) => pb.fit_centered(&yc, ybar),
                None => MarginalFit::degenerate(j, dim, yy, ybar),
            })
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let bad = fits.iter().filter(|f| f.degenerate).count();
    if bad > 0 {
        log::warn!("{bad} degenerate covariate(s) scored as zero");
    }
    Ok(fits)
}

/// Result of a joint least-squares fit on several blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct JointFit {
    pub coefficients: Vec<Vec<f64>>,
    pub intercept: f64,
    pub rss: f64,
    pub fitted: Vec<f64>,
}

/// Joint least squares of the centred response on horizontally stacked
/// centred blocks.
pub fn fit_joint(y: &[f64], blocks: &[&BasisBlock]) -> Result<JointFit> {
    let n = y.len();
    let (yc, ybar) = centered(y);
    if blocks.is_empty() {
        return Ok(JointFit {
            coefficients: vec![],
            intercept: ybar,
            rss: mean_sq(&yc),
            fitted: vec![ybar; n],
        });
    }
    let mut segments = Vec::with_capacity(blocks.len());
    let mut total = 0;
    for b in blocks {
        if b.nrows() != n {
            return Err(Error::DimensionMismatch("block row count differs from response".into()));
        }
        segments.push((total, b.ncols()));
        total += b.ncols();
    }
    let mut design = DMatrix::zeros(n, total);
    for (b, &(start, len)) in blocks.iter().zip(&segments) {
        design.view_mut((0, start), (n, len)).copy_from(&b.values);
    }
    let nf = n as f64;
    let gram = design.tr_mul(&design) / nf;
    let inv = deflated_inverse(&gram, &segments)?;
    let rhs = design.tr_mul(&DVector::from_column_slice(&yc)) / nf;
    let beta = inv * rhs;
    let fit_c = &design * &beta;
    let rss = yc.iter().zip(fit_c.iter()).map(|(y, f)| (y - f) * (y - f)).sum::<f64>() / nf;
    let coefficients = segments
        .iter()
        .map(|&(s, l)| beta.rows(s, l).iter().copied().collect())
        .collect();
    Ok(JointFit {
        coefficients,
        intercept: ybar,
        rss,
        fitted: fit_c.iter().map(|f| f + ybar).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::{build_basis, center_block, evaluate};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn block(x: &[f64], dim: usize, degree: usize) -> BasisBlock {
        center_block(evaluate(&build_basis(x, dim, degree).unwrap(), x))
    }

    #[test]
    fn linear_response_is_reproduced() {
        let x = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        let fit = fit_marginal(&x, &block(&x, 2, 1)).unwrap();
        assert!(fit.rss < 1e-24);
        assert!((fit.intercept - 0.5).abs() < 1e-15);
        assert!((fit.norm_sq - mean_sq(&centered(&x).0)).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_response_gives_zero_fit() {
        // x takes values a, b, c; y is orthogonal to every indicator pattern
        let x = [0.0, 0.0, 0.5, 0.5, 1.0, 1.0];
        let y = [1.0, -1.0, 2.0, -2.0, 0.5, -0.5];
        let fit = fit_marginal(&y, &block(&x, 3, 1)).unwrap();
        assert!(fit.coefficients.iter().all(|c| c.abs() < 1e-14));
        assert!(fit.norm_sq < 1e-28);
        assert!((fit.rss - mean_sq(&y)).abs() < 1e-14);
    }

    #[test]
    fn constant_covariate_is_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 50;
        let mut cov = DMatrix::zeros(n, 3);
        for i in 0..n {
            cov[(i, 0)] = rng.random::<f64>();
            cov[(i, 1)] = 0.7;
            cov[(i, 2)] = rng.random::<f64>();
        }
        let y: Vec<f64> = (0..n).map(|i| cov[(i, 0)] + rng.random::<f64>()).collect();
        let data = Dataset::unnamed(cov, y).unwrap();
        let fits = fit_all_marginals(&data, 5, 3).unwrap();
        assert!(!fits[0].degenerate && !fits[2].degenerate);
        assert!(fits[1].degenerate);
        assert_eq!(fits[1].norm_sq, 0.0);
        assert!(fits[0].norm_sq > fits[2].norm_sq);
    }

    #[test]
    fn empty_joint_fit_is_intercept_only() {
        let y = [1.0, 2.0, 3.0, 6.0];
        let jf = fit_joint(&y, &[]).unwrap();
        assert_eq!(jf.intercept, 3.0);
        assert_eq!(jf.rss, (4.0 + 1.0 + 0.0 + 9.0) / 4.0);
    }

    #[test]
    fn single_block_joint_matches_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..80).map(|_| rng.random()).collect();
        let y: Vec<f64> = x.iter().map(|v| (6.0 * v).sin() + rng.random::<f64>()).collect();
        let b = block(&x, 6, 3);
        let m = fit_marginal(&y, &b).unwrap();
        let j = fit_joint(&y, &[&b]).unwrap();
        assert!((m.rss - j.rss).abs() < 1e-10);
        for (a, c) in m.coefficients.iter().zip(&j.coefficients[0]) {
            assert!((a - c).abs() < 1e-10);
        }
    }

    #[test]
    fn coefficients_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x: Vec<f64> = (0..80).map(|_| rng.random()).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v + rng.random::<f64>()).collect();
        let fit = fit_marginal(&y, &block(&x, 7, 3)).unwrap();
        assert!(fit.coefficients.iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_dataset() {
        let cov = DMatrix::from_element(3, 2, f64::NAN);
        assert!(matches!(
            Dataset::unnamed(cov, vec![0.0; 3]),
            Err(Error::NonFinite { row: 0, column: 0 })
        ));
        let cov = DMatrix::zeros(3, 2);
        assert!(Dataset::unnamed(cov, vec![0.0; 4]).is_err());
    }
}

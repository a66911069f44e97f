//! B-spline bases with knots at empirical quantiles.
//!
//! A basis of dimension `dim` and degree `l` has `dim - l - 1` interior knots
//! and boundary knots repeated `l + 1` times. The functions are the standard
//! (partition-of-unity) normalisation, so every value lies in `[0, 1]`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    degree: usize,
    knots: Vec<f64>,
    dim: usize,
    lower: f64,
    upper: f64,
}

impl SplineBasis {
    /// Builds a basis from an explicit full knot vector (boundary knots
    /// included with multiplicity `degree + 1`).
    pub fn from_knots(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree < 1 || knots.len() < 2 * (degree + 1) {
            return Err(Error::InvalidDimension {
                dim: knots.len().saturating_sub(degree + 1),
                degree,
            });
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Parse("knot vector must be finite and non-decreasing".into()));
        }
        let dim = knots.len() - degree - 1;
        let lower = knots[degree];
        let upper = knots[dim];
        if !(lower < upper) {
            return Err(Error::Parse("knot vector has an empty support".into()));
        }
        Ok(SplineBasis { degree, knots, dim, lower, upper })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn interior_knots(&self) -> &[f64] {
        &self.knots[self.degree + 1..self.dim]
    }

    /// Index of the knot span containing `x` (already clamped).
    fn span(&self, x: f64) -> usize {
        let i = self.knots.partition_point(|&k| k <= x);
        i.saturating_sub(1).clamp(self.degree, self.dim - 1)
    }

    /// Evaluates the `degree + 1` possibly-nonzero basis functions at `x`.
    /// Returns the index of the first one; values are written to `out`.
    pub fn nonzero_values(&self, x: f64, out: &mut [f64]) -> usize {
        let p = self.degree;
        debug_assert_eq!(out.len(), p + 1);
        let x = x.clamp(self.lower, self.upper);
        let i = self.span(x);
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        out[0] = 1.0;
        for j in 1..=p {
            left[j] = x - self.knots[i + 1 - j];
            right[j] = self.knots[i + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
        i - p
    }
}

/// Builds a basis whose interior knots sit at the `k / (m + 1)` empirical
/// quantiles of `x`, `m = dim - degree - 1`, with support `[min x, max x]`.
pub fn build_basis(x: &[f64], dim: usize, degree: usize) -> Result<SplineBasis> {
    if degree < 1 || dim < degree + 1 {
        return Err(Error::InvalidDimension { dim, degree });
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < dim || distinct.len() < 2 {
        return Err(Error::TooFewDistinctValues { found: distinct.len(), dim });
    }
    let lower = sorted[0];
    let upper = sorted[sorted.len() - 1];
    let interior = dim - degree - 1;
    let mut knots = Vec::with_capacity(dim + degree + 1);
    knots.extend(std::iter::repeat_n(lower, degree + 1));
    for k in 1..=interior {
        knots.push(quantile_sorted(&sorted, k as f64 / (interior + 1) as f64));
    }
    knots.extend(std::iter::repeat_n(upper, degree + 1));
    Ok(SplineBasis { degree, knots, dim, lower, upper })
}

/// Evaluates every basis function at each point of `x`; points outside the
/// support are clamped to the nearest endpoint.
pub fn evaluate(basis: &SplineBasis, x: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.len(), basis.dim);
    let mut vals = vec![0.0; basis.degree + 1];
    for (row, &xi) in x.iter().enumerate() {
        let first = basis.nonzero_values(xi, &mut vals);
        for (k, &v) in vals.iter().enumerate() {
            out[(row, first + k)] = v;
        }
    }
    out
}

/// An evaluated basis with column means removed.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisBlock {
    pub values: DMatrix<f64>,
    pub column_means: Vec<f64>,
}

impl BasisBlock {
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Raw (uncentred) values.
    pub fn raw(&self) -> DMatrix<f64> {
        let mut raw = self.values.clone();
        for (j, mut col) in raw.column_iter_mut().enumerate() {
            col.add_scalar_mut(self.column_means[j]);
        }
        raw
    }
}

pub fn center_block(raw: DMatrix<f64>) -> BasisBlock {
    let mut values = raw;
    let n = values.nrows() as f64;
    let mut column_means = Vec::with_capacity(values.ncols());
    for mut col in values.column_iter_mut() {
        let m = col.sum() / n;
        col.add_scalar_mut(-m);
        column_means.push(m);
    }
    BasisBlock { values, column_means }
}

/// A covariate's basis together with its centred design block.
#[derive(Debug, Clone)]
pub struct CovariateBlock {
    pub index: usize,
    pub basis: SplineBasis,
    pub block: BasisBlock,
}

impl CovariateBlock {
    pub fn new(index: usize, x: &[f64], dim: usize, degree: usize) -> Result<Self> {
        let basis = build_basis(x, dim, degree)?;
        let block = center_block(evaluate(&basis, x));
        Ok(CovariateBlock { index, basis, block })
    }
}

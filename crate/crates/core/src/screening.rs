//! Marginal rankings (NIS, SIS), random-permutation thresholds and the
//! minimum model size.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::marginal::{centered, deflated_inverse, mean_sq, prepare_all, Dataset, PreparedBlock};
use crate::parallel::Parallelism;
use crate::stats::quantile;

/// Scores, their ranking and (optionally) a thresholded selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenResult {
    pub scores: Vec<f64>,
    /// Covariate indices by descending score, ties by ascending index.
    pub ranking: Vec<usize>,
    pub threshold: Option<f64>,
    pub selected: Vec<usize>,
}

impl ScreenResult {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let mut ranking: Vec<usize> = (0..scores.len()).collect();
        ranking.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        ScreenResult { scores, ranking, threshold: None, selected: vec![] }
    }

    /// Selects every covariate whose score reaches `threshold`.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.selected = self
            .ranking
            .iter()
            .copied()
            .take_while(|&j| self.scores[j] >= threshold)
            .collect();
        self.threshold = Some(threshold);
        self
    }

    /// Selects the `k` top-ranked covariates.
    pub fn with_top(mut self, k: usize) -> Self {
        self.selected = self.ranking.iter().copied().take(k).collect();
        self.threshold = None;
        self
    }

    /// 1-based rank of covariate `j`.
    pub fn rank_of(&self, j: usize) -> Option<usize> {
        self.ranking.iter().position(|&r| r == j).map(|i| i + 1)
    }
}

/// Smallest ranking prefix that contains every index in `truth`; `p` when
/// some index is absent from the ranking.
pub fn minimum_model_size(result: &ScreenResult, truth: &[usize]) -> usize {
    let p = result.ranking.len();
    truth
        .iter()
        .map(|&j| result.rank_of(j).unwrap_or(p))
        .max()
        .unwrap_or(0)
}

/// Absolute Pearson correlation of each covariate with the response.
/// Zero-variance columns (or a constant response) score zero.
pub fn sis_scores(data: &Dataset) -> ScreenResult {
    let (yc, _) = centered(data.response());
    let syy = yc.iter().map(|v| v * v).sum::<f64>();
    let scores = (0..data.p())
        .map(|j| {
            let (xc, _) = centered(data.column(j));
            let sxx = xc.iter().map(|v| v * v).sum::<f64>();
            if sxx <= 0.0 || syy <= 0.0 {
                return 0.0;
            }
            let sxy: f64 = xc.iter().zip(&yc).map(|(a, b)| a * b).sum();
            (sxy / (sxx * syy).sqrt()).abs()
        })
        .collect();
    ScreenResult::from_scores(scores)
}

/// Orthonormal basis (`QᵀQ / n = I`) of the span of the active blocks and the
/// residual of the centred response after projecting on it.
#[derive(Debug, Clone)]
pub struct ActiveProjection {
    q: DMatrix<f64>,
    residual: Vec<f64>,
    rss: f64,
}

impl ActiveProjection {
    fn new(blocks: &[&PreparedBlock], yc: &[f64]) -> Self {
        let n = yc.len();
        let nf = n as f64;
        let total: usize = blocks.iter().map(|b| b.values().ncols()).sum();
        if total == 0 {
            return ActiveProjection { q: DMatrix::zeros(n, 0), residual: yc.to_vec(), rss: mean_sq(yc) };
        }
        let mut design = DMatrix::zeros(n, total);
        let mut start = 0;
        for b in blocks {
            let d = b.values().ncols();
            design.view_mut((0, start), (n, d)).copy_from(b.values());
            start += d;
        }
        let gram = design.tr_mul(&design) / nf;
        let eig = gram.symmetric_eigen();
        let keep: Vec<usize> = (0..total).filter(|&k| eig.eigenvalues[k] > crate::marginal::SINGULAR_TOL).collect();
        let mut basis = DMatrix::zeros(total, keep.len());
        for (c, &k) in keep.iter().enumerate() {
            let s = 1.0 / eig.eigenvalues[k].sqrt();
            basis.column_mut(c).copy_from(&(eig.eigenvectors.column(k) * s));
        }
        let q = design * basis;
        let y = DVector::from_column_slice(yc);
        let coef = q.tr_mul(&y) / nf;
        let residual: Vec<f64> = (y - &q * coef).iter().copied().collect();
        let rss = mean_sq(&residual);
        ActiveProjection { q, residual, rss }
    }

    pub fn rss(&self) -> f64 {
        self.rss
    }

    fn permuted(&self, perm: &[usize]) -> ActiveProjection {
        ActiveProjection {
            q: self.q.select_rows(perm),
            residual: perm.iter().map(|&i| self.residual[i]).collect(),
            rss: self.rss,
        }
    }

    /// Reduction in mean squared residual from adding `block` to the active fit.
    fn gain(&self, block: &PreparedBlock) -> f64 {
        let psi = block.values();
        let nf = psi.nrows() as f64;
        let h = psi.tr_mul(&DVector::from_column_slice(&self.residual)) / nf;
        if self.q.ncols() == 0 {
            return h.dot(&(&block.gram_inv * &h)).max(0.0);
        }
        let c = self.q.tr_mul(psi) / nf;
        let reduced = &block.gram - c.tr_mul(&c);
        match deflated_inverse(&reduced, &[(0, psi.ncols())]) {
            Ok(inv) => h.dot(&(inv * &h)).max(0.0),
            Err(_) => 0.0,
        }
    }
}

/// Per-covariate prepared blocks for one dataset, shared by every
/// screening pass (real and permuted, marginal and conditional).
#[derive(Debug, Clone)]
pub struct ScreeningDesign {
    blocks: Vec<Option<PreparedBlock>>,
    yc: Vec<f64>,
    ybar: f64,
    dim: usize,
    degree: usize,
    par: Parallelism,
}

impl ScreeningDesign {
    pub fn new(data: &Dataset, dim: usize, degree: usize) -> Result<Self> {
        Self::with_parallelism(data, dim, degree, Parallelism::default())
    }

    pub fn with_parallelism(data: &Dataset, dim: usize, degree: usize, par: Parallelism) -> Result<Self> {
        let blocks = prepare_all(data, dim, degree, par)?;
        let (yc, ybar) = centered(data.response());
        let bad = blocks.iter().filter(|b| b.is_none()).count();
        if bad > 0 {
            log::warn!("{bad} degenerate covariate(s) scored as zero");
        }
        Ok(ScreeningDesign { blocks, yc, ybar, dim, degree, par })
    }

    pub fn p(&self) -> usize {
        self.blocks.len()
    }

    pub fn n(&self) -> usize {
        self.yc.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn response_mean(&self) -> f64 {
        self.ybar
    }

    pub fn centered_response(&self) -> &[f64] {
        &self.yc
    }

    pub fn parallelism(&self) -> Parallelism {
        self.par
    }

    pub fn block(&self, j: usize) -> Option<&PreparedBlock> {
        self.blocks[j].as_ref()
    }

    pub fn is_degenerate(&self, j: usize) -> bool {
        self.blocks[j].is_none()
    }

    /// Projection of the response on the active blocks (degenerate
    /// covariates in `active` are ignored).
    pub fn projection(&self, active: &[usize]) -> ActiveProjection {
        let blocks: Vec<&PreparedBlock> = active.iter().filter_map(|&j| self.block(j)).collect();
        ActiveProjection::new(&blocks, &self.yc)
    }

    /// NIS scores `‖f̂_j‖²_n` for every covariate.
    pub fn marginal_scores(&self) -> Vec<f64> {
        self.par.map(self.p(), |j| self.block(j).map_or(0.0, |b| b.score(&self.yc)))
    }

    /// RSS reduction of each covariate given the active set. Entries for
    /// active or degenerate covariates are zero.
    pub fn conditional_scores(&self, active: &[usize]) -> Vec<f64> {
        let proj = self.projection(active);
        self.gains(&proj, active)
    }

    fn gains(&self, proj: &ActiveProjection, active: &[usize]) -> Vec<f64> {
        self.par.map(self.p(), |j| {
            if active.contains(&j) {
                return 0.0;
            }
            self.block(j).map_or(0.0, |b| proj.gain(b))
        })
    }

    /// Scores after permuting the rows of every covariate outside `fixed`
    /// by one uniform permutation; covariates in `fixed` keep their
    /// alignment with the response and are regressed out. Returns scores
    /// for all covariates (zero for `fixed` and degenerate ones).
    pub fn permuted_scores<R: Rng + ?Sized>(&self, rng: &mut R, fixed: &[usize]) -> Vec<f64> {
        let mut perm: Vec<usize> = (0..self.n()).collect();
        perm.shuffle(rng);
        // Permuting the free covariates by π is the same as permuting the
        // response and the fixed blocks by π⁻¹.
        let mut inv = vec![0; perm.len()];
        for (i, &pi) in perm.iter().enumerate() {
            inv[pi] = i;
        }
        let proj = self.projection(fixed).permuted(&inv);
        self.gains(&proj, fixed)
    }

    /// [`Self::permutation_threshold`] with a permutation drawn from `seed`.
    pub fn seeded_threshold(&self, q: f64, seed: u64, fixed: &[usize]) -> f64 {
        self.pooled_threshold(q, seed, fixed, 1)
    }

    /// The `q`-quantile of the permuted scores pooled over `reps`
    /// independent permutations drawn from `seed`; `reps = 1` is
    /// [`Self::seeded_threshold`].
    pub fn pooled_threshold(&self, q: f64, seed: u64, fixed: &[usize], reps: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pool = Vec::new();
        for _ in 0..reps.max(1) {
            let scores = self.permuted_scores(&mut rng, fixed);
            pool.extend(self.free(fixed).map(|j| scores[j]));
        }
        if pool.is_empty() {
            return f64::INFINITY;
        }
        quantile(&pool, q)
    }

    fn free<'a>(&'a self, fixed: &'a [usize]) -> impl Iterator<Item = usize> + 'a {
        (0..self.p()).filter(move |j| !fixed.contains(j) && !self.is_degenerate(*j))
    }

    /// The `q`-quantile of the permuted scores over non-fixed,
    /// non-degenerate covariates. `q = 1` is the maximum.
    pub fn permutation_threshold<R: Rng + ?Sized>(&self, q: f64, rng: &mut R, fixed: &[usize]) -> f64 {
        let scores = self.permuted_scores(rng, fixed);
        let pool: Vec<f64> = self.free(fixed).map(|j| scores[j]).collect();
        if pool.is_empty() {
            return f64::INFINITY;
        }
        quantile(&pool, q)
    }
}

/// NIS ranking of all covariates (threshold unset).
pub fn nis_scores(data: &Dataset, dim: usize, degree: usize) -> Result<ScreenResult> {
    let design = ScreeningDesign::new(data, dim, degree)?;
    Ok(ScreenResult::from_scores(design.marginal_scores()))
}

/// Random-permutation threshold `ω_(q)` for one permutation drawn from `seed`.
pub fn permutation_threshold(
    data: &Dataset,
    dim: usize,
    degree: usize,
    q: f64,
    seed: u64,
    fixed: &[usize],
) -> Result<f64> {
    Ok(ScreeningDesign::new(data, dim, degree)?.seeded_threshold(q, seed, fixed))
}

//! Iterative nonparametric independence screening.
//!
//! Each iteration screens the covariates outside the current model by their
//! conditional RSS reduction, keeps those whose score reaches a permutation
//! threshold (only the free covariates are permuted), and re-selects the
//! model with the cross-validated group lasso on the union. The greedy
//! variant recruits at most `p0` covariates per iteration and stops as soon
//! as nothing is recruited.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::marginal::Dataset;
use crate::parallel::Parallelism;
use crate::screening::ScreeningDesign;
use crate::selector::{cv_select, AdditiveModel, CvConfig, SolverOptions};
use crate::spline::CovariateBlock;

#[derive(Debug, Clone, PartialEq)]
pub struct InisConfig {
    /// Basis functions per covariate.
    pub dim: usize,
    pub degree: usize,
    /// Permutation quantile; 1 takes the maximum permuted score.
    pub q: f64,
    /// Stop once the model has this many components. `None` uses
    /// `⌊n / (dim · ln n)⌋`.
    pub s0: Option<usize>,
    /// Greedy recruit cap (g-INIS). `None` runs plain INIS.
    pub p0: Option<usize>,
    /// Iteration cap. `None` uses 10, plus `⌈s0 / p0⌉` for g-INIS so that
    /// one-at-a-time recruiting can reach `s0`.
    pub max_iters: Option<usize>,
    pub n_folds: usize,
    pub grid_size: usize,
    pub seed: u64,
    /// Screen on two random halves and keep the intersection.
    pub sample_split: bool,
    pub one_se: bool,
    pub solver: SolverOptions,
    pub parallelism: Parallelism,
}

impl Default for InisConfig {
    fn default() -> Self {
        InisConfig {
            dim: 5,
            degree: 3,
            q: 1.0,
            s0: None,
            p0: None,
            max_iters: None,
            n_folds: 5,
            grid_size: 50,
            seed: 0,
            sample_split: false,
            one_se: false,
            solver: SolverOptions::default(),
            parallelism: Parallelism::default(),
        }
    }
}

impl InisConfig {
    pub fn default_s0(n: usize, dim: usize) -> usize {
        let n_f = n as f64;
        ((n_f / (dim as f64 * n_f.ln())).floor() as usize).max(1)
    }

    pub fn s0_for(&self, n: usize) -> usize {
        self.s0.unwrap_or_else(|| Self::default_s0(n, self.dim))
    }

    pub fn max_iters_for(&self, n: usize) -> usize {
        self.max_iters.unwrap_or_else(|| match self.p0 {
            Some(p0) => 10 + self.s0_for(n).div_ceil(p0.max(1)),
            None => 10,
        })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.degree < 1 || self.dim < self.degree + 1 {
            return Err(Error::InvalidDimension { dim: self.dim, degree: self.degree });
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::InvalidConfig(format!("q must lie in [0, 1], got {}", self.q)));
        }
        let s0 = self.s0_for(n);
        if s0 == 0 || s0 > n / self.dim {
            return Err(Error::InvalidConfig(format!("s0 = {s0} must lie in [1, n/dim = {}]", n / self.dim)));
        }
        if let Some(p0) = self.p0 {
            if p0 == 0 || p0 > s0 {
                return Err(Error::InvalidConfig(format!("p0 = {p0} must lie in [1, s0 = {s0}]")));
            }
        }
        if self.max_iters == Some(0) {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// One iteration: recruited candidates `A_l`, selected model `M_l`, the
/// permutation threshold and the training RSS of the refitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub candidates: Vec<usize>,
    pub selected: Vec<usize>,
    pub threshold: f64,
    pub rss: f64,
    pub lambda: f64,
}

impl IterationRecord {
    /// `iter=.. candidates=.. selected=.. threshold=.. rss=.. A=[..] M=[..]`
    pub fn to_line(&self) -> String {
        let list = |v: &[usize]| v.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(",");
        format!(
            "iter={} candidates={} selected={} threshold={:e} rss={:e} lambda={:e} A=[{}] M=[{}]",
            self.iteration,
            self.candidates.len(),
            self.selected.len(),
            self.threshold,
            self.rss,
            self.lambda,
            list(&self.candidates),
            list(&self.selected)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InisTrace {
    pub records: Vec<IterationRecord>,
}

impl InisTrace {
    /// Checks `M_l ⊆ M_{l−1} ∪ A_l` for every iteration.
    pub fn is_consistent(&self) -> bool {
        let mut prev: Vec<usize> = vec![];
        for r in &self.records {
            if !r.selected.iter().all(|j| prev.contains(j) || r.candidates.contains(j)) {
                return false;
            }
            prev = r.selected.clone();
        }
        true
    }

    pub fn to_text(&self) -> String {
        self.records.iter().map(|r| r.to_line() + "\n").collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `|M_l| ≥ s0`.
    SizeLimit,
    /// `M_l = M_{l−1}`.
    Stable,
    /// Greedy variant: no covariate reached the threshold.
    NoRecruit,
    MaxIters,
    /// Nothing passed the first screening step; the model is intercept-only.
    EmptyFirstStage,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::SizeLimit => "size-limit",
            Termination::Stable => "stable",
            Termination::NoRecruit => "no-recruit",
            Termination::MaxIters => "max-iters",
            Termination::EmptyFirstStage => "empty-first-stage",
        }
    }
}

#[derive(Debug, Clone)]
pub struct InisOutcome {
    pub model: AdditiveModel,
    pub trace: InisTrace,
    pub termination: Termination,
    /// Every coordinate-descent run converged.
    pub converged: bool,
}

impl InisOutcome {
    pub fn selected(&self) -> Vec<usize> {
        self.model.selected()
    }
}

/// RSS reduction of each covariate outside `active` given the joint spline
/// fit on `active`; entries for `active` covariates are zero.
pub fn conditional_scores(data: &Dataset, active: &[usize], config: &InisConfig) -> Result<Vec<f64>> {
    let design = ScreeningDesign::with_parallelism(data, config.dim, config.degree, config.parallelism)?;
    Ok(design.conditional_scores(active))
}

pub fn run_inis(data: &Dataset, config: &InisConfig) -> Result<InisOutcome> {
    let config = InisConfig { p0: None, ..config.clone() };
    run(data, &config)
}

/// Greedy INIS; `p0` defaults to 1.
pub fn run_greedy_inis(data: &Dataset, config: &InisConfig) -> Result<InisOutcome> {
    let config = InisConfig { p0: Some(config.p0.unwrap_or(1)), ..config.clone() };
    run(data, &config)
}

/// Covariates outside `fixed` whose score reaches the permutation threshold,
/// best first.
fn screen_step<R: Rng + ?Sized>(design: &ScreeningDesign, fixed: &[usize], q: f64, rng: &mut R) -> (f64, Vec<usize>) {
    let scores = design.conditional_scores(fixed);
    let threshold = design.permutation_threshold(q, rng, fixed);
    let mut recruits: Vec<usize> = (0..design.p())
        .filter(|&j| !fixed.contains(&j) && !design.is_degenerate(j) && scores[j] >= threshold)
        .collect();
    recruits.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    (threshold, recruits)
}

fn run(data: &Dataset, config: &InisConfig) -> Result<InisOutcome> {
    let n = data.n();
    config.validate(n)?;
    let s0 = config.s0_for(n);
    let design = ScreeningDesign::with_parallelism(data, config.dim, config.degree, config.parallelism)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let halves = if config.sample_split {
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut rng);
        let (a, b) = rows.split_at(n / 2);
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_unstable();
        b.sort_unstable();
        Some([
            ScreeningDesign::with_parallelism(&data.subset_rows(&a), config.dim, config.degree, config.parallelism)?,
            ScreeningDesign::with_parallelism(&data.subset_rows(&b), config.dim, config.degree, config.parallelism)?,
        ])
    } else {
        None
    };

    let y = data.response();
    let mut trace = InisTrace::default();
    let mut model = AdditiveModel::intercept_only(design.response_mean());
    let mut selected: Vec<usize> = vec![];
    let mut converged = true;

    for iteration in 1..=config.max_iters_for(n) {
        let (threshold, mut recruits) = match &halves {
            None => screen_step(&design, &selected, config.q, &mut rng),
            Some([h1, h2]) => {
                let (t1, r1) = screen_step(h1, &selected, config.q, &mut rng);
                let (_, r2) = screen_step(h2, &selected, config.q, &mut rng);
                (t1, r1.into_iter().filter(|j| r2.contains(j)).collect())
            }
        };
        if let Some(p0) = config.p0 {
            recruits.truncate(p0);
        }
        recruits.truncate(s0.saturating_sub(selected.len()));
        let fold_seed = rng.next_u64();

        if recruits.is_empty() && (iteration == 1 || config.p0.is_some()) {
            let record = IterationRecord {
                iteration,
                candidates: vec![],
                selected: selected.clone(),
                threshold,
                rss: training_rss(&model, data),
                lambda: model.lambda,
            };
            log::info!("{}", record.to_line());
            trace.records.push(record);
            let termination = if iteration == 1 { Termination::EmptyFirstStage } else { Termination::NoRecruit };
            return Ok(InisOutcome { model, trace, termination, converged });
        }

        let mut candidates: Vec<usize> = selected.iter().copied().chain(recruits.iter().copied()).collect();
        candidates.sort_unstable();
        let blocks: Vec<CovariateBlock> = candidates
            .iter()
            .filter_map(|&j| design.block(j).map(|b| b.cov.clone()))
            .collect();
        let cv = CvConfig {
            n_folds: config.n_folds,
            grid_size: config.grid_size,
            seed: fold_seed,
            one_se: config.one_se,
            solver: config.solver,
            parallelism: config.parallelism,
            ..CvConfig::default()
        };
        let (fit, _) = cv_select(y, &blocks, &cv)?;
        converged &= fit.converged;
        model = fit.model;
        let next = model.selected();

        let mut recruits_sorted = recruits.clone();
        recruits_sorted.sort_unstable();
        let record = IterationRecord {
            iteration,
            candidates: recruits_sorted,
            selected: next.clone(),
            threshold,
            rss: training_rss(&model, data),
            lambda: model.lambda,
        };
        log::info!("{}", record.to_line());
        trace.records.push(record);

        if next.len() >= s0 {
            return Ok(InisOutcome { model, trace, termination: Termination::SizeLimit, converged });
        }
        if next == selected {
            return Ok(InisOutcome { model, trace, termination: Termination::Stable, converged });
        }
        selected = next;
    }
    Ok(InisOutcome { model, trace, termination: Termination::MaxIters, converged })
}

fn training_rss(model: &AdditiveModel, data: &Dataset) -> f64 {
    let pred = model.predict(data.covariates());
    pred.iter().zip(data.response()).map(|(p, y)| (y - p).powi(2)).sum::<f64>() / data.n() as f64
}

//! Nonparametric independence screening for ultra-high dimensional sparse
//! additive models.
//!
//! The crate is organised bottom-up:
//!
//! - [`spline`]: B-spline bases with quantile knots and column-centred design blocks.
//! - [`marginal`]: componentwise and joint least-squares spline fits.
//! - [`screening`]: NIS and SIS rankings, permutation thresholds, minimum model size.
//! - [`selector`]: group lasso over spline coefficient groups with cross-validated penalty.
//! - [`inis`]: the iterative (INIS) and greedy (g-INIS) procedures.
//! - [`sim`]: seeded generators for the benchmark scenarios.
//! - [`bench`]: replication runner and aggregate reports.
//! - [`io`]: CSV datasets, model files and SVG component plots.
//!
//! Data-parallel loops (per-covariate fits, CV folds, replications) run on rayon
//! when the `parallel` feature is enabled and fall back to plain iterators
//! otherwise. Results never depend on the thread count.

pub mod bench;
pub mod error;
pub mod inis;
pub mod io;
pub mod marginal;
pub mod parallel;
pub mod screening;
pub mod selector;
pub mod sim;
pub mod spline;
pub mod stats;

pub use error::{Error, Result};

pub use inis::{
    conditional_scores, run_greedy_inis, run_inis, InisConfig, InisOutcome, InisTrace, IterationRecord,
    Termination,
};
pub use marginal::{fit_all_marginals, fit_joint, fit_marginal, Dataset, JointFit, MarginalFit};
pub use parallel::Parallelism;
pub use screening::{
    minimum_model_size, nis_scores, permutation_threshold, sis_scores, ScreenResult, ScreeningDesign,
};
pub use selector::{
    cv_select, fit_group_lasso, fit_group_lasso_traced, fit_group_lasso_with, lambda_max, predict, AdditiveModel, Component, CvConfig, GroupLassoFit, LambdaPath,
    SolverOptions,
};
pub use spline::{build_basis, center_block, evaluate, BasisBlock, CovariateBlock, SplineBasis};
pub use stats::robust_sd;
pub use bench::{run_bench, BenchConfig, BenchReport, BenchRun, Method, MethodSummary, RepRecord};
pub use sim::{generate, Example, Simulated, SimulationSpec};

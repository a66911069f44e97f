//! Seeded generators for the benchmark scenarios.
//!
//! | id | model | truth |
//! |----|-------|-------|
//! | 1 | linear, `s` alternating ±1 coefficients, last 50 columns mix the active ones | `X1..Xs` |
//! | 2 | `X1 + X2 + X3`, with `X2 = −X1³/3 + ε̃` | `X1..X3` |
//! | 3 | `5g1(X1) + 3g2(X2) + 4g3(X3) + 6g4(X4)`, random-effect covariates | `X1..X4` |
//! | 4 | twelve components with weights 1, 1.5, 2 | `X1..X12` |
//! | 5 | `2X1 + 2X2 + 2X3 − 3√2 X4`, X4 uncorrelated with Y | `X1..X4` |
//! | 6 | `3g1 + 3g2 + 2g3 + 2g4` with noise scaled by `C` | `X1..X4` |
//!
//! Training data, test data and SNR draws use separate ChaCha streams of the
//! same seed, so they never share random numbers.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::marginal::Dataset;
use crate::stats::splitmix64;

const TRAIN_STREAM: u64 = 0;
const TEST_STREAM: u64 = 1;
const SNR_STREAM: u64 = 2;

pub fn g1(x: f64) -> f64 {
    x
}

pub fn g2(x: f64) -> f64 {
    (2.0 * x - 1.0).powi(2)
}

pub fn g3(x: f64) -> f64 {
    let s = (2.0 * PI * x).sin();
    s / (2.0 - s)
}

pub fn g4(x: f64) -> f64 {
    let s = (2.0 * PI * x).sin();
    let c = (2.0 * PI * x).cos();
    0.1 * s + 0.2 * c + 0.3 * s * s + 0.4 * c.powi(3) + 0.5 * s.powi(3)
}

/// `(g1, g2, g3, g4)` at `x`.
pub fn component_functions(x: f64) -> (f64, f64, f64, f64) {
    (g1(x), g2(x), g3(x), g4(x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Example {
    /// Linear model with `s ∈ {3, 6, 12, 24}` active covariates.
    One { s: usize },
    Two,
    /// `t ∈ {0, 1}` controls covariate correlation (0 or 0.5).
    Three { t: f64 },
    Four { t: f64 },
    Five,
    /// `c2 = C² ∈ {2, 1, 0.5, 0.25}` scales the noise variance.
    Six { t: f64, c2: f64 },
}

impl Example {
    pub fn id(&self) -> u8 {
        match self {
            Example::One { .. } => 1,
            Example::Two => 2,
            Example::Three { .. } => 3,
            Example::Four { .. } => 4,
            Example::Five => 5,
            Example::Six { .. } => 6,
        }
    }

    pub fn truth_len(&self) -> usize {
        match *self {
            Example::One { s } => s,
            Example::Two => 3,
            Example::Four { .. } => 12,
            _ => 4,
        }
    }

    /// Builds an example from its number and a `key=value` list such as
    /// `t=1,c2=0.5`. Missing keys default to `s=3`, `t=0`, `c2=1`.
    pub fn from_params(id: u8, params: &str) -> Result<Self> {
        let mut s = None;
        let mut t = None;
        let mut c2 = None;
        for item in params.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidSpec(format!("parameter \"{item}\" is not key=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("parameter {k}: cannot parse \"{v}\"")))?;
            match k.trim().to_ascii_lowercase().as_str() {
                "s" => s = Some(v),
                "t" => t = Some(v),
                "c2" => c2 = Some(v),
                other => return Err(Error::InvalidSpec(format!("unknown parameter \"{other}\""))),
            }
        }
        let unused = |name: &str, v: Option<f64>| match v {
            Some(_) => Err(Error::InvalidSpec(format!("example {id} takes no parameter {name}"))),
            None => Ok(()),
        };
        let ex = match id {
            1 => {
                unused("t", t)?;
                unused("c2", c2)?;
                let s = s.unwrap_or(3.0);
                if s.fract() != 0.0 || s < 1.0 {
                    return Err(Error::InvalidSpec(format!("s must be a positive integer, got {s}")));
                }
                Example::One { s: s as usize }
            }
            2 | 5 => {
                unused("s", s)?;
                unused("t", t)?;
                unused("c2", c2)?;
                if id == 2 {
                    Example::Two
                } else {
                    Example::Five
                }
            }
            3 | 4 => {
                unused("s", s)?;
                unused("c2", c2)?;
                let t = t.unwrap_or(0.0);
                if id == 3 {
                    Example::Three { t }
                } else {
                    Example::Four { t }
                }
            }
            6 => {
                unused("s", s)?;
                Example::Six { t: t.unwrap_or(0.0), c2: c2.unwrap_or(1.0) }
            }
            other => return Err(Error::InvalidSpec(format!("example must be 1 to 6, got {other}"))),
        };
        ex.validate(ex.min_p())?;
        Ok(ex)
    }

    /// Short label such as `ex3(t=0)`.
    pub fn label(&self) -> String {
        match *self {
            Example::One { s } => format!("ex1(s={s})"),
            Example::Two => "ex2".into(),
            Example::Three { t } => format!("ex3(t={t})"),
            Example::Four { t } => format!("ex4(t={t})"),
            Example::Five => "ex5".into(),
            Example::Six { t, c2 } => format!("ex6(t={t},C2={c2})"),
        }
    }

    fn noise_sd(&self) -> f64 {
        match *self {
            Example::One { .. } | Example::Two => 3f64.sqrt(),
            Example::Three { .. } => 1.74f64.sqrt(),
            Example::Four { .. } => 0.5184f64.sqrt(),
            Example::Five => 1.0,
            Example::Six { c2, .. } => c2.sqrt() * 3.3843f64.sqrt(),
        }
    }

    fn min_p(&self) -> usize {
        match *self {
            Example::One { s } => s + 50,
            other => other.truth_len(),
        }
    }

    fn validate(&self, p: usize) -> Result<()> {
        let bad_t = |t: f64| t != 0.0 && t != 1.0;
        match *self {
            Example::One { s } if ![3, 6, 12, 24].contains(&s) => {
                return Err(Error::InvalidSpec(format!("example 1 needs s in {{3,6,12,24}}, got {s}")))
            }
            Example::Three { t } | Example::Four { t } if bad_t(t) => {
                return Err(Error::InvalidSpec(format!("t must be 0 or 1, got {t}")))
            }
            Example::Six { t, c2 } => {
                if bad_t(t) {
                    return Err(Error::InvalidSpec(format!("t must be 0 or 1, got {t}")));
                }
                if ![2.0, 1.0, 0.5, 0.25].contains(&c2) {
                    return Err(Error::InvalidSpec(format!("C² must be one of 2, 1, 0.5, 0.25, got {c2}")));
                }
            }
            _ => {}
        }
        if p < self.min_p() {
            return Err(Error::InvalidSpec(format!("{} needs p ≥ {}, got {p}", self.label(), self.min_p())));
        }
        Ok(())
    }

    /// Draws one covariate row of length `row.len()`. With `signal_only`,
    /// only the covariates entering the regression function are guaranteed
    /// to be drawn (used for SNR estimates).
    fn draw_row<R: Rng + ?Sized>(&self, rng: &mut R, row: &mut [f64], signal_only: bool) {
        let p = row.len();
        let mut normal = || -> f64 { rng.sample(StandardNormal) };
        match *self {
            Example::One { s } => {
                let free = if signal_only { p } else { p - 50 };
                for v in row[..free].iter_mut() {
                    *v = normal();
                }
                if !signal_only {
                    let mix: f64 = (0..s).map(|j| alt_sign(j) * row[j]).sum::<f64>() / 5.0;
                    let scale = (1.0 - s as f64 / 25.0).sqrt();
                    for v in row[free..].iter_mut() {
                        *v = mix + scale * normal();
                    }
                }
            }
            Example::Two => {
                for v in row.iter_mut() {
                    *v = normal();
                }
                row[1] += -row[0].powi(3) / 3.0;
            }
            Example::Three { t } | Example::Four { t } | Example::Six { t, .. } => {
                let u: f64 = rng.random();
                for v in row.iter_mut() {
                    *v = (rng.random::<f64>() + t * u) / (1.0 + t);
                }
            }
            Example::Five => {
                // X4 is the common factor; every other column loads 1/√2 on it
                let z0 = normal();
                for v in row.iter_mut() {
                    *v = (z0 + normal()) / SQRT_2;
                }
                row[3] = z0;
            }
        }
    }

    /// Contribution of each active covariate to the regression function.
    fn components(&self, row: &[f64], out: &mut Vec<f64>) {
        out.clear();
        match *self {
            Example::One { s } => out.extend((0..s).map(|j| alt_sign(j) * row[j])),
            Example::Two => out.extend_from_slice(&row[..3]),
            Example::Three { .. } => {
                out.extend([5.0 * g1(row[0]), 3.0 * g2(row[1]), 4.0 * g3(row[2]), 6.0 * g4(row[3])])
            }
            Example::Four { .. } => {
                let gs = [g1, g2, g3, g4];
                for (j, &x) in row[..12].iter().enumerate() {
                    let w = [1.0, 1.5, 2.0][j / 4];
                    out.push(w * gs[j % 4](x));
                }
            }
            Example::Five => out.extend([2.0 * row[0], 2.0 * row[1], 2.0 * row[2], -3.0 * SQRT_2 * row[3]]),
            Example::Six { .. } => {
                out.extend([3.0 * g1(row[0]), 3.0 * g2(row[1]), 2.0 * g3(row[2]), 2.0 * g4(row[3])])
            }
        }
    }
}

fn alt_sign(j: usize) -> f64 {
    if j.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSpec {
    pub example: Example,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn new(example: Example, n: usize, p: usize, seed: u64) -> Self {
        SimulationSpec { example, n, p, seed }
    }

    pub fn validate(&self) -> Result<()> {
        self.example.validate(self.p)?;
        if self.n < 4 {
            return Err(Error::InvalidSpec(format!("n must be at least 4, got {}", self.n)));
        }
        Ok(())
    }

    /// The same scenario with the seed of replication `rep`.
    pub fn replication(&self, rep: u64) -> Self {
        SimulationSpec { seed: replication_seed(self.seed, rep), ..*self }
    }

    pub fn truth(&self) -> Vec<usize> {
        (0..self.example.truth_len()).collect()
    }
}

/// Seed of replication `rep`: `splitmix64(seed + rep)`.
pub fn replication_seed(seed: u64, rep: u64) -> u64 {
    splitmix64(seed.wrapping_add(rep))
}

/// Training set, independent test set of size `n/2`, and the active indices.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub train: Dataset,
    pub test: Dataset,
    pub truth: Vec<usize>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn draw_dataset(example: &Example, n: usize, p: usize, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let mut cov = DMatrix::zeros(n, p);
    let mut y = Vec::with_capacity(n);
    let mut row = vec![0.0; p];
    let mut comps = Vec::new();
    let sd = example.noise_sd();
    for i in 0..n {
        example.draw_row(rng, &mut row, false);
        example.components(&row, &mut comps);
        let eps: f64 = rng.sample(StandardNormal);
        y.push(comps.iter().sum::<f64>() + sd * eps);
        for (j, &v) in row.iter().enumerate() {
            cov[(i, j)] = v;
        }
    }
    Dataset::unnamed(cov, y)
}

pub fn generate(spec: &SimulationSpec) -> Result<Simulated> {
    spec.validate()?;
    let train = draw_dataset(&spec.example, spec.n, spec.p, &mut stream(spec.seed, TRAIN_STREAM))?;
    let test = draw_dataset(&spec.example, spec.n / 2, spec.p, &mut stream(spec.seed, TEST_STREAM))?;
    Ok(Simulated { train, test, truth: spec.truth() })
}

/// Monte Carlo signal-to-noise summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrReport {
    /// `var(m(X)) / var(ε)`.
    pub overall: f64,
    /// `var(m_j(X_j))` for each active component.
    pub component_variances: Vec<f64>,
    pub noise_variance: f64,
}

impl SnrReport {
    /// Summary from per-draw component values.
    pub fn from_samples(samples: &[Vec<f64>], noise_variance: f64) -> Self {
        let k = samples.first().map_or(0, Vec::len);
        let mut comp = vec![Moments::default(); k];
        let mut total = Moments::default();
        for s in samples {
            for (m, &v) in comp.iter_mut().zip(s) {
                m.push(v);
            }
            total.push(s.iter().sum());
        }
        SnrReport {
            overall: total.variance() / noise_variance,
            component_variances: comp.iter().map(Moments::variance).collect(),
            noise_variance,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn variance(&self) -> f64 {
        if self.n < 2.0 {
            0.0
        } else {
            self.m2 / self.n
        }
    }
}

/// Monte Carlo SNR with `draws` samples from the covariate law.
pub fn snr(spec: &SimulationSpec, draws: usize) -> Result<SnrReport> {
    spec.example.validate(spec.p)?;
    let mut rng = stream(spec.seed, SNR_STREAM);
    let mut row = vec![0.0; spec.example.truth_len()];
    let mut comps = Vec::new();
    let samples: Vec<Vec<f64>> = (0..draws)
        .map(|_| {
            spec.example.draw_row(&mut rng, &mut row, true);
            spec.example.components(&row, &mut comps);
            comps.clone()
        })
        .collect();
    Ok(SnrReport::from_samples(&samples, spec.example.noise_sd().powi(2)))
}

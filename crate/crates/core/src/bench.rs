//! Replication runner and aggregate reports.
//!
//! Each replication draws a fresh training and test set from the scenario,
//! runs every requested method and records true/false positives, prediction
//! error on the test set and (for pure screening methods) the minimum model
//! size. Aggregates are always recomputed from the per-replication records,
//! and [`verify`] re-derives them from the written CSV files.
//!
//! Wall-clock times are kept apart from the deterministic outputs so that
//! the replication and report files are byte-identical across runs and
//! thread counts.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::inis::{run_greedy_inis, run_inis, InisConfig};
use crate::io::num;
use crate::parallel::Parallelism;
use crate::screening::{minimum_model_size, nis_scores, sis_scores};
use crate::selector::{fit_group_lasso_with, SolverOptions};
use crate::sim::{generate, SimulationSpec};
use crate::spline::CovariateBlock;
use crate::stats::{mean, median, robust_sd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    /// NIS ranking; reports the minimum model size.
    Nis,
    /// Correlation ranking; reports the minimum model size.
    Sis,
    Inis,
    Ginis,
    /// Unpenalised spline fit on the true covariates.
    Oracle,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Nis => "nis",
            Method::Sis => "sis",
            Method::Inis => "inis",
            Method::Ginis => "ginis",
            Method::Oracle => "oracle",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nis" => Ok(Method::Nis),
            "sis" => Ok(Method::Sis),
            "inis" => Ok(Method::Inis),
            "ginis" | "g-inis" => Ok(Method::Ginis),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::InvalidConfig(format!("unknown method \"{other}\""))),
        }
    }
}

/// Outcome of one method on one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub rep: u64,
    pub seed: u64,
    pub method: Method,
    pub tp: Option<usize>,
    pub fp: Option<usize>,
    pub pe: Option<f64>,
    pub mms: Option<usize>,
    /// `ok`, `unconverged`, or `error: <message>`.
    pub status: String,
    pub seconds: f64,
}

impl RepRecord {
    pub fn failed(&self) -> bool {
        self.status.starts_with("error")
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Base scenario; replication `r` uses `spec.replication(r)`.
    pub spec: SimulationSpec,
    pub reps: u64,
    pub methods: Vec<Method>,
    /// Screening and selection settings (its seed is replaced per replication).
    pub inis: InisConfig,
    pub parallelism: Parallelism,
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub config: BenchConfig,
    pub records: Vec<RepRecord>,
}

impl BenchRun {
    pub fn failure_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.failed()).count() as f64 / self.records.len() as f64
    }

    pub fn report(&self) -> BenchReport {
        BenchReport {
            scenario: self.config.spec.example.label(),
            n: self.config.spec.n,
            p: self.config.spec.p,
            reps: self.config.reps,
            seed: self.config.spec.seed,
            summaries: aggregate(&self.records),
        }
    }

    pub fn records_for(&self, method: Method) -> impl Iterator<Item = &RepRecord> {
        self.records.iter().filter(move |r| r.method == method)
    }
}

fn run_method(method: Method, spec: &SimulationSpec, rep: u64, config: &BenchConfig) -> RepRecord {
    let seed = spec.seed;
    let start = Instant::now();
    let mut rec = RepRecord {
        rep,
        seed,
        method,
        tp: None,
        fp: None,
        pe: None,
        mms: None,
        status: "ok".into(),
        seconds: 0.0,
    };
    let result: Result<()> = (|| {
        let sim = generate(spec)?;
        let inis = InisConfig { seed, parallelism: config.parallelism, ..config.inis.clone() };
        let outcome = match method {
            Method::Nis => {
                let r = nis_scores(&sim.train, inis.dim, inis.degree)?;
                rec.mms = Some(minimum_model_size(&r, &sim.truth));
                return Ok(());
            }
            Method::Sis => {
                rec.mms = Some(minimum_model_size(&sis_scores(&sim.train), &sim.truth));
                return Ok(());
            }
            Method::Inis => run_inis(&sim.train, &inis)?,
            Method::Ginis => run_greedy_inis(&sim.train, &inis)?,
            Method::Oracle => {
                let blocks = sim
                    .truth
                    .iter()
                    .map(|&j| CovariateBlock::new(j, sim.train.column(j), inis.dim, inis.degree))
                    .collect::<Result<Vec<_>>>()?;
                let opts = SolverOptions { tol: 1e-10, max_sweeps: 100_000 };
                let fit = fit_group_lasso_with(sim.train.response(), &blocks, 0.0, &opts)?;
                let pred = fit.model.predict(sim.test.covariates());
                rec.tp = Some(fit.model.components.len());
                rec.fp = Some(0);
                rec.pe = Some(mse(&pred, sim.test.response()));
                return Ok(());
            }
        };
        let selected = outcome.selected();
        let tp = selected.iter().filter(|j| sim.truth.contains(j)).count();
        rec.tp = Some(tp);
        rec.fp = Some(selected.len() - tp);
        rec.pe = Some(mse(&outcome.model.predict(sim.test.covariates()), sim.test.response()));
        if !outcome.converged {
            rec.status = "unconverged".into();
        }
        Ok(())
    })();
    if let Err(e) = result {
        rec.status = format!("error: {e}");
        rec.tp = None;
        rec.fp = None;
        rec.pe = None;
        rec.mms = None;
    }
    rec.seconds = start.elapsed().as_secs_f64();
    rec
}

fn mse(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / y.len() as f64
}

/// Runs every replication (in parallel when enabled); records come back in
/// `(rep, method)` order.
pub fn run_bench(config: &BenchConfig) -> Result<BenchRun> {
    if config.methods.is_empty() {
        return Err(Error::InvalidConfig("no methods requested".into()));
    }
    config.spec.validate()?;
    let per_rep = config.parallelism.map(config.reps as usize, |r| {
        let spec = config.spec.replication(r as u64);
        config.methods.iter().map(|&m| run_method(m, &spec, r as u64, config)).collect::<Vec<_>>()
    });
    Ok(BenchRun { config: config.clone(), records: per_rep.into_iter().flatten().collect() })
}

/// Per-method aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub reps: usize,
    pub failed: usize,
    pub mean_tp: Option<f64>,
    pub rsd_tp: Option<f64>,
    pub mean_fp: Option<f64>,
    pub rsd_fp: Option<f64>,
    pub median_pe: Option<f64>,
    pub rsd_pe: Option<f64>,
    pub median_mms: Option<f64>,
    pub rsd_mms: Option<f64>,
    /// Median wall-clock seconds; shown in the table, not in the CSV.
    pub median_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub scenario: String,
    pub n: usize,
    pub p: usize,
    pub reps: u64,
    pub seed: u64,
    pub summaries: Vec<MethodSummary>,
}

fn collect<T: Copy>(records: &[&RepRecord], f: impl Fn(&RepRecord) -> Option<T>) -> Vec<T> {
    records.iter().filter_map(|r| f(r)).collect()
}

fn nonempty(v: &[f64], f: impl Fn(&[f64]) -> f64) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(f(v))
    }
}

pub fn aggregate(records: &[RepRecord]) -> Vec<MethodSummary> {
    let mut methods: Vec<Method> = records.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    methods
        .into_iter()
        .map(|m| {
            let recs: Vec<&RepRecord> = records.iter().filter(|r| r.method == m).collect();
            let tp: Vec<f64> = collect(&recs, |r| r.tp.map(|v| v as f64));
            let fp: Vec<f64> = collect(&recs, |r| r.fp.map(|v| v as f64));
            let pe: Vec<f64> = collect(&recs, |r| r.pe);
            let mms: Vec<f64> = collect(&recs, |r| r.mms.map(|v| v as f64));
            MethodSummary {
                method: m,
                reps: recs.len(),
                failed: recs.iter().filter(|r| r.failed()).count(),
                mean_tp: nonempty(&tp, mean),
                rsd_tp: nonempty(&tp, robust_sd),
                mean_fp: nonempty(&fp, mean),
                rsd_fp: nonempty(&fp, robust_sd),
                median_pe: nonempty(&pe, median),
                rsd_pe: nonempty(&pe, robust_sd),
                median_mms: nonempty(&mms, median),
                rsd_mms: nonempty(&mms, robust_sd),
                median_seconds: median(&recs.iter().map(|r| r.seconds).collect::<Vec<_>>()),
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn opt_int(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const REPLICATION_HEADER: &str = "rep,seed,method,tp,fp,pe,mms,status";
pub const REPORT_HEADER: &str =
    "method,reps,failed,mean_tp,rsd_tp,mean_fp,rsd_fp,median_pe,rsd_pe,median_mms,rsd_mms";

/// Per-replication CSV (deterministic; excludes timings).
pub fn format_replications(records: &[RepRecord]) -> String {
    let mut out = String::from(REPLICATION_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.rep,
            r.seed,
            r.method.as_str(),
            opt_int(r.tp),
            opt_int(r.fp),
            opt(r.pe),
            opt_int(r.mms),
            r.status.replace(',', ";")
        );
    }
    out
}

/// Per-replication wall-clock seconds.
pub fn format_timings(records: &[RepRecord]) -> String {
    let mut out = String::from("rep,method,seconds\n");
    for r in records {
        let _ = writeln!(out, "{},{},{:.6}", r.rep, r.method.as_str(), r.seconds);
    }
    out
}

pub fn parse_replications(text: &str) -> Result<Vec<RepRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == REPLICATION_HEADER => {}
        _ => return Err(Error::Parse(format!("replication file must start with \"{REPLICATION_HEADER}\""))),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = i + 1;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::Parse(format!("row {row}: expected 8 fields, found {}", f.len())));
        }
        let bad = |c: &str| Error::Parse(format!("row {row}, column \"{c}\": cannot parse value"));
        let int = |s: &str, c: &str| -> Result<Option<usize>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(c))
            }
        };
        out.push(RepRecord {
            rep: f[0].parse().map_err(|_| bad("rep"))?,
            seed: f[1].parse().map_err(|_| bad("seed"))?,
            method: f[2].parse()?,
            tp: int(f[3], "tp")?,
            fp: int(f[4], "fp")?,
            pe: if f[5].is_empty() { None } else { Some(f[5].parse().map_err(|_| bad("pe"))?) },
            mms: int(f[6], "mms")?,
            status: f[7].to_string(),
            seconds: 0.0,
        });
    }
    Ok(out)
}

impl BenchReport {
    /// Machine-readable aggregates, one row per method.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                s.method.as_str(),
                s.reps,
                s.failed,
                opt(s.mean_tp),
                opt(s.rsd_tp),
                opt(s.mean_fp),
                opt(s.rsd_fp),
                opt(s.median_pe),
                opt(s.rsd_pe),
                opt(s.median_mms),
                opt(s.rsd_mms)
            );
        }
        out
    }

    /// Human-readable table with `value(robust sd)` cells.
    pub fn to_table(&self) -> String {
        let cell = |v: Option<f64>, r: Option<f64>, digits: usize| match (v, r) {
            (Some(v), Some(r)) => format!("{v:.digits$}({r:.2})"),
            _ => "-".to_string(),
        };
        let mut out = String::new();
        let _ = writeln!(out, "scenario {} n={} p={} reps={} seed={}", self.scenario, self.n, self.p, self.reps, self.seed);
        let _ = writeln!(
            out,
            "{:<8} {:>14} {:>14} {:>14} {:>14} {:>9} {:>6}",
            "method", "TP", "FP", "PE", "MMS", "time(s)", "failed"
        );
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{:<8} {:>14} {:>14} {:>14} {:>14} {:>9.3} {:>6}",
                s.method.as_str(),
                cell(s.mean_tp, s.rsd_tp, 2),
                cell(s.mean_fp, s.rsd_fp, 2),
                cell(s.median_pe, s.rsd_pe, 2),
                cell(s.median_mms, s.rsd_mms, 0),
                s.median_seconds,
                s.failed
            );
        }
        out
    }

    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }
}

/// Re-derives the aggregate CSV from a replication CSV and compares it with
/// `report_csv` byte for byte.
pub fn verify(replications_csv: &str, report_csv: &str) -> Result<bool> {
    let records = parse_replications(replications_csv)?;
    let recomputed = BenchReport {
        scenario: String::new(),
        n: 0,
        p: 0,
        reps: 0,
        seed: 0,
        summaries: aggregate(&records),
    };
    Ok(recomputed.to_csv() == report_csv)
}

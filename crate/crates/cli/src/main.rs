//! `nis`: screening, iterative selection and simulation benchmarks for sparse
//! additive models.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 unreadable or
//! invalid data (including a failed `verify`), 4 computational failure (a
//! solver that did not converge, or more than 10% failed bench replications).
//! Results go to stdout or the requested files; diagnostics go to stderr.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nis::bench::{format_replications, format_timings, verify};
use nis::io::{format_model, format_screen, read_csv, write_component_plots, write_csv};
use nis::parallel::with_threads;
use nis::screening::ScreeningDesign;
use nis::{
    generate, run_bench, run_greedy_inis, run_inis, sis_scores, BenchConfig, Example, InisConfig, Method,
    Parallelism, ScreenResult, SimulationSpec,
};

use config::ConfigFile;

#[derive(Parser, Debug)]
#[command(name = "nis", version, about = "Nonparametric independence screening for sparse additive models")]
struct Cli {
    /// Key-value configuration file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (default: one per logical core).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// More diagnostics on stderr (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rank covariates by marginal spline fit (NIS) or correlation (SIS).
    Screen(ScreenArgs),
    /// Iterative screening and group-lasso selection.
    Inis(SelectArgs),
    /// Greedy variant recruiting at most p0 covariates per iteration.
    Ginis(SelectArgs),
    /// Run replications of a simulation scenario and write aggregate reports.
    Bench(BenchArgs),
    /// Export one simulated training set (and optionally its test set) as CSV.
    Simulate(SimulateArgs),
    /// Recompute a bench report from its replication file and compare exactly.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Name of the response column [default: y].
    #[arg(long, value_name = "COL")]
    response: Option<String>,
    /// Spline basis functions per covariate [default: 5].
    #[arg(long)]
    dim: Option<usize>,
    /// Spline degree [default: 3].
    #[arg(long)]
    degree: Option<usize>,
    /// Random seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ScreenMethod {
    Nis,
    Sis,
}

#[derive(Args, Debug)]
struct ScreenArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    method: Option<ScreenMethod>,
    /// Keep the K top-ranked covariates [default: n/(dim·ln n)].
    #[arg(long, value_name = "K", conflicts_with = "permute_q")]
    top: Option<usize>,
    /// Keep covariates above the Q-quantile of permuted-data scores (NIS only).
    #[arg(long, value_name = "Q")]
    permute_q: Option<f64>,
    /// Pool the permuted scores of R permutations [default: 1].
    #[arg(long, value_name = "R", requires = "permute_q")]
    permute_reps: Option<usize>,
    /// Output file for the ranked table [default: stdout].
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Quantile of the permutation null used as threshold [default: 1].
    #[arg(long)]
    q: Option<f64>,
    /// Model size limit [default: n/(dim·ln n)].
    #[arg(long)]
    s0: Option<usize>,
    /// Recruits per iteration (ginis only) [default: 1].
    #[arg(long)]
    p0: Option<usize>,
    /// Cross-validation folds [default: 5].
    #[arg(long)]
    folds: Option<usize>,
    /// Iteration cap [default: 10; ginis adds ⌈s0/p0⌉].
    #[arg(long)]
    max_iters: Option<usize>,
    /// Pick the largest penalty within one standard error of the CV minimum.
    #[arg(long)]
    one_se: bool,
    /// Screen on one half of the sample and select on the other.
    #[arg(long)]
    sample_split: bool,
    /// Where to write the fitted model [default: model.txt].
    #[arg(long, value_name = "FILE")]
    model_out: Option<PathBuf>,
    /// Where to write the iteration trace [default: trace.txt].
    #[arg(long, value_name = "FILE")]
    trace_out: Option<PathBuf>,
    /// Directory for SVG plots of the fitted components.
    #[arg(long, value_name = "DIR")]
    plot_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Simulation example, 1 to 6.
    #[arg(long)]
    example: Option<u8>,
    /// Example parameters, e.g. `s=3`, `t=1`, `t=0,c2=0.5`.
    #[arg(long, value_name = "LIST")]
    params: Option<String>,
    /// Training sample size [default: 400].
    #[arg(long)]
    n: Option<usize>,
    /// Number of covariates [default: 1000].
    #[arg(long)]
    p: Option<usize>,
    /// Base seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Replications [default: 100].
    #[arg(long)]
    reps: Option<u64>,
    /// Comma-separated methods from nis, sis, inis, ginis, oracle [default: inis,ginis].
    #[arg(long, value_name = "LIST")]
    methods: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    /// Output directory [default: bench-out].
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Training set CSV [default: train.csv].
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Also write the n/2 test set.
    #[arg(long, value_name = "FILE")]
    test_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Directory written by `bench`.
    #[arg(long, value_name = "DIR")]
    dir: PathBuf,
}

/// Error carrying its exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Compute(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Compute(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Compute(m) => m,
        }
    }
}

impl From<nis::Error> for Failure {
    fn from(e: nis::Error) -> Self {
        match e {
            nis::Error::InvalidConfig(_) | nis::Error::InvalidSpec(_) | nis::Error::InvalidDimension { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Data(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let result = ConfigFile::load(cli.config.as_deref())
        .map_err(Failure::Usage)
        .and_then(|cfg| {
            let par = parallelism(&cli, &cfg)?;
            let threads = cli.threads.or(cfg.get("threads")?);
            with_threads(threads, || dispatch(&cli.command, &cfg, par)).map_err(Failure::from)?
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn parallelism(cli: &Cli, cfg: &ConfigFile) -> Result<Parallelism, Failure> {
    if cli.sequential || cfg.get::<bool>("sequential")?.unwrap_or(false) {
        Ok(Parallelism::Sequential)
    } else {
        Ok(Parallelism::default())
    }
}

fn dispatch(command: &Command, cfg: &ConfigFile, par: Parallelism) -> Outcome {
    match command {
        Command::Screen(a) => screen(a, cfg, par),
        Command::Inis(a) => select(a, cfg, par, false),
        Command::Ginis(a) => select(a, cfg, par, true),
        Command::Bench(a) => bench(a, cfg, par),
        Command::Simulate(a) => simulate(a, cfg),
        Command::Verify(a) => verify_dir(&a.dir),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Data(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

struct Loaded {
    data: nis::Dataset,
    dim: usize,
    degree: usize,
    seed: u64,
}

fn load(a: &DataArgs, cfg: &ConfigFile) -> Result<Loaded, Failure> {
    let path: PathBuf = a
        .data
        .clone()
        .or(cfg.get("data")?)
        .ok_or_else(|| Failure::Usage("--data is required".into()))?;
    let response: String = a.response.clone().or(cfg.get("response")?).unwrap_or_else(|| "y".into());
    let data = read_csv(&path, &response)?;
    Ok(Loaded {
        data,
        dim: a.dim.or(cfg.get("dim")?).unwrap_or(5),
        degree: a.degree.or(cfg.get("degree")?).unwrap_or(3),
        seed: a.seed.or(cfg.get("seed")?).unwrap_or(0),
    })
}

fn screen(a: &ScreenArgs, cfg: &ConfigFile, par: Parallelism) -> Outcome {
    let l = load(&a.data, cfg)?;
    let method = match a.method {
        Some(m) => m,
        None => match cfg.get::<String>("method")?.as_deref() {
            None | Some("nis") => ScreenMethod::Nis,
            Some("sis") => ScreenMethod::Sis,
            Some(other) => return Err(Failure::Usage(format!("unknown screening method \"{other}\""))),
        },
    };
    let top = a.top.or(cfg.get("top")?);
    let permute_q = a.permute_q.or(cfg.get("permute_q")?);
    if top.is_some() && permute_q.is_some() {
        return Err(Failure::Usage("--top and --permute-q are mutually exclusive".into()));
    }
    let (n, p) = (l.data.n(), l.data.p());
    let result = match method {
        ScreenMethod::Sis => {
            if permute_q.is_some() {
                return Err(Failure::Usage("--permute-q requires --method nis".into()));
            }
            sis_scores(&l.data)
        }
        ScreenMethod::Nis => {
            let design = ScreeningDesign::with_parallelism(&l.data, l.dim, l.degree, par)?;
            let base = ScreenResult::from_scores(design.marginal_scores());
            if let Some(q) = permute_q {
                if !(0.0..=1.0).contains(&q) {
                    return Err(Failure::Usage(format!("--permute-q must lie in [0, 1], got {q}")));
                }
                let reps = a.permute_reps.or(cfg.get("permute_reps")?).unwrap_or(1);
                base.with_threshold(design.pooled_threshold(q, l.seed, &[], reps))
            } else {
                base
            }
        }
    };
    let mut result = if permute_q.is_none() {
        let k = top.unwrap_or_else(|| InisConfig::default_s0(n, l.dim)).min(p);
        result.with_top(k)
    } else {
        result
    };
    let before = result.selected.len();
    result.selected.retain(|&j| result.scores[j] > 0.0);
    if result.selected.len() < before {
        log::warn!("{} covariates with zero score dropped from the selection", before - result.selected.len());
    }
    if result.scores.iter().all(|&s| s == 0.0) {
        log::warn!("every score is zero; nothing selected");
    }
    write_out(a.out.as_deref(), &format_screen(&result, l.data.names()))
}

fn select(a: &SelectArgs, cfg: &ConfigFile, par: Parallelism, greedy: bool) -> Outcome {
    let l = load(&a.data, cfg)?;
    let p0 = a.p0.or(cfg.get("p0")?);
    if !greedy && a.p0.is_some() {
        return Err(Failure::Usage("--p0 applies to ginis only".into()));
    }
    let d = InisConfig::default();
    let config = InisConfig {
        dim: l.dim,
        degree: l.degree,
        q: a.q.or(cfg.get("q")?).unwrap_or(d.q),
        s0: a.s0.or(cfg.get("s0")?),
        p0: if greedy { p0 } else { None },
        max_iters: a.max_iters.or(cfg.get("max_iters")?),
        n_folds: a.folds.or(cfg.get("folds")?).unwrap_or(d.n_folds),
        seed: l.seed,
        sample_split: a.sample_split || cfg.get("sample_split")?.unwrap_or(false),
        one_se: a.one_se || cfg.get("one_se")?.unwrap_or(false),
        parallelism: par,
        ..d
    };
    let outcome = if greedy { run_greedy_inis(&l.data, &config)? } else { run_inis(&l.data, &config)? };
    let names = l.data.names();
    let model_out: PathBuf = a.model_out.clone().or(cfg.get("model_out")?).unwrap_or_else(|| "model.txt".into());
    let trace_out: PathBuf = a.trace_out.clone().or(cfg.get("trace_out")?).unwrap_or_else(|| "trace.txt".into());
    write_out(Some(&model_out), &format_model(&outcome.model, Some(names)))?;
    write_out(Some(&trace_out), &outcome.trace.to_text())?;
    if let Some(dir) = a.plot_dir.clone().or(cfg.get("plot_dir")?) {
        write_component_plots(&outcome.model, names, &dir)?;
    }
    let selected = outcome.selected();
    let listed: Vec<String> = selected.iter().map(|&j| format!("{j}:{}", names[j])).collect();
    let rss = outcome.trace.records.last().map_or(f64::NAN, |r| r.rss);
    println!("selected {}", listed.join(" "));
    println!("training_rss {rss:?}");
    println!("iterations {}", outcome.trace.records.len());
    println!("termination {}", outcome.termination.as_str());
    if !outcome.converged {
        return Err(Failure::Compute(format!(
            "group lasso did not converge; model written to {}",
            model_out.display()
        )));
    }
    Ok(())
}

fn scenario(a: &ScenarioArgs, cfg: &ConfigFile) -> Result<SimulationSpec, Failure> {
    let id: u8 = a
        .example
        .or(cfg.get("example")?)
        .ok_or_else(|| Failure::Usage("--example is required".into()))?;
    let params: String = a.params.clone().or(cfg.get("params")?).unwrap_or_default();
    let example = Example::from_params(id, &params)?;
    let spec = SimulationSpec::new(
        example,
        a.n.or(cfg.get("n")?).unwrap_or(400),
        a.p.or(cfg.get("p")?).unwrap_or(1000),
        a.seed.or(cfg.get("seed")?).unwrap_or(0),
    );
    spec.validate()?;
    Ok(spec)
}

fn bench(a: &BenchArgs, cfg: &ConfigFile, par: Parallelism) -> Outcome {
    let spec = scenario(&a.scenario, cfg)?;
    let methods: String = a.methods.clone().or(cfg.get("methods")?).unwrap_or_else(|| "inis,ginis".into());
    let methods = methods
        .split(',')
        .map(str::parse::<Method>)
        .collect::<Result<Vec<_>, _>>()?;
    let d = InisConfig::default();
    let config = BenchConfig {
        spec,
        reps: a.reps.or(cfg.get("reps")?).unwrap_or(100),
        methods,
        inis: InisConfig {
            dim: a.dim.or(cfg.get("dim")?).unwrap_or(d.dim),
            degree: a.degree.or(cfg.get("degree")?).unwrap_or(d.degree),
            q: a.q.or(cfg.get("q")?).unwrap_or(d.q),
            n_folds: a.folds.or(cfg.get("folds")?).unwrap_or(d.n_folds),
            ..d
        },
        parallelism: par,
    };
    let out: PathBuf = a.out.clone().or(cfg.get("out")?).unwrap_or_else(|| "bench-out".into());
    let run = run_bench(&config)?;
    fs::create_dir_all(&out).map_err(|e| Failure::Data(format!("{}: {e}", out.display())))?;
    let report = run.report();
    let table = report.to_table();
    write_out(Some(&out.join("replications.csv")), &format_replications(&run.records))?;
    write_out(Some(&out.join("report.csv")), &report.to_csv())?;
    write_out(Some(&out.join("report.txt")), &table)?;
    write_out(Some(&out.join("timing.csv")), &format_timings(&run.records))?;
    print!("{table}");
    let failed = run.failure_fraction();
    if failed > 0.1 {
        return Err(Failure::Compute(format!("{:.0}% of replications failed", failed * 100.0)));
    }
    Ok(())
}

fn simulate(a: &SimulateArgs, cfg: &ConfigFile) -> Outcome {
    let spec = scenario(&a.scenario, cfg)?;
    let sim = generate(&spec)?;
    let out: PathBuf = a.out.clone().or(cfg.get("out")?).unwrap_or_else(|| "train.csv".into());
    write_csv(&sim.train, &out, "y")?;
    if let Some(test) = &a.test_out {
        write_csv(&sim.test, test, "y")?;
    }
    let truth: Vec<String> = sim.truth.iter().map(|&j| sim.train.names()[j].clone()).collect();
    println!("truth {}", truth.join(" "));
    Ok(())
}

fn verify_dir(dir: &Path) -> Outcome {
    let read = |name: &str| {
        let path = dir.join(name);
        fs::read_to_string(&path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
    };
    if verify(&read("replications.csv")?, &read("report.csv")?)? {
        println!("ok");
        Ok(())
    } else {
        Err(Failure::Data("report.csv does not match the aggregates of replications.csv".into()))
    }
}

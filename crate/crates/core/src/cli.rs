//! Command-line harness: single runs, seed sweeps and the benchmark list.
//!
//! Exit codes: 0 for a completed run, 2 when a run stopped on a numerical
//! failure, 64 for usage errors (nothing is written in that case).

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::benchmarks;
use crate::optimizer::{self, default_popsize, IterationTrace, RunConfig, RunResult, StopReason, Strategy};
use crate::prior::PriorVariant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

/// Environment variable holding the log filter.
pub const LOG_ENV: &str = "BCMAES_LOG";

#[derive(Debug, Parser)]
#[command(name = "bcmaes", version, about = "Bayesian CMA-ES benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one seed and write its per-iteration trace.
    Run {
        #[command(flatten)]
        opts: RunOpts,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trace CSV path.
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
    },
    /// Run a range of seeds; writes one trace per seed and summary.csv.
    Sweep {
        #[command(flatten)]
        opts: RunOpts,
        /// `a..b` (inclusive) or a comma-separated list.
        #[arg(long, default_value = "0..9")]
        seeds: String,
        /// Output directory.
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// List the available benchmark functions.
    ListFunctions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    S1,
    S2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Niw,
    Nw,
    Mix,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunOpts {
    #[arg(long)]
    pub function: String,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Comma-separated start point; defaults to 10 in every coordinate.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub start: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma0: f64,
    /// Defaults to 4 + floor(3 ln dim).
    #[arg(long)]
    pub popsize: Option<usize>,
    #[arg(long, value_enum, default_value_t = StrategyArg::S2)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = PriorArg::Niw)]
    pub prior: PriorArg,
    /// NIW weight of the mixture prior.
    #[arg(long, default_value_t = 0.5)]
    pub mix_weight: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Target: known minimum + tol.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 50)]
    pub stagnation_window: usize,
}

impl RunOpts {
    /// Validates flags into a run configuration.
    pub fn to_config(&self, seed: u64) -> Result<RunConfig, String> {
        let function = benchmarks::lookup(&self.function).map_err(|e| e.to_string())?;
        function.check_dim(self.dim).map_err(|e| e.to_string())?;
        let mut config = RunConfig::new(&self.function, self.dim);
        if let Some(start) = &self.start {
            config.start = start.clone();
        }
        config.sigma0 = self.sigma0;
        config.popsize = self.popsize.unwrap_or_else(|| default_popsize(self.dim));
        config.strategy = match self.strategy {
            StrategyArg::S1 => Strategy::One,
            StrategyArg::S2 => Strategy::Two,
        };
        config.variant = match self.prior {
            PriorArg::Niw => PriorVariant::Niw,
            PriorArg::Nw => PriorVariant::Nw,
            PriorArg::Mix => PriorVariant::Mixture(self.mix_weight),
        };
        config.max_iters = self.max_iters;
        config.tol = self.tol;
        config.stagnation_window = self.stagnation_window;
        config.seed = seed;
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

/// Parses `a..b` (inclusive), `a..=b`, or `a,b,c`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let bad = || format!("invalid seed list `{s}`");
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let lo: u64 = a.trim().parse().map_err(|_| bad())?;
        let hi: u64 = b.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    let seeds = s
        .split(',')
        .map(|t| t.trim().parse::<u64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| bad())?;
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

/// Reals are written with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_header(dim: usize) -> Vec<String> {
    let mut h = vec!["iter".to_string(), "best_f_iter".into(), "best_f_so_far".into()];
    h.extend((0..dim).map(|i| format!("mean_{i}")));
    h.extend(["logdet_cov".to_string(), "lambda_n".into(), "nu_n".into()]);
    h
}

fn trace_record(t: &IterationTrace) -> Vec<String> {
    let mut r = vec![t.iter.to_string(), fmt_real(t.best_f_iter), fmt_real(t.best_f_so_far)];
    r.extend(t.mean.iter().map(|&v| fmt_real(v)));
    r.extend([fmt_real(t.logdet_cov), fmt_real(t.lambda), fmt_real(t.nu)]);
    r
}

/// Serializes a trace as CSV (header plus one row per iteration, LF endings).
pub fn trace_csv(dim: usize, trace: &[IterationTrace]) -> io::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(trace_header(dim))?;
    for t in trace {
        w.write_record(trace_record(t))?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

pub fn summary_line(result: &RunResult) -> String {
    format!(
        "best_f={} iterations={} stop_reason={}",
        fmt_real(result.best_f),
        result.iterations,
        result.stop_reason.as_str()
    )
}

/// Aggregate over per-seed final best values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub runs: usize,
    pub median_best_f: f64,
    pub successes: usize,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// A run counts as a success when its final best is below `target`.
pub fn summarize(final_best: &[f64], target: f64) -> SweepSummary {
    SweepSummary {
        runs: final_best.len(),
        median_best_f: median(final_best),
        successes: final_best.iter().filter(|&&f| f < target).count(),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), i32> {
    fs::write(path, bytes).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        EXIT_IO
    })
}

fn run_single(opts: &RunOpts, seed: u64, out: &Path) -> i32 {
    let config = match opts.to_config(seed) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let result = match optimizer::run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let csv = match trace_csv(config.dim, &result.trace) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    };
    if let Err(code) = write_file(out, &csv) {
        return code;
    }
    println!("{}", summary_line(&result));
    match result.stop_reason {
        StopReason::NumericalFailure => EXIT_NUMERICAL,
        _ => EXIT_OK,
    }
}

pub fn trace_file_name(function: &str, seed: u64) -> String {
    format!("{function}_seed{seed}.csv")
}

fn run_sweep(opts: &RunOpts, seeds: &str, out: &Path) -> i32 {
    let seeds = match parse_seeds(seeds) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let configs = match seeds.iter().map(|&s| opts.to_config(s)).collect::<Result<Vec<_>, _>>() {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let results: Vec<_> = configs.par_iter().map(optimizer::run).collect();
    let results = match results.into_iter().collect::<Result<Vec<_>, _>>() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };

    if let Err(e) = fs::create_dir_all(out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return EXIT_IO;
    }
    let mut summary = String::from("seed,best_f,iterations,stop_reason\n");
    for (config, result) in configs.iter().zip(&results) {
        let csv = match trace_csv(config.dim, &result.trace) {
            Ok(b) => b,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_IO;
            }
        };
        if let Err(code) = write_file(&out.join(trace_file_name(&opts.function, config.seed)), &csv) {
            return code;
        }
        let _ = writeln!(
            summary,
            "{},{},{},{}",
            config.seed,
            fmt_real(result.best_f),
            result.iterations,
            result.stop_reason.as_str()
        );
    }
    if let Err(code) = write_file(&out.join("summary.csv"), summary.as_bytes()) {
        return code;
    }

    let function = benchmarks::lookup(&opts.function).expect("validated above");
    let target = function.known_minimum(opts.dim).value + opts.tol;
    let finals: Vec<f64> = results.iter().map(|r| r.best_f).collect();
    let agg = summarize(&finals, target);
    println!(
        "runs={} median_best_f={} successes={}",
        agg.runs,
        fmt_real(agg.median_best_f),
        agg.successes
    );
    if results.iter().any(|r| r.stop_reason == StopReason::NumericalFailure) {
        EXIT_NUMERICAL
    } else {
        EXIT_OK
    }
}

fn list_functions() -> i32 {
    for f in benchmarks::registry() {
        let arity = match f.arity {
            benchmarks::Arity::Any => "any".to_string(),
            benchmarks::Arity::Exactly(d) => d.to_string(),
        };
        let dim = match f.arity {
            benchmarks::Arity::Any => 2,
            benchmarks::Arity::Exactly(d) => d,
        };
        let min = f.known_minimum(dim);
        println!(
            "{}\tdim={}\tmin({}d)={:.6}\t{:?}",
            f.id, arity, dim, min.value, min.provenance
        );
    }
    EXIT_OK
}

/// Executes a parsed command line and returns the process exit code.
pub fn run_command(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Run { opts, seed, out } => run_single(opts, *seed, out),
        Command::Sweep { opts, seeds, out } => run_sweep(opts, seeds, out),
        Command::ListFunctions => list_functions(),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run_command(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).try_init();
    run_args(std::env::args_os())
}

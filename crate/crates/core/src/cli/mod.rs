//! The `altbd` command-line front end. Every subcommand writes CSV: leading
//! `#` metadata lines, one header line, then rows.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or configuration error,
//! 3 numeric failure, 4 verification failure.

mod grid;
mod output;
pub mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::bilateral::{self, Rates, Transcription, TransitionQuery};
use crate::oracle::{self, ChainKind, SimConfig};
use crate::quad::QuadControl;
use crate::reflecting;
use crate::specfun::SeriesControl;
use crate::Error;

pub use grid::TimeGrid;
pub use output::{fmt_f64, CsvOut};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

const ORACLE_EPS: f64 = 1e-13;

#[derive(Debug, Parser)]
#[command(
    name = "altbd",
    version,
    about = "Transient analysis of birth-death chains with alternating rates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transition probability p_{from,to}(t) of the bilateral chain.
    Prob(ProbArgs),
    /// Even/odd generating functions F(z,t), G(z,t) of the bilateral chain.
    Pgf(PgfArgs),
    /// Mean and variance of either chain.
    Moments(MomentsArgs),
    /// q_{from,0}(t) of the reflected chain for from in {0, 1}.
    Reflect(ReflectArgs),
    /// Monte Carlo estimate of the transient distribution.
    Simulate(SimulateArgs),
    /// Cross-check every closed form against the oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Process {
    Bilateral,
    Reflected,
}

impl From<Process> for ChainKind {
    fn from(p: Process) -> Self {
        match p {
            Process::Bilateral => ChainKind::Bilateral,
            Process::Reflected => ChainKind::Reflected,
        }
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive and finite, got {s}"))
    }
}

#[derive(Debug, Args)]
struct RateArgs {
    /// Rate out of even states.
    #[arg(long, value_parser = positive)]
    lambda: f64,
    /// Rate out of odd states.
    #[arg(long, value_parser = positive)]
    mu: f64,
}

#[derive(Debug, Args)]
struct SeriesArgs {
    /// Relative truncation tolerance of every series.
    #[arg(long, default_value_t = 1e-14, value_parser = positive)]
    tol: f64,
    /// Cap on the number of summed terms per series.
    #[arg(long, default_value_t = 10_000)]
    max_terms: usize,
}

impl SeriesArgs {
    fn control(&self) -> crate::Result<SeriesControl> {
        SeriesControl::new(self.tol, self.max_terms)
    }
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProbArgs {
    #[command(flatten)]
    rates: RateArgs,
    #[arg(long, allow_hyphen_values = true)]
    from: i64,
    #[arg(long, allow_hyphen_values = true)]
    to: i64,
    /// Time grid start:stop:count, endpoints included.
    #[arg(long = "t")]
    times: TimeGrid,
    #[command(flatten)]
    series: SeriesArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct PgfArgs {
    #[command(flatten)]
    rates: RateArgs,
    #[arg(long, allow_hyphen_values = true)]
    from: i64,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    z: f64,
    #[arg(long = "t")]
    times: TimeGrid,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct MomentsArgs {
    #[command(flatten)]
    rates: RateArgs,
    #[arg(long, value_enum, default_value_t = Process::Bilateral)]
    process: Process,
    #[arg(long, allow_hyphen_values = true)]
    from: i64,
    #[arg(long = "t")]
    times: TimeGrid,
    #[command(flatten)]
    series: SeriesArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct ReflectArgs {
    #[command(flatten)]
    rates: RateArgs,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(0..=1))]
    from: u64,
    #[arg(long = "t")]
    times: TimeGrid,
    /// Add a column with the uniformization value.
    #[arg(long)]
    with_oracle: bool,
    #[command(flatten)]
    series: SeriesArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    rates: RateArgs,
    #[arg(long, value_enum, default_value_t = Process::Bilateral)]
    process: Process,
    #[arg(long, allow_hyphen_values = true)]
    from: i64,
    #[arg(long = "t")]
    times: TimeGrid,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    series: SeriesArgs,
    /// Write the CSV report here; the human-readable summary goes to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, hide = true)]
    mutate: bool,
}

#[derive(Debug)]
enum Failure {
    Numeric(Error),
    Io(io::Error),
    Verification(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numeric(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<(), Failure>;

/// Entry point of the binary; returns the process exit code.
pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parses `args` (program name first) and runs the selected subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Prob(a) => cmd_prob(&a),
        Command::Pgf(a) => cmd_pgf(&a),
        Command::Moments(a) => cmd_moments(&a),
        Command::Reflect(a) => cmd_reflect(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Verify(a) => cmd_verify(&a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Numeric(e @ Error::Config(_))) => {
            eprintln!("altbd: {e}");
            EXIT_USAGE
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("altbd: {e}");
            EXIT_NUMERIC
        }
        Err(Failure::Io(e)) => {
            eprintln!("altbd: {e}");
            EXIT_IO
        }
        Err(Failure::Verification(n)) => {
            eprintln!("altbd: {n} check(s) failed");
            EXIT_VERIFY
        }
    }
}

fn open(out: &Option<PathBuf>) -> io::Result<CsvOut<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    };
    Ok(CsvOut::new(sink))
}

fn finish(csv: CsvOut<Box<dyn Write>>) -> io::Result<()> {
    csv.into_inner().flush()
}

fn write_rates(csv: &mut CsvOut<Box<dyn Write>>, command: &str, r: &RateArgs) -> io::Result<()> {
    csv.meta("command", command)?;
    csv.meta("lambda", r.lambda)?;
    csv.meta("mu", r.mu)
}

fn rates(r: &RateArgs) -> crate::Result<Rates> {
    Rates::new(r.lambda, r.mu)
}

/// Evaluates `f` on every grid time in parallel, keeping grid order.
fn tabulate<F>(grid: &TimeGrid, f: F) -> crate::Result<Vec<Vec<f64>>>
where
    F: Fn(f64) -> crate::Result<Vec<f64>> + Sync + Send,
{
    grid.points()
        .into_par_iter()
        .map(|t| {
            f(t).map(|mut row| {
                row.insert(0, t);
                row
            })
        })
        .collect()
}

fn emit(csv: &mut CsvOut<Box<dyn Write>>, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    csv.header(header)?;
    for row in rows {
        csv.row(&row.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>())?;
    }
    Ok(())
}

fn cmd_prob(a: &ProbArgs) -> Outcome {
    let r = rates(&a.rates)?;
    let ctl = a.series.control()?;
    let rows = tabulate(&a.times, |t| {
        let q = TransitionQuery::new(a.from, a.to, t)?;
        Ok(vec![bilateral::transition_prob(&q, &r, &ctl)?])
    })?;
    let mut csv = open(&a.out.out)?;
    write_rates(&mut csv, "prob", &a.rates)?;
    csv.meta("from", a.from)?;
    csv.meta("to", a.to)?;
    csv.meta("t", a.times)?;
    csv.meta("tol", format!("{:e}", a.series.tol))?;
    csv.meta("max_terms", a.series.max_terms)?;
    emit(&mut csv, &["t", "p"], &rows)?;
    Ok(finish(csv)?)
}

fn cmd_pgf(a: &PgfArgs) -> Outcome {
    let r = rates(&a.rates)?;
    let rows = tabulate(&a.times, |t| {
        let pair = bilateral::pgf(a.from, a.z, t, &r)?;
        Ok(vec![pair.f, pair.g])
    })?;
    let mut csv = open(&a.out.out)?;
    write_rates(&mut csv, "pgf", &a.rates)?;
    csv.meta("from", a.from)?;
    csv.meta("z", a.z)?;
    csv.meta("t", a.times)?;
    emit(&mut csv, &["t", "f", "g"], &rows)?;
    Ok(finish(csv)?)
}

fn cmd_moments(a: &MomentsArgs) -> Outcome {
    let r = rates(&a.rates)?;
    let ctl = a.series.control()?;
    let rows = match a.process {
        Process::Bilateral => tabulate(&a.times, |t| {
            Ok(vec![
                bilateral::mean(a.from, t, &r),
                bilateral::variance(a.from, t, &r),
            ])
        })?,
        Process::Reflected => {
            let k = u64::try_from(a.from).map_err(|_| {
                Error::Config(format!("reflected chain cannot start at {}", a.from))
            })?;
            tabulate(&a.times, |t| {
                let m = if k <= 1 {
                    reflecting::r_moments_with(
                        k,
                        t,
                        &r,
                        |tau| reflecting::q_k0(k, tau, &r, &ctl),
                        &QuadControl::default(),
                    )?
                } else {
                    let q = |tau| oracle::reflected_probability(&r, k, 0, tau, ORACLE_EPS);
                    reflecting::r_moments_with(k, t, &r, q, &QuadControl::with_tol(1e-9))?
                };
                Ok(vec![m.mean, m.variance])
            })?
        }
    };
    let mut csv = open(&a.out.out)?;
    write_rates(&mut csv, "moments", &a.rates)?;
    csv.meta("process", format!("{:?}", a.process).to_lowercase())?;
    csv.meta("from", a.from)?;
    csv.meta("t", a.times)?;
    emit(&mut csv, &["t", "mean", "variance"], &rows)?;
    Ok(finish(csv)?)
}

fn cmd_reflect(a: &ReflectArgs) -> Outcome {
    let r = rates(&a.rates)?;
    let ctl = a.series.control()?;
    let k = a.from;
    let rows = tabulate(&a.times, |t| {
        let mut row = vec![reflecting::q_k0(k, t, &r, &ctl)?];
        if a.with_oracle {
            row.push(oracle::reflected_probability(&r, k, 0, t, ORACLE_EPS)?);
        }
        Ok(row)
    })?;
    let column = if k == 0 { "q00" } else { "q10" };
    let mut csv = open(&a.out.out)?;
    write_rates(&mut csv, "reflect", &a.rates)?;
    csv.meta("from", k)?;
    csv.meta("t", a.times)?;
    csv.meta("tol", format!("{:e}", a.series.tol))?;
    let mut header = vec!["t", column];
    if a.with_oracle {
        header.push("oracle");
    }
    emit(&mut csv, &header, &rows)?;
    Ok(finish(csv)?)
}

fn cmd_simulate(a: &SimulateArgs) -> Outcome {
    let r = rates(&a.rates)?;
    let times = a.times.points();
    let cfg = SimConfig::new(a.paths, a.times.stop.max(f64::MIN_POSITIVE), a.seed)?;
    let snapshots = oracle::simulate(a.process.into(), &r, a.from, &cfg, &times)?;
    let mut csv = open(&a.out.out)?;
    write_rates(&mut csv, "simulate", &a.rates)?;
    csv.meta("process", format!("{:?}", a.process).to_lowercase())?;
    csv.meta("from", a.from)?;
    csv.meta("t", a.times)?;
    csv.meta("seed", a.seed)?;
    csv.meta("paths", a.paths)?;
    csv.header(&["t", "state", "empirical_p", "std_err"])?;
    for snap in &snapshots {
        for est in &snap.pmf {
            csv.row(&[
                fmt_f64(snap.t),
                est.state.to_string(),
                fmt_f64(est.p),
                fmt_f64(est.std_err),
            ])?;
        }
    }
    Ok(finish(csv)?)
}

fn cmd_verify(a: &VerifyArgs) -> Outcome {
    let cfg = verify::VerifyConfig {
        series: a.series.control()?,
        transcription: if a.mutate {
            Transcription::SwappedOffset
        } else {
            Transcription::Faithful
        },
        ..verify::VerifyConfig::default()
    };
    let results = verify::run(&cfg)?;
    let mut csv = open(&a.out)?;
    csv.meta("command", "verify")?;
    let grid: Vec<String> = cfg.grid.iter().map(|(l, m)| format!("({l},{m})")).collect();
    csv.meta("grid", grid.join(" "))?;
    csv.header(&["check", "max_residual", "tolerance", "status", "worst_at"])?;
    let mut failed = 0;
    for c in &results {
        let status = if c.passed() { "pass" } else { "FAIL" };
        failed += usize::from(!c.passed());
        csv.row(&[
            c.name.to_string(),
            fmt_f64(c.max_residual),
            fmt_f64(c.tolerance),
            status.to_string(),
            format!("\"{}\"", c.worst_at),
        ])?;
        eprintln!(
            "{status:4}  {:38} {:10.3e} <= {:8.1e}  {}",
            c.name, c.max_residual, c.tolerance, c.worst_at
        );
    }
    finish(csv)?;
    eprintln!(
        "{} of {} checks passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        return Err(Failure::Verification(failed));
    }
    Ok(())
}

//! `chlab` command line: simulation, kernel checks and every study, with CSV
//! and JSON artifacts written to the output directory.
//!
//! Exit codes: 0 when every acceptance window passes, 2 when a study ran but
//! failed its window, 1 on any error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::experiments::{
    density_study, holder_study, kernel_error_study, malliavin_rate_study, nondegeneracy_study, spatial_rate_study,
    temporal_rate_study, validate::run_validation, RateReport,
};
use crate::noise::generate;
use crate::solver::simulate;
use crate::VERSION;

#[derive(Debug, Parser)]
#[command(name = "chlab", version, about = "Stochastic Cahn-Hilliard numerical lab")]
pub struct Cli {
    /// TOML configuration; built-in defaults (n=32, m=64, T=0.1) when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV and JSON artifacts.
    #[arg(long, global = true, env = "CHLAB_OUTPUT_DIR", default_value = "chlab-out")]
    pub out: PathBuf,
    /// Master seed override.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo sample count override for every study.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// One sample path; recorded fields as CSV.
    Simulate,
    /// Spatial strong convergence rate.
    RatesSpace,
    /// Temporal strong convergence rate.
    RatesTime,
    /// Kernel error decay under mesh doubling.
    KernelErrors,
    /// Mean-square Hölder exponents in time and space.
    Holder,
    /// KDE L1 density convergence.
    Density,
    /// Malliavin derivative convergence and nondegeneracy.
    Malliavin,
    /// Fast invariant suite.
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::RatesSpace => "rates-space",
            Command::RatesTime => "rates-time",
            Command::KernelErrors => "kernel-errors",
            Command::Holder => "holder",
            Command::Density => "density",
            Command::Malliavin => "malliavin",
            Command::Validate => "validate",
        }
    }
}

/// Result of one command: the printed summary lines and the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub pass: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            2
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a, R: Serialize> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    pass: bool,
    config: &'a Config,
    report: R,
}

fn write_json<R: Serialize>(dir: &Path, command: Command, config: &Config, pass: bool, report: R) -> Result<()> {
    let manifest = Manifest { command: command.name(), version: VERSION, seed: config.seed, pass, config, report };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join(format!("{}.json", command.name())), text)?;
    Ok(())
}

fn write_csv(dir: &Path, name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    fs::write(dir.join(name), text)?;
    Ok(())
}

/// CSV number: shortest round-trip form, exponent notation outside
/// `[1e-5, 1e16)`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Missing values are empty cells.
fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), num)
}

fn rate_rows(r: &RateReport) -> Vec<String> {
    r.levels
        .iter()
        .zip(r.errors.iter().zip(&r.std_errors))
        .map(|(l, (e, s))| format!("{l},{},{}", num(*e), num(*s)))
        .collect()
}

/// Resolves the configuration and applies command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<Config> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(m) = cli.samples {
        config.override_samples(m);
    }
    Ok(config)
}

/// Runs `cli.command`, writing artifacts to `cli.out`.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let config = effective_config(cli)?;
    fs::create_dir_all(&cli.out)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| execute(cli.command, &config, &cli.out))
}

fn execute(command: Command, config: &Config, dir: &Path) -> Result<Outcome> {
    let model = config.model();
    let seed = config.seed;
    match command {
        Command::Simulate => {
            let sc = config.solver_config();
            sc.validate()?;
            let sheet = generate(seed, 0, sc.m, sc.n, sc.t_final)?;
            let traj = simulate(&sc, &sheet)?;
            let n = sc.n;
            let h = std::f64::consts::PI / n as f64;
            let mut rows = Vec::new();
            for (r, state) in traj.states.iter().enumerate() {
                let t = traj.time(r);
                for k in 0..=n {
                    rows.push(format!("{},{},{}", num(t), num(k as f64 * h), num(state.at_node(k))));
                }
            }
            write_csv(dir, "simulate.csv", "t,x,value", rows)?;
            #[derive(Serialize)]
            struct Run {
                sample_index: u64,
                recorded_steps: Vec<usize>,
                discarded: usize,
                terminal_max_abs: f64,
            }
            let report = Run {
                sample_index: 0,
                recorded_steps: traj.steps.clone(),
                discarded: 0,
                terminal_max_abs: traj.terminal().max_abs(),
            };
            write_json(dir, command, config, true, report)?;
            Ok(Outcome {
                lines: vec![format!(
                    "simulate: n={} m={} T={} recorded {} state(s)",
                    sc.n,
                    sc.m,
                    sc.t_final,
                    traj.steps.len()
                )],
                pass: true,
            })
        }
        Command::RatesSpace | Command::RatesTime => {
            let report = if command == Command::RatesSpace {
                spatial_rate_study(&config.rates_space, &model, seed)?
            } else {
                temporal_rate_study(&config.rates_time, &model, seed)?
            };
            write_csv(dir, &format!("{}.csv", command.name()), "level,error,std_error", rate_rows(&report))?;
            write_json(dir, command, config, report.pass, &report)?;
            Ok(Outcome { lines: vec![report.summary()], pass: report.pass })
        }
        Command::KernelErrors => {
            let report = kernel_error_study(&config.kernel_errors)?;
            let rows = report.rows.iter().map(|r| {
                format!(
                    "{},{},{},{},{},{}",
                    num(r.x),
                    r.n,
                    opt(r.l2_error),
                    opt(r.l1_laplacian_error),
                    num(r.l2_change),
                    num(r.l1_change)
                )
            });
            write_csv(dir, "kernel-errors.csv", "x,n,l2_error,l1_laplacian_error,l2_change,l1_change", rows)?;
            write_json(dir, command, config, report.pass, &report)?;
            Ok(Outcome { lines: vec![report.summary()], pass: report.pass })
        }
        Command::Holder => {
            let report = holder_study(&config.holder, &model, seed)?;
            let mut rows = Vec::new();
            for (kind, r) in [("time", &report.time), ("space", &report.space)] {
                for row in rate_rows(r) {
                    rows.push(format!("{kind},{row}"));
                }
            }
            write_csv(dir, "holder.csv", "kind,gap,mean_square_increment,std_error", rows)?;
            write_json(dir, command, config, report.pass, &report)?;
            Ok(Outcome { lines: vec![report.time.summary(), report.space.summary()], pass: report.pass })
        }
        Command::Density => {
            let report = density_study(&config.density, &model, seed)?;
            let rows = (0..report.levels.len()).map(|i| {
                format!(
                    "{},{},{},{}",
                    report.levels[i],
                    num(report.distances[i]),
                    num(report.bandwidths[i]),
                    num(report.means[i])
                )
            });
            write_csv(dir, "density.csv", "n,l1_distance,bandwidth,mean", rows)?;
            write_json(dir, command, config, report.pass, &report)?;
            Ok(Outcome { lines: vec![report.summary()], pass: report.pass })
        }
        Command::Malliavin => {
            let rate = malliavin_rate_study(&config.malliavin, &model, seed)?;
            let nondeg = nondegeneracy_study(&config.nondegeneracy, &model, seed)?;
            write_csv(dir, "malliavin.csv", "level,error,std_error", rate_rows(&rate))?;
            write_csv(
                dir,
                "malliavin-hnorm2.csv",
                "sample,hnorm2",
                nondeg.hnorm2.iter().enumerate().map(|(i, h)| format!("{i},{}", num(*h))),
            )?;
            let pass = rate.pass && nondeg.pass;
            #[derive(Serialize)]
            struct Both<'a> {
                rate: &'a RateReport,
                nondegeneracy: &'a crate::experiments::NondegeneracyReport,
            }
            write_json(dir, command, config, pass, Both { rate: &rate, nondegeneracy: &nondeg })?;
            Ok(Outcome { lines: vec![rate.summary(), nondeg.summary()], pass })
        }
        Command::Validate => {
            let report = run_validation()?;
            let rows =
                report.checks.iter().map(|c| format!("{},{},{},{}", c.name, num(c.value), num(c.tolerance), c.pass));
            write_csv(dir, "validate.csv", "check,value,tolerance,pass", rows)?;
            write_json(dir, command, config, report.pass, &report)?;
            let mut line = String::from("validate:");
            for c in &report.checks {
                let _ = write!(line, " {}={}", c.name, if c.pass { "ok" } else { "FAIL" });
            }
            Ok(Outcome { lines: vec![line], pass: report.pass })
        }
    }
}

/// Parses `args`, runs, prints summaries and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            for l in &outcome.lines {
                println!("{l}");
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("chlab: {e}");
            1
        }
    }
}

//! `coophunt` batch runner. Each subcommand reads one TOML config and writes
//! its results, a manifest and (on error) a FAILED marker into a run directory.

mod commands;
mod config;
mod output;

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use coophunt::par::{self, Exec};
use coophunt::pde::InitialCondition;
use serde::de::DeserializeOwned;
use serde::Serialize;

use output::{Manifest, RunDir, MANIFEST};

#[derive(Debug, Parser)]
#[command(name = "coophunt", version, about = "Cooperative-hunting predator-prey analyses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Equilibria with their Jacobians and stability, plus optional cycle and heteroclinic searches.
    Equilibria(RunArgs),
    /// Branch diagram and threshold values along one parameter.
    Bifurcate(RunArgs),
    /// Growth rate against wavenumber and the Turing threshold.
    Dispersion(RunArgs),
    /// Critical d1 over a range of alpha.
    TuringCurve(RunArgs),
    /// Spatial simulation with snapshot output and regime classification.
    Simulate(SimulateArgs),
    /// Predicted (and optionally measured) invasion front speed.
    WaveSpeed(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Run directory (default: runs/<config stem>).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Suppress progress messages.
    #[arg(short, long)]
    quiet: bool,
    /// Validate the config and write the manifest without computing anything.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Overrides the seed of a noise initial condition.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io { context: String, source: io::Error },
    Numerical(coophunt::Error),
    BlowUp(coophunt::Error),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Numerical(_) => 4,
            CliError::BlowUp(_) => 5,
        }
    }
}

impl From<coophunt::Error> for CliError {
    fn from(e: coophunt::Error) -> Self {
        use coophunt::Error as E;
        match e {
            E::InvalidParameter { .. } => CliError::Config(e.to_string()),
            E::SimulationBlowUp { .. } | E::NonFinite { .. } => CliError::BlowUp(e),
            _ => CliError::Numerical(e),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io { context, source } => write!(f, "I/O error {context}: {source}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::BlowUp(e) => write!(f, "simulation failure: {e}"),
        }
    }
}

pub struct Ctx {
    pub exec: Exec,
    quiet: bool,
}

impl Ctx {
    pub fn say(&self, msg: impl fmt::Display) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

fn default_out(config: &Path) -> PathBuf {
    let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    Path::new("runs").join(stem)
}

/// Loads the config, runs `body` inside a worker pool, and records the
/// outcome in the manifest (and the FAILED marker when it went wrong).
fn drive<C>(
    command: &str,
    a: &RunArgs,
    adjust: impl FnOnce(&mut C) -> Result<(), CliError>,
    body: fn(&C, &mut RunDir, &Ctx) -> Result<(), CliError>,
) -> Result<(), CliError>
where
    C: DeserializeOwned + Serialize + Sync,
{
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let out = a.out.clone().unwrap_or_else(|| default_out(&a.config));
    let mut dir = RunDir::create(&out)?;
    let ctx = Ctx {
        exec: if a.workers == 1 { Exec::Sequential } else { Exec::Parallel },
        quiet: a.quiet,
    };

    let mut echoed = serde_json::Value::Null;
    let run = || -> Result<(), CliError> {
        let mut cfg: C = config::load(&a.config)?;
        adjust(&mut cfg)?;
        echoed = serde_json::to_value(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
        if a.dry_run {
            ctx.say(format!("{command}: {} is valid", a.config.display()));
            return Ok(());
        }
        ctx.say(format!("{command}: writing to {}", out.display()));
        let dir = &mut dir;
        let ctx = &ctx;
        let cfg = &cfg;
        par::with_workers(a.workers, move || body(cfg, dir, ctx))
    };
    let result = run();

    if let Err(e) = &result {
        dir.mark_failed(e)?;
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        status: match (&result, a.dry_run) {
            (Err(_), _) => "failed",
            (Ok(()), true) => "validated",
            (Ok(()), false) => "ok",
        },
        error: result.as_ref().err().map(|e| e.to_string()),
        workers: a.workers,
        parallel: ctx.exec.is_parallel(),
        config: echoed,
        outputs: dir.outputs().to_vec(),
        started_unix: started,
        elapsed_seconds: clock.elapsed().as_secs_f64(),
    };
    dir.write_json(MANIFEST, &manifest)?;
    result
}

fn no_adjust<C>(_: &mut C) -> Result<(), CliError> {
    Ok(())
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Equilibria(a) => drive("equilibria", &a, no_adjust, commands::equilibria),
        Command::Bifurcate(a) => drive("bifurcate", &a, no_adjust, commands::bifurcate),
        Command::Dispersion(a) => drive("dispersion", &a, no_adjust, commands::dispersion),
        Command::TuringCurve(a) => drive("turing-curve", &a, no_adjust, commands::turing_curve),
        Command::WaveSpeed(a) => drive("wave-speed", &a, no_adjust, commands::wave_speed),
        Command::Simulate(s) => drive(
            "simulate",
            &s.run,
            |c: &mut config::SimulateConfig| match (s.seed, &mut c.ic) {
                (None, _) => Ok(()),
                (Some(new), InitialCondition::Noise { seed, .. }) => {
                    *seed = new;
                    Ok(())
                }
                (Some(_), _) => Err(CliError::Config("--seed applies only to a noise initial condition".into())),
            },
            commands::simulate,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

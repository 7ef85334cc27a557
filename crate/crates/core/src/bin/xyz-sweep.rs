//! Command-line driver for parameter sweeps.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical abort.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xyz_dynamics::error::{Error, Result};
use xyz_dynamics::sweep::{
    exit_code, freeze_report, parse_pairs, run_sweep, CheckStatus, FreezeTolerances, Mode, SweepConfig,
};

#[derive(Parser)]
#[command(name = "xyz-sweep", version, about = "Entanglement dynamics sweeps for the variable-range XYZ chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quench sweep: thermal state of H(a), evolved under H(0).
    Closed(RunArgs),
    /// Open-system sweep with the configured bath.
    Open(RunArgs),
    /// Bound and hierarchy checks over an existing summary.csv.
    FreezeReport(RunArgs),
    /// Parse and check a config without running it.
    ValidateConfig(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parameter points.
    #[arg(long, env = "XYZ_SWEEP_WORKERS")]
    workers: Option<usize>,
    /// Site pairs `i:j[,i:j...]`; overrides `pairs` in the config.
    #[arg(long)]
    pairs: Option<String>,
}

impl RunArgs {
    fn load(&self) -> Result<SweepConfig> {
        let mut cfg = SweepConfig::from_path(&self.config)?;
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        if let Some(p) = &self.pairs {
            parse_pairs(p)?;
            cfg.pairs = Some(vec![p.clone()]);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run_mode(args: &RunArgs, mode: Mode) -> Result<()> {
    let cfg = args.load()?;
    if cfg.mode != mode {
        return Err(Error::Config(format!(
            "config is for `{}` runs, not `{}`",
            cfg.mode.label(),
            mode.label()
        )));
    }
    let out = run_sweep(&cfg)?;
    println!("{} rows -> {}", out.rows.len(), out.summary_path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Closed(args) => run_mode(&args, Mode::Closed),
        Command::Open(args) => run_mode(&args, Mode::Open),
        Command::FreezeReport(args) => {
            let cfg = args.load()?;
            let (path, checks) = freeze_report(&cfg.output_dir, &FreezeTolerances::from_config(&cfg))?;
            let failed = checks.iter().filter(|c| c.status == CheckStatus::Fail).count();
            println!("{} checks, {failed} failed -> {}", checks.len(), path.display());
            Ok(())
        }
        Command::ValidateConfig(args) => {
            let cfg = args.load()?;
            let points = cfg.points()?.len();
            let pairs = cfg.pairs()?.len();
            println!("ok: {} mode, {points} points x {pairs} pairs", cfg.mode.label());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

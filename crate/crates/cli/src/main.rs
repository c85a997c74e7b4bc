//! `conical-glimm`: command-line driver for the conical-flow Glimm scheme.
//!
//! Exit codes: 0 success, 1 verification failure or unexpected error,
//! 2 invalid configuration, 3 scheme invariant abort.

// Guards are written `!(x < bound)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::RunConfig;

/// Errors surfaced by the command-line tool.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The configuration file or a flag is malformed or violates the
    /// admissible parameter ranges.
    #[error("configuration error: {0}")]
    Config(String),
    /// The scheme stopped because an invariant failed.
    #[error("scheme aborted at step {step}: {detail}")]
    Abort {
        /// Number of completed steps.
        step: usize,
        /// Failed invariant.
        detail: String,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Abort { .. } => 3,
        }
    }
}

impl From<conical_glimm::Error> for CliError {
    fn from(e: conical_glimm::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "conical-glimm", version, about = "Supersonic flow past a perturbed cone by a Glimm scheme")]
struct Cli {
    /// TOML run configuration (defaults apply to omitted fields).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `scheme.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `outputs.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solves the self-similar background and writes `background.csv`
    /// (`sigma_minus_b0,u,v,rho`) and `background.json`; with
    /// `--mach-sweep a:step:b` also `expansion_sweep.csv` (`mach`, then each
    /// expansion quantity and its residual).
    Background {
        /// Mach numbers `a:step:b` for the expansion sweep.
        #[arg(long)]
        mach_sweep: Option<String>,
    },
    /// Tabulates the strong 1-shock polar to `polar.csv`
    /// (`s,u,v,theta,log_rho,admissible,lax_admissible,rh_residual,is_attached`)
    /// and `polar.json`.
    Polar {
        /// Number of uniformly spaced slopes (the attached slope is added).
        #[arg(long, default_value_t = 400)]
        rows: usize,
    },
    /// Runs the scheme: `slices/slice_NNNNNN.csv`
    /// (`i,eta,sigma_minus_b0,center_x,u,v,rho`), `front.csv`
    /// (`k,x,front_eta,front_slope,theta_s,max_p2_distance,min_p3_margin`)
    /// and `summary.json`.
    Run,
    /// Runs the scheme and writes the functional history `report.csv`
    /// (`k,x,F,L,Q,L0_1,L0_2,L1,Ls,Lc,Q0,Q1,Q2,Qc,Qwc1,Qwc2,Qce,TV,TV_weak,theta_s,s_k,C`)
    /// and `verdict.json`; exit 1 if a check fails.
    Report,
    /// Checks identities, expansion orders, contraction and weight
    /// feasibility; writes `verify.json`, exit 1 if a check fails.
    Verify,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.scheme.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.outputs.dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(text) = std::env::var("CONICAL_GLIMM_THREADS") else { return Ok(()) };
    let n: usize = text
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("CONICAL_GLIMM_THREADS: expected a positive integer, got {text:?}")))?;
    // The pool can only be configured once; a second attempt is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn execute(cli: &Cli) -> anyhow::Result<Outcome> {
    configure_threads()?;
    let cfg = load(cli)?;
    match &cli.command {
        Command::Background { mach_sweep } => {
            let sweep = mach_sweep.as_deref().map(commands::parse_sweep).transpose()?;
            commands::background(&cfg, sweep.as_deref())
        }
        Command::Polar { rows } => commands::polar(&cfg, (*rows).max(2)),
        Command::Run => commands::run(&cfg),
        Command::Report => commands::report(&cfg),
        Command::Verify => commands::verify(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.downcast_ref::<CliError>().map_or(1, CliError::exit_code))
        }
    }
}

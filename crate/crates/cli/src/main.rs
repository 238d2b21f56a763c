//! `cascade-risk`: cascading-outage risk assessment and risk-constrained
//! re-dispatch from the command line.
//!
//! Exit codes: 0 success, 1 failed validation or internal error, 2 bad input
//! (missing or unparsable case or config, invalid option), 3 the intact base
//! case cannot serve its load.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "cascade-risk", version, about = "Cascading-outage risk assessment on DC grid models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assess R' of the default re-dispatch target; writes tree.csv, convergence.csv, summary.json.
    Assess(Flags),
    /// Assess with the risk gradient; writes gradient.csv, convergence.csv, summary.json.
    Gradient(Flags),
    /// Check the gradient against central differences (exhaustive policies only).
    ValidateGradient(Flags),
    /// Iterated risk-constrained re-dispatch; writes trajectory.csv, strategy.json.
    Irm(Flags),
}

#[derive(Args, Clone)]
struct Flags {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Case file: native JSON or MATPOWER text (.m).
    #[arg(long)]
    case: Option<PathBuf>,
    /// json or matpower (default from the file extension).
    #[arg(long)]
    format: Option<String>,
    /// Comma-separated branch ids out before control.
    #[arg(long, value_delimiter = ',')]
    outages: Option<Vec<u32>>,
    /// Dispatch interval (min).
    #[arg(long)]
    tau_d: Option<f64>,
    /// Horizon (min).
    #[arg(long)]
    t_max: Option<f64>,
    /// Search attempts (root-to-end descents).
    #[arg(long)]
    attempts: Option<usize>,
    /// best-first, sampled, exhaustive or exhaustive-reverse.
    #[arg(long)]
    policy: Option<String>,
    /// Seed for the sampled policy.
    #[arg(long)]
    seed: Option<u64>,
    /// First IRM risk reduction ($).
    #[arg(long)]
    delta_r: Option<f64>,
    /// Sensitivity compression threshold; enables compressed storage.
    #[arg(long)]
    threshold: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Finite-difference step (MW) for validate-gradient.
    #[arg(long)]
    step: Option<f64>,
}

impl Flags {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(RunConfig {
            case: self.case.clone(),
            format: self.format.clone(),
            outages: self.outages.clone(),
            tau_d: self.tau_d,
            t_max: self.t_max,
            attempts: self.attempts,
            policy: self.policy.clone(),
            seed: self.seed,
            delta_r: self.delta_r,
            threshold: self.threshold,
            out: self.out.clone(),
            step: self.step,
            ..RunConfig::default()
        }))
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use cascade_risk::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InfeasibleBase(_) => 3,
                E::Syntax { .. } | E::Semantic { .. } | E::InvalidArgument(_) | E::Io(_) | E::Json(_) => 2,
                _ => 1,
            };
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() || cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Assess(f) => f.resolve().and_then(|c| run::assess(&c)),
        Command::Gradient(f) => f.resolve().and_then(|c| run::gradient(&c)),
        Command::ValidateGradient(f) => f.resolve().and_then(|c| run::validate_gradient(&c)),
        Command::Irm(f) => f.resolve().and_then(|c| run::irm(&c)),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

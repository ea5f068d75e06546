//! Command-line driver for spin-qubit tomography runs: plan measurement
//! settings, simulate shot records, reconstruct, and verify the operator
//! identities the planner relies on.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use artifacts::OutDir;
use commands::Scope;
use config::RunConfig;
use error::{CliError, CliResult};

pub const DEFAULT_OUT_DIR: &str = "spintomo-out";

#[derive(Debug, Parser)]
#[command(name = "spintomo", version, about = "State tomography for exchange-coupled spin qubits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides shots per setting (0 = exact probabilities).
    #[arg(long)]
    pub shots: Option<u64>,
    /// Output directory.
    #[arg(long, env = "SPINTOMO_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the operator identities and write verify.json.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        scope: Scope,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for verify.json; nothing is written when absent.
        #[arg(long, env = "SPINTOMO_OUT")]
        out: Option<PathBuf>,
    },
    /// Search for a complete set of measurement settings.
    Plan(RunArgs),
    /// Draw shot records for every setting of an existing plan.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Plan to simulate (defaults to plan.json in the output directory).
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Reconstruct the state from a plan and its records.
    Reconstruct {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Plan, simulate and reconstruct in one go.
    Pipeline(RunArgs),
}

/// Loads the config and applies command-line overrides.
pub fn resolve(args: &RunArgs) -> CliResult<(RunConfig, OutDir)> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(shots) = args.shots {
        cfg.shots = shots;
    }
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    Ok((cfg, OutDir(dir)))
}

fn metrics_line(result: &spintomo::reconstruction::ReconstructionResult) -> Vec<String> {
    let mut lines = vec![format!(
        "raw eigenvalue min {:+.3e} physical {}",
        result.raw_eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min),
        result.raw_physical
    )];
    if let Some(m) = &result.mle {
        lines.push(format!(
            "mle iterations {} converged {} log-likelihood {:.6} -> {:.6}",
            m.iterations, m.converged, m.initial_log_likelihood, m.final_log_likelihood
        ));
    }
    if let Some(m) = &result.metrics {
        lines.push(format!("fidelity projected {:.9} trace distance {:.3e}", m.fidelity_projected, m.trace_distance_projected));
        if let (Some(f), Some(t)) = (m.fidelity_refined, m.trace_distance_refined) {
            lines.push(format!("fidelity refined {f:.9} trace distance {t:.3e}"));
        }
    }
    lines
}

/// Runs one command, returning the lines to print on success.
pub fn execute(command: &Command) -> CliResult<Vec<String>> {
    match command {
        Command::Verify { scope, seed, out } => {
            let out = out.clone().map(OutDir);
            let report = commands::run_verify(*scope, *seed, out.as_ref())?;
            let lines = commands::verify_summary(&report);
            if report.passed {
                Ok(lines)
            } else {
                for l in &lines {
                    println!("{l}");
                }
                Err(CliError::Verification(format!("scope {scope:?}")))
            }
        }
        Command::Plan(args) => {
            let (cfg, out) = resolve(args)?;
            let plan = commands::cmd_plan(&cfg, &out)?;
            let mut lines: Vec<String> = plan
                .settings
                .iter()
                .map(|s| format!("{:<8} <- {} (pom qubit {}, coefficient {:+.4})", s.target, s.setting.sequence, s.setting.pom_qubit + 1, s.coefficient))
                .collect();
            lines.push(format!(
                "plan {} settings, depth {}, {} pair gates -> {}",
                plan.len(),
                plan.depth(),
                plan.settings.iter().map(|s| s.setting.sequence.pair_count()).sum::<usize>(),
                out.plan().display()
            ));
            Ok(lines)
        }
        Command::Simulate { run, plan } => {
            let (cfg, out) = resolve(run)?;
            let sim = commands::cmd_simulate(&cfg, &out, plan.as_deref())?;
            Ok(vec![format!(
                "simulated {} settings (shots {}, seed {}) for plan {} -> {}",
                sim.records,
                cfg.shots,
                cfg.seed,
                &sim.fingerprint[..12],
                out.records().display()
            )])
        }
        Command::Reconstruct { run, plan, records } => {
            let (cfg, out) = resolve(run)?;
            let result = commands::cmd_reconstruct(&cfg, &out, plan.as_deref(), records.as_deref())?;
            let mut lines = metrics_line(&result);
            lines.push(format!("report -> {}", out.report().display()));
            Ok(lines)
        }
        Command::Pipeline(args) => {
            let (cfg, out) = resolve(args)?;
            let result = commands::cmd_pipeline(&cfg, &out)?;
            let mut lines = metrics_line(&result);
            lines.push(format!("artifacts -> {}", out.0.display()));
            Ok(lines)
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

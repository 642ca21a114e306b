use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use werner_tomo::commands::{self, WignerSource};
use werner_tomo::{CliError, RunConfig};

/// Werner-like mixture metrics, tomography simulation and reconstruction.
///
/// Exit codes: 0 success, 1 validation error, 2 I/O error, 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "werner-tomo", version)]
struct Cli {
    /// Flat `key = value` run configuration (unknown keys are errors).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Allow `simulate` to replace existing record files.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entropy, negativity and teleportation fidelity against alpha, plus the threshold.
    Metrics {
        #[arg(long)]
        alpha_min: Option<f64>,
        #[arg(long)]
        alpha_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Measurement records for the three spin settings.
    Simulate {
        /// density-operator or trap-sim
        #[arg(long)]
        backend: Option<String>,
    },
    /// Invert the records into the four spin blocks.
    Reconstruct {
        /// Use infinite-statistics marginals instead of records.
        #[arg(long)]
        exact: bool,
        /// Skip the comparison with the configured true state.
        #[arg(long)]
        no_truth: bool,
    },
    /// Wigner-function surfaces of the true and reconstructed states.
    Wigner {
        #[arg(long, value_enum, default_value = "both")]
        source: WignerSource,
    },
    /// Re-derive the config hash and check every output file against it.
    Verify,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = commands::resolve_config(cli.config.as_deref(), cli.seed, cli.out.clone())?;
    match cli.command {
        Command::Metrics {
            alpha_min,
            alpha_max,
            steps,
        } => {
            cfg.alpha_min = alpha_min.unwrap_or(cfg.alpha_min);
            cfg.alpha_max = alpha_max.unwrap_or(cfg.alpha_max);
            cfg.steps = steps.unwrap_or(cfg.steps);
            cfg.validate()?;
            let m = commands::cmd_metrics(&cfg)?;
            println!("alpha* = {:.6} ({} rows) -> {}", m.alpha_star, m.table.rows.len(), m.path.display());
        }
        Command::Simulate { backend } => {
            if let Some(b) = backend {
                cfg.backend = b.parse().map_err(CliError::Config)?;
            }
            let s = commands::cmd_simulate(&cfg, cli.force)?;
            println!("{} records -> {}", s.records, cfg.out.display());
        }
        Command::Reconstruct { exact, no_truth } => {
            let r = commands::cmd_reconstruct(&cfg, exact, !no_truth)?;
            if let Some(t) = &r.json.truth {
                println!(
                    "max |error| (uu, ud, du, dd) = {:.3e} {:.3e} {:.3e} {:.3e}; within 3 sigma: {:.4}",
                    t.max_abs_error[0], t.max_abs_error[1], t.max_abs_error[2], t.max_abs_error[3], t.coverage_3sigma
                );
            }
        }
        Command::Wigner { source } => {
            let w = commands::cmd_wigner(&cfg, source)?;
            if let Some(g) = w.sidecar.max_gap {
                println!("max pointwise gap between true and reconstructed surfaces: {g:.3e}");
            }
        }
        Command::Verify => {
            let given: Option<&RunConfig> = cli.config.as_ref().map(|_| &cfg);
            let report = commands::cmd_verify(given, &cfg.out)?;
            for c in &report.checks {
                println!("{:<4} {}  {}", if c.ok { "ok" } else { "FAIL" }, c.file, c.detail);
            }
            if !report.all_ok() {
                return Err(CliError::Validation(format!(
                    "outputs in {} do not match config hash {}",
                    cfg.out.display(),
                    report.expected_hash
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ktc_io::{execute, load_config, output_dir, write_riemann_exact, CliError};

/// Kinetic transport–collapse solvers for 1-D scalar conservation laws.
///
/// Exit codes: 0 success, 1 configuration or I/O error, 2 runtime invariant
/// violation. Set KTC_OUTPUT_DIR to override the configured output directory.
#[derive(Parser)]
#[command(name = "ktc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scheme and write its outputs.
    Run { config: PathBuf },
    /// Write the exact Riemann solution at the snapshot times.
    RiemannExact { config: PathBuf },
    /// Validate a config without running it.
    Check { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config } => {
            let cfg = load_config(&config)?;
            let dir = output_dir(&cfg);
            let summary = execute(&cfg, &dir)?;
            println!(
                "{} steps, mass drift {:e}, config {}",
                summary.ledger.reports.len(),
                summary.ledger.mass_drift,
                summary.config_hash
            );
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
        }
        Command::RiemannExact { config } => {
            let cfg = load_config(&config)?;
            let path = write_riemann_exact(&cfg, &output_dir(&cfg))?;
            println!("wrote {}", path.display());
        }
        Command::Check { config } => {
            let cfg = load_config(&config)?;
            cfg.scheme.validate()?;
            println!(
                "ok: {} scheme, {} steps, grid {}x{}, config {}",
                cfg.scheme.scheme.name(),
                cfg.scheme.n_steps(),
                cfg.grid.n_x(),
                cfg.grid.n_v(),
                cfg.hash()
            );
        }
    }
    Ok(())
}

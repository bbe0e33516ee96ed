use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use subradiance_cli::commands::*;
use subradiance_cli::config::load_config;
use subradiance_cli::error::{invalid, CliError};
use subradiance_cli::figures::{self, Figure};
use subradiance_cli::output::emit;

#[derive(Parser)]
#[command(name = "subradiance", version, about = "Emitters in a lossy cavity: steady states, dynamics, g2 and fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file (output directory for `reproduce`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Check the configuration and exit without computing.
    #[arg(long, global = true)]
    validate_only: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Steady-state observables.
    Steady {
        #[arg(long)]
        config: PathBuf,
    },
    /// Dicke populations over time.
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Second-order correlation g2(tau) in the steady state.
    G2 {
        #[arg(long)]
        config: PathBuf,
    },
    /// Parameter grid of steady-state observables.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit the bunching model to a coincidence histogram.
    Fit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Regenerate the data behind one figure.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
}

fn config_dir(path: &Path) -> &Path {
    path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(invalid("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| invalid(format!("--jobs: {e}")))?;
    }
    let out = cli.out.as_deref();
    let check = cli.validate_only;
    match cli.command {
        Command::Steady { config } => {
            let plan = plan_steady(&load_config(&config)?)?;
            if !check {
                emit(out, run_steady(&plan)?.as_bytes())?;
            }
        }
        Command::Evolve { config } => {
            let plan = plan_evolve(&load_config(&config)?)?;
            if !check {
                emit(out, run_evolve(&plan)?.as_bytes())?;
            }
        }
        Command::G2 { config } => {
            let plan = plan_g2(&load_config(&config)?)?;
            if !check {
                emit(out, run_g2(&plan)?.as_bytes())?;
            }
        }
        Command::Sweep { config } => {
            let spec = plan_sweep(&load_config(&config)?)?;
            if !check {
                run_sweep_command(&spec, out)?;
            }
        }
        Command::Fit { config } => {
            let plan = plan_fit(&load_config(&config)?, config_dir(&config))?;
            if !check {
                let mut json = serde_json::to_string_pretty(&run_fit(&plan)?)?;
                json.push('\n');
                emit(out, json.as_bytes())?;
            }
        }
        Command::Reproduce { figure } => {
            figures::validate(figure)?;
            if !check {
                let dir = out.unwrap_or(Path::new("."));
                let (files, violations) = figures::reproduce(figure, dir)?;
                for f in files {
                    eprintln!("wrote {}", dir.join(f).display());
                }
                if violations > 0 {
                    eprintln!("{violations} grid points flagged cutoff_violation");
                }
            }
        }
    }
    if check {
        eprintln!("configuration ok");
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

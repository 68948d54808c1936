#![allow(clippy::neg_cmp_op_on_partial_ord)]
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kd_cli::config::{parse_config, FigurePreset, Truncation};
use kd_cli::error::CliError;
use kd_cli::verify;

#[derive(Parser)]
#[command(name = "kd", version, about = "Two-particle Kapitza-Dirac diffraction simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a configuration file and write its outputs.
    Run {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<FigurePreset>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write an SVG plot.
        #[arg(long)]
        svg: bool,
        /// Choose the truncation automatically with this tail tolerance.
        #[arg(long)]
        tail_tol: Option<f64>,
    },
    /// List the figure presets.
    PresetList,
    /// Cross-check closed forms against numerical oracles.
    Verify,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            preset,
            config,
            out,
            svg,
            tail_tol,
        } => {
            let mut cfg = match (preset, config) {
                (Some(p), _) => p.config(),
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
                    parse_config(&text)?
                }
                (None, None) => unreachable!("clap requires one of --preset and --config"),
            };
            if svg {
                cfg.svg = true;
            }
            if let Some(tol) = tail_tol {
                if !(tol > 0.0 && tol < 1.0) {
                    return Err(kd_cli::ConfigError {
                        line: None,
                        text: None,
                        message: format!("--tail-tol {tol} must lie in (0, 1)"),
                    }
                    .into());
                }
                cfg.truncation = Truncation::Auto(tol);
            }
            for path in kd_cli::run(&cfg, &out)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::PresetList => {
            for p in FigurePreset::ALL {
                println!("{:<6} {}", p.as_str(), p.description());
            }
            Ok(())
        }
        Command::Verify => {
            let checks = verify::checks()?;
            for c in &checks {
                println!("{}", c.line());
            }
            let failed: Vec<_> = checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Oracle(failed.join(", ")))
            }
        }
    }
}

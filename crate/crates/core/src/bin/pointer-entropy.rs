use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pointer_entropy::scenario::{preset, run_scenario, ScenarioConfig};
use pointer_entropy::Error;

#[derive(Parser)]
#[command(
    version,
    about = "Entropic uncertainty of open pointer-based measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a time sweep and write the CSV report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `[output] path`; stdout when neither is given.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        grid_points: Option<usize>,
    },
    /// Print or write a preset configuration.
    Preset {
        #[arg(long)]
        name: String,
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

fn simulate(config: PathBuf, out: Option<PathBuf>, grid_points: Option<usize>) -> ExitCode {
    let mut cfg = match ScenarioConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = grid_points {
        cfg.numerics.grid_points = n;
    }
    let scenario = match cfg.build(config.parent()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match run_scenario(&scenario) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("numerical failure: {e}");
            return ExitCode::from(1);
        }
    };
    let written = match out.or(cfg.output.path.clone()) {
        Some(path) => File::create(&path).and_then(|f| report.write_csv(BufWriter::new(f))),
        None => report.write_csv(io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if report.not_invertible > 0 {
        eprintln!(
            "warning: {} sweep times have no inferred observables",
            report.not_invertible
        );
    }
    eprintln!("{}", report.summary());
    ExitCode::from(report.exit_code() as u8)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Simulate {
            config,
            out,
            grid_points,
        } => simulate(config, out, grid_points),
        Command::Preset { name, write } => {
            let cfg = match preset(&name) {
                Ok(c) => c,
                Err(e @ Error::UnknownPreset(_)) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let text = cfg.to_toml();
            match write {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, text) {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                }
                None => print!("{text}"),
            }
            ExitCode::SUCCESS
        }
    }
}

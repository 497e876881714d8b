use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tpa_cli::config::Params;
use tpa_cli::figures::run_figures;
use tpa_cli::point::run_point;
use tpa_cli::sweep::{run_sweep, SweepSpec};
use tpa_cli::{default_out_dir, CliError, Result};
use tpa_core::validation::{self, Level};

#[derive(Debug, Parser)]
#[command(name = "tpa", version, about = "One- and two-photon absorption by entangled photon pairs")]
struct Cli {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate P1, P2 and their ratio at one parameter point.
    Point {
        #[command(flatten)]
        params: Params,
    },
    /// Sweep one variable and write a CSV plus a summary JSON.
    Sweep {
        #[command(flatten)]
        params: Params,
    },
    /// Write the canonical comparison and transparency sweeps.
    Figures {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the built-in checks and print a JSON report.
    Validate {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_or_print(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n")).map_err(|e| CliError::Io {
            path: path.clone(),
            message: e.to_string(),
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    message: e.to_string(),
                }),
                _ => Ok(()),
            }
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Point { params } => {
            let p = params.resolve(config)?;
            write_or_print(&run_point(&p)?, p.out.as_ref())?;
        }
        Command::Sweep { params } => {
            let spec = SweepSpec::from_params(&params.resolve(config)?)?;
            let summary = run_sweep(&spec)?;
            write_or_print(&serde_json::to_string_pretty(&summary)?, None)?;
        }
        Command::Figures { out, workers } => {
            let p = Params {
                out,
                workers,
                ..Params::default()
            }
            .resolve(config)?;
            let dir = p.out.clone().unwrap_or_else(default_out_dir);
            fs::create_dir_all(&dir).map_err(|e| CliError::Io {
                path: dir.clone(),
                message: e.to_string(),
            })?;
            p.worker_count()?;
            let summaries = run_figures(&dir, p.workers)?;
            write_or_print(&serde_json::to_string_pretty(&summaries)?, None)?;
        }
        Command::Validate { level, out } => {
            if let Some(path) = config {
                Params::from_file(path)?;
            }
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            let report = validation::run(level);
            for c in &report.checks {
                eprintln!(
                    "{} {:<3} {} (measured {:.3e}, tolerance {:.3e}, {:.2} s){}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.id,
                    c.description,
                    c.measured,
                    c.tolerance,
                    c.seconds,
                    c.detail.as_deref().map(|d| format!(": {d}")).unwrap_or_default()
                );
            }
            write_or_print(&serde_json::to_string_pretty(&report)?, out.as_ref())?;
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("tpa: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

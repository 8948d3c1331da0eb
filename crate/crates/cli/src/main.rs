use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mfpmp_cli::output::OutputDir;
use mfpmp_cli::{run::run, CliError, Command, ExitStatus, RunConfig};

/// Optimal control of mean-field oscillator ensembles by indirect descent.
#[derive(Debug, Parser)]
#[command(name = "mfpmp", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON run description.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// `key=value` with a dotted key, e.g. `grid.step=1e-3`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn execute(args: &Args) -> Result<ExitStatus, CliError> {
    let mut cfg = RunConfig::load(&args.config, &args.overrides)?;
    if let Some(dir) = &args.output {
        cfg.output_dir = dir.clone();
    }
    let out = OutputDir::create(&cfg.output_dir)?;
    run(args.command, &cfg, &out)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(ExitStatus::ConfigError.code() as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match execute(&args) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.status().code() as u8)
        }
    }
}

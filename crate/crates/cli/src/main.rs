use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hyperloc_cli::validate::{validate, Level};
use hyperloc_cli::{init_threads, run, ExperimentConfig, ExperimentKind, Overrides, RunError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Validate,
    Lyapunov,
    Ldt,
    Ustate,
    Spectrum,
    Green,
    Localize,
    DoubleResonance,
    Holonomy,
}

/// Run a hyperloc experiment from a JSON config.
#[derive(Debug, Parser)]
#[command(name = "hyperloc", version)]
struct Cli {
    /// Experiment to run, or `validate` to only check the config.
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
}

fn kind_of(c: Command) -> Option<ExperimentKind> {
    Some(match c {
        Command::Validate => return None,
        Command::Lyapunov => ExperimentKind::Lyapunov,
        Command::Ldt => ExperimentKind::Ldt,
        Command::Ustate => ExperimentKind::Ustate,
        Command::Spectrum => ExperimentKind::Spectrum,
        Command::Green => ExperimentKind::Green,
        Command::Localize => ExperimentKind::Localize,
        Command::DoubleResonance => ExperimentKind::DoubleResonance,
        Command::Holonomy => ExperimentKind::Holonomy,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("hyperloc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<u8, RunError> {
    init_threads()?;
    let cfg = ExperimentConfig::load(&cli.config)?;
    match kind_of(cli.command) {
        None => {
            let diags = validate(&cfg, None);
            for d in &diags {
                println!("{d}");
            }
            Ok(if diags.iter().any(|d| d.level == Level::Error) { 2 } else { 0 })
        }
        Some(kind) => {
            let report = run(kind, cfg, &Overrides { output: cli.output.clone(), seed: cli.seed })?;
            for w in &report.warnings {
                eprintln!("{w}");
            }
            println!("wrote {} files to {}", report.files.len() + 1, report.output_dir.display());
            Ok(0)
        }
    }
}

//! Batch experiment runner for `hyperloc`.
//!
//! A run reads one JSON config, writes CSV tables (and SVG charts unless
//! disabled) to the output directory, and finishes with `manifest.json`.
//! Data files depend only on the config, never on thread count or timing.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod validate;

use std::path::PathBuf;
use std::time::Instant;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::RunError;
use output::{Manifest, Outputs};
use validate::{validate, Diagnostic, Level};

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub warnings: Vec<Diagnostic>,
}

/// Validate, run and write every report file for `kind`.
pub fn run(kind: ExperimentKind, mut cfg: ExperimentConfig, overrides: &Overrides) -> Result<RunReport, RunError> {
    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    if let Some(o) = &overrides.output {
        cfg.output_dir = Some(o.clone());
    }
    let diags = validate(&cfg, Some(kind));
    if let Some(d) = diags.iter().find(|d| d.level == Level::Error) {
        return Err(RunError::Config(format!("{}: {}", d.field, d.message)));
    }
    let start = Instant::now();
    let mut out = Outputs::create(&cfg.output_dir())?;
    experiments::run_experiment(kind, &cfg, &mut out)?;
    let files = out.files().to_vec();
    let manifest = Manifest {
        tool: "hyperloc",
        version: env!("CARGO_PKG_VERSION"),
        library_version: hyperloc::VERSION,
        experiment: kind.name(),
        config: &cfg,
        files: &files,
        threads: rayon::current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    out.write_bytes("manifest.json", format!("{json}\n").as_bytes())?;
    Ok(RunReport { output_dir: out.dir().to_path_buf(), files, warnings: diags })
}

/// Size the global thread pool from `HYPERLOC_THREADS` when set.
pub fn init_threads() -> Result<(), RunError> {
    if let Ok(v) = std::env::var("HYPERLOC_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| RunError::Config(format!("HYPERLOC_THREADS must be a positive integer, got {v:?}")))?;
        // a pool built earlier in the process keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

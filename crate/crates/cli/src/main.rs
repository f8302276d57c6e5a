mod config;
mod report;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use timelike::Error;

use crate::config::ExperimentConfig;
use crate::report::{write_outputs, ReportEnvelope};

/// Overrides the output directory unless `--out` is given.
const OUT_DIR_ENV: &str = "TIMELIKE_OUT_DIR";

const EXIT_CONFIG: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_VERDICT: u8 = 3;

#[derive(Parser)]
#[command(version, about = "Timelike Hausdorff measure experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory (overrides $TIMELIKE_OUT_DIR and the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replaces the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible { .. }
        | Error::BudgetExhausted { .. }
        | Error::Disconnected
        | Error::NoInteriorSamples
        | Error::EmptyCarrier => EXIT_INFEASIBLE,
        Error::HypothesisFailed(_) => EXIT_VERDICT,
        _ => EXIT_CONFIG,
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

fn run(config: &Path, out: Option<PathBuf>, seed: Option<u64>, threads: Option<usize>) -> u8 {
    let mut cfg = match load(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(k) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("error: --threads: {e}");
            return EXIT_CONFIG;
        }
    }
    let dir = out
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let stem = cfg.name.clone().unwrap_or_else(|| {
        config
            .file_stem()
            .map_or_else(|| "experiment".into(), |s| s.to_string_lossy().into_owned())
    });

    let start = Instant::now();
    let output = match tasks::run_task(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {} task failed: {e}", cfg.task.name());
            return exit_code(&e);
        }
    };
    let envelope = ReportEnvelope {
        version: env!("CARGO_PKG_VERSION"),
        task: cfg.task.name(),
        config: &cfg,
        payload: &output.payload,
        verdicts: &output.verdicts,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    match write_outputs(&dir, &stem, &envelope, &output.tables) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: writing outputs to {}: {e}", dir.display());
            return EXIT_CONFIG;
        }
    }
    for v in envelope.verdicts {
        println!("{} {}: {}", v.status, v.check, v.detail);
    }
    if envelope.all_pass() {
        0
    } else {
        EXIT_VERDICT
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => ExitCode::from(run(&config, out, seed, threads)),
    }
}

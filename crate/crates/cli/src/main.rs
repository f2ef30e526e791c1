use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pruefer_cli::commands::{run, Command, Invocation, RunError};
use pruefer_cli::config::{parse_config, Axis, ConfigError, Format, RunConfig};
use pruefer_cli::pool::Pool;

/// IDOS of block Jacobi operators against Prüfer rotation numbers.
#[derive(Debug, Parser)]
#[command(name = "pruefer", version)]
struct Cli {
    command: Command,
    /// TOML configuration; defaults are used for anything missing.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Overrides `model.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.path`.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Overrides `sweep.axis`.
    #[arg(long, value_enum)]
    axis: Option<Axis>,
    /// Overrides `sweep.values`, comma separated.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<usize>>,
    /// Record wall-clock runtimes in the reports.
    #[arg(long)]
    timing: bool,
}

fn load(cli: &Cli) -> Result<RunConfig, RunError> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p)?,
        None => String::new(),
    };
    let mut config = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        config.model.seed = seed;
    }
    if let Some(p) = &cli.output {
        config.output.path = Some(p.clone());
    }
    if let Some(f) = cli.format {
        config.output.format = f;
    }
    if let Some(a) = cli.axis {
        config.sweep.axis = a;
    }
    if let Some(v) = &cli.values {
        config.sweep.values = v.clone();
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            init_logging("info");
            log::error!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    init_logging(&config.run.log_level);
    let pool = match Pool::new(cli.workers) {
        Ok(p) => p,
        Err(e) => {
            log::error!("cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    log::debug!("{} workers", pool.workers());
    let inv = Invocation {
        command: cli.command,
        config: &config,
        exec: &pool,
        timing: cli.timing,
    };
    match run(&inv) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            log::error!("a checked bound failed");
            ExitCode::from(1)
        }
        Err(e) => {
            if let RunError::Config(ConfigError::Validation { section, .. }) = &e {
                log::error!("{e} [{section}]");
            } else {
                log::error!("{e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// `PRUEFER_LOG` takes precedence over the configured level.
fn init_logging(level: &str) {
    let env = env_logger::Env::new().filter_or("PRUEFER_LOG", level);
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

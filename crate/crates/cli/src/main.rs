mod commands;
mod config;

use clap::{Parser, ValueEnum};
use config::{RunConfig, OUT_DIR_ENV};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    FilterApply,
    Reaches,
    Coarsen,
    Converge,
    Train,
    Eval,
    Gradcheck,
    OracleCheck,
}

/// Spectral filters and networks on directed graphs.
#[derive(Debug, Parser)]
#[command(name = "holonet", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Graph file; overrides `[graph] path`.
    graph: Option<PathBuf>,
    /// TOML run configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory; the HOLONET_OUT_DIR variable takes precedence.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Check(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Check(_) => 1,
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
            Self::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(g) = &cli.graph {
        cfg.graph.path = Some(g.clone());
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
        cfg.output_dir = PathBuf::from(dir);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.resolve().map_err(CliError::Config)?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Config(format!("{}: {e}", cfg.output_dir.display())))?;
    commands::write(&cfg.output_dir.join("config.toml"), &cfg.to_toml())?;
    match cli.command {
        Command::FilterApply => commands::filter_apply(&cfg),
        Command::Reaches => commands::reaches(&cfg),
        Command::Coarsen => commands::coarsen(&cfg),
        Command::Converge => commands::converge(&cfg),
        Command::Train => commands::train(&cfg),
        Command::Eval => commands::eval(&cfg),
        Command::Gradcheck => commands::gradcheck(&cfg),
        Command::OracleCheck => commands::oracle_check(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("holonet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

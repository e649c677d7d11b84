//! `oobmm`: configuration-driven runs of the channel, beam-search,
//! fingerprint and correlation-translation experiments.

mod artifacts;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oobmm::config::{RunConfig, DEFAULT_CONFIG};

use artifacts::{read_text, OutputDir};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<oobmm::Error> for CliError {
    fn from(e: oobmm::Error) -> Self {
        use oobmm::Error as E;
        match e {
            E::Config(_) | E::Parse { .. } | E::UnsupportedGeometry(_) => Self::Config(e.to_string()),
            E::Domain(_) | E::Infeasible { .. } => Self::Runtime(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "oobmm", version, about = "Out-of-band aided mmWave link configuration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; the built-in standard setup when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing, locked while running).
    #[arg(long)]
    out: PathBuf,
    /// Overrides the master seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Only log errors.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw congruent sub-6 / mmWave channel pairs and write them as text matrices.
    GenChannels {
        #[command(flatten)]
        common: Common,
    },
    /// Compressed beam search sweep over distance and training length.
    Beamsearch {
        #[command(flatten)]
        common: Common,
        /// Also write one row per (method, distance, M, trial).
        #[arg(long)]
        records: bool,
    },
    /// Fingerprint training overhead against 802.11ad over array sizes.
    Fingerprint {
        #[command(flatten)]
        common: Common,
        /// Write every fingerprint database under databases/.
        #[arg(long)]
        save_db: bool,
        /// Read databases from this directory instead of surveying the scene.
        #[arg(long)]
        load_db: Option<PathBuf>,
    },
    /// Spatial correlation translation NMSE ensemble.
    Covtranslate {
        #[command(flatten)]
        common: Common,
    },
    /// Print the built-in standard configuration.
    DefaultConfig,
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let text = match &common.config {
        Some(p) => read_text(p)?,
        None => DEFAULT_CONFIG.to_string(),
    };
    let mut cfg = RunConfig::parse(&text).map_err(|e| match &common.config {
        Some(p) => CliError::Config(format!("{}: {e}", p.display())),
        None => e.into(),
    })?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn setup(common: &Common) -> Result<(), CliError> {
    let level = if common.quiet { log::LevelFilter::Error } else { log::LevelFilter::Info };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::GenChannels { common } => ("gen-channels", common),
        Command::Beamsearch { common, .. } => ("beamsearch", common),
        Command::Fingerprint { common, .. } => ("fingerprint", common),
        Command::Covtranslate { common } => ("covtranslate", common),
        Command::DefaultConfig => {
            print!("{DEFAULT_CONFIG}");
            return Ok(());
        }
    };
    setup(common)?;
    // validate everything before touching the output directory
    let cfg = load_config(common)?;
    match &cli.command {
        Command::GenChannels { .. } => drop(cfg.channel_setup()?),
        Command::Beamsearch { .. } => drop(cfg.experiment()?),
        Command::Fingerprint { .. } => drop(cfg.fingerprint_sweep()?),
        Command::Covtranslate { .. } => drop(cfg.translation()?),
        Command::DefaultConfig => unreachable!(),
    }
    let mut out = OutputDir::acquire(&common.out)?;
    log::info!("{name}: seed {}, output {}", cfg.seed, common.out.display());
    match &cli.command {
        Command::GenChannels { .. } => commands::gen_channels(&cfg, &mut out)?,
        Command::Beamsearch { records, .. } => commands::beamsearch(&cfg, &mut out, *records)?,
        Command::Fingerprint { save_db, load_db, .. } => commands::fingerprint(&cfg, &mut out, *save_db, load_db.as_deref())?,
        Command::Covtranslate { .. } => commands::covtranslate(&cfg, &mut out)?,
        Command::DefaultConfig => unreachable!(),
    }
    let manifest = out.finish(name, &cfg.to_toml(), cfg.seed)?;
    log::info!("wrote {} files", manifest.outputs.len());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

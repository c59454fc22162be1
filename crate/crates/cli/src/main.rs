use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eicp_cli::commands::{self, CliError};
use eicp_cli::config::RunConfig;
use eicp_core::strategies::Process;

/// Data augmentation with conformal online learning: synthetic datasets,
/// experiment grids and significance reports.
#[derive(Debug, Parser)]
#[command(name = "eicp", version)]
struct Cli {
    /// Log progress (repeat for more detail; RUST_LOG overrides).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the default configuration (or write it to a file).
    Config {
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the configured datasets as CSV files with a manifest.
    Generate(Common),
    /// Run every configured task and write results, summary and radar data.
    Run {
        #[command(flatten)]
        common: Common,
        /// Report only these processes, e.g. `P1,P6` (P1 is always kept).
        #[arg(long)]
        only: Option<String>,
        /// Override the number of repeats per task.
        #[arg(long)]
        repeats: Option<usize>,
        /// Maximum number of worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Summarise an existing results directory.
    Report {
        /// Directory holding results.csv.
        dir: PathBuf,
        /// Report only these processes, e.g. `P1,P6`.
        #[arg(long)]
        only: Option<String>,
        /// Where to write radar.csv (default: inside DIR).
        #[arg(long)]
        radar: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration (default: built-in 36-task grid).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf), CliError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        let out = self.out.clone().unwrap_or_else(|| config.out.clone());
        Ok((config, out))
    }
}

fn only(list: &Option<String>) -> Result<Vec<Process>, CliError> {
    match list {
        Some(l) => Ok(commands::parse_processes(l)?),
        None => Ok(Vec::new()),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Config { out } => {
            let text = RunConfig::default().to_toml();
            match out {
                Some(path) => eicp_core::write_atomic(&path, text.as_bytes())?,
                None => print!("{text}"),
            }
        }
        Command::Generate(common) => {
            let (config, out) = common.load()?;
            let manifest = commands::generate(&config, &out)?;
            for d in &manifest.datasets {
                println!("{}: {} rows x {} features, seed {}", d.name, d.rows, d.features, d.seed);
            }
            println!("wrote {}", out.display());
        }
        Command::Run {
            common,
            only: list,
            repeats,
            jobs,
        } => {
            let (mut config, out) = common.load()?;
            if let Some(r) = repeats {
                config.n_repeats = r;
            }
            if jobs == Some(0) {
                return Err(CliError::Config("--jobs must be at least 1".into()));
            }
            let processes = only(&list)?;
            let output = commands::run(&config, &processes, &out, jobs)?;
            print!("{}", commands::format_summary(&output.summary));
            println!("\nwrote {}", out.display());
        }
        Command::Report { dir, only: list, radar } => {
            let processes = only(&list)?;
            let radar = radar.unwrap_or_else(|| commands::default_radar_path(&dir));
            let summary = commands::report(&dir, &processes, &radar)?;
            print!("{}", commands::format_summary(&summary));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eicp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

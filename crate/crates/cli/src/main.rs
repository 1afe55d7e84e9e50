use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Exact inference on discrete belief networks.
#[derive(Parser, Debug)]
#[command(name = "cliquetree", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a network and print its forest statistics as JSON.
    Compile { network: PathBuf },
    /// Print posterior marginals given evidence.
    Infer {
        network: PathBuf,
        #[command(flatten)]
        evidence: EvidenceArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, value_enum, default_value_t = Mode::Removal)]
        mode: Mode,
    },
    /// Compare the engine with brute-force enumeration.
    Verify {
        network: PathBuf,
        #[command(flatten)]
        evidence: EvidenceArgs,
        /// Random evidence sets to try instead of `--set`.
        #[arg(long, conflicts_with = "set")]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest number of observed variables per trial.
        #[arg(long, default_value_t = 4)]
        max_observed: usize,
        /// Joint table cell cap for the oracle.
        #[arg(long, default_value_t = cliquetree::oracle::DEFAULT_CELL_CAP)]
        cap: u128,
    },
    /// Time queries and report work counters in both absorption modes.
    Bench {
        network: PathBuf,
        /// Grow nested evidence sets one variable at a time.
        #[arg(long)]
        evidence_sweep: bool,
        #[arg(long, default_value_t = 20)]
        repeat: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest evidence set in the sweep (defaults to every variable).
        #[arg(long)]
        max_observed: Option<usize>,
    },
    /// Print a random valid network document.
    Gen {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        arcs: usize,
        #[arg(long, default_value_t = 2)]
        max_card: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the network, or its clique forest, in Graphviz format.
    ExportDot {
        network: PathBuf,
        #[arg(long)]
        forest: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Load networks from this snapshot at start and write it on shutdown.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct EvidenceArgs {
    /// Observation as `variable=valueLabel`; repeatable.
    #[arg(long = "set", value_name = "VAR=VALUE", value_parser = parse_binding)]
    set: Vec<(String, String)>,
}

fn parse_binding(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((var, value)) if !var.is_empty() && !value.is_empty() => Ok((var.to_string(), value.to_string())),
        _ => Err(format!("expected VAR=VALUE, got `{s}`")),
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Removal,
    Zeroing,
}

impl From<Mode> for cliquetree::AbsorptionMode {
    fn from(mode: Mode) -> Self {
        match mode {
            Mode::Removal => Self::Removal,
            Mode::Zeroing => Self::Zeroing,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let usage = err.use_stderr();
            let _ = err.print();
            return if usage { ExitCode::from(commands::EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}

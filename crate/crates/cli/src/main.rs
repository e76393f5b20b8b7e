//! `pathcrawl` command-line interface.
//!
//! Exit codes:
//!
//! | code | meaning                                                       |
//! |------|---------------------------------------------------------------|
//! | 0    | success                                                       |
//! | 1    | runtime failure (I/O, evaluator, corrupt cache)               |
//! | 2    | usage error (bad flags, unknown subcommand or sweep kind)     |
//! | 3    | configuration error (unreadable, unknown keys, bad values)    |
//! | 4    | no acceptance: a segment found no group or pair above T       |
//! | 5    | missing stage cache: run the named prerequisite command first |

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pathcrawl::engine::{Game, Split};

#[derive(Debug, Parser)]
#[command(name = "pathcrawl", version, about = "Self-generated training data for parametric text games")]
struct Cli {
    /// Worker threads (overrides the config file; 0 = one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Log level (overrides the config file).
    #[arg(long, global = true)]
    log: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    TrainingSize,
    Noise,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full loop and write manifest, reports and training data.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
    /// Crawl the first reward segment of every training variation.
    Crawl {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the first segment's path groups, shortest first.
    Groups {
        #[arg(long)]
        config: PathBuf,
        /// Show at most this many groups.
        #[arg(long, default_value_t = 20)]
        limit: usize,
    },
    /// Evaluate one first-segment group on the development split.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Macro key, e.g. "Take(X) Read(X)".
        #[arg(long)]
        group: String,
    },
    /// Play a variation interactively on standard input.
    Play {
        #[arg(long)]
        game: Game,
        #[arg(long, default_value = "train")]
        split: Split,
        #[arg(long, default_value_t = 0)]
        variation: u32,
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
    },
    /// Write a sweep table (tab-separated, header row) to the output directory.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: SweepKind,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Play { game, split, variation, master_seed } => {
            commands::init_logging(cli.log.as_deref().unwrap_or("warn"));
            commands::play(game, split, variation, master_seed)
        }
        Command::Pipeline { config } => commands::with_config(&config, &cli.workers, &cli.log, commands::pipeline),
        Command::Crawl { config } => commands::with_config(&config, &cli.workers, &cli.log, commands::crawl),
        Command::Groups { config, limit } => {
            commands::with_config(&config, &cli.workers, &cli.log, |l| commands::groups(l, limit))
        }
        Command::Eval { config, group } => {
            commands::with_config(&config, &cli.workers, &cli.log, |l| commands::eval(l, &group))
        }
        Command::Sweep { config, kind } => {
            commands::with_config(&config, &cli.workers, &cli.log, |l| commands::sweep(l, kind))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.code())
        }
    }
}

//! Reference external evaluator: the builtin rule-induction learner served
//! over the line protocol on stdin/stdout.

use std::collections::BTreeMap;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use pathcrawl::evaluator::serve::{serve, Misbehavior, ServeEnd, ServeOptions};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    InvalidAction,
    Malformed,
    Crash,
    Hang,
}

#[derive(Parser, Debug)]
#[command(version, about = "Reference evaluator speaking the pathcrawl protocol")]
struct Args {
    /// JSON file mapping episode ids (e.g. "dev-3") to action lists to replay
    /// instead of learning.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Misbehave after `--after` observations (protocol conformance testing).
    #[arg(long, value_enum)]
    misbehave: Option<Mode>,
    #[arg(long, default_value_t = 0)]
    after: u32,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let script = match &args.script {
        None => None,
        Some(path) => {
            let parsed = std::fs::read_to_string(path)
                .map_err(|e| e.to_string())
                .and_then(|s| serde_json::from_str::<BTreeMap<String, Vec<String>>>(&s).map_err(|e| e.to_string()));
            match parsed {
                Ok(s) => Some(s),
                Err(e) => {
                    eprintln!("cannot load script {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
        }
    };
    let misbehave = match args.misbehave {
        None => Misbehavior::None,
        Some(Mode::InvalidAction) => Misbehavior::InvalidAction,
        Some(Mode::Malformed) => Misbehavior::Malformed,
        Some(Mode::Crash) => Misbehavior::Crash,
        Some(Mode::Hang) => Misbehavior::Hang,
    };
    let opts = ServeOptions { script, misbehave, after: args.after };
    let stdin = io::stdin().lock();
    let stdout = BufWriter::new(io::stdout().lock());
    match serve(stdin, stdout, &opts) {
        Ok(ServeEnd::Crash) => ExitCode::from(101),
        Ok(ServeEnd::Hang) => loop {
            std::thread::park();
        },
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("evaluator I/O error: {e}");
            ExitCode::FAILURE
        }
    }
}

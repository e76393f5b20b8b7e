use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use pathcrawl::engine::{generate_episode, Action, EpisodeSpec, Game, Split};
use pathcrawl::evaluator::evaluate_records;
use pathcrawl::macros::group_paths;
use pathcrawl::pipeline::{
    crawl_key, crawl_stage, eval_key, initial_jobs, run_full, sweep, Checkpoint, PipelineError, PipelineOutput,
    RunOptions, Selection,
};

use crate::config::{self, Loaded, SweepSource};
use crate::SweepKind;

// ---------------------------------------------------------------------------
// Failures and exit codes
// ---------------------------------------------------------------------------

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_NO_ACCEPTANCE: u8 = 4;
pub const EXIT_MISSING_CACHE: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    pub fn code(&self) -> u8 {
        self.code
    }

    fn new(code: u8, error: impl Into<anyhow::Error>) -> Failure {
        Failure { code, error: error.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: EXIT_RUNTIME, error }
    }
}

impl From<io::Error> for Failure {
    fn from(error: io::Error) -> Self {
        Failure { code: EXIT_RUNTIME, error: error.into() }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match e {
            PipelineError::Config(_) => EXIT_CONFIG,
            PipelineError::NoAcceptance { .. } | PipelineError::Unfinished { .. } => EXIT_NO_ACCEPTANCE,
            _ => EXIT_RUNTIME,
        };
        Failure::new(code, e)
    }
}

type CmdResult = Result<(), Failure>;

// ---------------------------------------------------------------------------
// Setup
// ---------------------------------------------------------------------------

pub fn init_logging(level: &str) {
    let level = level.parse::<tracing::Level>().unwrap_or(tracing::Level::INFO);
    let _ = tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(io::stderr)
        .with_target(false)
        .try_init();
}

/// Loads the config, sets up logging and the worker pool, then runs `f`.
pub fn with_config<F>(path: &Path, workers: &Option<usize>, log: &Option<String>, f: F) -> CmdResult
where
    F: FnOnce(&Loaded) -> CmdResult,
{
    let loaded = config::load(path).map_err(|e| Failure::new(EXIT_CONFIG, anyhow!("{}: {e}", path.display())))?;
    let level = log.clone().or_else(|| loaded.file.log.clone()).unwrap_or_else(|| "info".into());
    if level.parse::<tracing::Level>().is_err() {
        return Err(Failure::new(EXIT_CONFIG, anyhow!("unknown log level {level:?}")));
    }
    init_logging(&level);
    let n = workers.or(loaded.file.workers).unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| anyhow!("cannot start worker pool: {e}"))?;
    std::fs::create_dir_all(&loaded.out_dir)
        .with_context(|| format!("cannot create output directory {}", loaded.out_dir.display()))?;
    f(&loaded)
}

fn checkpoint(l: &Loaded) -> Result<Checkpoint, Failure> {
    Ok(Checkpoint::open(&l.out_dir)?)
}

fn run_pipeline(l: &Loaded) -> Result<PipelineOutput, Failure> {
    let opts = RunOptions { out_dir: Some(l.out_dir.clone()), config_echo: Some(l.echo.clone()) };
    Ok(run_full(l.pipeline.clone(), opts)?)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

pub fn pipeline(l: &Loaded) -> CmdResult {
    let out = run_pipeline(l)?;
    let mut stdout = io::stdout().lock();
    for s in &out.manifest.segments {
        writeln!(stdout, "segment {}: {} (dev {}, relative {})", s.segment_index, s.accepted_key, s.dev_score, s.accepted_score)?;
    }
    writeln!(
        stdout,
        "{} winning trajectories, {} records -> {}",
        out.trajectories.len(),
        out.records.len(),
        l.out_dir.display()
    )?;
    Ok(())
}

pub fn crawl(l: &Loaded) -> CmdResult {
    let cp = checkpoint(l)?;
    let jobs = initial_jobs(&l.pipeline)?;
    let stage = crawl_stage(&l.pipeline.crawl, &jobs, Some(&cp))?;
    println!(
        "{} paths over {} variations ({}) -> {}",
        stage.paths.len(),
        jobs.len(),
        if stage.cache_hit { "cached" } else { "crawled" },
        cp.crawl_path(&stage.key).display()
    );
    Ok(())
}

fn cached_groups(l: &Loaded) -> Result<Vec<pathcrawl::macros::PathGroup>, Failure> {
    let cp = checkpoint(l)?;
    let jobs = initial_jobs(&l.pipeline)?;
    let key = crawl_key(&l.pipeline.crawl, &jobs);
    let paths = cp.load_crawl(&key)?.ok_or_else(|| {
        Failure::new(
            EXIT_MISSING_CACHE,
            anyhow!("no crawl cache for this configuration; run `pathcrawl crawl --config <file>` first"),
        )
    })?;
    Ok(group_paths(paths, 0))
}

pub fn groups(l: &Loaded, limit: usize) -> CmdResult {
    let groups = cached_groups(l)?;
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "rank\tlength\tcoverage\tkey")?;
    for (i, g) in groups.iter().take(limit).enumerate() {
        writeln!(stdout, "{}\t{}\t{}\t{}", i + 1, g.macro_seq.len(), g.coverage(), g.key())?;
    }
    if groups.len() > limit {
        writeln!(stdout, "({} more)", groups.len() - limit)?;
    }
    Ok(())
}

pub fn eval(l: &Loaded, key: &str) -> CmdResult {
    let groups = cached_groups(l)?;
    let group = groups.iter().find(|g| g.key() == key).ok_or_else(|| {
        Failure::new(EXIT_CONFIG, anyhow!("no first-segment group {key:?}; `pathcrawl groups` lists them"))
    })?;
    let selection = Selection::from_group(group);
    let records = selection.records().map_err(anyhow::Error::from)?;
    let cfg = &l.pipeline;
    let specs = EpisodeSpec::range(cfg.game, Split::Dev, cfg.dev_variations, cfg.master_seed)
        .map_err(anyhow::Error::from)?;
    let cp = checkpoint(l)?;
    let cache = eval_key(&cfg.evaluator, key, &records, &specs, "dev");
    let report = match cp.load_eval(&cache)? {
        Some(r) => r,
        None => {
            let r = evaluate_records(&cfg.evaluator, key, &records, &specs, "dev").map_err(anyhow::Error::from)?;
            cp.store_eval(&cache, &r)?;
            r
        }
    };
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "episode\tscore\tsteps")?;
    for (v, e) in &report.per_episode {
        writeln!(stdout, "dev-{v}\t{}\t{}", e.score, e.steps)?;
    }
    writeln!(stdout, "mean\t{}\t{}", report.mean_score, report.mean_steps)?;
    writeln!(stdout, "relative\t{}", report.mean_score.ratio_capped(selection.train_mean()))?;
    Ok(())
}

pub fn sweep(l: &Loaded, kind: SweepKind) -> CmdResult {
    let cfg = &l.pipeline;
    let (table, name) = match kind {
        SweepKind::TrainingSize => {
            let source = match l.file.sweep.source {
                SweepSource::Gold => sweep::gold_trajectories(cfg, cfg.train_variations)?,
                SweepSource::Pipeline => run_pipeline(l)?.trajectories,
            };
            let rows = sweep::sweep_training_size(cfg, &source, &l.sizes())?;
            (sweep::size_table(&rows), "sweep-training-size.tsv")
        }
        SweepKind::Noise => {
            let fractions = l.fractions().map_err(|e| Failure::new(EXIT_CONFIG, anyhow!(e)))?;
            let rows = sweep::sweep_noise(cfg, &fractions, l.reps())?;
            (sweep::noise_table(&rows), "sweep-noise.tsv")
        }
    };
    let path = l.out_dir.join(name);
    std::fs::write(&path, &table).with_context(|| format!("cannot write {}", path.display()))?;
    print!("{table}");
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// Interactive session: one action per input line. `valid` lists the valid
/// actions, `quit` leaves. The session ends when the episode is over.
pub fn play(game: Game, split: Split, variation: u32, master_seed: u64) -> CmdResult {
    let spec = EpisodeSpec::new(game, split, variation, master_seed)
        .map_err(|e| Failure::new(EXIT_CONFIG, anyhow!(e)))?;
    let mut state = generate_episode(&spec).map_err(anyhow::Error::from)?;
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    let first = state.observation();
    writeln!(out, "{}\n\n{}", first.task_description, first.obs_text)?;
    let mut lines = stdin.lock().lines();
    while !state.is_done() {
        write!(out, "\n> ")?;
        out.flush()?;
        let Some(line) = lines.next() else { break };
        let line = line?;
        let line = line.trim();
        match line {
            "" => continue,
            "quit" | "exit" => break,
            "valid" | "help" => {
                for a in state.valid_actions() {
                    writeln!(out, "  {a}")?;
                }
                continue;
            }
            _ => {}
        }
        let action = match Action::parse(line) {
            Ok(a) => a,
            Err(e) => {
                writeln!(out, "I don't understand that ({e}). Type `valid` to list actions.")?;
                continue;
            }
        };
        match state.step(&action) {
            Ok((next, obs)) => {
                writeln!(out, "{}\n[score {} | step {}]", obs.obs_text, obs.score, obs.step_index)?;
                state = next;
            }
            Err(e) => writeln!(out, "You can't do that: {e}")?,
        }
    }
    writeln!(out, "\nFinal score: {} after {} steps", state.score(), state.steps())?;
    Ok(())
}

//! Exhaustive depth-first crawling up to the first non-zero reward.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{generate_episode, Action, CompactAction, EngineError, EpisodeSpec, GameState};
use crate::score::Score;
use crate::trajectory::{replay_from, Ended, ReplayError, Trajectory};

// ---------------------------------------------------------------------------
// Configuration and errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrawlConfig {
    /// Maximum actions per segment beyond the prefix.
    pub horizon: usize,
    /// Prune a branch when it revisits a state already on its own path.
    pub dedup: bool,
    /// Maximum number of expanded transitions per crawl.
    pub max_nodes: u64,
}

impl Default for CrawlConfig {
    fn default() -> Self {
        CrawlConfig { horizon: 6, dedup: true, max_nodes: 5_000_000 }
    }
}

impl CrawlConfig {
    pub fn validate(&self) -> Result<(), CrawlError> {
        if self.horizon == 0 {
            return Err(CrawlError::Config("horizon must be at least 1".into()));
        }
        if self.max_nodes == 0 {
            return Err(CrawlError::Config("max_nodes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CrawlError {
    #[error("invalid crawl config: {0}")]
    Config(String),
    #[error("node budget of {max_nodes} exhausted on {spec}; {} trajectories found so far", partial.len())]
    BudgetExhausted { spec: String, max_nodes: u64, partial: Vec<Trajectory> },
    #[error("prefix does not replay: {0}")]
    Prefix(#[from] ReplayError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

// ---------------------------------------------------------------------------
// Generic search
// ---------------------------------------------------------------------------

/// Result of applying one move.
#[derive(Debug, Clone)]
pub struct Transition<S> {
    pub state: S,
    pub reward: Score,
    pub done: bool,
    pub failed: bool,
}

/// Anything the crawler can search: a deterministic move generator with a
/// state fingerprint used for ancestor pruning.
pub trait Simulator {
    type State: Clone;
    type Move: Copy;

    /// Legal moves in canonical order; empty when terminal.
    fn moves(&self, state: &Self::State, out: &mut Vec<Self::Move>);
    fn apply(&self, state: &Self::State, mv: Self::Move) -> Transition<Self::State>;
    fn key(&self, state: &Self::State) -> u64;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrawlOutcome<M> {
    /// Rewarded move sequences in depth-first discovery order.
    pub paths: Vec<(Vec<M>, Score)>,
    pub nodes: u64,
    pub exhausted: bool,
}

struct Search<'a, S: Simulator> {
    sim: &'a S,
    cfg: CrawlConfig,
    nodes: u64,
    exhausted: bool,
    path: Vec<S::Move>,
    ancestors: Vec<u64>,
    found: Vec<(Vec<S::Move>, Score)>,
}

impl<S: Simulator> Search<'_, S> {
    fn dfs(&mut self, state: &S::State) {
        let mut moves = Vec::new();
        self.sim.moves(state, &mut moves);
        for mv in moves {
            if self.nodes >= self.cfg.max_nodes {
                self.exhausted = true;
                return;
            }
            self.nodes += 1;
            let t = self.sim.apply(state, mv);
            self.path.push(mv);
            if t.reward.is_positive() {
                self.found.push((self.path.clone(), t.reward));
            } else if !t.done && !t.failed && self.path.len() < self.cfg.horizon {
                let key = self.sim.key(&t.state);
                if !(self.cfg.dedup && self.ancestors.contains(&key)) {
                    self.ancestors.push(key);
                    self.dfs(&t.state);
                    self.ancestors.pop();
                }
            }
            self.path.pop();
            if self.exhausted {
                return;
            }
        }
    }
}

/// Enumerates every move sequence of length ≤ horizon whose last move earns
/// a positive reward and whose earlier moves earn none. Failing, terminal and
/// over-horizon branches are discarded.
pub fn crawl<S: Simulator>(sim: &S, root: &S::State, cfg: &CrawlConfig) -> CrawlOutcome<S::Move> {
    let mut search = Search {
        sim,
        cfg: *cfg,
        nodes: 0,
        exhausted: false,
        path: Vec::with_capacity(cfg.horizon),
        ancestors: vec![sim.key(root)],
        found: Vec::new(),
    };
    search.dfs(root);
    CrawlOutcome { paths: search.found, nodes: search.nodes, exhausted: search.exhausted }
}

// ---------------------------------------------------------------------------
// Game crawling
// ---------------------------------------------------------------------------

/// Adapter exposing the game engine to the generic crawler.
pub struct EngineSim;

impl Simulator for EngineSim {
    type State = GameState;
    type Move = CompactAction;

    fn moves(&self, state: &GameState, out: &mut Vec<CompactAction>) {
        state.valid_compact(out);
    }

    fn apply(&self, state: &GameState, mv: CompactAction) -> Transition<GameState> {
        let next = state.apply(mv);
        Transition {
            reward: next.score() - state.score(),
            done: next.is_done(),
            failed: next.is_failed(),
            state: next,
        }
    }

    fn key(&self, state: &GameState) -> u64 {
        state.state_key()
    }
}

fn to_trajectory(spec: &EpisodeSpec, prefix: &[Action], root: &GameState, moves: &[CompactAction]) -> Trajectory {
    let mut s = root.clone();
    let mut actions = Vec::with_capacity(moves.len());
    let mut rewards = Vec::with_capacity(moves.len());
    for &m in moves {
        actions.push(s.expand(m));
        let next = s.apply(m);
        rewards.push(next.score() - s.score());
        s = next;
    }
    Trajectory {
        spec: *spec,
        prefix: prefix.to_vec(),
        actions,
        rewards,
        prefix_score: root.score(),
        final_score: s.score(),
        ended: if s.is_won() { Ended::Win } else { Ended::Reward },
    }
}

/// Crawls one variation from the state reached by `prefix`. Results are in
/// canonical order (length, then action text).
pub fn crawl_to_reward(spec: &EpisodeSpec, prefix: &[Action], cfg: &CrawlConfig) -> Result<Vec<Trajectory>, CrawlError> {
    cfg.validate()?;
    let s0 = generate_episode(spec)?;
    let (root, _) = replay_from(&s0, prefix)?;
    if root.is_failed() {
        return Err(CrawlError::Prefix(ReplayError::Diverged {
            spec: spec.tag(),
            actual: root.score(),
            recorded: root.score(),
        }));
    }
    let outcome = crawl(&EngineSim, &root, cfg);
    let mut found: Vec<Trajectory> =
        outcome.paths.iter().map(|(moves, _)| to_trajectory(spec, prefix, &root, moves)).collect();
    found.sort_by_cached_key(Trajectory::sort_key);
    tracing::debug!(spec = %spec.tag(), nodes = outcome.nodes, found = found.len(), "crawled");
    if outcome.exhausted {
        return Err(CrawlError::BudgetExhausted { spec: spec.tag(), max_nodes: cfg.max_nodes, partial: found });
    }
    Ok(found)
}

/// One crawl job: a variation and the concrete prefix to resume from.
#[derive(Debug, Clone)]
pub struct CrawlJob {
    pub spec: EpisodeSpec,
    pub prefix: Vec<Action>,
}

/// Runs independent crawls in parallel. Errors stay per job; the output is
/// ordered by spec regardless of scheduling.
pub fn crawl_many(jobs: &[CrawlJob], cfg: &CrawlConfig) -> Vec<(EpisodeSpec, Result<Vec<Trajectory>, CrawlError>)> {
    let mut out: Vec<_> =
        jobs.par_iter().map(|j| (j.spec, crawl_to_reward(&j.spec, &j.prefix, cfg))).collect();
    out.sort_by_key(|(spec, _)| *spec);
    out
}

/// Extends every member of an accepted group: each covered variation is
/// crawled from its own concrete path (prefix + accepted segment).
pub fn extend_segment(
    members: &[Trajectory],
    cfg: &CrawlConfig,
) -> Vec<(EpisodeSpec, Result<Vec<Trajectory>, CrawlError>)> {
    let jobs: Vec<CrawlJob> = members.iter().map(|t| CrawlJob { spec: t.spec, prefix: t.full_actions() }).collect();
    crawl_many(&jobs, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{gold_actions, Game, Split, Verb};

    #[test]
    fn arithmetic_h2_finds_take_then_read() {
        let spec = EpisodeSpec::new(Game::Arithmetic, Split::Train, 0, 0).unwrap();
        let cfg = CrawlConfig { horizon: 2, ..CrawlConfig::default() };
        let found = crawl_to_reward(&spec, &[], &cfg).unwrap();
        let texts: Vec<Vec<String>> =
            found.iter().map(|t| t.actions.iter().map(|a| a.to_string()).collect()).collect();
        assert!(texts.contains(&vec!["take math problem".to_string(), "read math problem".to_string()]));
        for t in &found {
            assert!(t.rewards.last().unwrap().is_positive());
            assert!(t.rewards[..t.len() - 1].iter().all(|r| *r == Score::ZERO));
        }
    }

    #[test]
    fn winning_prefix_yields_nothing() {
        let spec = EpisodeSpec::new(Game::Sorting, Split::Train, 2, 0).unwrap();
        let gold = gold_actions(&generate_episode(&spec).unwrap());
        assert!(crawl_to_reward(&spec, &gold, &CrawlConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn tiny_budget_reports_partial_results() {
        let spec = EpisodeSpec::new(Game::Twc, Split::Train, 0, 0).unwrap();
        let cfg = CrawlConfig { horizon: 4, dedup: true, max_nodes: 50 };
        match crawl_to_reward(&spec, &[], &cfg) {
            Err(CrawlError::BudgetExhausted { max_nodes: 50, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn twc_continuations_after_take() {
        let spec = (0..100)
            .map(|v| EpisodeSpec::new(Game::Twc, Split::Train, v, 0).unwrap())
            .find(|s| gold_actions(&generate_episode(s).unwrap()).len() == 3)
            .unwrap();
        let gold = gold_actions(&generate_episode(&spec).unwrap());
        let cfg = CrawlConfig { horizon: 3, ..CrawlConfig::default() };
        let found = crawl_to_reward(&spec, &gold[..1], &cfg).unwrap();
        assert!(found.iter().any(|t| t.actions == gold[1..]));
        assert!(found.iter().all(|t| t.final_score == Score::ONE));
        assert!(found.iter().all(|t| t.actions.last().unwrap().verb == Verb::Put));
    }
}

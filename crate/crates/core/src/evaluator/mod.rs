//! Generality measurement: train an evaluator on a selection's prompt
//! records and play it on unseen variations.

mod external;
pub mod protocol;
mod report;
pub mod serve;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{generate_episode, Action, EngineError, EpisodeSpec, Observation};
use crate::policy::{induce, AgentView, LearnError, LearnerConfig, Policy, PromptRecord};

pub use external::ExternalSession;
pub use report::{EpisodeResult, EvalReport};

pub const BUILTIN_EVALUATOR_ID: &str = "builtin-rule-induction";

fn default_timeout() -> u64 {
    60
}

/// Which evaluator scores a selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EvaluatorBinding {
    BuiltinRuleInduction {
        #[serde(default)]
        learner: LearnerConfig,
    },
    ExternalProcess {
        /// Program and arguments.
        command: Vec<String>,
        /// Passed through untouched in the `train` message.
        #[serde(default)]
        config: serde_json::Value,
        /// Per-message timeout in seconds.
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

impl Default for EvaluatorBinding {
    fn default() -> Self {
        EvaluatorBinding::BuiltinRuleInduction { learner: LearnerConfig::default() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("training selection is empty")]
    EmptySelection,
    #[error("no episodes to evaluate")]
    EmptySplit,
    #[error("split hygiene violated: training records come from the evaluated split {0}")]
    SplitHygiene(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("evaluator failure: {message} ({} episodes completed)", partial.len())]
    EvaluatorFailure { message: String, partial: BTreeMap<u32, EpisodeResult> },
    #[error("evaluator protocol error: {0}")]
    Protocol(String),
}

/// How an acting call can go wrong for one episode.
pub(crate) enum ActFailure {
    /// Invalid or unparseable action: the episode ends at its current score.
    Abort,
    /// The evaluator is gone; evaluation cannot continue.
    Fatal(String),
}

/// Plays one episode to completion with `act` choosing actions.
pub(crate) fn play_episode<F>(spec: &EpisodeSpec, mut act: F) -> Result<EpisodeResult, (EpisodeResult, String)>
where
    F: FnMut(u32, AgentView) -> Result<String, ActFailure>,
{
    let mut state = generate_episode(spec).map_err(|e| (empty_result(), e.to_string()))?;
    let mut obs = state.observation();
    let mut prev: Option<(Action, Observation)> = None;
    let mut actions = Vec::new();
    let mut aborted = false;
    while !state.is_done() {
        let view = AgentView::new(&obs, prev.as_ref().map(|(a, o)| (a, o)));
        let text = match act(state.steps(), view) {
            Ok(t) => t,
            Err(ActFailure::Abort) => {
                aborted = true;
                break;
            }
            Err(ActFailure::Fatal(msg)) => {
                let partial = EpisodeResult { score: state.score(), steps: state.steps(), actions, aborted: true };
                return Err((partial, msg));
            }
        };
        let Ok(action) = Action::parse(&text) else {
            aborted = true;
            break;
        };
        let Ok((next, next_obs)) = state.step(&action) else {
            aborted = true;
            break;
        };
        actions.push(action.clone());
        prev = Some((action, obs));
        obs = next_obs;
        state = next;
    }
    Ok(EpisodeResult { score: state.score(), steps: state.steps(), actions, aborted })
}

fn empty_result() -> EpisodeResult {
    EpisodeResult { score: crate::Score::ZERO, steps: 0, actions: Vec::new(), aborted: true }
}

/// Plays a trained policy on every spec, in parallel.
pub fn run_policy(policy: &Policy, specs: &[EpisodeSpec]) -> Result<BTreeMap<u32, EpisodeResult>, EvalError> {
    let results: Vec<(u32, EpisodeResult)> = specs
        .par_iter()
        .map(|spec| {
            let mut runner = policy.start_episode();
            let r = play_episode(spec, |_, view| Ok(runner.act(view).to_string()))
                .map_err(|(_, msg)| EvalError::Protocol(msg))?;
            Ok((spec.variation, r))
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(results.into_iter().collect())
}

fn check_inputs(records: &[PromptRecord], specs: &[EpisodeSpec]) -> Result<(), EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptySelection);
    }
    if specs.is_empty() {
        return Err(EvalError::EmptySplit);
    }
    for spec in specs {
        if records.iter().any(|r| r.source.split == spec.split) {
            return Err(EvalError::SplitHygiene(spec.split.to_string()));
        }
    }
    Ok(())
}

/// Trains the bound evaluator on `records` and plays one episode per spec.
pub fn evaluate_records(
    binding: &EvaluatorBinding,
    group_key: &str,
    records: &[PromptRecord],
    specs: &[EpisodeSpec],
    label: &str,
) -> Result<EvalReport, EvalError> {
    check_inputs(records, specs)?;
    match binding {
        EvaluatorBinding::BuiltinRuleInduction { learner } => {
            let policy = induce(records, learner)?;
            let per_episode = run_policy(&policy, specs)?;
            Ok(EvalReport::from_episodes(group_key, label, BUILTIN_EVALUATOR_ID, per_episode))
        }
        EvaluatorBinding::ExternalProcess { command, config, timeout_secs } => {
            let mut session = ExternalSession::spawn(command, std::time::Duration::from_secs(*timeout_secs))?;
            let result = session.evaluate(group_key, records, config, specs, label);
            session.shutdown();
            result
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Game, Split};
    use crate::policy::emit_training_records;
    use crate::trajectory::Trajectory;

    fn gold_records(game: Game, split: Split) -> Vec<PromptRecord> {
        let ts: Vec<Trajectory> =
            (0..10).map(|v| Trajectory::gold(&EpisodeSpec::new(game, split, v, 0).unwrap()).unwrap()).collect();
        emit_training_records(&ts).unwrap()
    }

    #[test]
    fn split_hygiene_is_enforced() {
        let recs = gold_records(Game::Sorting, Split::Dev);
        let specs = EpisodeSpec::range(Game::Sorting, Split::Dev, 5, 0).unwrap();
        let r = evaluate_records(&EvaluatorBinding::default(), "k", &recs, &specs, "dev");
        assert!(matches!(r, Err(EvalError::SplitHygiene(_))));
    }

    #[test]
    fn empty_inputs_are_errors() {
        let recs = gold_records(Game::Sorting, Split::Train);
        let b = EvaluatorBinding::default();
        assert!(matches!(evaluate_records(&b, "k", &recs, &[], "dev"), Err(EvalError::EmptySplit)));
        let specs = EpisodeSpec::range(Game::Sorting, Split::Dev, 5, 0).unwrap();
        assert!(matches!(evaluate_records(&b, "k", &[], &specs, "dev"), Err(EvalError::EmptySelection)));
    }

    #[test]
    fn builtin_is_deterministic() {
        let recs = gold_records(Game::Arithmetic, Split::Train);
        let specs = EpisodeSpec::range(Game::Arithmetic, Split::Dev, 20, 0).unwrap();
        let b = EvaluatorBinding::default();
        let a = evaluate_records(&b, "k", &recs, &specs, "dev").unwrap();
        let c = evaluate_records(&b, "k", &recs, &specs, "dev").unwrap();
        assert_eq!(a, c);
        assert_eq!(a.mean_score, crate::Score::ONE);
        assert_eq!(a.per_episode.len(), 20);
        assert!(a.is_consistent());
    }
}

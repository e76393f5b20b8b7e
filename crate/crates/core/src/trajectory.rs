//! Concrete trajectories. Observations are not stored; they are regenerated
//! on demand by replaying the actions against the deterministic engine.

use serde::{Deserialize, Serialize};

use crate::engine::{generate_episode, gold_actions, Action, EngineError, EpisodeSpec, GameState, Observation};
use crate::score::Score;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ended {
    /// The last step earned a partial reward.
    Reward,
    /// The last step brought the score to 1.
    Win,
    Fail,
    Horizon,
}

/// One variation's action sequence. `prefix` holds previously accepted
/// actions that were replayed before this segment began.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub spec: EpisodeSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prefix: Vec<Action>,
    pub actions: Vec<Action>,
    pub rewards: Vec<Score>,
    pub prefix_score: Score,
    pub final_score: Score,
    pub ended: Ended,
}

/// A replayed step: the observation the agent saw before acting.
#[derive(Debug, Clone)]
pub struct ReplayStep {
    pub before: Observation,
    pub action: Action,
    pub reward: Score,
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("{spec}: step {step} ({action}) is invalid: {source}")]
    Invalid { spec: String, step: usize, action: String, source: EngineError },
    #[error("{spec}: replay reached score {actual}, recorded {recorded}")]
    Diverged { spec: String, actual: Score, recorded: Score },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Replays `actions` from `state`, returning the end state and per-step data.
pub fn replay_from(
    state: &GameState,
    actions: &[Action],
) -> Result<(GameState, Vec<ReplayStep>), ReplayError> {
    let mut s = state.clone();
    let mut steps = Vec::with_capacity(actions.len());
    for (k, a) in actions.iter().enumerate() {
        let before = s.observation();
        let (next, obs) = s.step(a).map_err(|source| ReplayError::Invalid {
            spec: s.spec().tag(),
            step: k,
            action: a.to_string(),
            source,
        })?;
        steps.push(ReplayStep { before, action: a.clone(), reward: obs.reward_delta });
        s = next;
    }
    Ok((s, steps))
}

impl Trajectory {
    /// Builds a trajectory by playing `prefix` then `actions` on a fresh episode.
    pub fn record(spec: &EpisodeSpec, prefix: &[Action], actions: &[Action]) -> Result<Trajectory, ReplayError> {
        let s0 = generate_episode(spec)?;
        let (mid, _) = replay_from(&s0, prefix)?;
        let (end, steps) = replay_from(&mid, actions)?;
        let ended = if end.is_failed() {
            Ended::Fail
        } else if end.is_won() {
            Ended::Win
        } else if steps.last().is_some_and(|s| s.reward.is_positive()) {
            Ended::Reward
        } else {
            Ended::Horizon
        };
        Ok(Trajectory {
            spec: *spec,
            prefix: prefix.to_vec(),
            actions: actions.to_vec(),
            rewards: steps.iter().map(|s| s.reward).collect(),
            prefix_score: mid.score(),
            final_score: end.score(),
            ended,
        })
    }

    /// The gold agent's winning trajectory.
    pub fn gold(spec: &EpisodeSpec) -> Result<Trajectory, ReplayError> {
        let s0 = generate_episode(spec)?;
        Trajectory::record(spec, &[], &gold_actions(&s0))
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Prefix followed by this segment's actions.
    pub fn full_actions(&self) -> Vec<Action> {
        self.prefix.iter().chain(&self.actions).cloned().collect()
    }

    /// Replays prefix + actions from a fresh episode, checking the recorded
    /// scores, and returns the steps of the whole path.
    pub fn replay(&self) -> Result<Vec<ReplayStep>, ReplayError> {
        let s0 = generate_episode(&self.spec)?;
        let (end, steps) = replay_from(&s0, &self.full_actions())?;
        if end.score() != self.final_score {
            return Err(ReplayError::Diverged {
                spec: self.spec.tag(),
                actual: end.score(),
                recorded: self.final_score,
            });
        }
        Ok(steps)
    }

    /// Canonical ordering key: variation, then segment length, then text.
    pub fn sort_key(&self) -> (EpisodeSpec, usize, Vec<String>) {
        (self.spec, self.actions.len(), self.actions.iter().map(Action::to_string).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Game, Split};

    #[test]
    fn gold_trajectories_win_and_replay() {
        for game in Game::ALL {
            let spec = EpisodeSpec::new(game, Split::Train, 4, 1).unwrap();
            let t = Trajectory::gold(&spec).unwrap();
            assert_eq!(t.ended, Ended::Win);
            assert_eq!(t.final_score, Score::ONE);
            assert_eq!(t.rewards.iter().copied().sum::<Score>(), Score::ONE);
            assert_eq!(t.replay().unwrap().len(), t.len());
        }
    }

    #[test]
    fn serde_round_trip() {
        let spec = EpisodeSpec::new(Game::Twc, Split::Dev, 9, 3).unwrap();
        let t = Trajectory::gold(&spec).unwrap();
        let line = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<Trajectory>(&line).unwrap(), t);
    }
}

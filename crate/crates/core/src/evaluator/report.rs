use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::Action;
use crate::score::Score;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub score: Score,
    pub steps: u32,
    pub actions: Vec<Action>,
    /// The evaluator answered with an invalid or malformed action.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub aborted: bool,
}

/// Generality measurement of one training selection on one split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub group_key: String,
    /// `dev`, `test`, `train-flipped`, ...
    pub split_evaluated: String,
    pub mean_score: Score,
    pub mean_steps: Score,
    pub per_episode: BTreeMap<u32, EpisodeResult>,
    pub evaluator_id: String,
}

impl EvalReport {
    pub fn from_episodes(
        group_key: impl Into<String>,
        split_evaluated: impl Into<String>,
        evaluator_id: impl Into<String>,
        per_episode: BTreeMap<u32, EpisodeResult>,
    ) -> EvalReport {
        EvalReport {
            group_key: group_key.into(),
            split_evaluated: split_evaluated.into(),
            mean_score: Score::mean(per_episode.values().map(|e| e.score)),
            mean_steps: Score::mean(per_episode.values().map(|e| Score::from_integer(e.steps as i64))),
            per_episode,
            evaluator_id: evaluator_id.into(),
        }
    }

    /// Means recomputed from the per-episode table match the stored ones.
    pub fn is_consistent(&self) -> bool {
        let again = EvalReport::from_episodes(
            self.group_key.clone(),
            self.split_evaluated.clone(),
            self.evaluator_id.clone(),
            self.per_episode.clone(),
        );
        again.mean_score == self.mean_score && again.mean_steps == self.mean_steps
    }

    pub fn episode_scores(&self) -> Vec<Score> {
        self.per_episode.values().map(|e| e.score).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn means_are_exact() {
        let mut eps = BTreeMap::new();
        for (v, (n, d), steps) in [(0, (1, 1), 4), (1, (1, 2), 50), (2, (0, 1), 7)] {
            eps.insert(v, EpisodeResult { score: Score::new(n, d), steps, actions: vec![], aborted: false });
        }
        let r = EvalReport::from_episodes("k", "dev", "x", eps);
        assert_eq!(r.mean_score, Score::HALF);
        assert_eq!(r.mean_steps, Score::new(61, 3));
        assert!(r.is_consistent());
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<EvalReport>(&json).unwrap(), r);
    }
}

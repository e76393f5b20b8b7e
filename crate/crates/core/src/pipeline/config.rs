use serde::{Deserialize, Serialize};

use crate::crawler::CrawlConfig;
use crate::engine::{Game, VARIATIONS_PER_SPLIT};
use crate::evaluator::EvaluatorBinding;
use crate::score::Score;

/// How a merged pair decides which constituent supplies a variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MergeChoice {
    /// Per episode: the constituent that scored higher on that episode,
    /// ties to the constituent with the higher mean.
    #[default]
    PerEpisode,
    /// The constituent with the higher mean everywhere both apply.
    Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub game: Game,
    pub master_seed: u64,
    /// Groups evaluated per segment, shortest first.
    pub k: usize,
    /// Acceptance threshold on the relative development score.
    pub threshold: Score,
    pub crawl: CrawlConfig,
    pub evaluator: EvaluatorBinding,
    /// Number of top groups combined pairwise when no single group passes.
    pub merge_top: usize,
    /// Choose merged trajectories by scores measured with train and dev
    /// swapped.
    pub flip_on_merge: bool,
    pub merge_choice: MergeChoice,
    pub train_variations: u32,
    pub dev_variations: u32,
    /// Safety bound on the number of reward segments.
    pub max_segments: usize,
}

impl PipelineConfig {
    /// Per-game defaults: thresholds 0.95 / 0.4 / 0.5 for TWC / Arithmetic /
    /// Sorting, K = 10, top-5 merging with flipped splits.
    pub fn for_game(game: Game) -> PipelineConfig {
        let (threshold, horizon) = match game {
            Game::Twc => (Score::new(19, 20), 6),
            Game::Arithmetic => (Score::new(2, 5), 4),
            Game::Sorting => (Score::new(1, 2), 4),
        };
        PipelineConfig {
            game,
            master_seed: 0,
            k: 10,
            threshold,
            crawl: CrawlConfig { horizon, ..CrawlConfig::default() },
            evaluator: EvaluatorBinding::default(),
            merge_top: 5,
            flip_on_merge: true,
            merge_choice: MergeChoice::PerEpisode,
            train_variations: VARIATIONS_PER_SPLIT,
            dev_variations: VARIATIONS_PER_SPLIT,
            max_segments: 12,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        if !(self.threshold > Score::ZERO && self.threshold <= Score::ONE) {
            return Err(format!("threshold {} must lie in (0, 1]", self.threshold));
        }
        if self.merge_top > self.k {
            return Err(format!("merge_top ({}) may not exceed k ({})", self.merge_top, self.k));
        }
        for (name, n) in [("train_variations", self.train_variations), ("dev_variations", self.dev_variations)] {
            if n == 0 || n > VARIATIONS_PER_SPLIT {
                return Err(format!("{name} must be in 1..={VARIATIONS_PER_SPLIT}"));
            }
        }
        if self.max_segments == 0 {
            return Err("max_segments must be at least 1".into());
        }
        self.crawl.validate().map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for game in Game::ALL {
            PipelineConfig::for_game(game).validate().unwrap();
        }
        let mut c = PipelineConfig::for_game(Game::Twc);
        c.merge_top = 11;
        assert!(c.validate().is_err());
        c.merge_top = 5;
        c.threshold = Score::ZERO;
        assert!(c.validate().is_err());
    }
}

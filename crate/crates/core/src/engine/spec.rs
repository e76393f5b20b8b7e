use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EngineError;

pub const VARIATIONS_PER_SPLIT: u32 = 100;
pub const STEP_LIMIT: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Game {
    Arithmetic,
    Sorting,
    Twc,
}

impl Game {
    pub const ALL: [Game; 3] = [Game::Arithmetic, Game::Sorting, Game::Twc];

    pub fn as_str(self) -> &'static str {
        match self {
            Game::Arithmetic => "arithmetic",
            Game::Sorting => "sorting",
            Game::Twc => "twc",
        }
    }
}

impl fmt::Display for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Game {
    type Err = EngineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "arithmetic" => Ok(Game::Arithmetic),
            "sorting" => Ok(Game::Sorting),
            "twc" => Ok(Game::Twc),
            _ => Err(EngineError::UnknownGame(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    fn index(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Dev => 1,
            Split::Test => 2,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = EngineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            _ => Err(EngineError::UnknownSplit(s.to_string())),
        }
    }
}

/// Identifies one parametric game variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub game: Game,
    pub split: Split,
    pub variation: u32,
    pub master_seed: u64,
    pub seed: u64,
}

impl EpisodeSpec {
    pub fn new(game: Game, split: Split, variation: u32, master_seed: u64) -> Result<Self, EngineError> {
        if variation >= VARIATIONS_PER_SPLIT {
            return Err(EngineError::InvalidVariation(variation));
        }
        Ok(EpisodeSpec {
            game,
            split,
            variation,
            master_seed,
            seed: derive_seed(game, split, variation, master_seed),
        })
    }

    /// All variations `0..count` of a split, in index order.
    pub fn range(game: Game, split: Split, count: u32, master_seed: u64) -> Result<Vec<Self>, EngineError> {
        (0..count).map(|v| EpisodeSpec::new(game, split, v, master_seed)).collect()
    }

    /// Short tag such as `dev-17`, used as an episode id in protocols and logs.
    pub fn tag(&self) -> String {
        format!("{}-{}", self.split, self.variation)
    }

    pub(crate) fn validate(&self) -> Result<(), EngineError> {
        if self.variation >= VARIATIONS_PER_SPLIT {
            return Err(EngineError::InvalidVariation(self.variation));
        }
        if self.seed != derive_seed(self.game, self.split, self.variation, self.master_seed) {
            return Err(EngineError::SeedMismatch);
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(game: Game, split: Split, variation: u32, master_seed: u64) -> u64 {
    let game_ix = match game {
        Game::Arithmetic => 1u64,
        Game::Sorting => 2,
        Game::Twc => 3,
    };
    let mut h = splitmix64(master_seed);
    h = splitmix64(h ^ game_ix);
    h = splitmix64(h ^ (split.index() << 32));
    splitmix64(h ^ variation as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_across_coordinates() {
        let a = EpisodeSpec::new(Game::Twc, Split::Train, 3, 0).unwrap();
        let b = EpisodeSpec::new(Game::Twc, Split::Dev, 3, 0).unwrap();
        let c = EpisodeSpec::new(Game::Twc, Split::Train, 4, 0).unwrap();
        let d = EpisodeSpec::new(Game::Twc, Split::Train, 3, 1).unwrap();
        assert_ne!(a.seed, b.seed);
        assert_ne!(a.seed, c.seed);
        assert_ne!(a.seed, d.seed);
        assert_eq!(a, EpisodeSpec::new(Game::Twc, Split::Train, 3, 0).unwrap());
    }

    #[test]
    fn variation_out_of_range_is_rejected() {
        assert!(matches!(
            EpisodeSpec::new(Game::Sorting, Split::Test, 100, 0),
            Err(EngineError::InvalidVariation(100))
        ));
    }
}

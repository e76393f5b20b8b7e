//! Deterministic simulators for the Arithmetic, Sorting and TWC games.

mod action;
mod generate;
mod gold;
mod problem;
mod quantity;
mod spec;
mod state;
mod text;
mod vocab;

pub use action::{Action, ActionError, Verb};
pub use generate::{generate_episode, generate_episode_with, GenerationOptions, ANSWER_BOX, MATH_PROBLEM};
pub use gold::gold_actions;
pub use problem::{ArithmeticProblem, Operator};
pub use quantity::{normalize_quantity, Quantity, Unit};
pub use spec::{derive_seed, EpisodeSpec, Game, Split, STEP_LIMIT, VARIATIONS_PER_SPLIT};
pub use state::{
    CompactAction, Episode, GameObject, GameState, ObjectDef, ObjectKind, ObjectLocation, Observation, Payload,
    MAX_OBJECTS,
};
pub use vocab::{split_of, Lexicon, Place, PlaceKind, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("unknown game {0:?} (expected arithmetic, sorting or twc)")]
    UnknownGame(String),
    #[error("unknown split {0:?} (expected train, dev or test)")]
    UnknownSplit(String),
    #[error("variation index {0} is outside 0..{VARIATIONS_PER_SPLIT}")]
    InvalidVariation(u32),
    #[error("episode seed does not match its (game, split, variation, master seed)")]
    SeedMismatch,
    #[error("episode has {0} objects, more than the supported {MAX_OBJECTS}")]
    TooManyObjects(usize),
    #[error("episode generation failed: {0}")]
    Generation(String),
    #[error("action {0:?} is not valid in the current state")]
    InvalidAction(String),
    #[error("the episode is already over")]
    EpisodeOver,
    #[error(transparent)]
    Parse(#[from] ActionError),
}

impl Episode {
    /// Nouns that identify the task-relevant objects of this episode: the
    /// produce of Arithmetic items, the materials of Sorting items and the
    /// TWC target item.
    pub fn task_critical_nouns(&self) -> Vec<String> {
        self.objects
            .iter()
            .filter(|o| o.kind == ObjectKind::Item)
            .map(|o| match o.quantity.map(|q| q.unit) {
                Some(Unit::Count) => o.name.split_once(' ').map_or(&*o.name, |(_, n)| n).to_string(),
                Some(Unit::Mg | Unit::G) => o.name.split_once(" of ").map_or(&*o.name, |(_, n)| n).to_string(),
                None => o.name.clone(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests;

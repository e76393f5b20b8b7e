//! Symbolic stand-in for a behavior-cloned model: per-slot binding rules
//! induced from prompt records, replayed with re-binding on new episodes.

mod features;
mod learner;
mod records;

pub use features::{episode_fingerprint, held_names, BindContext, Feature, FeatureFamily, REGISTRY};
pub use learner::{induce, EpisodeRunner, InducedPolicy, LearnError, LearnerConfig, Policy};
pub use records::{emit_training_records, episodes, AgentView, CorruptGroup, PromptRecord};

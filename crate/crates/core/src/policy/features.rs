//! Binding features: decidable predicates over (episode history, candidate
//! argument) used to re-bind macro variables on unseen episodes.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::records::AgentView;
use crate::engine::{normalize_quantity, Action, ArithmeticProblem, Lexicon, Quantity, Verb};
use crate::hash::fnv1a;
use crate::macros::Slot;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Feature {
    /// Quantity equals the answer of an `<op> A and B` problem seen earlier.
    ReadAnswerQuantity,
    /// Smallest normalized quantity among items not yet placed.
    SmallestRemainingQuantity,
    /// The usual location (per lexicon) of the object bound to `slot`.
    CanonicalLocationOf { slot: u8 },
    /// Named by an `in the <c>` phrase of the task description.
    AnswerBox,
    /// Has been readable at some step of the episode.
    ReadableObject,
    /// Can currently be opened.
    ClosedContainer,
    /// Currently in the inventory.
    HeldItem,
    /// Mentioned in the task description.
    InTaskDescription,
    /// The only candidate for the slot.
    SoleCandidate,
    /// Memorized binding, only for the training episode it was seen in.
    ExactName { episode: u64, name: String },
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::CanonicalLocationOf { slot } => write!(f, "CanonicalLocationOf({})", Slot(*slot)),
            Feature::ExactName { episode, name } => write!(f, "ExactName({name:?}@{episode:016x})"),
            other => write!(f, "{}", other.family()),
        }
    }
}

/// Everything a feature may look at when judging a candidate.
pub struct BindContext<'a> {
    /// Views of the episode so far; the last one is current.
    pub history: &'a [AgentView],
    /// Slot bindings established so far.
    pub bindings: &'a [Option<String>],
    pub fingerprint: u64,
    pub lexicon: &'a Lexicon,
}

impl BindContext<'_> {
    fn current(&self) -> &AgentView {
        self.history.last().expect("non-empty history")
    }
}

/// Stable identity of an episode, taken from its first view.
pub fn episode_fingerprint(first: &AgentView) -> u64 {
    let mut bytes = Vec::new();
    for part in [&first.task_description, &first.obs, &first.inventory, &first.look] {
        bytes.extend_from_slice(part.as_bytes());
        bytes.push(0);
    }
    fnv1a(&bytes)
}

/// Object names listed in an inventory text, one per indented line.
pub fn held_names(inventory: &str) -> Vec<&str> {
    inventory
        .lines()
        .skip(1)
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.strip_prefix("a ").or_else(|| l.strip_prefix("an ")).unwrap_or(l))
        .collect()
}

/// `phrase` occurs in `text` delimited by non-alphanumeric characters.
fn contains_phrase(text: &str, phrase: &str) -> bool {
    if phrase.is_empty() {
        return false;
    }
    text.match_indices(phrase).any(|(i, _)| {
        let before = text[..i].chars().next_back();
        let after = text[i + phrase.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}

fn answer_in_history(history: &[AgentView]) -> Option<u32> {
    history.iter().rev().find_map(|v| ArithmeticProblem::find_in(&v.obs)).and_then(|p| p.answer())
}

impl Feature {
    /// Name of the feature family, as listed in the registry.
    pub fn family(&self) -> &'static str {
        match self {
            Feature::ReadAnswerQuantity => "ReadAnswerQuantity",
            Feature::SmallestRemainingQuantity => "SmallestRemainingQuantity",
            Feature::CanonicalLocationOf { .. } => "CanonicalLocationOf",
            Feature::AnswerBox => "AnswerBox",
            Feature::ReadableObject => "ReadableObject",
            Feature::ClosedContainer => "ClosedContainer",
            Feature::HeldItem => "HeldItem",
            Feature::InTaskDescription => "InTaskDescription",
            Feature::SoleCandidate => "SoleCandidate",
            Feature::ExactName { .. } => "ExactName",
        }
    }

    /// Specificity rank; lower is more specific.
    pub fn rank(&self) -> usize {
        REGISTRY.iter().position(|f| f.name == self.family()).unwrap_or(REGISTRY.len())
    }

    /// Indices of the candidates this feature selects, or `None` when the
    /// feature cannot be evaluated in this context.
    pub fn select(&self, ctx: &BindContext<'_>, candidates: &[&str]) -> Option<Vec<usize>> {
        let pick = |pred: &dyn Fn(&str) -> bool| -> Vec<usize> {
            candidates.iter().enumerate().filter(|(_, c)| pred(c)).map(|(i, _)| i).collect()
        };
        let view = ctx.current();
        Some(match self {
            Feature::ReadAnswerQuantity => {
                let answer = answer_in_history(ctx.history)?;
                pick(&|c| Quantity::parse_from_name(c) == Some(Quantity::count(answer)))
            }
            Feature::SmallestRemainingQuantity => {
                let mut pool: Vec<&str> = view
                    .valid_actions
                    .iter()
                    .filter(|a| a.verb == Verb::Take)
                    .filter_map(|a| a.arg1.as_deref())
                    .collect();
                pool.extend(held_names(&view.inventory));
                let min = pool
                    .iter()
                    .filter_map(|n| Quantity::parse_from_name(n))
                    .map(normalize_quantity)
                    .min()?;
                pick(&|c| {
                    pool.contains(&c) && Quantity::parse_from_name(c).map(normalize_quantity) == Some(min)
                })
            }
            Feature::CanonicalLocationOf { slot } => {
                let bound = ctx.bindings.get(*slot as usize)?.as_deref()?;
                let loc = ctx.lexicon.location_of(bound)?;
                pick(&|c| c == loc)
            }
            Feature::AnswerBox => pick(&|c| contains_phrase(&view.task_description, &format!("in the {c}"))),
            Feature::ReadableObject => pick(&|c| {
                let read = Action::read(c);
                ctx.history.iter().any(|v| v.valid_actions.contains(&read))
            }),
            Feature::ClosedContainer => pick(&|c| view.valid_actions.contains(&Action::open(c))),
            Feature::HeldItem => {
                let held = held_names(&view.inventory);
                pick(&|c| held.contains(&c))
            }
            Feature::InTaskDescription => pick(&|c| contains_phrase(&view.task_description, c)),
            Feature::SoleCandidate => {
                if candidates.len() == 1 {
                    vec![0]
                } else {
                    Vec::new()
                }
            }
            Feature::ExactName { episode, name } => {
                if *episode == ctx.fingerprint {
                    pick(&|c| c == name)
                } else {
                    Vec::new()
                }
            }
        })
    }
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

/// A feature family. `instantiate` lists the concrete features to try for a
/// slot, given the slot being bound and the macro's slot count.
pub struct FeatureFamily {
    pub name: &'static str,
    pub description: &'static str,
    pub instantiate: fn(slot: Slot, slot_count: usize) -> Vec<Feature>,
}

/// All generalizing feature families in specificity order. `ExactName` is
/// not listed: its instances are memorized from training data and always
/// rank last.
pub static REGISTRY: &[FeatureFamily] = &[
    FeatureFamily {
        name: "ReadAnswerQuantity",
        description: "quantity equals the answer of a math problem read earlier",
        instantiate: |_, _| vec![Feature::ReadAnswerQuantity],
    },
    FeatureFamily {
        name: "SmallestRemainingQuantity",
        description: "smallest normalized quantity among unplaced items",
        instantiate: |_, _| vec![Feature::SmallestRemainingQuantity],
    },
    FeatureFamily {
        name: "CanonicalLocationOf",
        description: "usual location of the object bound to another slot",
        instantiate: |slot, n| {
            (0..n as u8).filter(|&s| s != slot.0).map(|s| Feature::CanonicalLocationOf { slot: s }).collect()
        },
    },
    FeatureFamily {
        name: "AnswerBox",
        description: "the receptacle named by the task description",
        instantiate: |_, _| vec![Feature::AnswerBox],
    },
    FeatureFamily {
        name: "ReadableObject",
        description: "an object that could be read",
        instantiate: |_, _| vec![Feature::ReadableObject],
    },
    FeatureFamily {
        name: "ClosedContainer",
        description: "a container that can be opened now",
        instantiate: |_, _| vec![Feature::ClosedContainer],
    },
    FeatureFamily {
        name: "HeldItem",
        description: "an object in the inventory",
        instantiate: |_, _| vec![Feature::HeldItem],
    },
    FeatureFamily {
        name: "InTaskDescription",
        description: "an object mentioned by the task description",
        instantiate: |_, _| vec![Feature::InTaskDescription],
    },
    FeatureFamily {
        name: "SoleCandidate",
        description: "the only admissible argument",
        instantiate: |_, _| vec![Feature::SoleCandidate],
    },
    FeatureFamily {
        name: "ExactName",
        description: "the exact name bound in one training episode",
        instantiate: |_, _| Vec::new(),
    },
];

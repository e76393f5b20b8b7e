use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::MergeChoice;
use crate::engine::Split;
use crate::macros::PathGroup;
use crate::policy::{emit_training_records, CorruptGroup, PromptRecord};
use crate::score::Score;
use crate::trajectory::Trajectory;

/// One training variation's trajectory and the constituent group it came
/// from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionMember {
    pub variation: u32,
    /// Index into [`Selection::constituents`].
    pub constituent: usize,
    pub trajectory: Trajectory,
}

/// A training set: one trajectory per covered variation, drawn from one
/// group or, for a merged selection, from exactly two.
///
/// Members are ordered by constituent, then variation; that order is the
/// order of the emitted prompt records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub constituents: Vec<String>,
    pub members: Vec<SelectionMember>,
}

/// A selection assembled from two groups.
pub type MergedSelection = Selection;

impl Selection {
    /// The group's shortest trajectory for each covered variation.
    pub fn from_group(group: &PathGroup) -> Selection {
        let members = group
            .training_selection()
            .into_iter()
            .map(|t| SelectionMember { variation: t.spec.variation, constituent: 0, trajectory: t.clone() })
            .collect();
        Selection { constituents: vec![group.key()], members }
    }

    pub fn key(&self) -> String {
        self.constituents.join(" + ")
    }

    pub fn is_merged(&self) -> bool {
        self.constituents.len() > 1
    }

    pub fn trajectories(&self) -> impl Iterator<Item = &Trajectory> {
        self.members.iter().map(|m| &m.trajectory)
    }

    pub fn variations(&self) -> BTreeSet<u32> {
        self.members.iter().map(|m| m.variation).collect()
    }

    /// Mean final score of the selected trajectories on their own training
    /// variations.
    pub fn train_mean(&self) -> Score {
        Score::mean(self.trajectories().map(|t| t.final_score))
    }

    pub fn records(&self) -> Result<Vec<PromptRecord>, CorruptGroup> {
        emit_training_records(self.trajectories())
    }

    pub fn source_splits(&self) -> BTreeSet<Split> {
        self.trajectories().map(|t| t.spec.split).collect()
    }

    /// Variation -> key of the constituent that supplied its trajectory.
    pub fn provenance(&self) -> BTreeMap<u32, String> {
        self.members.iter().map(|m| (m.variation, self.constituents[m.constituent].clone())).collect()
    }
}

/// One side of a merge: a group's selection plus the per-variation scores
/// used to choose between the two sides.
#[derive(Debug, Clone)]
pub struct MergeInput<'a> {
    pub selection: &'a Selection,
    /// Training variation -> score of this constituent on that episode.
    pub per_variation: BTreeMap<u32, Score>,
    /// The constituent's overall development mean.
    pub mean: Score,
}

/// Builds the merged training set of `a` and `b`. Each training variation
/// covered by either side gets exactly one trajectory. `a` is the higher
/// ranked side and wins every remaining tie.
pub fn merge_pair(a: &MergeInput<'_>, b: &MergeInput<'_>, choice: MergeChoice) -> MergedSelection {
    let by_var = |s: &Selection| -> BTreeMap<u32, Trajectory> {
        s.members.iter().map(|m| (m.variation, m.trajectory.clone())).collect()
    };
    let (ta, tb) = (by_var(a.selection), by_var(b.selection));
    let global_a = a.mean >= b.mean;
    let mut picked: [Vec<SelectionMember>; 2] = [Vec::new(), Vec::new()];
    let all: BTreeSet<u32> = ta.keys().chain(tb.keys()).copied().collect();
    for v in all {
        let take_a = match (ta.contains_key(&v), tb.contains_key(&v)) {
            (true, false) => true,
            (false, true) => false,
            _ => match choice {
                MergeChoice::Aggregate => global_a,
                MergeChoice::PerEpisode => {
                    let sa = a.per_variation.get(&v).copied().unwrap_or(Score::ZERO);
                    let sb = b.per_variation.get(&v).copied().unwrap_or(Score::ZERO);
                    if sa == sb {
                        global_a
                    } else {
                        sa > sb
                    }
                }
            },
        };
        let (side, source) = if take_a { (0, &ta) } else { (1, &tb) };
        picked[side].push(SelectionMember { variation: v, constituent: side, trajectory: source[&v].clone() });
    }
    let [first, second] = picked;
    Selection {
        constituents: vec![a.selection.key(), b.selection.key()],
        members: first.into_iter().chain(second).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{EpisodeSpec, Game};

    fn sel(key: &str, vars: &[u32]) -> Selection {
        let members = vars
            .iter()
            .map(|&v| {
                let spec = EpisodeSpec::new(Game::Twc, Split::Train, v, 0).unwrap();
                SelectionMember { variation: v, constituent: 0, trajectory: Trajectory::gold(&spec).unwrap() }
            })
            .collect();
        Selection { constituents: vec![key.into()], members }
    }

    fn input<'a>(s: &'a Selection, scores: &[(u32, Score)], mean: Score) -> MergeInput<'a> {
        MergeInput { selection: s, per_variation: scores.iter().copied().collect(), mean }
    }

    #[test]
    fn each_variation_gets_one_trajectory() {
        let a = sel("A", &[0, 1, 2]);
        let b = sel("B", &[2, 3]);
        let ia = input(&a, &[(2, Score::HALF)], Score::HALF);
        let ib = input(&b, &[(2, Score::ONE)], Score::ZERO);
        let m = merge_pair(&ia, &ib, MergeChoice::PerEpisode);
        assert_eq!(m.key(), "A + B");
        let prov = m.provenance();
        assert_eq!(prov.len(), 4);
        assert_eq!(prov[&2], "B");
        assert_eq!(prov[&0], "A");
        // Aggregate mode hands the shared variation to the higher mean.
        let m = merge_pair(&ia, &ib, MergeChoice::Aggregate);
        assert_eq!(m.provenance()[&2], "A");
        // Records follow constituent order, then variation.
        let order: Vec<(usize, u32)> = m.members.iter().map(|x| (x.constituent, x.variation)).collect();
        assert_eq!(order, vec![(0, 0), (0, 1), (0, 2), (1, 3)]);
    }

    #[test]
    fn ties_go_to_the_globally_better_side() {
        let a = sel("A", &[5]);
        let b = sel("B", &[5]);
        let ia = input(&a, &[(5, Score::ONE)], Score::HALF);
        let ib = input(&b, &[(5, Score::ONE)], Score::ONE);
        assert_eq!(merge_pair(&ia, &ib, MergeChoice::PerEpisode).provenance()[&5], "B");
    }

    #[test]
    fn self_merge_is_the_identity_on_members() {
        let a = sel("A", &[0, 1]);
        let ia = input(&a, &[], Score::HALF);
        let m = merge_pair(&ia, &ia, MergeChoice::PerEpisode);
        assert_eq!(m.records().unwrap(), a.records().unwrap());
    }
}

//! Parameterized macro-action sequences and path grouping.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::engine::{Action, Verb};
use crate::trajectory::Trajectory;

/// Variable id rendered as X, Y, Z, then A, B, C, ... W, then V26, V27, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot(pub u8);

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0..=2 => write!(f, "{}", (b'X' + self.0) as char),
            3..=25 => write!(f, "{}", (b'A' + self.0 - 3) as char),
            n => write!(f, "V{n}"),
        }
    }
}

impl FromStr for Slot {
    type Err = MacroParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MacroParseError(format!("bad variable {s:?}"));
        match s.as_bytes() {
            [c @ b'X'..=b'Z'] => Ok(Slot(c - b'X')),
            [c @ b'A'..=b'W'] => Ok(Slot(c - b'A' + 3)),
            [b'V', rest @ ..] => {
                let n: u8 = std::str::from_utf8(rest).map_err(|_| bad())?.parse().map_err(|_| bad())?;
                if n >= 26 {
                    Ok(Slot(n))
                } else {
                    Err(bad())
                }
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse macro sequence: {0}")]
pub struct MacroParseError(String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MacroAction {
    pub verb: Verb,
    pub slots: Vec<Slot>,
}

impl fmt::Display for MacroAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.verb.macro_token())?;
        if !self.slots.is_empty() {
            let names: Vec<String> = self.slots.iter().map(Slot::to_string).collect();
            write!(f, "({})", names.join(","))?;
        }
        Ok(())
    }
}

/// A variabilized action sequence such as `Take(X) Put(X,Y)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MacroSequence {
    pub actions: Vec<MacroAction>,
}

impl MacroSequence {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Canonical key, e.g. `Take(X) Read(X) Look-Around`.
    pub fn key(&self) -> String {
        self.to_string()
    }

    pub fn slot_count(&self) -> usize {
        self.actions.iter().flat_map(|a| &a.slots).map(|s| s.0 as usize + 1).max().unwrap_or(0)
    }

    /// Binds the macro against a concrete action sequence of the same length.
    /// Returns slot bindings when every step matches and distinct slots map
    /// to distinct names.
    pub fn unify(&self, actions: &[Action]) -> Option<Vec<String>> {
        if actions.len() > self.actions.len() {
            return None;
        }
        let mut bindings: Vec<Option<String>> = vec![None; self.slot_count()];
        for (m, a) in self.actions.iter().zip(actions) {
            if m.verb != a.verb {
                return None;
            }
            for (slot, arg) in m.slots.iter().zip(a.args()) {
                match &bindings[slot.0 as usize] {
                    Some(bound) if bound != arg => return None,
                    Some(_) => {}
                    None => {
                        if bindings.iter().flatten().any(|b| b == arg) {
                            return None;
                        }
                        bindings[slot.0 as usize] = Some(arg.to_string());
                    }
                }
            }
        }
        Some(bindings.into_iter().map(Option::unwrap_or_default).collect())
    }
}

impl fmt::Display for MacroSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.actions.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl FromStr for MacroSequence {
    type Err = MacroParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut actions = Vec::new();
        for token in s.split_whitespace() {
            let (verb_tok, slots) = match token.split_once('(') {
                Some((v, rest)) => {
                    let inner = rest
                        .strip_suffix(')')
                        .ok_or_else(|| MacroParseError(format!("unclosed {token:?}")))?;
                    let slots = inner.split(',').map(Slot::from_str).collect::<Result<Vec<_>, _>>()?;
                    (v, slots)
                }
                None => (token, Vec::new()),
            };
            let verb = Verb::from_macro_token(verb_tok)
                .ok_or_else(|| MacroParseError(format!("unknown verb {verb_tok:?}")))?;
            if verb.arity() != slots.len() {
                return Err(MacroParseError(format!("{token:?} has the wrong number of slots")));
            }
            actions.push(MacroAction { verb, slots });
        }
        let seq = MacroSequence { actions };
        // Only dense, first-appearance-ordered variables are canonical.
        let mut next = 0u8;
        for slot in seq.actions.iter().flat_map(|a| &a.slots) {
            if slot.0 == next {
                next += 1;
            } else if slot.0 > next {
                return Err(MacroParseError(format!("variable {slot} used before {}", Slot(next))));
            }
        }
        Ok(seq)
    }
}

impl Serialize for MacroSequence {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.key())
    }
}

impl<'de> Deserialize<'de> for MacroSequence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Maps each distinct argument string to a fresh variable at its first
/// occurrence. Returns the macro and the names bound to each slot.
pub fn variabilize_actions(actions: &[Action]) -> (MacroSequence, Vec<String>) {
    let mut names: Vec<String> = Vec::new();
    let mut out = Vec::with_capacity(actions.len());
    for a in actions {
        let slots = a
            .args()
            .map(|arg| match names.iter().position(|n| n == arg) {
                Some(i) => Slot(i as u8),
                None => {
                    names.push(arg.to_string());
                    Slot((names.len() - 1) as u8)
                }
            })
            .collect();
        out.push(MacroAction { verb: a.verb, slots });
    }
    (MacroSequence { actions: out }, names)
}

/// Macro of a trajectory's whole path, prefix included.
pub fn variabilize(t: &Trajectory) -> MacroSequence {
    variabilize_actions(&t.full_actions()).0
}

// ---------------------------------------------------------------------------
// Groups
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathGroup {
    #[serde(rename = "macro")]
    pub macro_seq: MacroSequence,
    /// Variation index -> member trajectories in canonical order.
    pub members: BTreeMap<u32, Vec<Trajectory>>,
    pub segment_index: usize,
}

impl PathGroup {
    pub fn key(&self) -> String {
        self.macro_seq.key()
    }

    pub fn coverage(&self) -> usize {
        self.members.len()
    }

    /// One trajectory per covered variation: the shortest, ties broken by
    /// action text. Ordered by variation.
    pub fn training_selection(&self) -> Vec<&Trajectory> {
        self.members
            .values()
            .filter_map(|ts| ts.iter().min_by_key(|t| t.sort_key()))
            .collect()
    }
}

/// Partitions trajectories by macro key. Groups are ordered by macro length,
/// then coverage (descending), then key.
pub fn group_paths(trajectories: Vec<Trajectory>, segment_index: usize) -> Vec<PathGroup> {
    let mut by_key: HashMap<MacroSequence, BTreeMap<u32, Vec<Trajectory>>> = HashMap::new();
    for t in trajectories {
        let m = variabilize(&t);
        by_key.entry(m).or_default().entry(t.spec.variation).or_default().push(t);
    }
    let mut groups: Vec<PathGroup> = by_key
        .into_iter()
        .map(|(macro_seq, mut members)| {
            for ts in members.values_mut() {
                ts.sort_by_cached_key(Trajectory::sort_key);
            }
            PathGroup { macro_seq, members, segment_index }
        })
        .collect();
    sort_groups(&mut groups);
    groups
}

pub fn sort_groups(groups: &mut [PathGroup]) {
    groups.sort_by_cached_key(|g| (g.macro_seq.len(), std::cmp::Reverse(g.coverage()), g.key()));
}

/// The first `k` groups in sort order.
pub fn select_k_shortest(groups: &[PathGroup], k: usize) -> Vec<&PathGroup> {
    groups.iter().take(k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acts(texts: &[&str]) -> Vec<Action> {
        texts.iter().map(|t| Action::parse(t).unwrap()).collect()
    }

    #[test]
    fn hat_and_shirt_share_a_key() {
        let a = variabilize_actions(&acts(&["take hat", "put hat on hat rack"])).0;
        let b = variabilize_actions(&acts(&["take dirty shirt", "put dirty shirt in washer"])).0;
        assert_eq!(a.key(), "Take(X) Put(X,Y)");
        assert_eq!(a, b);
    }

    #[test]
    fn nullary_verbs_are_bare_tokens() {
        let m = variabilize_actions(&acts(&["look around", "inventory"])).0;
        assert_eq!(m.key(), "Look-Around Inventory");
    }

    #[test]
    fn slot_names_continue_after_z() {
        let names: Vec<String> = (0..5).map(|i| Slot(i).to_string()).collect();
        assert_eq!(names, ["X", "Y", "Z", "A", "B"]);
        for i in 0..40 {
            assert_eq!(Slot(i).to_string().parse::<Slot>().unwrap(), Slot(i));
        }
    }

    #[test]
    fn key_parses_back() {
        for key in ["Take(X) Read(X) Look-Around Take(Y) Put(Y,Z)", "Inventory", "Take(X) Open(Y) Put(X,Y)"] {
            assert_eq!(key.parse::<MacroSequence>().unwrap().key(), key);
        }
        assert!("Take(Y)".parse::<MacroSequence>().is_err());
        assert!("Put(X)".parse::<MacroSequence>().is_err());
    }

    #[test]
    fn unify_checks_consistency_and_injectivity() {
        let m: MacroSequence = "Take(X) Put(X,Y)".parse().unwrap();
        assert_eq!(m.unify(&acts(&["take hat", "put hat in box"])), Some(vec!["hat".into(), "box".into()]));
        assert_eq!(m.unify(&acts(&["take hat"])), Some(vec!["hat".into(), String::new()]));
        assert_eq!(m.unify(&acts(&["take hat", "put cap in box"])), None);
        let m: MacroSequence = "Take(X) Take(Y)".parse().unwrap();
        assert_eq!(m.unify(&acts(&["take hat", "take hat"])), None);
    }
}

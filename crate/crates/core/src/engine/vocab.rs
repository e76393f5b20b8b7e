//! Bundled vocabularies and their deterministic split partition.
//!
//! Task-critical nouns (produce, materials, household items) are assigned to
//! exactly one split by a stable FNV-1a hash of the noun, so names never leak
//! between train, dev and test.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::spec::Split;
use crate::hash::fnv1a;

const PRODUCE: &str = include_str!("../../data/produce.txt");
const MATERIALS: &str = include_str!("../../data/materials.txt");
const LOCATIONS: &str = include_str!("../../data/locations.txt");
const HOUSEHOLD: &str = include_str!("../../data/household.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaceKind {
    Container,
    Supporter,
}

#[derive(Debug, Clone)]
pub struct Place {
    pub room: String,
    pub name: String,
    pub kind: PlaceKind,
}

#[derive(Debug)]
pub struct Vocabulary {
    pub produce: Vec<String>,
    pub materials: Vec<String>,
    pub places: Vec<Place>,
    /// Household item -> canonical location, in file order.
    pub household: Vec<(String, String)>,
}

/// The split that owns a task-critical noun.
pub fn split_of(noun: &str) -> Split {
    match fnv1a(noun.as_bytes()) % 3 {
        0 => Split::Train,
        1 => Split::Dev,
        _ => Split::Test,
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

impl Vocabulary {
    fn load() -> Vocabulary {
        let produce = data_lines(PRODUCE).map(str::to_string).collect();
        let materials = data_lines(MATERIALS).map(str::to_string).collect();
        let places = data_lines(LOCATIONS)
            .map(|l| {
                let cols: Vec<&str> = l.split('|').map(str::trim).collect();
                assert_eq!(cols.len(), 3, "bad location line {l:?}");
                let kind = match cols[2] {
                    "container" => PlaceKind::Container,
                    "supporter" => PlaceKind::Supporter,
                    other => panic!("bad location kind {other:?}"),
                };
                Place { room: cols[0].to_string(), name: cols[1].to_string(), kind }
            })
            .collect();
        let household = data_lines(HOUSEHOLD)
            .map(|l| {
                let (item, loc) = l.split_once('|').unwrap_or_else(|| panic!("bad household line {l:?}"));
                (item.trim().to_string(), loc.trim().to_string())
            })
            .collect();
        Vocabulary { produce, materials, places, household }
    }

    pub fn get() -> &'static Vocabulary {
        static VOCAB: OnceLock<Vocabulary> = OnceLock::new();
        VOCAB.get_or_init(Vocabulary::load)
    }

    pub fn produce_for(&self, split: Split) -> Vec<&str> {
        self.produce.iter().filter(|n| split_of(n) == split).map(String::as_str).collect()
    }

    pub fn materials_for(&self, split: Split) -> Vec<&str> {
        self.materials.iter().filter(|n| split_of(n) == split).map(String::as_str).collect()
    }

    pub fn household_for(&self, split: Split) -> Vec<(&str, &str)> {
        self.household
            .iter()
            .filter(|(item, _)| split_of(item) == split)
            .map(|(i, l)| (i.as_str(), l.as_str()))
            .collect()
    }

    pub fn place(&self, name: &str) -> Option<&Place> {
        self.places.iter().find(|p| p.name == name)
    }

    pub fn rooms(&self) -> Vec<&str> {
        let mut rooms: Vec<&str> = Vec::new();
        for p in &self.places {
            if !rooms.contains(&p.room.as_str()) {
                rooms.push(&p.room);
            }
        }
        rooms
    }

    pub fn places_in(&self, room: &str) -> Vec<&Place> {
        self.places.iter().filter(|p| p.room == room).collect()
    }
}

/// Object -> usual location knowledge, used by the TWC generator and by the
/// rule learner's `CanonicalLocationOf` feature.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, String>,
}

impl Lexicon {
    pub fn bundled() -> &'static Lexicon {
        static LEX: OnceLock<Lexicon> = OnceLock::new();
        LEX.get_or_init(|| Lexicon {
            entries: Vocabulary::get().household.iter().cloned().collect(),
        })
    }

    pub fn from_pairs<I, A, B>(pairs: I) -> Lexicon
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        Lexicon { entries: pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect() }
    }

    pub fn location_of(&self, item: &str) -> Option<&str> {
        self.entries.get(item).map(String::as_str)
    }

    pub fn insert(&mut self, item: impl Into<String>, location: impl Into<String>) {
        self.entries.insert(item.into(), location.into());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_never_contain_put_separators() {
        let v = Vocabulary::get();
        let all = v
            .produce
            .iter()
            .chain(&v.materials)
            .chain(v.places.iter().map(|p| &p.name))
            .chain(v.household.iter().map(|(i, _)| i));
        for name in all {
            assert!(!name.contains(" in ") && !name.contains(" on "), "{name:?}");
        }
    }

    #[test]
    fn every_split_has_enough_material() {
        let v = Vocabulary::get();
        for split in Split::ALL {
            assert!(v.produce_for(split).len() >= 8, "produce {split}");
            assert!(v.materials_for(split).len() >= 5, "materials {split}");
            let items = v.household_for(split);
            let containers = items
                .iter()
                .filter(|(_, l)| v.place(l).map(|p| p.kind) == Some(PlaceKind::Container))
                .count();
            assert!(containers >= 5 && items.len() - containers >= 5, "household {split}");
        }
    }

    #[test]
    fn every_canonical_location_is_a_known_place() {
        let v = Vocabulary::get();
        for (item, loc) in &v.household {
            let place = v.place(loc).unwrap_or_else(|| panic!("{item} -> {loc}"));
            assert!(v.places_in(&place.room).len() >= 4);
        }
    }

    #[test]
    fn every_room_has_supporters_and_a_container() {
        let v = Vocabulary::get();
        for room in v.rooms() {
            let places = v.places_in(room);
            assert!(places.iter().filter(|p| p.kind == PlaceKind::Supporter).count() >= 3, "{room}");
            assert!(places.iter().any(|p| p.kind == PlaceKind::Container), "{room}");
        }
    }
}

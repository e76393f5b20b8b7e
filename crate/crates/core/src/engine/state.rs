use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::action::{Action, Verb};
use super::problem::ArithmeticProblem;
use super::quantity::Quantity;
use super::spec::{EpisodeSpec, Game, STEP_LIMIT};
use super::text;
use super::EngineError;
use crate::hash::fnv1a;
use crate::score::Score;

pub const MAX_OBJECTS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectKind {
    Item,
    Container,
    Supporter,
    Readable,
    AnswerBox,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectLocation {
    Room,
    Inventory,
    Object(String),
}

/// Public, name-based view of one object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameObject {
    pub name: String,
    pub kind: ObjectKind,
    pub quantity: Option<Quantity>,
    pub is_open: Option<bool>,
    pub location: ObjectLocation,
}

#[derive(Debug, Clone)]
pub struct ObjectDef {
    pub name: String,
    pub kind: ObjectKind,
    pub quantity: Option<Quantity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Loc {
    Room,
    Inventory,
    In(u8),
}

impl Loc {
    fn code(self) -> u8 {
        match self {
            Loc::Room => 0xFF,
            Loc::Inventory => 0xFE,
            Loc::In(i) => i,
        }
    }
}

/// An action addressed by object index rather than by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CompactAction {
    pub verb: Verb,
    pub a: u8,
    pub b: u8,
}

impl CompactAction {
    const NONE: u8 = u8::MAX;

    fn nullary(verb: Verb) -> Self {
        CompactAction { verb, a: Self::NONE, b: Self::NONE }
    }

    fn unary(verb: Verb, a: usize) -> Self {
        CompactAction { verb, a: a as u8, b: Self::NONE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum LastView {
    Start,
    Look,
    Inventory,
    Feedback(CompactAction),
}

/// Game-specific ground truth kept alongside the objects.
#[derive(Debug, Clone)]
pub enum Payload {
    Arithmetic { problem: ArithmeticProblem, answer: u8, sheet: u8 },
    /// Object indices in the order they must enter the box.
    Sorting { order: Vec<u8> },
    Twc { target: u8, canonical: u8 },
}

/// Immutable per-episode data shared by every state of the episode.
#[derive(Debug)]
pub struct Episode {
    pub spec: EpisodeSpec,
    pub room: String,
    pub task_description: String,
    pub objects: Vec<ObjectDef>,
    pub(crate) initial_locs: Vec<Loc>,
    pub answer_box: Option<u8>,
    pub payload: Payload,
}

impl Episode {
    pub(crate) fn index_of(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.name == name)
    }

    pub fn kind(&self, i: usize) -> ObjectKind {
        self.objects[i].kind
    }
}

/// What the agent sees after each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub task_description: String,
    pub obs_text: String,
    pub inventory_text: String,
    pub look_text: String,
    pub valid_actions: Vec<Action>,
    pub score: Score,
    pub reward_delta: Score,
    pub done: bool,
    pub failed: bool,
    pub step_index: u32,
}

/// Full simulator state. Cloning is cheap: the static episode data is shared.
#[derive(Debug, Clone)]
pub struct GameState {
    pub(crate) episode: Arc<Episode>,
    pub(crate) locs: [Loc; MAX_OBJECTS],
    pub(crate) open: u32,
    pub(crate) score: Score,
    pub(crate) steps: u32,
    pub(crate) done: bool,
    pub(crate) failed: bool,
    /// Arithmetic: problem read. TWC: target taken. Sorting: items placed.
    pub(crate) progress: u8,
    pub(crate) last: LastView,
}

impl GameState {
    pub(crate) fn initial(episode: Episode) -> Result<GameState, EngineError> {
        if episode.objects.len() > MAX_OBJECTS {
            return Err(EngineError::TooManyObjects(episode.objects.len()));
        }
        let mut locs = [Loc::Room; MAX_OBJECTS];
        for (i, l) in episode.initial_locs.iter().enumerate() {
            locs[i] = *l;
        }
        Ok(GameState {
            episode: Arc::new(episode),
            locs,
            open: 0,
            score: Score::ZERO,
            steps: 0,
            done: false,
            failed: false,
            progress: 0,
            last: LastView::Start,
        })
    }

    pub fn episode(&self) -> &Episode {
        &self.episode
    }

    pub fn spec(&self) -> &EpisodeSpec {
        &self.episode.spec
    }

    pub fn score(&self) -> Score {
        self.score
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn is_failed(&self) -> bool {
        self.failed
    }

    pub fn is_won(&self) -> bool {
        self.score == Score::ONE
    }

    fn n(&self) -> usize {
        self.episode.objects.len()
    }

    pub(crate) fn loc(&self, i: usize) -> Loc {
        self.locs[i]
    }

    pub(crate) fn is_open(&self, i: usize) -> bool {
        self.open & (1 << i) != 0
    }

    pub(crate) fn is_receptacle(&self, i: usize) -> bool {
        match self.episode.kind(i) {
            ObjectKind::Supporter | ObjectKind::AnswerBox => true,
            ObjectKind::Container => self.is_open(i),
            _ => false,
        }
    }

    /// Visible from the room: loose, on a supporter, or inside an open
    /// container or the answer box.
    pub(crate) fn is_visible(&self, i: usize) -> bool {
        match self.locs[i] {
            Loc::Room => true,
            Loc::Inventory => false,
            Loc::In(p) => {
                let p = p as usize;
                match self.episode.kind(p) {
                    ObjectKind::Supporter | ObjectKind::AnswerBox => true,
                    ObjectKind::Container => self.is_open(p),
                    _ => false,
                }
            }
        }
    }

    fn is_takeable(&self, i: usize) -> bool {
        if !matches!(self.episode.kind(i), ObjectKind::Item | ObjectKind::Readable) {
            return false;
        }
        match self.locs[i] {
            Loc::Room => true,
            Loc::Inventory => false,
            // Placed answers are committed.
            Loc::In(p) if Some(p) == self.episode.answer_box => false,
            Loc::In(_) => self.is_visible(i),
        }
    }

    /// Valid actions in canonical order: look around, inventory, takes, opens,
    /// reads, then puts (held item x receptacle), each in object order.
    pub fn valid_compact(&self, out: &mut Vec<CompactAction>) {
        out.clear();
        if self.done {
            return;
        }
        out.push(CompactAction::nullary(Verb::LookAround));
        out.push(CompactAction::nullary(Verb::Inventory));
        let n = self.n();
        for i in 0..n {
            if self.is_takeable(i) {
                out.push(CompactAction::unary(Verb::Take, i));
            }
        }
        for i in 0..n {
            if self.episode.kind(i) == ObjectKind::Container && !self.is_open(i) {
                out.push(CompactAction::unary(Verb::Open, i));
            }
        }
        for i in 0..n {
            if self.episode.kind(i) == ObjectKind::Readable && self.locs[i] == Loc::Inventory {
                out.push(CompactAction::unary(Verb::Read, i));
            }
        }
        for x in 0..n {
            if self.locs[x] != Loc::Inventory {
                continue;
            }
            for y in 0..n {
                if y != x && self.is_receptacle(y) {
                    out.push(CompactAction { verb: Verb::Put, a: x as u8, b: y as u8 });
                }
            }
        }
    }

    pub fn valid_actions(&self) -> Vec<Action> {
        let mut buf = Vec::new();
        self.valid_compact(&mut buf);
        buf.into_iter().map(|c| self.expand(c)).collect()
    }

    pub fn expand(&self, c: CompactAction) -> Action {
        let name = |i: u8| self.episode.objects[i as usize].name.clone();
        match c.verb {
            Verb::LookAround => Action::look_around(),
            Verb::Inventory => Action::inventory(),
            Verb::Take => Action::take(name(c.a)),
            Verb::Open => Action::open(name(c.a)),
            Verb::Read => Action::read(name(c.a)),
            Verb::Put => Action::put(name(c.a), name(c.b)),
        }
    }

    /// Resolves a named action against this state's valid actions.
    pub fn compact(&self, action: &Action) -> Result<CompactAction, EngineError> {
        let invalid = || EngineError::InvalidAction(action.to_string());
        if self.done {
            return Err(EngineError::EpisodeOver);
        }
        let idx = |name: Option<&String>| -> Result<u8, EngineError> {
            let name = name.ok_or_else(invalid)?;
            self.episode.index_of(name).map(|i| i as u8).ok_or_else(invalid)
        };
        let c = match action.verb {
            Verb::LookAround | Verb::Inventory => CompactAction::nullary(action.verb),
            Verb::Take | Verb::Open | Verb::Read => {
                CompactAction { verb: action.verb, a: idx(action.arg1.as_ref())?, b: CompactAction::NONE }
            }
            Verb::Put => CompactAction {
                verb: Verb::Put,
                a: idx(action.arg1.as_ref())?,
                b: idx(action.arg2.as_ref())?,
            },
        };
        let mut buf = Vec::with_capacity(32);
        self.valid_compact(&mut buf);
        if buf.contains(&c) {
            Ok(c)
        } else {
            Err(invalid())
        }
    }

    /// Applies an action known to be valid.
    pub fn apply(&self, c: CompactAction) -> GameState {
        let mut next = self.clone();
        let ep = &*self.episode;
        let (a, b) = (c.a as usize, c.b as usize);
        match c.verb {
            Verb::LookAround => next.last = LastView::Look,
            Verb::Inventory => next.last = LastView::Inventory,
            Verb::Take => {
                next.locs[a] = Loc::Inventory;
                if let Payload::Twc { target, .. } = ep.payload {
                    if a == target as usize && next.progress == 0 {
                        next.progress = 1;
                        next.score += Score::HALF;
                    }
                }
            }
            Verb::Open => next.open |= 1 << a,
            Verb::Read => {
                if let Payload::Arithmetic { sheet, .. } = ep.payload {
                    if a == sheet as usize && next.progress == 0 {
                        next.progress = 1;
                        next.score += Score::HALF;
                    }
                }
            }
            Verb::Put => {
                next.locs[a] = Loc::In(c.b);
                let into_box = ep.answer_box == Some(c.b);
                match &ep.payload {
                    Payload::Arithmetic { answer, .. } if into_box => {
                        next.done = true;
                        if a == *answer as usize {
                            next.score = Score::ONE;
                        } else {
                            next.failed = true;
                        }
                    }
                    Payload::Sorting { order } if into_box => {
                        let expected = order.get(next.progress as usize).copied();
                        if expected == Some(c.a) {
                            next.progress += 1;
                            next.score += Score::new(1, order.len() as i64);
                            if next.progress as usize == order.len() {
                                next.done = true;
                            }
                        } else {
                            next.done = true;
                            next.failed = true;
                        }
                    }
                    Payload::Twc { target, canonical } if a == *target as usize && b == *canonical as usize => {
                        next.score += Score::HALF;
                        next.done = true;
                    }
                    _ => {}
                }
            }
        }
        if !matches!(c.verb, Verb::LookAround | Verb::Inventory) {
            next.last = LastView::Feedback(c);
        }
        next.steps += 1;
        if next.steps >= STEP_LIMIT {
            next.done = true;
        }
        next
    }

    pub fn step(&self, action: &Action) -> Result<(GameState, Observation), EngineError> {
        let c = self.compact(action)?;
        let next = self.apply(c);
        let mut obs = next.observation();
        obs.reward_delta = next.score - self.score;
        Ok((next, obs))
    }

    /// The observation for the current state; `reward_delta` is zero.
    pub fn observation(&self) -> Observation {
        Observation {
            task_description: self.episode.task_description.clone(),
            obs_text: text::obs_text(self),
            inventory_text: text::inventory_text(self),
            look_text: text::look_text(self),
            valid_actions: self.valid_actions(),
            score: self.score,
            reward_delta: Score::ZERO,
            done: self.done,
            failed: self.failed,
            step_index: self.steps,
        }
    }

    pub fn objects(&self) -> Vec<GameObject> {
        let ep = &self.episode;
        ep.objects
            .iter()
            .enumerate()
            .map(|(i, o)| GameObject {
                name: o.name.clone(),
                kind: o.kind,
                quantity: o.quantity,
                is_open: (o.kind == ObjectKind::Container).then(|| self.is_open(i)),
                location: match self.locs[i] {
                    Loc::Room => ObjectLocation::Room,
                    Loc::Inventory => ObjectLocation::Inventory,
                    Loc::In(p) => ObjectLocation::Object(ep.objects[p as usize].name.clone()),
                },
            })
            .collect()
    }

    fn dynamic_bytes(&self, out: &mut Vec<u8>) {
        for l in &self.locs[..self.n()] {
            out.push(l.code());
        }
        out.extend_from_slice(&self.open.to_le_bytes());
        out.extend_from_slice(&self.score.numer().to_le_bytes());
        out.extend_from_slice(&self.score.denom().to_le_bytes());
        out.push(self.done as u8 | (self.failed as u8) << 1);
        out.push(self.progress);
        match self.last {
            LastView::Start => out.extend_from_slice(&[0, 0, 0, 0]),
            LastView::Look => out.extend_from_slice(&[1, 0, 0, 0]),
            LastView::Inventory => out.extend_from_slice(&[2, 0, 0, 0]),
            LastView::Feedback(c) => out.extend_from_slice(&[3, c.verb as u8, c.a, c.b]),
        }
    }

    /// Canonical serialization of everything that determines future play
    /// except the step counter: episode identity, object locations, open
    /// flags, score, flags and the last view.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let spec = &self.episode.spec;
        let mut out = Vec::with_capacity(64);
        out.extend_from_slice(spec.game.as_str().as_bytes());
        out.push(0);
        out.extend_from_slice(spec.split.as_str().as_bytes());
        out.push(0);
        out.extend_from_slice(&spec.variation.to_le_bytes());
        out.extend_from_slice(&spec.seed.to_le_bytes());
        self.dynamic_bytes(&mut out);
        out
    }

    /// 64-bit hash of the dynamic part of the canonical form.
    pub fn state_key(&self) -> u64 {
        let mut buf = Vec::with_capacity(48);
        self.dynamic_bytes(&mut buf);
        fnv1a(&buf)
    }

    pub fn game(&self) -> Game {
        self.episode.spec.game
    }
}

//! Parametric episode generation for the three games.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::problem::{ArithmeticProblem, Operator};
use super::quantity::{normalize_quantity, Quantity, Unit};
use super::spec::{EpisodeSpec, Game, Split};
use super::state::{Episode, GameState, Loc, ObjectDef, ObjectKind, Payload};
use super::vocab::{PlaceKind, Vocabulary};
use super::EngineError;

pub const ANSWER_BOX: &str = "box";
pub const MATH_PROBLEM: &str = "math problem";

const ARITHMETIC_TASK: &str =
    "Solve the math problem, then find the item whose quantity equals the answer and place it in the box.";
const SORTING_TASK: &str = "Sort the objects by quantity: place the object with the smallest quantity in the box first, \
     then the next smallest, and so on until every object has been placed.";
const TWC_TASK: &str = "Tidy up the room by picking up the misplaced item and putting it where it usually belongs.";

#[derive(Debug, Clone)]
pub struct GenerationOptions {
    /// Quantified items in an Arithmetic episode (answer + three operator
    /// distractors + fillers). Values below 4 are raised to 4.
    pub arithmetic_items: usize,
    /// Overrides the sampled Arithmetic problem (must be well formed).
    pub forced_problem: Option<ArithmeticProblem>,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        GenerationOptions { arithmetic_items: 6, forced_problem: None }
    }
}

pub fn generate_episode(spec: &EpisodeSpec) -> Result<GameState, EngineError> {
    generate_episode_with(spec, &GenerationOptions::default())
}

pub fn generate_episode_with(spec: &EpisodeSpec, opts: &GenerationOptions) -> Result<GameState, EngineError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let episode = match spec.game {
        Game::Arithmetic => arithmetic(spec, opts, &mut rng)?,
        Game::Sorting => sorting(spec, &mut rng)?,
        Game::Twc => twc(spec, &mut rng)?,
    };
    GameState::initial(episode)
}

// ---------------------------------------------------------------------------
// Shared layout helpers
// ---------------------------------------------------------------------------

struct Layout {
    room: String,
    objects: Vec<ObjectDef>,
    locs: Vec<Loc>,
}

impl Layout {
    fn push(&mut self, name: &str, kind: ObjectKind, quantity: Option<Quantity>, loc: Loc) -> usize {
        self.objects.push(ObjectDef { name: name.to_string(), kind, quantity });
        self.locs.push(loc);
        self.objects.len() - 1
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.name == name)
    }

    fn supporters(&self) -> Vec<usize> {
        (0..self.objects.len()).filter(|&i| self.objects[i].kind == ObjectKind::Supporter).collect()
    }
}

fn place_kind(kind: PlaceKind) -> ObjectKind {
    match kind {
        PlaceKind::Container => ObjectKind::Container,
        PlaceKind::Supporter => ObjectKind::Supporter,
    }
}

/// Picks a room with furniture for the quantity games and lays out the
/// answer box plus `supporters` supporters and up to `containers` containers,
/// in shuffled order.
fn furnish(rng: &mut ChaCha8Rng, supporters: usize, containers: usize) -> Layout {
    let vocab = Vocabulary::get();
    let rooms = vocab.rooms();
    let room = *rooms.choose(rng).expect("vocabulary has rooms");
    let places = vocab.places_in(room);
    let mut sup: Vec<&str> =
        places.iter().filter(|p| p.kind == PlaceKind::Supporter).map(|p| p.name.as_str()).collect();
    let mut con: Vec<&str> =
        places.iter().filter(|p| p.kind == PlaceKind::Container).map(|p| p.name.as_str()).collect();
    sup.shuffle(rng);
    con.shuffle(rng);
    let mut chosen: Vec<(&str, ObjectKind)> = sup
        .into_iter()
        .take(supporters)
        .map(|n| (n, ObjectKind::Supporter))
        .chain(con.into_iter().take(containers).map(|n| (n, ObjectKind::Container)))
        .collect();
    chosen.push((ANSWER_BOX, ObjectKind::AnswerBox));
    chosen.shuffle(rng);
    let mut layout = Layout { room: room.to_string(), objects: Vec::new(), locs: Vec::new() };
    for (name, kind) in chosen {
        layout.push(name, kind, None, Loc::Room);
    }
    layout
}

fn insufficient(what: &str, split: Split) -> EngineError {
    EngineError::Generation(format!("not enough {what} in the {split} vocabulary"))
}

// ---------------------------------------------------------------------------
// Arithmetic
// ---------------------------------------------------------------------------

fn sample_problem(rng: &mut ChaCha8Rng) -> ArithmeticProblem {
    loop {
        let op = *Operator::ALL.choose(rng).expect("operators");
        let b = rng.random_range(2..=9u32);
        let a = rng.random_range(2 * b..=99u32);
        let p = ArithmeticProblem::new(op, a, b);
        if p.is_well_formed() {
            return p;
        }
    }
}

fn arithmetic(spec: &EpisodeSpec, opts: &GenerationOptions, rng: &mut ChaCha8Rng) -> Result<Episode, EngineError> {
    let problem = match opts.forced_problem {
        Some(p) if p.is_well_formed() => p,
        Some(p) => return Err(EngineError::Generation(format!("ill-formed problem {p}"))),
        None => sample_problem(rng),
    };
    let n_items = opts.arithmetic_items.max(4);
    let answer = problem.answer().expect("well-formed problems have answers");
    let mut values: Vec<u32> = vec![answer];
    values.extend(problem.all_results().iter().flatten().filter(|&&v| v != answer));
    while values.len() < n_items {
        let v = rng.random_range(1..=99u32);
        if !values.contains(&v) {
            values.push(v);
        }
    }

    let vocab = Vocabulary::get();
    let mut nouns = vocab.produce_for(spec.split);
    if nouns.len() < n_items {
        return Err(insufficient("produce", spec.split));
    }
    nouns.shuffle(rng);

    let supporters = rng.random_range(1..=2usize);
    let containers = rng.random_range(0..=1usize);
    let mut layout = furnish(rng, supporters, containers);
    let sheet = layout.push(MATH_PROBLEM, ObjectKind::Readable, None, Loc::Room);
    let sup = layout.supporters();

    let mut items: Vec<(String, Quantity, bool)> = values
        .iter()
        .zip(&nouns)
        .enumerate()
        .map(|(k, (&v, noun))| (format!("{v} {noun}"), Quantity::count(v), k == 0))
        .collect();
    items.shuffle(rng);
    let mut answer_ix = 0;
    for (name, q, is_answer) in items {
        let host = *sup.choose(rng).expect("at least one supporter");
        let i = layout.push(&name, ObjectKind::Item, Some(q), Loc::In(host as u8));
        if is_answer {
            answer_ix = i;
        }
    }
    let answer_box = layout.index_of(ANSWER_BOX).map(|i| i as u8);
    Ok(Episode {
        spec: *spec,
        room: layout.room,
        task_description: ARITHMETIC_TASK.to_string(),
        objects: layout.objects,
        initial_locs: layout.locs,
        answer_box,
        payload: Payload::Arithmetic { problem, answer: answer_ix as u8, sheet: sheet as u8 },
    })
}

// ---------------------------------------------------------------------------
// Sorting
// ---------------------------------------------------------------------------

fn sample_quantities(rng: &mut ChaCha8Rng, n: usize) -> Vec<Quantity> {
    loop {
        let mut qs: Vec<Quantity> = Vec::with_capacity(n);
        while qs.len() < n {
            let q = if rng.random_bool(0.6) {
                Quantity::mg(rng.random_range(1..=99))
            } else {
                Quantity::g(rng.random_range(1..=9))
            };
            if !qs.iter().any(|o| normalize_quantity(*o) == normalize_quantity(q)) {
                qs.push(q);
            }
        }
        let mixed = qs.iter().any(|q| q.unit == Unit::Mg) && qs.iter().any(|q| q.unit == Unit::G);
        if mixed {
            return qs;
        }
    }
}

fn sorting(spec: &EpisodeSpec, rng: &mut ChaCha8Rng) -> Result<Episode, EngineError> {
    let vocab = Vocabulary::get();
    let materials = vocab.materials_for(spec.split);
    if materials.is_empty() {
        return Err(insufficient("materials", spec.split));
    }
    let n = rng.random_range(3..=5usize);
    let quantities = sample_quantities(rng, n);

    let supporters = rng.random_range(2..=4usize);
    let containers = rng.random_range(0..=1usize);
    let mut layout = furnish(rng, supporters, containers);
    let sup = layout.supporters();

    let mut placed: Vec<(u64, u8)> = Vec::with_capacity(n);
    for q in quantities {
        let material = materials.choose(rng).expect("non-empty");
        let name = format!("{q} of {material}");
        let host = *sup.choose(rng).expect("supporters");
        let i = layout.push(&name, ObjectKind::Item, Some(q), Loc::In(host as u8));
        placed.push((normalize_quantity(q), i as u8));
    }
    placed.sort();
    let answer_box = layout.index_of(ANSWER_BOX).map(|i| i as u8);
    Ok(Episode {
        spec: *spec,
        room: layout.room,
        task_description: SORTING_TASK.to_string(),
        objects: layout.objects,
        initial_locs: layout.locs,
        answer_box,
        payload: Payload::Sorting { order: placed.into_iter().map(|(_, i)| i).collect() },
    })
}

// ---------------------------------------------------------------------------
// TWC
// ---------------------------------------------------------------------------

/// Per-(seed, split) rotation so that the 100 variations of a split cycle
/// through every item of that split's household list.
fn rotation(master_seed: u64, split: Split, len: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ 0x7477_6300 ^ split as u64);
    rng.random_range(0..len)
}

fn twc(spec: &EpisodeSpec, rng: &mut ChaCha8Rng) -> Result<Episode, EngineError> {
    let vocab = Vocabulary::get();
    let items = vocab.household_for(spec.split);
    if items.is_empty() {
        return Err(insufficient("household items", spec.split));
    }
    let (item, location) = items[(spec.variation as usize + rotation(spec.master_seed, spec.split, items.len())) % items.len()];
    let canonical = vocab
        .place(location)
        .ok_or_else(|| EngineError::Generation(format!("unknown location {location:?}")))?;
    let mut others: Vec<_> = vocab.places_in(&canonical.room).into_iter().filter(|p| p.name != canonical.name).collect();
    others.shuffle(rng);
    let wanted = rng.random_range(3..=5usize).min(others.len());
    let mut places: Vec<_> = others.into_iter().take(wanted).collect();
    places.push(canonical);
    places.shuffle(rng);

    let mut layout = Layout { room: canonical.room.clone(), objects: Vec::new(), locs: Vec::new() };
    for p in places {
        layout.push(&p.name, place_kind(p.kind), None, Loc::Room);
    }
    // The misplaced item lies loose somewhere in the listing order.
    let pos = rng.random_range(0..=layout.objects.len());
    layout.objects.insert(pos, ObjectDef { name: item.to_string(), kind: ObjectKind::Item, quantity: None });
    layout.locs.insert(pos, Loc::Room);
    let canonical_ix = layout.index_of(&canonical.name).expect("canonical location placed");
    Ok(Episode {
        spec: *spec,
        room: layout.room,
        task_description: TWC_TASK.to_string(),
        objects: layout.objects,
        initial_locs: layout.locs,
        answer_box: None,
        payload: Payload::Twc { target: pos as u8, canonical: canonical_ix as u8 },
    })
}

use super::action::Action;
use super::state::{GameState, ObjectKind, Payload};

/// The reference solution for an initial state: Take/Read/Take/Put for
/// Arithmetic, ascending Take/Put pairs for Sorting, and Take/(Open)/Put for
/// TWC.
pub fn gold_actions(state: &GameState) -> Vec<Action> {
    let ep = state.episode();
    let name = |i: u8| ep.objects[i as usize].name.clone();
    let box_name = || name(ep.answer_box.expect("quantity games have an answer box"));
    match &ep.payload {
        Payload::Arithmetic { answer, sheet, .. } => vec![
            Action::take(name(*sheet)),
            Action::read(name(*sheet)),
            Action::take(name(*answer)),
            Action::put(name(*answer), box_name()),
        ],
        Payload::Sorting { order } => order
            .iter()
            .flat_map(|&i| [Action::take(name(i)), Action::put(name(i), box_name())])
            .collect(),
        Payload::Twc { target, canonical } => {
            let mut out = vec![Action::take(name(*target))];
            if ep.kind(*canonical as usize) == ObjectKind::Container && !state.is_open(*canonical as usize) {
                out.push(Action::open(name(*canonical)));
            }
            out.push(Action::put(name(*target), name(*canonical)));
            out
        }
    }
}

//! Templated prose for room descriptions, inventory listings and feedback.

use super::action::Verb;
use super::state::{CompactAction, GameState, LastView, Loc, ObjectKind, Payload};

const OPENERS: [&str; 4] = [
    "Over to one side you see",
    "Nearby there is",
    "You can also make out",
    "Off in a corner there is",
];

fn article(name: &str) -> &'static str {
    match name.chars().next() {
        Some(c) if "aeiouAEIOU".contains(c) => "an",
        _ => "a",
    }
}

/// Name with an indefinite article; quantified items read naturally bare.
fn display_name(state: &GameState, i: usize) -> String {
    let obj = &state.episode().objects[i];
    if obj.quantity.is_some() {
        obj.name.clone()
    } else {
        format!("{} {}", article(&obj.name), obj.name)
    }
}

fn list_phrase(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

fn contents_of(state: &GameState, parent: usize) -> Vec<String> {
    (0..state.episode().objects.len())
        .filter(|&i| state.loc(i) == Loc::In(parent as u8))
        .map(|i| display_name(state, i))
        .collect()
}

fn describe_top_level(state: &GameState, i: usize) -> String {
    let name = display_name(state, i);
    match state.episode().kind(i) {
        ObjectKind::Supporter => {
            let contents = contents_of(state, i);
            if contents.is_empty() {
                format!("{name}, with nothing on it")
            } else {
                format!("{name} holding {}", list_phrase(&contents))
            }
        }
        ObjectKind::Container if !state.is_open(i) => format!("{name} that is closed"),
        ObjectKind::Container => {
            let contents = contents_of(state, i);
            if contents.is_empty() {
                format!("{name} that is open and empty")
            } else {
                format!("{name} that is open and contains {}", list_phrase(&contents))
            }
        }
        ObjectKind::AnswerBox => {
            let contents = contents_of(state, i);
            if contents.is_empty() {
                format!("{name}, which is empty")
            } else {
                format!("{name} that contains {}", list_phrase(&contents))
            }
        }
        ObjectKind::Item | ObjectKind::Readable => name,
    }
}

pub(crate) fn look_text(state: &GameState) -> String {
    let ep = state.episode();
    let mut out = format!("You are in the {}.", ep.room);
    let mut k = 0;
    for i in 0..ep.objects.len() {
        if state.loc(i) != Loc::Room {
            continue;
        }
        out.push(' ');
        out.push_str(OPENERS[k % OPENERS.len()]);
        out.push(' ');
        out.push_str(&describe_top_level(state, i));
        out.push('.');
        k += 1;
    }
    out
}

pub(crate) fn inventory_text(state: &GameState) -> String {
    let held: Vec<String> = (0..state.episode().objects.len())
        .filter(|&i| state.loc(i) == Loc::Inventory)
        .map(|i| display_name(state, i))
        .collect();
    if held.is_empty() {
        "You are carrying nothing.".to_string()
    } else {
        let mut out = "You are carrying:".to_string();
        for h in held {
            out.push_str("\n  ");
            out.push_str(&h);
        }
        out
    }
}

fn feedback_text(state: &GameState, c: CompactAction) -> String {
    let ep = state.episode();
    let name = |i: u8| ep.objects[i as usize].name.as_str();
    match c.verb {
        Verb::Take => format!("You take the {}.", name(c.a)),
        Verb::Open => {
            let contents = contents_of(state, c.a as usize);
            if contents.is_empty() {
                format!("You open the {}. There is nothing inside.", name(c.a))
            } else {
                format!("You open the {}. Inside you find {}.", name(c.a), list_phrase(&contents))
            }
        }
        Verb::Read => match &ep.payload {
            Payload::Arithmetic { problem, sheet, .. } if *sheet == c.a => format!(
                "The {} says: {problem}. Work out the result, then put the item with that quantity in the box.",
                name(c.a)
            ),
            _ => format!("There is nothing written on the {}.", name(c.a)),
        },
        Verb::Put => {
            let prep = if ep.kind(c.b as usize) == ObjectKind::Supporter { "on" } else { "in" };
            let mut out = format!("You put the {} {prep} the {}.", name(c.a), name(c.b));
            if state.is_failed() {
                out.push_str(" That was the wrong choice, and the game is over.");
            } else if state.is_done() && state.is_won() {
                out.push_str(" Well done, the task is complete.");
            }
            out
        }
        Verb::LookAround => look_text(state),
        Verb::Inventory => inventory_text(state),
    }
}

pub(crate) fn obs_text(state: &GameState) -> String {
    match state.last {
        LastView::Start | LastView::Look => look_text(state),
        LastView::Inventory => inventory_text(state),
        LastView::Feedback(c) => feedback_text(state, c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_phrases() {
        let s = |v: &[&str]| list_phrase(&v.iter().map(|x| x.to_string()).collect::<Vec<_>>());
        assert_eq!(s(&["a"]), "a");
        assert_eq!(s(&["a", "b"]), "a and b");
        assert_eq!(s(&["a", "b", "c"]), "a, b, and c");
    }

    #[test]
    fn articles() {
        assert_eq!(article("apple"), "an");
        assert_eq!(article("wardrobe"), "a");
    }
}

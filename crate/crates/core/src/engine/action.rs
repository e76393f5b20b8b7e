use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Command verbs understood by all three games.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verb {
    Take,
    Put,
    Open,
    Read,
    LookAround,
    Inventory,
}

impl Verb {
    pub fn arity(self) -> usize {
        match self {
            Verb::LookAround | Verb::Inventory => 0,
            Verb::Take | Verb::Open | Verb::Read => 1,
            Verb::Put => 2,
        }
    }

    /// Title-case token used in macro keys, e.g. `Look-Around`.
    pub fn macro_token(self) -> &'static str {
        match self {
            Verb::Take => "Take",
            Verb::Put => "Put",
            Verb::Open => "Open",
            Verb::Read => "Read",
            Verb::LookAround => "Look-Around",
            Verb::Inventory => "Inventory",
        }
    }

    pub fn from_macro_token(token: &str) -> Option<Verb> {
        Some(match token {
            "Take" => Verb::Take,
            "Put" => Verb::Put,
            "Open" => Verb::Open,
            "Read" => Verb::Read,
            "Look-Around" => Verb::LookAround,
            "Inventory" => Verb::Inventory,
            _ => return None,
        })
    }
}

/// A concrete command such as `put 51 pineapples in box`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action {
    pub verb: Verb,
    pub arg1: Option<String>,
    pub arg2: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ActionError {
    #[error("unrecognized action {0:?}")]
    Unparseable(String),
    #[error("{verb:?} takes {expected} argument(s)")]
    Arity { verb: Verb, expected: usize },
}

impl Action {
    pub fn new(verb: Verb, arg1: Option<String>, arg2: Option<String>) -> Result<Self, ActionError> {
        let given = arg1.is_some() as usize + arg2.is_some() as usize;
        if given != verb.arity() || (arg2.is_some() && arg1.is_none()) {
            return Err(ActionError::Arity { verb, expected: verb.arity() });
        }
        Ok(Action { verb, arg1, arg2 })
    }

    pub fn look_around() -> Self {
        Action { verb: Verb::LookAround, arg1: None, arg2: None }
    }

    pub fn inventory() -> Self {
        Action { verb: Verb::Inventory, arg1: None, arg2: None }
    }

    pub fn take(x: impl Into<String>) -> Self {
        Action { verb: Verb::Take, arg1: Some(x.into()), arg2: None }
    }

    pub fn open(x: impl Into<String>) -> Self {
        Action { verb: Verb::Open, arg1: Some(x.into()), arg2: None }
    }

    pub fn read(x: impl Into<String>) -> Self {
        Action { verb: Verb::Read, arg1: Some(x.into()), arg2: None }
    }

    pub fn put(x: impl Into<String>, y: impl Into<String>) -> Self {
        Action { verb: Verb::Put, arg1: Some(x.into()), arg2: Some(y.into()) }
    }

    pub fn args(&self) -> impl Iterator<Item = &str> {
        self.arg1.iter().chain(self.arg2.iter()).map(String::as_str)
    }

    /// Parses the canonical text form. `put X on Y` is accepted as a synonym
    /// of `put X in Y`.
    pub fn parse(text: &str) -> Result<Action, ActionError> {
        let s = text.trim();
        let fail = || ActionError::Unparseable(text.to_string());
        match s {
            "look around" => return Ok(Action::look_around()),
            "inventory" => return Ok(Action::inventory()),
            _ => {}
        }
        let (head, rest) = s.split_once(' ').ok_or_else(fail)?;
        let rest = rest.trim();
        if rest.is_empty() {
            return Err(fail());
        }
        match head {
            "take" => Ok(Action::take(rest)),
            "open" => Ok(Action::open(rest)),
            "read" => Ok(Action::read(rest)),
            "put" => {
                let (x, y) = rest
                    .split_once(" in ")
                    .or_else(|| rest.split_once(" on "))
                    .ok_or_else(fail)?;
                let (x, y) = (x.trim(), y.trim());
                if x.is_empty() || y.is_empty() {
                    return Err(fail());
                }
                Ok(Action::put(x, y))
            }
            _ => Err(fail()),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.arg1.as_deref().unwrap_or_default();
        match self.verb {
            Verb::LookAround => f.write_str("look around"),
            Verb::Inventory => f.write_str("inventory"),
            Verb::Take => write!(f, "take {a}"),
            Verb::Open => write!(f, "open {a}"),
            Verb::Read => write!(f, "read {a}"),
            Verb::Put => write!(f, "put {a} in {}", self.arg2.as_deref().unwrap_or_default()),
        }
    }
}

impl FromStr for Action {
    type Err = ActionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::parse(s)
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Action::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_verb() {
        assert_eq!(Action::parse("look around").unwrap(), Action::look_around());
        assert_eq!(Action::parse("inventory").unwrap(), Action::inventory());
        assert_eq!(Action::parse("take 51 pineapples").unwrap(), Action::take("51 pineapples"));
        assert_eq!(Action::parse("open wardrobe").unwrap(), Action::open("wardrobe"));
        assert_eq!(Action::parse("read math problem").unwrap(), Action::read("math problem"));
        assert_eq!(
            Action::parse("put 23mg of oak in box").unwrap(),
            Action::put("23mg of oak", "box")
        );
    }

    #[test]
    fn on_is_a_synonym_for_in() {
        let a = Action::parse("put hat on hat rack").unwrap();
        assert_eq!(a, Action::put("hat", "hat rack"));
        assert_eq!(a.to_string(), "put hat in hat rack");
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "take", "fly to the moon", "put shirt", "put  in box", "look"] {
            assert!(Action::parse(s).is_err(), "{s:?} parsed");
        }
    }

    #[test]
    fn arity_is_enforced() {
        assert!(Action::new(Verb::Put, Some("a".into()), None).is_err());
        assert!(Action::new(Verb::LookAround, Some("a".into()), None).is_err());
        assert!(Action::new(Verb::Take, Some("a".into()), None).is_ok());
    }
}

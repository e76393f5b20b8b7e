use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Add,
    Subtract,
    Multiply,
    Divide,
}

impl Operator {
    pub const ALL: [Operator; 4] = [Operator::Add, Operator::Subtract, Operator::Multiply, Operator::Divide];

    pub fn word(self) -> &'static str {
        match self {
            Operator::Add => "add",
            Operator::Subtract => "subtract",
            Operator::Multiply => "multiply",
            Operator::Divide => "divide",
        }
    }

    fn from_word(w: &str) -> Option<Operator> {
        Operator::ALL.into_iter().find(|op| op.word() == w)
    }

    /// Integer result; division floors. `None` when the result is not a
    /// positive integer.
    pub fn apply(self, a: u32, b: u32) -> Option<u32> {
        match self {
            Operator::Add => a.checked_add(b),
            Operator::Subtract => a.checked_sub(b).filter(|&r| r > 0),
            Operator::Multiply => a.checked_mul(b),
            Operator::Divide => a.checked_div(b).filter(|&r| r > 0),
        }
    }
}

/// A math problem of the form `<op> A and B`, meaning `A op B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArithmeticProblem {
    pub op: Operator,
    pub a: u32,
    pub b: u32,
}

impl ArithmeticProblem {
    pub fn new(op: Operator, a: u32, b: u32) -> Self {
        ArithmeticProblem { op, a, b }
    }

    pub fn answer(&self) -> Option<u32> {
        self.op.apply(self.a, self.b)
    }

    /// Results of all four operators on the operands, in `Operator::ALL` order.
    pub fn all_results(&self) -> [Option<u32>; 4] {
        Operator::ALL.map(|op| op.apply(self.a, self.b))
    }

    /// Distractor-safe: every operator yields a distinct positive integer and
    /// the problem's own answer is exact.
    pub fn is_well_formed(&self) -> bool {
        let results = self.all_results();
        if results.iter().any(Option::is_none) {
            return false;
        }
        let vals: Vec<u32> = results.iter().flatten().copied().collect();
        let distinct = vals.iter().enumerate().all(|(i, v)| !vals[..i].contains(v));
        let exact = self.op != Operator::Divide || self.a.is_multiple_of(self.b);
        distinct && exact
    }

    /// Finds the last `<op> A and B` phrase in free text.
    pub fn find_in(text: &str) -> Option<ArithmeticProblem> {
        let words: Vec<&str> = text
            .split(|c: char| c.is_whitespace() || c == ',' || c == ':')
            .filter(|w| !w.is_empty())
            .map(|w| w.trim_end_matches('.'))
            .collect();
        let mut found = None;
        for win in words.windows(4) {
            if let Some(op) = Operator::from_word(&win[0].to_ascii_lowercase()) {
                if win[2] == "and" {
                    if let (Ok(a), Ok(b)) = (win[1].parse(), win[3].parse()) {
                        found = Some(ArithmeticProblem::new(op, a, b));
                    }
                }
            }
        }
        found
    }
}

impl fmt::Display for ArithmeticProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} and {}", self.op.word(), self.a, self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_42_and_9_distractors() {
        let p = ArithmeticProblem::new(Operator::Add, 42, 9);
        assert_eq!(p.answer(), Some(51));
        assert_eq!(p.all_results(), [Some(51), Some(33), Some(378), Some(4)]);
        assert!(p.is_well_formed());
    }

    #[test]
    fn inexact_division_problem_is_rejected() {
        assert!(!ArithmeticProblem::new(Operator::Divide, 42, 9).is_well_formed());
        assert!(ArithmeticProblem::new(Operator::Divide, 45, 9).is_well_formed());
    }

    #[test]
    fn finds_problem_in_text() {
        let p = ArithmeticProblem::find_in("The note reads: add 42 and 9. Then act.").unwrap();
        assert_eq!(p, ArithmeticProblem::new(Operator::Add, 42, 9));
        assert_eq!(ArithmeticProblem::find_in("You take the math problem."), None);
    }
}

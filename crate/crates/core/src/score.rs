//! Exact rational scores.
//!
//! Game progress is always a sum of simple fractions (halves, `1/#items`), so
//! scores and their means are kept as exact rationals. The serialized form is
//! the string `"n/d"` (or `"n"` for integers) so reports compare byte-for-byte.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Score(Ratio<i64>);

impl Score {
    pub const ZERO: Score = Score(Ratio::new_raw(0, 1));
    pub const ONE: Score = Score(Ratio::new_raw(1, 1));
    pub const HALF: Score = Score(Ratio::new_raw(1, 2));

    pub fn new(numer: i64, denom: i64) -> Self {
        Score(Ratio::new(numer, denom))
    }

    pub fn from_integer(n: i64) -> Self {
        Score(Ratio::from_integer(n))
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn to_f64(self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    pub fn is_positive(&self) -> bool {
        self.numer() > 0
    }

    /// Exact arithmetic mean; zero for an empty input.
    pub fn mean<I: IntoIterator<Item = Score>>(values: I) -> Score {
        let mut total = Score::ZERO;
        let mut count = 0i64;
        for v in values {
            total += v;
            count += 1;
        }
        if count == 0 {
            Score::ZERO
        } else {
            Score(total.0 / count)
        }
    }

    /// `self / other`, capped to `[0, 1]`. A zero denominator yields zero.
    pub fn ratio_capped(self, other: Score) -> Score {
        if other.numer() <= 0 {
            return Score::ZERO;
        }
        let r = Score(self.0 / other.0);
        r.clamp(Score::ZERO, Score::ONE)
    }

    /// Parses a decimal literal such as `0.95` exactly (no binary rounding).
    pub fn from_decimal_str(s: &str) -> Option<Score> {
        let s = s.trim();
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        if frac_part.len() > 12 {
            return None;
        }
        let int: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
        let denom = 10i64.checked_pow(frac_part.len() as u32)?;
        let frac: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
        Some(Score::new(int.checked_mul(denom)?.checked_add(frac)?, denom))
    }
}

impl From<Ratio<i64>> for Score {
    fn from(r: Ratio<i64>) -> Self {
        Score(r)
    }
}

impl Add for Score {
    type Output = Score;
    fn add(self, rhs: Score) -> Score {
        Score(self.0 + rhs.0)
    }
}

impl AddAssign for Score {
    fn add_assign(&mut self, rhs: Score) {
        self.0 += rhs.0;
    }
}

impl Sub for Score {
    type Output = Score;
    fn sub(self, rhs: Score) -> Score {
        Score(self.0 - rhs.0)
    }
}

impl Sum for Score {
    fn sum<I: Iterator<Item = Score>>(iter: I) -> Score {
        iter.fold(Score::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid score literal {0:?}")]
pub struct ParseScoreError(String);

impl FromStr for Score {
    type Err = ParseScoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseScoreError(s.to_string());
        match s.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().map_err(|_| err())?;
                let d: i64 = d.trim().parse().map_err(|_| err())?;
                if d == 0 {
                    return Err(err());
                }
                Ok(Score::new(n, d))
            }
            None => Score::from_decimal_str(s)
                .or_else(|| s.trim().strip_prefix('-').and_then(Score::from_decimal_str).map(|v| Score::ZERO - v))
                .ok_or_else(err),
        }
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirds_sum_to_one() {
        let third = Score::new(1, 3);
        assert_eq!(third + third + third, Score::ONE);
    }

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(Score::from_decimal_str("0.95"), Some(Score::new(19, 20)));
        assert_eq!(Score::from_decimal_str("0.4"), Some(Score::new(2, 5)));
        assert_eq!(Score::from_decimal_str("1"), Some(Score::ONE));
        assert_eq!(Score::from_decimal_str("abc"), None);
    }

    #[test]
    fn display_round_trips() {
        for s in [Score::new(3, 8), Score::ONE, Score::ZERO, Score::new(67, 200)] {
            assert_eq!(s.to_string().parse::<Score>().unwrap(), s);
        }
    }

    #[test]
    fn mean_of_empty_is_zero() {
        assert_eq!(Score::mean(Vec::new()), Score::ZERO);
        assert_eq!(Score::mean([Score::ONE, Score::ZERO]), Score::HALF);
    }
}

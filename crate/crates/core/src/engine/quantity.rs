use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Count,
    Mg,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Quantity {
    pub magnitude: u32,
    pub unit: Unit,
}

impl Quantity {
    pub fn count(magnitude: u32) -> Self {
        Quantity { magnitude, unit: Unit::Count }
    }

    pub fn mg(magnitude: u32) -> Self {
        Quantity { magnitude, unit: Unit::Mg }
    }

    pub fn g(magnitude: u32) -> Self {
        Quantity { magnitude, unit: Unit::G }
    }

    /// Reads the leading quantity of an object name: `51 pineapples`,
    /// `23mg of oak`, `2g of marble`.
    pub fn parse_from_name(name: &str) -> Option<Quantity> {
        let digits: String = name.chars().take_while(|c| c.is_ascii_digit()).collect();
        if digits.is_empty() {
            return None;
        }
        let magnitude: u32 = digits.parse().ok()?;
        let rest = &name[digits.len()..];
        if let Some(r) = rest.strip_prefix("mg of ") {
            (!r.is_empty()).then_some(Quantity::mg(magnitude))
        } else if let Some(r) = rest.strip_prefix("g of ") {
            (!r.is_empty()).then_some(Quantity::g(magnitude))
        } else if let Some(r) = rest.strip_prefix(' ') {
            (!r.is_empty()).then_some(Quantity::count(magnitude))
        } else {
            None
        }
    }
}

/// Normalizes to milligrams (grams x 1000); counts are returned unchanged.
pub fn normalize_quantity(q: Quantity) -> u64 {
    match q.unit {
        Unit::Count | Unit::Mg => q.magnitude as u64,
        Unit::G => q.magnitude as u64 * 1000,
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            Unit::Count => write!(f, "{}", self.magnitude),
            Unit::Mg => write!(f, "{}mg", self.magnitude),
            Unit::G => write!(f, "{}g", self.magnitude),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grams_scale_to_milligrams() {
        assert_eq!(normalize_quantity(Quantity::g(2)), 2000);
        assert_eq!(normalize_quantity(Quantity::count(51)), 51);
    }

    #[test]
    fn sorting_example_order() {
        let oak = normalize_quantity(Quantity::mg(23));
        let marble38 = normalize_quantity(Quantity::mg(38));
        let wood = normalize_quantity(Quantity::mg(39));
        let marble2g = normalize_quantity(Quantity::g(2));
        assert!(oak < marble38 && marble38 < wood && wood < marble2g);
    }

    #[test]
    fn parses_names() {
        assert_eq!(Quantity::parse_from_name("51 pineapples"), Some(Quantity::count(51)));
        assert_eq!(Quantity::parse_from_name("23mg of oak"), Some(Quantity::mg(23)));
        assert_eq!(Quantity::parse_from_name("2g of marble"), Some(Quantity::g(2)));
        assert_eq!(Quantity::parse_from_name("math problem"), None);
        assert_eq!(Quantity::parse_from_name("12"), None);
    }
}

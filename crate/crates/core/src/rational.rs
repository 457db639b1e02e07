//! Exact rational numbers used throughout the cost pipeline.

use std::collections::BTreeMap;
use std::fmt;

use num::bigint::BigInt;
use num::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

pub type Rational = num::BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `n`, `-n`, `n/d` or a finite decimal such as `2.5`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(Rational::new(num, den));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if !whole_digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits: BigInt = format!("{whole_digits}{frac}").parse().ok()?;
        let scale = num::pow(BigInt::from(10), frac.len());
        let value = Rational::new(digits, scale);
        return Some(if negative { -value } else { value });
    }
    text.parse::<BigInt>().ok().map(Rational::from_integer)
}

/// Decimal rendering when the expansion terminates, `n/d` otherwise.
pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        return value.numer().to_string();
    }
    let mut den = value.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0usize;
    let mut fives = 0usize;
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let places = twos.max(fives);
    let scaled = value * Rational::from_integer(num::pow(BigInt::from(10), places));
    let digits = scaled.to_integer().abs().to_string();
    let digits = format!("{digits:0>width$}", width = places + 1);
    let (whole, frac) = digits.split_at(digits.len() - places);
    let sign = if value.is_negative() { "-" } else { "" };
    format!("{sign}{whole}.{frac}")
}

/// Fraction-only rendering (`n` or `n/d`), used by the text formats.
pub fn format_fraction(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Wrapper giving a rational a JSON representation: integers as numbers,
/// everything else as a decimal or `n/d` string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(pub Rational);

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_integer() {
            if let Some(n) = self.0.numer().to_i64() {
                return serializer.serialize_i64(n);
            }
        }
        serializer.serialize_str(&format_rational(&self.0))
    }
}

struct ExactVisitor;

impl Visitor<'_> for ExactVisitor {
    type Value = Exact;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a number or a rational string such as \"3/4\"")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Exact, E> {
        Ok(Exact(int(v)))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Exact, E> {
        Ok(Exact(Rational::from_integer(BigInt::from(v))))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Exact, E> {
        if !v.is_finite() {
            return Err(E::custom("non-finite number"));
        }
        // Shortest round-trip text, then exact decimal parse.
        parse_rational(&format!("{v}"))
            .map(Exact)
            .ok_or_else(|| E::custom(format!("cannot represent {v} exactly")))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Exact, E> {
        parse_rational(v)
            .map(Exact)
            .ok_or_else(|| E::custom(format!("invalid rational {v:?}")))
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(ExactVisitor)
    }
}

/// `#[serde(with = ...)]` adapter for a single rational field.
pub mod serde_exact {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        Exact(value.clone()).serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        Exact::deserialize(deserializer).map(|e| e.0)
    }
}

/// `#[serde(with = ...)]` adapter for string-keyed rational maps.
pub mod serde_map {
    use super::*;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<String, Rational>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        let mut out = serializer.serialize_map(Some(map.len()))?;
        for (k, v) in map {
            out.serialize_entry(k, &Exact(v.clone()))?;
        }
        out.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BTreeMap<String, Rational>, D::Error> {
        let raw = BTreeMap::<String, Exact>::deserialize(deserializer)?;
        Ok(raw.into_iter().map(|(k, v)| (k, v.0)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_literal_forms() {
        assert_eq!(parse_rational("42"), Some(int(42)));
        assert_eq!(parse_rational("-7"), Some(int(-7)));
        assert_eq!(parse_rational("3/6"), Some(ratio(1, 2)));
        assert_eq!(parse_rational("2.5"), Some(ratio(5, 2)));
        assert_eq!(parse_rational("-0.25"), Some(ratio(-1, 4)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
        assert_eq!(parse_rational("1."), None);
    }

    #[test]
    fn decimal_with_fraction_fallback() {
        assert_eq!(format_rational(&int(26)), "26");
        assert_eq!(format_rational(&ratio(5, 2)), "2.5");
        assert_eq!(format_rational(&ratio(-1, 8)), "-0.125");
        assert_eq!(format_rational(&ratio(3, 40)), "0.075");
        assert_eq!(format_rational(&ratio(1, 3)), "1/3");
    }

    #[test]
    fn json_forms() {
        let v: Exact = serde_json::from_str("12").unwrap();
        assert_eq!(v.0, int(12));
        let v: Exact = serde_json::from_str("0.5").unwrap();
        assert_eq!(v.0, ratio(1, 2));
        let v: Exact = serde_json::from_str("\"2/3\"").unwrap();
        assert_eq!(v.0, ratio(2, 3));
        assert_eq!(serde_json::to_string(&Exact(int(3))).unwrap(), "3");
        assert_eq!(serde_json::to_string(&Exact(ratio(1, 3))).unwrap(), "\"1/3\"");
    }
}

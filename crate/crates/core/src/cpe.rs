//! CPE 2.2 URI names.
//!
//! A name is `cpe:/<part>:<vendor>:<product>:<version>:<update>:<edition>:<language>`.
//! Trailing components may be omitted and an empty component means ANY.
//! Component values are normalized to lowercase with whitespace runs folded
//! into a single underscore, so matching is case-insensitive.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CpeError;

const PREFIX: &str = "cpe:/";

/// Normalize a raw component token.
///
/// Lowercases, trims, joins whitespace-separated words with `_` and replaces
/// `:` with `_`. Idempotent.
pub fn normalize_token(raw: &str) -> String {
    raw.split_whitespace()
        .map(|w| w.to_lowercase().replace(':', "_"))
        .collect::<Vec<_>>()
        .join("_")
}

/// One CPE component: either ANY or a normalized, non-empty value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Component {
    #[default]
    Any,
    Value(String),
}

impl Component {
    /// Builds a component from raw text. Empty (after normalization) is ANY.
    pub fn new(raw: &str) -> Self {
        let v = normalize_token(raw);
        if v.is_empty() {
            Component::Any
        } else {
            Component::Value(v)
        }
    }

    pub fn is_any(&self) -> bool {
        matches!(self, Component::Any)
    }

    pub fn value(&self) -> Option<&str> {
        match self {
            Component::Any => None,
            Component::Value(v) => Some(v),
        }
    }

    /// ANY on either side matches; otherwise values must be equal.
    pub fn matches(&self, other: &Component) -> bool {
        match (self, other) {
            (Component::Any, _) | (_, Component::Any) => true,
            (Component::Value(a), Component::Value(b)) => a == b,
        }
    }

    fn as_uri_segment(&self) -> &str {
        self.value().unwrap_or("")
    }
}

impl From<&str> for Component {
    fn from(raw: &str) -> Self {
        Component::new(raw)
    }
}

/// The platform part of a name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Part {
    #[serde(rename = "o")]
    OperatingSystem,
    #[serde(rename = "a")]
    Application,
    #[serde(rename = "h")]
    Hardware,
}

impl Part {
    pub fn letter(self) -> char {
        match self {
            Part::OperatingSystem => 'o',
            Part::Application => 'a',
            Part::Hardware => 'h',
        }
    }

    pub fn from_letter(s: &str) -> Option<Self> {
        match s {
            "o" | "O" => Some(Part::OperatingSystem),
            "a" | "A" => Some(Part::Application),
            "h" | "H" => Some(Part::Hardware),
            _ => None,
        }
    }
}

/// A structured CPE 2.2 name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CpeName {
    pub part: Part,
    pub vendor: Component,
    pub product: Component,
    pub version: Component,
    pub update: Component,
    pub edition: Component,
    pub language: Component,
}

impl CpeName {
    /// A name with every component ANY.
    pub fn any(part: Part) -> Self {
        CpeName {
            part,
            vendor: Component::Any,
            product: Component::Any,
            version: Component::Any,
            update: Component::Any,
            edition: Component::Any,
            language: Component::Any,
        }
    }

    /// Convenience constructor for the common part/vendor/product/version shape.
    pub fn new(part: Part, vendor: &str, product: &str, version: &str) -> Self {
        CpeName {
            vendor: vendor.into(),
            product: product.into(),
            version: version.into(),
            ..CpeName::any(part)
        }
    }

    pub fn components(&self) -> [&Component; 6] {
        [
            &self.vendor,
            &self.product,
            &self.version,
            &self.update,
            &self.edition,
            &self.language,
        ]
    }

    fn components_mut(&mut self) -> [&mut Component; 6] {
        [
            &mut self.vendor,
            &mut self.product,
            &mut self.version,
            &mut self.update,
            &mut self.edition,
            &mut self.language,
        ]
    }

    /// Parses a CPE 2.2 URI.
    pub fn parse(text: &str) -> Result<Self, CpeError> {
        let rest = text
            .trim()
            .strip_prefix(PREFIX)
            .ok_or_else(|| CpeError::BadPrefix(text.to_string()))?;
        let mut segments = rest.split(':');
        let part_seg = segments.next().unwrap_or("");
        let part =
            Part::from_letter(part_seg).ok_or_else(|| CpeError::BadPart(part_seg.to_string()))?;
        let values: Vec<&str> = segments.collect();
        if values.len() > 6 {
            return Err(CpeError::TooManyComponents {
                segment: values[6..].join(":"),
            });
        }
        let mut name = CpeName::any(part);
        for (slot, raw) in name.components_mut().into_iter().zip(values) {
            *slot = Component::new(raw);
        }
        Ok(name)
    }

    /// Shortest URI form: trailing ANY components are dropped.
    pub fn to_uri(&self) -> String {
        let comps = self.components();
        let keep = comps.iter().rposition(|c| !c.is_any()).map_or(0, |i| i + 1);
        let mut out = String::with_capacity(32);
        out.push_str(PREFIX);
        out.push(self.part.letter());
        for c in &comps[..keep] {
            out.push(':');
            out.push_str(c.as_uri_segment());
        }
        out
    }

    /// Component-wise match: equal parts, and each component pair either has
    /// an ANY side or equal values.
    pub fn matches(&self, other: &CpeName) -> bool {
        self.part == other.part
            && self
                .components()
                .iter()
                .zip(other.components())
                .all(|(a, b)| a.matches(b))
    }
}

pub fn parse_cpe_uri(text: &str) -> Result<CpeName, CpeError> {
    CpeName::parse(text)
}

pub fn format_cpe_uri(name: &CpeName) -> String {
    name.to_uri()
}

pub fn cpe_matches(generated: &CpeName, applicability: &CpeName) -> bool {
    generated.matches(applicability)
}

impl fmt::Display for CpeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_uri())
    }
}

impl FromStr for CpeName {
    type Err = CpeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CpeName::parse(s)
    }
}

impl Serialize for CpeName {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_uri())
    }
}

impl<'de> Deserialize<'de> for CpeName {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        CpeName::parse(&s).map_err(serde::de::Error::custom)
    }
}

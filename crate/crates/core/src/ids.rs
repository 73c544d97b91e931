//! Identifiers shared by every document type.
//!
//! All identifiers are lowercase kebab-case (`[a-z0-9-]+`). Free-form input
//! is normalized before validation: surrounding whitespace is trimmed, ASCII
//! letters are lowercased, and runs of whitespace or underscores become a
//! single `-`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("identifier is empty")]
    Empty,
    #[error("identifier {0:?} must match [a-z0-9-]+")]
    InvalidChars(String),
    #[error("pattern reference {0:?} must have the form language/pattern")]
    MalformedRef(String),
}

/// Normalizes free-form text into identifier form without validating it.
pub fn normalize(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_dash = false;
    for ch in raw.trim().chars() {
        if ch.is_whitespace() || ch == '_' {
            pending_dash = true;
            continue;
        }
        if pending_dash {
            out.push('-');
            pending_dash = false;
        }
        out.extend(ch.to_lowercase());
    }
    out
}

pub fn is_valid(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
}

pub fn check(id: &str) -> Result<(), IdError> {
    if id.is_empty() {
        Err(IdError::Empty)
    } else if is_valid(id) {
        Ok(())
    } else {
        Err(IdError::InvalidChars(id.to_string()))
    }
}

/// Normalizes and validates in one step.
pub fn parse_id(raw: &str) -> Result<String, IdError> {
    let id = normalize(raw);
    check(&id)?;
    Ok(id)
}

/// Derives an identifier from a display name, dropping characters that
/// cannot appear in identifiers. Returns `None` if nothing usable remains.
pub fn slugify(name: &str) -> Option<String> {
    let mut out = String::new();
    for ch in name.trim().chars().flat_map(char::to_lowercase) {
        if ch.is_ascii_lowercase() || ch.is_ascii_digit() {
            out.push(ch);
        } else if !out.is_empty() && !out.ends_with('-') {
            out.push('-');
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    (!out.is_empty()).then_some(out)
}

/// Address of a pattern inside an atlas, written `language_id/pattern_id`.
///
/// Ordering follows the canonical text form so that sorted refs and sorted
/// strings always agree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PatternRef {
    language: String,
    pattern: String,
}

impl PatternRef {
    pub fn new(language: &str, pattern: &str) -> Result<Self, IdError> {
        Ok(PatternRef {
            language: parse_id(language)?,
            pattern: parse_id(pattern)?,
        })
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    fn canonical_bytes(&self) -> impl Iterator<Item = u8> + '_ {
        self.language
            .bytes()
            .chain(std::iter::once(b'/'))
            .chain(self.pattern.bytes())
    }
}

impl Ord for PatternRef {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical_bytes().cmp(other.canonical_bytes())
    }
}

impl PartialOrd for PatternRef {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PatternRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.language, self.pattern)
    }
}

impl FromStr for PatternRef {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (language, pattern) = s
            .split_once('/')
            .ok_or_else(|| IdError::MalformedRef(s.to_string()))?;
        if pattern.contains('/') {
            return Err(IdError::MalformedRef(s.to_string()));
        }
        PatternRef::new(language, pattern)
    }
}

impl Serialize for PatternRef {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PatternRef {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// An atomic statement about the architectural situation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactId(String);

impl FactId {
    pub fn new(raw: &str) -> Result<Self, IdError> {
        parse_id(raw).map(FactId)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for FactId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FactId::new(s)
    }
}

impl Serialize for FactId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for FactId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        FactId::new(&raw).map_err(serde::de::Error::custom)
    }
}

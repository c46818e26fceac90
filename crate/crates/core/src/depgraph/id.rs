use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Ecosystem tags accepted in library ids.
pub const ECOSYSTEMS: &[&str] = &[
    "cargo",
    "composer",
    "gem",
    "go",
    "hex",
    "maven",
    "npm",
    "nuget",
    "pub",
    "pypi",
];

pub fn is_registered_ecosystem(tag: &str) -> bool {
    ECOSYSTEMS.contains(&tag)
}

/// A library identity of the form `ecosystem:name[@version]`.
///
/// Names may start with `@` (npm scopes) but must not contain `@` anywhere
/// else, so the string form always splits back unambiguously.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LibraryId {
    ecosystem: String,
    name: String,
    version: Option<String>,
}

impl LibraryId {
    pub fn new(ecosystem: &str, name: &str, version: Option<&str>) -> Result<Self> {
        if !is_registered_ecosystem(ecosystem) {
            return Err(Error::validation(format!(
                "unknown ecosystem tag {ecosystem:?} (expected one of {})",
                ECOSYSTEMS.join(", ")
            )));
        }
        if name.is_empty() {
            return Err(Error::validation("library name must be nonempty"));
        }
        if name.chars().skip(1).any(|c| c == '@') || name.chars().any(char::is_whitespace) {
            return Err(Error::validation(format!("invalid library name {name:?}")));
        }
        if let Some(v) = version {
            if v.is_empty() || v.contains('@') || v.chars().any(char::is_whitespace) {
                return Err(Error::validation(format!("invalid version {v:?} for {name}")));
            }
        }
        Ok(Self {
            ecosystem: ecosystem.to_string(),
            name: name.to_string(),
            version: version.map(str::to_string),
        })
    }

    pub fn ecosystem(&self) -> &str {
        &self.ecosystem
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn version(&self) -> Option<&str> {
        self.version.as_deref()
    }
}

impl fmt::Display for LibraryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.ecosystem, self.name)?;
        if let Some(v) = &self.version {
            write!(f, "@{v}")?;
        }
        Ok(())
    }
}

impl FromStr for LibraryId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (eco, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::validation(format!("library id {s:?} lacks an ecosystem prefix")))?;
        // An '@' at index 0 belongs to a scoped name, never to the version.
        match rest.rfind('@') {
            Some(pos) if pos > 0 => LibraryId::new(eco, &rest[..pos], Some(&rest[pos + 1..])),
            _ => LibraryId::new(eco, rest, None),
        }
    }
}

impl Serialize for LibraryId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LibraryId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

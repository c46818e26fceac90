//! Canonical JSON dependency snapshot.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::id::{is_registered_ecosystem, LibraryId};
use crate::error::{Error, Result};
use crate::metrics::RepoRef;

pub const SNAPSHOT_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryRecord {
    pub id: LibraryId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repo: Option<RepoRef>,
    #[serde(rename = "deps", default)]
    pub direct_deps: Vec<LibraryId>,
}

/// An application's libraries and their declared dependency links.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencySnapshot {
    pub format_version: u64,
    pub ecosystem: String,
    pub libraries: Vec<LibraryRecord>,
    pub roots: Vec<LibraryId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSnapshot {
    pub snapshot: DependencySnapshot,
    /// Unknown keys that were skipped, as dotted paths.
    pub warnings: Vec<String>,
}

// Mirrors the public types but captures unknown keys instead of rejecting them.
#[derive(Deserialize)]
struct RawSnapshot {
    format_version: u64,
    ecosystem: String,
    libraries: Vec<RawRecord>,
    roots: Vec<LibraryId>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct RawRecord {
    id: LibraryId,
    #[serde(default)]
    repo: Option<RepoRef>,
    #[serde(default)]
    deps: Vec<LibraryId>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

pub fn parse_snapshot(bytes: &[u8]) -> Result<DependencySnapshot> {
    parse_snapshot_with_warnings(bytes).map(|p| p.snapshot)
}

pub fn parse_snapshot_with_warnings(bytes: &[u8]) -> Result<ParsedSnapshot> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let (line, column) = line_col(bytes, e.valid_up_to());
        Error::Parse {
            line,
            column,
            message: "input is not valid UTF-8".into(),
        }
    })?;

    // Check the version before the full decode so newer files fail with a
    // version error rather than a confusing schema error.
    let value: Value = serde_json::from_str(text).map_err(Error::from_json)?;
    if let Some(v) = value.get("format_version").and_then(Value::as_u64) {
        if v != SNAPSHOT_FORMAT_VERSION {
            return Err(Error::Version {
                found: v,
                supported: SNAPSHOT_FORMAT_VERSION,
            });
        }
    }
    let raw: RawSnapshot = serde_json::from_str(text).map_err(Error::from_json)?;

    let mut warnings: Vec<String> = raw
        .extra
        .keys()
        .map(|k| format!("ignored unknown key `{k}`"))
        .collect();
    let mut libraries = Vec::with_capacity(raw.libraries.len());
    for (i, rec) in raw.libraries.into_iter().enumerate() {
        warnings.extend(
            rec.extra
                .keys()
                .map(|k| format!("ignored unknown key `libraries[{i}].{k}`")),
        );
        libraries.push(LibraryRecord {
            id: rec.id,
            repo: rec.repo,
            direct_deps: rec.deps,
        });
    }

    let snapshot = DependencySnapshot {
        format_version: raw.format_version,
        ecosystem: raw.ecosystem,
        libraries,
        roots: raw.roots,
    };
    snapshot.validate()?;
    Ok(ParsedSnapshot { snapshot, warnings })
}

impl DependencySnapshot {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != SNAPSHOT_FORMAT_VERSION {
            return Err(Error::Version {
                found: self.format_version,
                supported: SNAPSHOT_FORMAT_VERSION,
            });
        }
        if !is_registered_ecosystem(&self.ecosystem) {
            return Err(Error::validation(format!(
                "unknown snapshot ecosystem {:?}",
                self.ecosystem
            )));
        }
        let mut declared = BTreeSet::new();
        for rec in &self.libraries {
            if !declared.insert(&rec.id) {
                return Err(Error::validation(format!("duplicate library id {}", rec.id)));
            }
            if let Some(repo) = &rec.repo {
                repo.validate()?;
            }
        }
        for rec in &self.libraries {
            for dep in &rec.direct_deps {
                if !declared.contains(dep) {
                    return Err(Error::validation(format!(
                        "{} depends on undeclared library {dep}",
                        rec.id
                    )));
                }
            }
        }
        for root in &self.roots {
            if !declared.contains(root) {
                return Err(Error::validation(format!("root {root} is not a declared library")));
            }
        }
        Ok(())
    }

    pub fn record(&self, id: &LibraryId) -> Option<&LibraryRecord> {
        self.libraries.iter().find(|r| &r.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serialization is infallible")
    }
}

fn line_col(bytes: &[u8], offset: usize) -> (usize, usize) {
    let before = &bytes[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let column = offset - before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

//! Rule-based ground-truth labeling.
//!
//! Rules are tried in precedence order and the first match wins:
//!
//! | rule | label            | guard |
//! |------|------------------|-------|
//! | R0   | Inactive         | archived, or README declares deprecation |
//! | R1   | Active           | ≥ 1 commit in 90 days and last commit ≤ 90 days ago |
//! | R2   | Dormant          | last commit 91..=365 days ago, with prior activity |
//! | R3   | FeatureComplete  | last commit > 365 days ago, but README declares it stable or issues get a first response within 14 days |
//! | R4   | Inactive         | everything else |
//!
//! All day and hour limits come from [`Thresholds`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, Thresholds};
use crate::error::Error;

/// Maintenance-activity state. Declaration order is the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaintenanceLabel {
    Active,
    FeatureComplete,
    Dormant,
    Inactive,
}

impl MaintenanceLabel {
    pub const ALL: [MaintenanceLabel; 4] = [
        MaintenanceLabel::Active,
        MaintenanceLabel::FeatureComplete,
        MaintenanceLabel::Dormant,
        MaintenanceLabel::Inactive,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MaintenanceLabel::Active => "active",
            MaintenanceLabel::FeatureComplete => "feature_complete",
            MaintenanceLabel::Dormant => "dormant",
            MaintenanceLabel::Inactive => "inactive",
        }
    }

    /// Active and FeatureComplete count as maintained in binary evaluation.
    pub fn is_maintained(self) -> bool {
        matches!(self, MaintenanceLabel::Active | MaintenanceLabel::FeatureComplete)
    }
}

impl fmt::Display for MaintenanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaintenanceLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::validation(format!("unknown maintenance label {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    R0ArchivedOrDeprecated,
    R1RecentCommits,
    R2Dormant,
    R3FeatureComplete,
    R4Fallback,
}

impl Rule {
    pub const PRECEDENCE: [Rule; 5] = [
        Rule::R0ArchivedOrDeprecated,
        Rule::R1RecentCommits,
        Rule::R2Dormant,
        Rule::R3FeatureComplete,
        Rule::R4Fallback,
    ];

    pub fn label(self) -> MaintenanceLabel {
        match self {
            Rule::R0ArchivedOrDeprecated | Rule::R4Fallback => MaintenanceLabel::Inactive,
            Rule::R1RecentCommits => MaintenanceLabel::Active,
            Rule::R2Dormant => MaintenanceLabel::Dormant,
            Rule::R3FeatureComplete => MaintenanceLabel::FeatureComplete,
        }
    }

    /// The rule's own guard, ignoring precedence.
    pub fn guard(self, fv: &FeatureVector, t: &Thresholds) -> bool {
        let active = t.active_days as f64;
        let dormant = t.dormant_days as f64;
        let idle = fv.days_since_last_commit;
        match self {
            Rule::R0ArchivedOrDeprecated => fv.archived || fv.readme_deprecated,
            Rule::R1RecentCommits => fv.commits_90d >= 1.0 && idle <= active,
            Rule::R2Dormant => {
                let prior_activity = fv.commits_365d >= 1.0
                    || (fv.project_age_days > dormant && idle < fv.project_age_days);
                idle > active && idle <= dormant && prior_activity
            }
            Rule::R3FeatureComplete => {
                let responsive = fv.has_response_data() && fv.median_issue_response_hours <= t.responsive_hours;
                idle > dormant && (fv.readme_stable_declared || responsive)
            }
            Rule::R4Fallback => true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelingStrategy {
    pub thresholds: Thresholds,
}

impl LabelingStrategy {
    pub fn new(thresholds: Thresholds) -> Self {
        Self { thresholds }
    }

    pub fn rule(&self, fv: &FeatureVector) -> Rule {
        Rule::PRECEDENCE
            .into_iter()
            .find(|r| r.guard(fv, &self.thresholds))
            .expect("R4 always matches")
    }

    pub fn label(&self, fv: &FeatureVector) -> MaintenanceLabel {
        self.rule(fv).label()
    }
}

pub fn apply_labeling_strategy(features: &FeatureVector) -> MaintenanceLabel {
    LabelingStrategy::default().label(features)
}

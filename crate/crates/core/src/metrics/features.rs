//! Maintenance-activity feature extraction.
//!
//! Trailing windows are evaluated on weekly buckets: a bucket belongs to the
//! N-day window ending at `as_of` when its `week_start` lies in
//! `[as_of - N days, as_of]`. A 30-day window therefore spans four or five
//! whole weeks rather than exactly 30 days.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::activity::{ActivityTimeSeries, WeekBucket};
use crate::error::{Error, Result};

/// Sentinel for "no issue-response data".
pub const NO_DATA: f64 = -1.0;

pub const FEATURE_SCHEMA_VERSION: u32 = 1;

pub const FEATURE_NAMES: [&str; FeatureVector::LEN] = [
    "commits_30d",
    "commits_90d",
    "commits_365d",
    "contributors_365d",
    "core_contributors_365d",
    "days_since_last_commit",
    "days_since_last_release",
    "releases_365d",
    "issues_opened_365d",
    "issues_closed_365d",
    "issue_close_ratio_365d",
    "median_issue_response_hours",
    "stars_total",
    "project_age_days",
    "archived",
    "readme_deprecated",
    "readme_stable_declared",
];

/// Names and version of the feature layout a dataset or model was built on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: u32,
    pub names: Vec<String>,
}

impl FeatureSchema {
    pub fn current() -> Self {
        Self {
            version: FEATURE_SCHEMA_VERSION,
            names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

impl Default for FeatureSchema {
    fn default() -> Self {
        Self::current()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub commits_30d: f64,
    pub commits_90d: f64,
    pub commits_365d: f64,
    pub contributors_365d: f64,
    pub core_contributors_365d: f64,
    pub days_since_last_commit: f64,
    pub days_since_last_release: f64,
    pub releases_365d: f64,
    pub issues_opened_365d: f64,
    pub issues_closed_365d: f64,
    pub issue_close_ratio_365d: f64,
    pub median_issue_response_hours: f64,
    pub stars_total: f64,
    pub project_age_days: f64,
    pub archived: bool,
    pub readme_deprecated: bool,
    pub readme_stable_declared: bool,
}

impl FeatureVector {
    pub const LEN: usize = 17;

    /// Numeric encoding in [`FEATURE_NAMES`] order; flags become 0/1.
    pub fn to_array(&self) -> [f64; Self::LEN] {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        [
            self.commits_30d,
            self.commits_90d,
            self.commits_365d,
            self.contributors_365d,
            self.core_contributors_365d,
            self.days_since_last_commit,
            self.days_since_last_release,
            self.releases_365d,
            self.issues_opened_365d,
            self.issues_closed_365d,
            self.issue_close_ratio_365d,
            self.median_issue_response_hours,
            self.stars_total,
            self.project_age_days,
            flag(self.archived),
            flag(self.readme_deprecated),
            flag(self.readme_stable_declared),
        ]
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() != Self::LEN {
            return Err(Error::validation(format!(
                "feature vector needs {} values, got {}",
                Self::LEN,
                values.len()
            )));
        }
        let v = values;
        let fv = Self {
            commits_30d: v[0],
            commits_90d: v[1],
            commits_365d: v[2],
            contributors_365d: v[3],
            core_contributors_365d: v[4],
            days_since_last_commit: v[5],
            days_since_last_release: v[6],
            releases_365d: v[7],
            issues_opened_365d: v[8],
            issues_closed_365d: v[9],
            issue_close_ratio_365d: v[10],
            median_issue_response_hours: v[11],
            stars_total: v[12],
            project_age_days: v[13],
            archived: v[14] != 0.0,
            readme_deprecated: v[15] != 0.0,
            readme_stable_declared: v[16] != 0.0,
        };
        fv.validate()?;
        Ok(fv)
    }

    pub fn validate(&self) -> Result<()> {
        let values = self.to_array();
        for (name, value) in FEATURE_NAMES.iter().zip(values) {
            if !value.is_finite() {
                return Err(Error::validation(format!("feature {name} is not finite")));
            }
            let may_be_sentinel = *name == "median_issue_response_hours" && value == NO_DATA;
            if value < 0.0 && !may_be_sentinel {
                return Err(Error::validation(format!("feature {name} is negative ({value})")));
            }
        }
        if !(0.0..=1.0).contains(&self.issue_close_ratio_365d) {
            return Err(Error::validation("issue_close_ratio_365d outside [0, 1]"));
        }
        Ok(())
    }

    pub fn has_response_data(&self) -> bool {
        self.median_issue_response_hours >= 0.0
    }
}

/// Tunable constants of feature extraction and the labeling rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Max days since last commit for a project to count as active.
    pub active_days: u32,
    /// Max days since last commit for dormant; beyond it a project is long-idle.
    pub dormant_days: u32,
    /// Median first-response time (hours) that still counts as a responsive community.
    pub responsive_hours: f64,
    /// Commit share the core contributor set must account for.
    pub core_share: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            active_days: 90,
            dormant_days: 365,
            responsive_hours: 336.0,
            core_share: 0.8,
        }
    }
}

pub fn compute_features(activity: &ActivityTimeSeries, as_of: NaiveDate) -> Result<FeatureVector> {
    compute_features_with(activity, as_of, &Thresholds::default())
}

pub fn compute_features_with(
    activity: &ActivityTimeSeries,
    as_of: NaiveDate,
    thresholds: &Thresholds,
) -> Result<FeatureVector> {
    if as_of < activity.created_at {
        return Err(Error::Domain(format!(
            "as_of {as_of} precedes creation of {} on {}",
            activity.repo, activity.created_at
        )));
    }
    let age = (as_of - activity.created_at).num_days() as f64;
    let visible: Vec<&WeekBucket> = activity.weeks.iter().filter(|w| w.week_start <= as_of).collect();
    let window = |days: i64| {
        let from = as_of - Duration::days(days);
        visible.iter().copied().filter(move |w| w.week_start >= from)
    };
    let sum = |days: i64, f: fn(&WeekBucket) -> u32| window(days).map(|w| f(w) as f64).sum::<f64>();

    let commits_365d = sum(365, |w| w.commits);
    let (contributors, core) = contributor_counts(window(365), thresholds.core_share);

    let days_since_last_commit = visible
        .iter()
        .rev()
        .find(|w| w.commits > 0)
        .map_or(age, |w| (as_of - w.week_start).num_days() as f64);

    let past_releases = activity.releases.iter().filter(|d| **d <= as_of);
    let days_since_last_release = past_releases
        .clone()
        .max()
        .map_or(age, |d| (as_of - *d).num_days() as f64);
    let release_floor = as_of - Duration::days(365);
    let releases_365d = past_releases.filter(|d| **d >= release_floor).count() as f64;

    let opened = sum(365, |w| w.issues_opened);
    let closed = sum(365, |w| w.issues_closed);
    let ratio = if opened == 0.0 { 1.0 } else { (closed / opened).min(1.0) };

    let fv = FeatureVector {
        commits_30d: sum(30, |w| w.commits),
        commits_90d: sum(90, |w| w.commits),
        commits_365d,
        contributors_365d: contributors,
        core_contributors_365d: core,
        days_since_last_commit,
        days_since_last_release,
        releases_365d,
        issues_opened_365d: opened,
        issues_closed_365d: closed,
        issue_close_ratio_365d: ratio,
        median_issue_response_hours: median(&activity.issue_response_samples).unwrap_or(NO_DATA),
        stars_total: visible.last().map_or(0.0, |w| w.stars_total as f64),
        project_age_days: age,
        archived: activity.archived_at.is_some_and(|d| d <= as_of),
        readme_deprecated: activity.readme_deprecated,
        readme_stable_declared: activity.readme_stable_declared,
    };
    fv.validate()?;
    Ok(fv)
}

/// Distinct and core contributor counts over the given weeks.
///
/// With a complete per-author breakdown the core set is the smallest set of
/// authors whose commits reach `share` of the total, taking heavier
/// committers first and alphabetically smaller ids on equal counts. Weeks
/// that only carry totals degrade this to the peak weekly contributor count,
/// with the core size estimated as if commits were spread evenly.
fn contributor_counts<'a>(weeks: impl Iterator<Item = &'a WeekBucket>, share: f64) -> (f64, f64) {
    let mut per_author: BTreeMap<&str, u64> = BTreeMap::new();
    let mut complete = true;
    let mut peak_weekly = 0u32;
    let mut total = 0u64;
    for w in weeks {
        complete &= w.has_author_breakdown();
        peak_weekly = peak_weekly.max(w.active_contributors);
        total += w.commits as u64;
        for (author, n) in &w.authors {
            *per_author.entry(author.as_str()).or_default() += *n as u64;
        }
    }
    if total == 0 {
        return (per_author.len().max(peak_weekly as usize) as f64, 0.0);
    }
    if !complete {
        let contributors = (per_author.len() as u32).max(peak_weekly).max(1);
        let core = (share * contributors as f64).ceil().clamp(1.0, contributors as f64);
        return (contributors as f64, core);
    }
    let mut ranked: Vec<(&str, u64)> = per_author.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let needed = share * total as f64;
    let mut acc = 0u64;
    let mut core = 0;
    for (_, n) in &ranked {
        acc += n;
        core += 1;
        if acc as f64 >= needed {
            break;
        }
    }
    (ranked.len() as f64, core as f64)
}

pub(crate) fn median(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    })
}

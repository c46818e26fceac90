use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Location of a library's source repository on a forge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RepoRef {
    pub host: String,
    pub owner: String,
    pub name: String,
}

impl RepoRef {
    pub fn new(host: &str, owner: &str, name: &str) -> Result<Self> {
        let repo = Self {
            host: host.into(),
            owner: owner.into(),
            name: name.into(),
        };
        repo.validate()?;
        Ok(repo)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, value) in [("host", &self.host), ("owner", &self.owner), ("name", &self.name)] {
            if value.is_empty() {
                return Err(Error::validation(format!("repo {field} must be nonempty")));
            }
            if value.contains(['/', '\\']) || value == ".." {
                return Err(Error::validation(format!("repo {field} {value:?} is not a plain path segment")));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for RepoRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.host, self.owner, self.name)
    }
}

/// One Monday-start week of repository activity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeekBucket {
    pub week_start: NaiveDate,
    pub commits: u32,
    pub active_contributors: u32,
    pub issues_opened: u32,
    pub issues_closed: u32,
    pub stars_total: u32,
    /// Optional per-author commit counts for the week. When present it must
    /// sum to `commits` and have `active_contributors` entries.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub authors: BTreeMap<String, u32>,
}

impl WeekBucket {
    pub fn empty(week_start: NaiveDate, stars_total: u32) -> Self {
        Self {
            week_start,
            commits: 0,
            active_contributors: 0,
            issues_opened: 0,
            issues_closed: 0,
            stars_total,
            authors: BTreeMap::new(),
        }
    }

    pub fn has_author_breakdown(&self) -> bool {
        self.commits == 0 || !self.authors.is_empty()
    }
}

/// Weekly activity history of one repository.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityTimeSeries {
    pub repo: RepoRef,
    pub created_at: NaiveDate,
    pub weeks: Vec<WeekBucket>,
    #[serde(default)]
    pub releases: Vec<NaiveDate>,
    /// Hours until the first maintainer response, one sample per issue.
    #[serde(rename = "issue_response_samples_hours", default)]
    pub issue_response_samples: Vec<f64>,
    #[serde(default)]
    pub archived_at: Option<NaiveDate>,
    #[serde(default)]
    pub readme_deprecated: bool,
    #[serde(default)]
    pub readme_stable_declared: bool,
}

/// Monday on or before `date`.
pub fn week_start_of(date: NaiveDate) -> NaiveDate {
    date - Duration::days(date.weekday().num_days_from_monday() as i64)
}

impl ActivityTimeSeries {
    pub fn validate(&self) -> Result<()> {
        self.repo.validate()?;
        let mut prev: Option<NaiveDate> = None;
        for w in &self.weeks {
            if w.week_start.weekday() != chrono::Weekday::Mon {
                return Err(Error::validation(format!(
                    "{}: week_start {} is not a Monday",
                    self.repo, w.week_start
                )));
            }
            if let Some(p) = prev {
                if w.week_start - p != Duration::days(7) {
                    return Err(Error::validation(format!(
                        "{}: weeks not contiguous between {p} and {}",
                        self.repo, w.week_start
                    )));
                }
            }
            if !w.authors.is_empty() {
                let total: u32 = w.authors.values().sum();
                if total != w.commits || w.authors.len() as u32 != w.active_contributors {
                    return Err(Error::validation(format!(
                        "{}: author breakdown for week {} disagrees with its totals",
                        self.repo, w.week_start
                    )));
                }
            }
            prev = Some(w.week_start);
        }
        if let Some(archived) = self.archived_at {
            if archived < self.created_at {
                return Err(Error::validation(format!(
                    "{}: archived_at {archived} precedes created_at {}",
                    self.repo, self.created_at
                )));
            }
        }
        if let Some(bad) = self
            .issue_response_samples
            .iter()
            .find(|h| !h.is_finite() || **h < 0.0)
        {
            return Err(Error::validation(format!(
                "{}: invalid issue response sample {bad}",
                self.repo
            )));
        }
        Ok(())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let series: Self = serde_json::from_slice(bytes).map_err(Error::from_json)?;
        series.validate()?;
        Ok(series)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("activity serialization is infallible")
    }

    /// Weekly values of one dynamic metric, oldest first.
    pub fn metric_series(&self, metric: WeeklyMetric) -> Vec<f64> {
        self.weeks.iter().map(|w| metric.get(w) as f64).collect()
    }

    /// Restricts the series to the weeks intersecting `[start, end]`, padding
    /// missing weeks (never before the creation week) with zero buckets.
    pub fn clip_to(&self, start: NaiveDate, end: NaiveDate) -> Self {
        let first = week_start_of(start).max(week_start_of(self.created_at));
        let last = week_start_of(end);
        let by_start: BTreeMap<NaiveDate, &WeekBucket> =
            self.weeks.iter().map(|w| (w.week_start, w)).collect();
        let mut weeks = Vec::new();
        let mut stars = self
            .weeks
            .iter()
            .take_while(|w| w.week_start < first)
            .last()
            .map_or(0, |w| w.stars_total);
        let mut cursor = first;
        while cursor <= last {
            match by_start.get(&cursor) {
                Some(w) => {
                    stars = w.stars_total;
                    weeks.push((*w).clone());
                }
                None => weeks.push(WeekBucket::empty(cursor, stars)),
            }
            cursor += Duration::days(7);
        }
        Self {
            repo: self.repo.clone(),
            created_at: self.created_at,
            weeks,
            releases: self
                .releases
                .iter()
                .copied()
                .filter(|d| *d >= start && *d <= end)
                .collect(),
            issue_response_samples: self.issue_response_samples.clone(),
            archived_at: self.archived_at,
            readme_deprecated: self.readme_deprecated,
            readme_stable_declared: self.readme_stable_declared,
        }
    }
}

/// Dynamic weekly metrics that the forecaster projects forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeeklyMetric {
    Commits,
    ActiveContributors,
    IssuesOpened,
    IssuesClosed,
}

impl WeeklyMetric {
    pub const ALL: [WeeklyMetric; 4] = [
        WeeklyMetric::Commits,
        WeeklyMetric::ActiveContributors,
        WeeklyMetric::IssuesOpened,
        WeeklyMetric::IssuesClosed,
    ];

    pub fn get(self, w: &WeekBucket) -> u32 {
        match self {
            WeeklyMetric::Commits => w.commits,
            WeeklyMetric::ActiveContributors => w.active_contributors,
            WeeklyMetric::IssuesOpened => w.issues_opened,
            WeeklyMetric::IssuesClosed => w.issues_closed,
        }
    }

    pub fn set(self, w: &mut WeekBucket, value: u32) {
        match self {
            WeeklyMetric::Commits => w.commits = value,
            WeeklyMetric::ActiveContributors => w.active_contributors = value,
            WeeklyMetric::IssuesOpened => w.issues_opened = value,
            WeeklyMetric::IssuesClosed => w.issues_closed = value,
        }
    }
}

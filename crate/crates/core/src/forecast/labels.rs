use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::model::{fit, Domain, Horizon, Method};
use crate::classify::{LabelDistribution, Labeler};
use crate::error::{Error, Result};
use crate::metrics::{
    compute_features_with, week_start_of, ActivityTimeSeries, FeatureVector, MaintenanceLabel, Thresholds,
    WeekBucket, WeeklyMetric,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastConfig {
    pub method: Method,
    /// Trailing weeks (ending at the as-of week) used to fit each metric.
    pub fit_window_weeks: usize,
    pub thresholds: Thresholds,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            method: Method::LinearTrend,
            fit_window_weeks: 26,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonLabel {
    pub horizon_months: u32,
    pub as_of: NaiveDate,
    pub label: MaintenanceLabel,
    pub distribution: LabelDistribution,
    pub features: FeatureVector,
}

/// Projects the weekly metrics forward and labels the synthesized future.
///
/// Each dynamic metric is fitted on the trailing `fit_window_weeks` weeks up
/// to `as_of` and extrapolated week by week, rounded to whole counts. The
/// future feature vector is then computed on the extended series at
/// `as_of + 7·steps`, so `days_since_last_commit` grows while predicted
/// commits are zero and restarts from the last predicted commit week
/// otherwise. No releases happen in the future; stars, issue response
/// samples and README/archive flags carry over unchanged.
pub fn forecast_labels(
    activity: &ActivityTimeSeries,
    as_of: NaiveDate,
    labeler: &Labeler,
    horizons: &[Horizon],
    config: &ForecastConfig,
) -> Result<Vec<HorizonLabel>> {
    if as_of < activity.created_at {
        return Err(Error::Domain(format!(
            "as_of {as_of} precedes creation of {} on {}",
            activity.repo, activity.created_at
        )));
    }
    if config.fit_window_weeks < super::model::MIN_OBSERVATIONS {
        return Err(Error::validation(format!(
            "fit window of {} weeks is shorter than the fitting minimum",
            config.fit_window_weeks
        )));
    }
    let Some(max_steps) = horizons.iter().map(|h| h.steps()).max() else {
        return Ok(Vec::new());
    };

    let last_week = week_start_of(as_of);
    let fit_start = last_week - Duration::weeks(config.fit_window_weeks as i64 - 1);
    let history = activity.clip_to(activity.created_at.min(fit_start), as_of);
    let fit_weeks: Vec<&WeekBucket> = history.weeks.iter().filter(|w| w.week_start >= fit_start).collect();

    let mut paths: Vec<(WeeklyMetric, Vec<u32>)> = Vec::new();
    for metric in WeeklyMetric::ALL {
        let series: Vec<f64> = fit_weeks.iter().map(|w| metric.get(w) as f64).collect();
        let model = fit(&series, config.method)
            .map_err(|e| Error::Fit(format!("{} {metric:?}: {e}", activity.repo)))?
            .with_domain(Domain::Count);
        let path = model.path(max_steps).into_iter().map(|v| v.round() as u32).collect();
        paths.push((metric, path));
    }

    let stars = history.weeks.last().map_or(0, |w| w.stars_total);
    let mut future = history.clone();
    future.releases.retain(|d| *d <= as_of);
    for step in 0..max_steps {
        let mut bucket = WeekBucket::empty(last_week + Duration::weeks(step as i64 + 1), stars);
        for (metric, path) in &paths {
            metric.set(&mut bucket, path[step]);
        }
        // Contributors only exist alongside commits.
        bucket.active_contributors = if bucket.commits == 0 {
            0
        } else {
            bucket.active_contributors.clamp(1, bucket.commits)
        };
        future.weeks.push(bucket);
    }

    horizons
        .iter()
        .map(|&h| {
            let steps = h.steps();
            let at = as_of + Duration::weeks(steps as i64);
            let mut view = future.clone();
            view.weeks.truncate(history.weeks.len() + steps);
            let features = compute_features_with(&view, at, &config.thresholds)?;
            let distribution = labeler.distribution(&features)?;
            Ok(HorizonLabel {
                horizon_months: h.months(),
                as_of: at,
                label: distribution.argmax(),
                distribution,
                features,
            })
        })
        .collect()
}

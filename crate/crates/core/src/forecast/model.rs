//! Classical one-series forecasters.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_OBSERVATIONS: usize = 8;

/// z-score of a two-sided 90% Gaussian interval.
const Z90: f64 = 1.645;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Horizon(u32);

impl Horizon {
    pub const MONTHS: [u32; 5] = [1, 3, 6, 9, 12];

    pub fn new(months: u32) -> Result<Self> {
        if Self::MONTHS.contains(&months) {
            Ok(Self(months))
        } else {
            Err(Error::validation(format!(
                "horizon {months} months not in {:?}",
                Self::MONTHS
            )))
        }
    }

    pub fn all() -> Vec<Horizon> {
        Self::MONTHS.iter().map(|&m| Horizon(m)).collect()
    }

    pub fn months(self) -> u32 {
        self.0
    }

    /// Whole weeks covering `months` 30-day months: ⌈months·30/7⌉.
    pub fn steps(self) -> usize {
        (self.0 * 30).div_ceil(7) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    NaiveLast,
    LinearTrend,
    Ses,
    Holt,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::NaiveLast, Method::LinearTrend, Method::Ses, Method::Holt];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::NaiveLast => "naive_last",
            Method::LinearTrend => "linear_trend",
            Method::Ses => "ses",
            Method::Holt => "holt",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::validation(format!("unknown forecasting method {s:?}")))
    }
}

/// Value range a forecast must respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    #[default]
    Real,
    /// Nonnegative counts: points and bounds are clamped at 0.
    Count,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecaster {
    pub method: Method,
    /// Last smoothed level (naive/ses/holt) or the OLS intercept at t = 0.
    pub level: f64,
    /// Per-step trend (holt) or the OLS slope.
    pub trend: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub residual_sd: f64,
    pub n_obs: usize,
    /// Holt on a constant series keeps the SES parameters with zero trend.
    pub holt_fell_back_to_ses: bool,
    pub domain: Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub steps: usize,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Smoothing constants tried by the grid search, ascending.
fn grid() -> impl Iterator<Item = f64> + Clone {
    (1..=9).map(|i| i as f64 / 10.0)
}

pub fn fit(series: &[f64], method: Method) -> Result<Forecaster> {
    if series.len() < MIN_OBSERVATIONS {
        return Err(Error::Fit(format!(
            "need at least {MIN_OBSERVATIONS} observations, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("series contains non-finite values".into()));
    }
    let n = series.len();
    let base = Forecaster {
        method,
        level: 0.0,
        trend: 0.0,
        alpha: None,
        beta: None,
        residual_sd: 0.0,
        n_obs: n,
        holt_fell_back_to_ses: false,
        domain: Domain::Real,
    };
    Ok(match method {
        Method::NaiveLast => {
            let sse: f64 = series.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
            Forecaster {
                level: series[n - 1],
                residual_sd: (sse / (n - 1) as f64).sqrt(),
                ..base
            }
        }
        Method::LinearTrend => {
            let (intercept, slope) = ols(series);
            let sse: f64 = series
                .iter()
                .enumerate()
                .map(|(t, y)| (y - intercept - slope * t as f64).powi(2))
                .sum();
            Forecaster {
                level: intercept,
                trend: slope,
                residual_sd: (sse / (n - 2) as f64).sqrt(),
                ..base
            }
        }
        Method::Ses => fit_ses(series, base),
        Method::Holt => {
            if series.iter().all(|v| *v == series[0]) {
                Forecaster {
                    holt_fell_back_to_ses: true,
                    ..fit_ses(series, base)
                }
            } else {
                fit_holt(series, base)
            }
        }
    })
}

fn ols(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let y_mean = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (t, v) in y.iter().enumerate() {
        let dt = t as f64 - t_mean;
        sxy += dt * (v - y_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    (y_mean - slope * t_mean, slope)
}

/// Level after running SES over `y` with `alpha`, plus the in-sample
/// one-step squared error. The level starts at `y[0]`.
pub(crate) fn ses_pass(y: &[f64], alpha: f64) -> (f64, f64) {
    let mut level = y[0];
    let mut sse = 0.0;
    for &v in &y[1..] {
        sse += (v - level).powi(2);
        level = alpha * v + (1.0 - alpha) * level;
    }
    (level, sse)
}

/// Level and trend after running Holt over `y`, plus the one-step squared
/// error. Starts from level `y[0]` and trend `y[1] - y[0]`.
pub(crate) fn holt_pass(y: &[f64], alpha: f64, beta: f64) -> (f64, f64, f64) {
    let mut level = y[0];
    let mut trend = y[1] - y[0];
    let mut sse = 0.0;
    for &v in &y[1..] {
        sse += (v - level - trend).powi(2);
        let next = alpha * v + (1.0 - alpha) * (level + trend);
        trend = beta * (next - level) + (1.0 - beta) * trend;
        level = next;
    }
    (level, trend, sse)
}

fn fit_ses(series: &[f64], base: Forecaster) -> Forecaster {
    let mut best: Option<(f64, f64, f64)> = None;
    for alpha in grid() {
        let (level, sse) = ses_pass(series, alpha);
        if best.is_none_or(|b| sse < b.2) {
            best = Some((alpha, level, sse));
        }
    }
    let (alpha, level, sse) = best.expect("grid is nonempty");
    Forecaster {
        level,
        alpha: Some(alpha),
        residual_sd: (sse / (series.len() - 1) as f64).sqrt(),
        ..base
    }
}

fn fit_holt(series: &[f64], base: Forecaster) -> Forecaster {
    let mut best: Option<(f64, f64, f64, f64, f64)> = None;
    for alpha in grid() {
        for beta in grid() {
            let (level, trend, sse) = holt_pass(series, alpha, beta);
            if best.is_none_or(|b| sse < b.4) {
                best = Some((alpha, beta, level, trend, sse));
            }
        }
    }
    let (alpha, beta, level, trend, sse) = best.expect("grid is nonempty");
    Forecaster {
        level,
        trend,
        alpha: Some(alpha),
        beta: Some(beta),
        residual_sd: (sse / (series.len() - 1) as f64).sqrt(),
        ..base
    }
}

impl Forecaster {
    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    /// Unclamped point forecast `steps` ahead of the last observation.
    pub fn raw_point(&self, steps: usize) -> f64 {
        let h = steps as f64;
        match self.method {
            Method::NaiveLast | Method::Ses => self.level,
            Method::LinearTrend => self.level + self.trend * ((self.n_obs - 1) as f64 + h),
            Method::Holt => self.level + h * self.trend,
        }
    }

    pub fn forecast_steps(&self, steps: usize) -> ForecastPoint {
        let point = self.raw_point(steps);
        let half = Z90 * self.residual_sd * (steps as f64).sqrt();
        let (mut point, mut lower, mut upper) = (point, point - half, point + half);
        if self.domain == Domain::Count {
            point = point.max(0.0);
            lower = lower.max(0.0);
            upper = upper.max(0.0);
        }
        ForecastPoint {
            steps,
            point,
            lower,
            upper,
        }
    }

    /// Point forecasts for steps 1..=steps.
    pub fn path(&self, steps: usize) -> Vec<f64> {
        (1..=steps).map(|h| self.forecast_steps(h).point).collect()
    }
}

pub fn predict(model: &Forecaster, horizon: Horizon) -> ForecastPoint {
    model.forecast_steps(horizon.steps())
}

/// One `{week_start, value}` observation of a series fixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub week_start: NaiveDate,
    pub value: f64,
}

pub fn parse_series(bytes: &[u8]) -> Result<Vec<SeriesPoint>> {
    let points: Vec<SeriesPoint> = serde_json::from_slice(bytes).map_err(Error::from_json)?;
    for pair in points.windows(2) {
        if pair[1].week_start - pair[0].week_start != chrono::Duration::days(7) {
            return Err(Error::validation(format!(
                "series weeks not contiguous at {}",
                pair[1].week_start
            )));
        }
    }
    Ok(points)
}

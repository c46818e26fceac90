use serde::{Deserialize, Serialize};

use super::model::{fit, Method, MIN_OBSERVATIONS};
use crate::error::{Error, Result};

/// Minimum number of rolling origins a backtest needs.
pub const MIN_ORIGINS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestMetrics {
    pub origins: usize,
    pub mae: f64,
    /// Mean absolute percentage error over origins with a nonzero actual;
    /// `None` when every actual is zero.
    pub mape: Option<f64>,
    /// Share of actuals inside the 90% interval.
    pub interval_hit_rate: f64,
}

/// Rolling-origin evaluation: for every prefix length `m` in
/// `MIN_OBSERVATIONS..=n-steps`, fit on `series[..m]` and score the
/// `steps`-ahead forecast against `series[m-1+steps]`.
pub fn backtest(series: &[f64], method: Method, steps: usize) -> Result<BacktestMetrics> {
    if steps == 0 {
        return Err(Error::validation("backtest horizon must be at least one step"));
    }
    let needed = MIN_OBSERVATIONS + steps + MIN_ORIGINS;
    if series.len() < needed {
        return Err(Error::validation(format!(
            "backtest over {steps} steps needs {needed} observations, got {}",
            series.len()
        )));
    }
    let mut abs_sum = 0.0;
    let mut pct_sum = 0.0;
    let mut pct_n = 0usize;
    let mut hits = 0usize;
    let mut origins = 0usize;
    for m in MIN_OBSERVATIONS..=series.len() - steps {
        let model = fit(&series[..m], method)?;
        let p = model.forecast_steps(steps);
        let actual = series[m - 1 + steps];
        let err = (p.point - actual).abs();
        abs_sum += err;
        if actual != 0.0 {
            pct_sum += err / actual.abs();
            pct_n += 1;
        }
        if p.lower <= actual && actual <= p.upper {
            hits += 1;
        }
        origins += 1;
    }
    Ok(BacktestMetrics {
        origins,
        mae: abs_sum / origins as f64,
        mape: (pct_n > 0).then(|| pct_sum / pct_n as f64),
        interval_hit_rate: hits as f64 / origins as f64,
    })
}

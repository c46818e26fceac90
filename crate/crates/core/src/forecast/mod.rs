//! Multi-horizon forecasting of weekly activity and of future labels.

mod backtest;
mod labels;
mod model;

pub use backtest::{backtest, BacktestMetrics, MIN_ORIGINS};
pub use labels::{forecast_labels, ForecastConfig, HorizonLabel};
pub use model::{
    fit, parse_series, predict, Domain, ForecastPoint, Forecaster, Horizon, Method, SeriesPoint, MIN_OBSERVATIONS,
};

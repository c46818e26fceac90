//! Forecasting against hand-rolled recursions and rule-table expectations.

use std::path::PathBuf;

use chrono::{Duration, NaiveDate};
use depwatch_core::classify::Labeler;
use depwatch_core::forecast::{
    backtest, fit, forecast_labels, parse_series, predict, Domain, ForecastConfig, Horizon, Method,
};
use depwatch_core::metrics::{
    apply_labeling_strategy, compute_features, ActivityTimeSeries, MaintenanceLabel, RepoRef, WeekBucket,
};
use proptest::prelude::*;

fn fixture(name: &str) -> Vec<f64> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    let bytes = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_series(&bytes).unwrap().into_iter().map(|p| p.value).collect()
}

/// l_0 = y_0, l_t = α·y_t + (1−α)·l_{t−1}; the one-step error at t is y_t − l_{t−1}.
fn ses_oracle(y: &[f64]) -> (f64, f64) {
    let mut best = (f64::NAN, f64::NAN, f64::INFINITY);
    for k in 1..=9 {
        let alpha = k as f64 / 10.0;
        let mut levels = vec![y[0]];
        let mut sse = 0.0;
        for t in 1..y.len() {
            sse += (y[t] - levels[t - 1]).powi(2);
            levels.push(alpha * y[t] + (1.0 - alpha) * levels[t - 1]);
        }
        if sse < best.2 {
            best = (alpha, *levels.last().unwrap(), sse);
        }
    }
    (best.0, best.1)
}

/// Holt's linear method written out term by term: returns (α, β, level, trend).
fn holt_oracle(y: &[f64]) -> (f64, f64, f64, f64) {
    let mut best = (0.0, 0.0, 0.0, 0.0, f64::INFINITY);
    for a in 1..=9 {
        for b in 1..=9 {
            let (alpha, beta) = (a as f64 / 10.0, b as f64 / 10.0);
            let mut l = vec![y[0]];
            let mut tr = vec![y[1] - y[0]];
            let mut sse = 0.0;
            for t in 1..y.len() {
                let forecast = l[t - 1] + tr[t - 1];
                sse += (y[t] - forecast).powi(2);
                l.push(alpha * y[t] + (1.0 - alpha) * (l[t - 1] + tr[t - 1]));
                tr.push(beta * (l[t] - l[t - 1]) + (1.0 - beta) * tr[t - 1]);
            }
            if sse < best.4 {
                best = (alpha, beta, l[y.len() - 1], tr[y.len() - 1], sse);
            }
        }
    }
    (best.0, best.1, best.2, best.3)
}

#[test]
fn ses_level_on_decay_fixture_matches_recursion() {
    let y = fixture("decay.series.json");
    assert_eq!(y.len(), 26);
    let model = fit(&y, Method::Ses).unwrap();
    let (alpha, level) = ses_oracle(&y);
    assert_eq!(model.alpha, Some(alpha));
    assert!((model.level - level).abs() < 1e-9, "{} vs {level}", model.level);
    for h in Horizon::all() {
        assert!((predict(&model, h).point - level).abs() < 1e-9);
    }
}

#[test]
fn holt_on_trend_fixture_matches_recursion() {
    let y = fixture("noisy_trend.series.json");
    let model = fit(&y, Method::Holt).unwrap();
    let (alpha, beta, level, trend) = holt_oracle(&y);
    assert_eq!((model.alpha, model.beta), (Some(alpha), Some(beta)));
    let h3 = Horizon::new(3).unwrap();
    assert_eq!(h3.steps(), 13);
    let point = predict(&model, h3).point;
    assert!((point - (level + 13.0 * trend)).abs() < 1e-9, "{point} vs {}", level + 13.0 * trend);
}

#[test]
fn constant_series_is_exact_for_every_method() {
    let y = vec![5.0; 30];
    for method in Method::ALL {
        let model = fit(&y, method).unwrap();
        assert_eq!(model.residual_sd, 0.0, "{method:?}");
        for h in Horizon::all() {
            let p = predict(&model, h);
            assert!((p.point - 5.0).abs() < 1e-12, "{method:?} {h:?}");
            assert_eq!((p.lower, p.upper), (p.point, p.point));
        }
        assert!(backtest(&y, method, 13).unwrap().mae.abs() < 1e-12);
    }
    assert!(fit(&y, Method::Holt).unwrap().holt_fell_back_to_ses);
}

#[test]
fn noiseless_line_is_exact_for_linear_trend() {
    let y: Vec<f64> = (0..40).map(|t| 2.0 * t as f64 + 3.0).collect();
    let model = fit(&y, Method::LinearTrend).unwrap();
    assert!((model.trend - 2.0).abs() < 1e-12);
    assert!((model.level - 3.0).abs() < 1e-12);
    for h in Horizon::all() {
        let want = 2.0 * (39 + h.steps()) as f64 + 3.0;
        assert!((predict(&model, h).point - want).abs() < 1e-9);
    }
    for steps in [1, 5, 13, 26] {
        assert!(backtest(&y, Method::LinearTrend, steps).unwrap().mae < 1e-9);
    }
}

#[test]
fn falling_line_clamps_at_zero_for_counts() {
    let y: Vec<f64> = (0..10).map(|t| 20.0 - 3.0 * t as f64).collect();
    let model = fit(&y, Method::LinearTrend).unwrap().with_domain(Domain::Count);
    let p = predict(&model, Horizon::new(1).unwrap());
    assert_eq!(p.point, 0.0);
    assert!(p.lower >= 0.0);
}

#[test]
fn naive_last_repeats_last_value() {
    let y = [1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 1.0, 2.0, 3.0];
    let model = fit(&y, Method::NaiveLast).unwrap();
    assert!(Horizon::all().into_iter().all(|h| predict(&model, h).point == 3.0));
}

#[test]
fn trend_beats_naive_on_noisy_trend_fixture() {
    let y = fixture("noisy_trend.series.json");
    let trend = backtest(&y, Method::LinearTrend, 13).unwrap();
    let naive = backtest(&y, Method::NaiveLast, 13).unwrap();
    assert!(trend.mae < naive.mae, "linear {} vs naive {}", trend.mae, naive.mae);
    assert_eq!(trend.origins, y.len() - 8 - 13 + 1);
}

#[test]
fn backtest_rejects_short_series() {
    assert!(backtest(&[1.0; 20], Method::NaiveLast, 13).is_err());
}

fn activity(commits: &[u32], start: NaiveDate) -> ActivityTimeSeries {
    ActivityTimeSeries {
        repo: RepoRef::new("example.org", "fixture", "decay").unwrap(),
        created_at: start,
        weeks: commits
            .iter()
            .enumerate()
            .map(|(i, &c)| WeekBucket {
                commits: c,
                active_contributors: c.min(1),
                ..WeekBucket::empty(start + Duration::weeks(i as i64), 0)
            })
            .collect(),
        releases: vec![],
        issue_response_samples: vec![],
        archived_at: None,
        readme_deprecated: false,
        readme_stable_declared: false,
    }
}

#[test]
fn decaying_repo_turns_dormant_from_three_months() {
    let commits: Vec<u32> = fixture("decay.series.json").iter().map(|v| *v as u32).collect();
    let start: NaiveDate = "2023-01-02".parse().unwrap();
    let repo = activity(&commits, start);
    let as_of = start + Duration::weeks(25);
    assert_eq!(apply_labeling_strategy(&compute_features(&repo, as_of).unwrap()), MaintenanceLabel::Active);

    let out = forecast_labels(&repo, as_of, &Labeler::default(), &Horizon::all(), &ForecastConfig::default()).unwrap();
    for h in &out {
        // No responsiveness data, so nothing can rescue the repo into FeatureComplete.
        assert_eq!(h.features.median_issue_response_hours, -1.0);
        let expected = if h.horizon_months >= 3 { MaintenanceLabel::Dormant } else { MaintenanceLabel::Active };
        assert_eq!(h.label, expected, "{} months: {:?}", h.horizon_months, h.features);
        assert_eq!(apply_labeling_strategy(&h.features), h.label);
    }
}

#[test]
fn static_history_keeps_its_label() {
    // Three early commits then three years of silence, declared stable.
    let mut commits = vec![2, 1, 3];
    commits.extend(std::iter::repeat_n(0, 160));
    let start: NaiveDate = "2020-01-06".parse().unwrap();
    let mut repo = activity(&commits, start);
    repo.readme_stable_declared = true;
    let as_of = start + Duration::weeks(162);
    let now = apply_labeling_strategy(&compute_features(&repo, as_of).unwrap());
    assert_eq!(now, MaintenanceLabel::FeatureComplete);
    for method in Method::ALL {
        let config = ForecastConfig { method, ..ForecastConfig::default() };
        let out = forecast_labels(&repo, as_of, &Labeler::default(), &Horizon::all(), &config).unwrap();
        assert!(out.iter().all(|h| h.label == now), "{method:?}");
    }
}

proptest! {
    #[test]
    fn shifting_the_series_shifts_the_forecast(
        y in proptest::collection::vec(-50.0f64..50.0, 8..40),
        c in -100.0f64..100.0,
    ) {
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        for method in Method::ALL {
            let a = fit(&y, method).unwrap();
            let b = fit(&shifted, method).unwrap();
            for h in Horizon::all() {
                let (pa, pb) = (predict(&a, h), predict(&b, h));
                prop_assert!((pb.point - pa.point - c).abs() < 1e-6, "{:?}", method);
            }
        }
    }

    #[test]
    fn interval_widens_with_horizon(y in proptest::collection::vec(0.0f64..50.0, 8..40)) {
        for method in Method::ALL {
            let model = fit(&y, method).unwrap();
            let widths: Vec<f64> = Horizon::all()
                .into_iter()
                .map(|h| { let p = predict(&model, h); p.upper - p.lower })
                .collect();
            prop_assert!(widths.windows(2).all(|w| w[0] <= w[1]));
            let p = model.forecast_steps(5);
            prop_assert!(p.lower <= p.point && p.point <= p.upper);
        }
    }

    #[test]
    fn fitting_is_deterministic(y in proptest::collection::vec(0.0f64..50.0, 8..30)) {
        for method in Method::ALL {
            prop_assert_eq!(fit(&y, method).unwrap(), fit(&y, method).unwrap());
        }
    }
}

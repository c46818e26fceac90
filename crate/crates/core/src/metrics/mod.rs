//! Repository activity ingestion, feature extraction and rule-based labeling.

mod activity;
mod dataset;
mod features;
mod labeling;
mod provider;

pub use activity::{week_start_of, ActivityTimeSeries, RepoRef, WeekBucket, WeeklyMetric};
pub use dataset::{label_dataset, label_dataset_with, LabelHistogram, LabeledDataset, LabeledRow};
pub use features::{
    compute_features, compute_features_with, FeatureSchema, FeatureVector, Thresholds, FEATURE_NAMES,
    FEATURE_SCHEMA_VERSION, NO_DATA,
};
pub use labeling::{apply_labeling_strategy, LabelingStrategy, MaintenanceLabel, Rule};
pub use provider::{fetch_all, ActivityProvider, DateWindow, LiveProvider, OfflineStore, TokenBucket, TOKEN_ENV};

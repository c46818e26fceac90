//! Maintenance-label classification and descriptive analysis.

mod distribution;
mod evaluation;
mod forest;
mod kmeans;
mod labeler;
mod pca;

pub use distribution::LabelDistribution;
pub use evaluation::{ClassScores, ConfusionMatrix};
pub use forest::{
    classify, feature_importance, train_classifier, train_classifier_strict, Classifier, ForestParams, Node,
    OobSummary,
};
pub use labeler::Labeler;
pub use kmeans::{kmeans, kmeans_features, standardize, ClusteringConfig, InitMethod, KMeansResult};
pub use pca::{pca, pca_features, PcaResult};

pub use crate::metrics::{LabeledDataset, LabeledRow};

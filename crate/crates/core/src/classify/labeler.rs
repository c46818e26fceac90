use super::distribution::LabelDistribution;
use super::forest::{classify, Classifier};
use crate::error::Result;
use crate::metrics::{FeatureVector, LabelingStrategy};

/// Where current and future labels come from: the rule table directly, or a
/// trained forest.
#[derive(Debug, Clone)]
pub enum Labeler {
    Rules(LabelingStrategy),
    Model(Box<Classifier>),
}

impl Labeler {
    pub fn distribution(&self, features: &FeatureVector) -> Result<LabelDistribution> {
        match self {
            Labeler::Rules(strategy) => Ok(LabelDistribution::certain(strategy.label(features))),
            Labeler::Model(model) => classify(model, features),
        }
    }

    pub fn mode(&self) -> &'static str {
        match self {
            Labeler::Rules(_) => "rules",
            Labeler::Model(_) => "model",
        }
    }
}

impl Default for Labeler {
    fn default() -> Self {
        Labeler::Rules(LabelingStrategy::default())
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Known outcome of a manual review, available only in evaluation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewTruth {
    pub true_suspicious: usize,
    pub true_positives: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffortMetrics {
    pub total_libraries: usize,
    pub reported_suspicious: usize,
    /// Share of libraries nobody has to review by hand.
    pub effort_reduction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_suspicious: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_positives: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    /// Review hours saved when a cost per review is configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_hours_saved: Option<f64>,
}

pub fn effort_metrics(total: usize, reported: usize, truth: Option<ReviewTruth>) -> Result<EffortMetrics> {
    if reported > total {
        return Err(Error::validation(format!(
            "reported {reported} exceeds total {total}"
        )));
    }
    let effort_reduction = if total == 0 {
        1.0
    } else {
        1.0 - reported as f64 / total as f64
    };
    let mut m = EffortMetrics {
        total_libraries: total,
        reported_suspicious: reported,
        effort_reduction,
        true_suspicious: None,
        true_positives: None,
        recall: None,
        precision: None,
        review_hours_saved: None,
    };
    if let Some(t) = truth {
        if t.true_positives > reported.min(t.true_suspicious) {
            return Err(Error::validation(format!(
                "true positives {} exceed min(reported {reported}, true suspicious {})",
                t.true_positives, t.true_suspicious
            )));
        }
        if t.true_suspicious > total {
            return Err(Error::validation(format!(
                "true suspicious {} exceeds total {total}",
                t.true_suspicious
            )));
        }
        m.true_suspicious = Some(t.true_suspicious);
        m.true_positives = Some(t.true_positives);
        m.recall = Some(if t.true_suspicious == 0 {
            1.0
        } else {
            t.true_positives as f64 / t.true_suspicious as f64
        });
        m.precision = Some(if reported == 0 {
            1.0
        } else {
            t.true_positives as f64 / reported as f64
        });
    }
    Ok(m)
}

impl EffortMetrics {
    /// Translates the filtered-out libraries into saved review hours.
    pub fn with_review_cost(mut self, hours_per_review: f64) -> Result<Self> {
        if !hours_per_review.is_finite() || hours_per_review < 0.0 {
            return Err(Error::validation(format!(
                "review cost {hours_per_review} must be a nonnegative number of hours"
            )));
        }
        self.review_hours_saved = Some((self.total_libraries - self.reported_suspicious) as f64 * hours_per_review);
        Ok(self)
    }
}

use serde::{Deserialize, Serialize};

use crate::metrics::MaintenanceLabel;

/// Probability per maintenance label, summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub active: f64,
    pub feature_complete: f64,
    pub dormant: f64,
    pub inactive: f64,
}

impl LabelDistribution {
    pub fn certain(label: MaintenanceLabel) -> Self {
        let mut p = [0.0; 4];
        p[label.index()] = 1.0;
        Self::from_probabilities(p)
    }

    pub fn from_counts(counts: &[u32; 4]) -> Self {
        let total: u32 = counts.iter().sum();
        assert!(total > 0, "distribution needs at least one vote");
        Self::from_probabilities(counts.map(|c| c as f64 / total as f64))
    }

    fn from_probabilities(p: [f64; 4]) -> Self {
        Self {
            active: p[0],
            feature_complete: p[1],
            dormant: p[2],
            inactive: p[3],
        }
    }

    pub fn probabilities(&self) -> [f64; 4] {
        [self.active, self.feature_complete, self.dormant, self.inactive]
    }

    pub fn get(&self, label: MaintenanceLabel) -> f64 {
        self.probabilities()[label.index()]
    }

    /// Most probable label; ties go to the label declared first.
    pub fn argmax(&self) -> MaintenanceLabel {
        let p = self.probabilities();
        let mut best = 0;
        for i in 1..4 {
            if p[i] > p[best] {
                best = i;
            }
        }
        MaintenanceLabel::from_index(best).expect("label index in range")
    }

    pub fn is_valid(&self) -> bool {
        let p = self.probabilities();
        p.iter().all(|v| (0.0..=1.0).contains(v)) && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_tie_prefers_earlier_label() {
        let d = LabelDistribution::from_counts(&[0, 1, 1, 0]);
        assert_eq!(d.argmax(), MaintenanceLabel::FeatureComplete);
        assert!(d.is_valid());
    }

    #[test]
    fn certain_distribution() {
        let d = LabelDistribution::certain(MaintenanceLabel::Dormant);
        assert_eq!(d.get(MaintenanceLabel::Dormant), 1.0);
        assert_eq!(d.argmax(), MaintenanceLabel::Dormant);
    }
}

use serde::{Deserialize, Serialize};

use crate::metrics::MaintenanceLabel;

/// 4×4 confusion matrix, `counts[truth][predicted]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 4]; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub label: MaintenanceLabel,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (MaintenanceLabel, MaintenanceLabel)>) -> Self {
        let mut cm = Self::default();
        for (truth, predicted) in pairs {
            cm.counts[truth.index()][predicted.index()] += 1;
        }
        cm
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (0..4).map(|i| self.counts[i][i]).sum::<usize>() as f64 / total as f64
    }

    /// Per-class scores for every label that occurs in truth or prediction.
    /// Undefined precision or recall (zero denominator) scores 0.
    pub fn per_class(&self) -> Vec<ClassScores> {
        MaintenanceLabel::ALL
            .iter()
            .filter_map(|&label| {
                let i = label.index();
                let tp = self.counts[i][i];
                let support: usize = self.counts[i].iter().sum();
                let predicted: usize = (0..4).map(|t| self.counts[t][i]).sum();
                if support == 0 && predicted == 0 {
                    return None;
                }
                let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                Some(ClassScores {
                    label,
                    support,
                    precision,
                    recall,
                    f1,
                })
            })
            .collect()
    }

    pub fn macro_f1(&self) -> f64 {
        let scores = self.per_class();
        if scores.is_empty() {
            return 0.0;
        }
        scores.iter().map(|s| s.f1).sum::<f64>() / scores.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use MaintenanceLabel::*;

    #[test]
    fn perfect_predictions() {
        let cm = ConfusionMatrix::from_pairs([(Active, Active), (Dormant, Dormant)]);
        assert_eq!(cm.accuracy(), 1.0);
        assert_eq!(cm.macro_f1(), 1.0);
        assert_eq!(cm.per_class().len(), 2);
    }

    #[test]
    fn hand_computed_scores() {
        // Active: tp 2, fn 1, fp 0 → p 1, r 2/3, f1 0.8
        // Inactive: tp 1, fn 0, fp 1 → p 0.5, r 1, f1 2/3
        let cm = ConfusionMatrix::from_pairs([
            (Active, Active),
            (Active, Active),
            (Active, Inactive),
            (Inactive, Inactive),
        ]);
        let s = cm.per_class();
        assert!((s[0].f1 - 0.8).abs() < 1e-12);
        assert!((s[1].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((cm.macro_f1() - (0.8 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(cm.accuracy(), 0.75);
    }
}

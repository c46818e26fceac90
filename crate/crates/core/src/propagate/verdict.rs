use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::pagerank::{personalized_pagerank, NodeScores, PropagationConfig};
use crate::depgraph::{DependencyGraph, LibraryId};
use crate::error::{Error, Result};
use crate::metrics::MaintenanceLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Unsuspicious,
    Suspicious,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Culprit {
    pub id: LibraryId,
    pub label: MaintenanceLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspicionVerdict {
    pub node: LibraryId,
    pub self_label: MaintenanceLabel,
    pub verdict: Verdict,
    /// Non-active transitive dependencies, riskiest first.
    pub culprits: Vec<Culprit>,
    pub risk_score: f64,
}

impl SuspicionVerdict {
    pub fn is_suspicious(&self) -> bool {
        self.verdict == Verdict::Suspicious
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerdictPolicy {
    /// Whether a FeatureComplete transitive dependency makes its dependents
    /// suspicious. A FeatureComplete library itself is always suspicious.
    pub feature_complete_is_negative: bool,
}

impl Default for VerdictPolicy {
    fn default() -> Self {
        Self {
            feature_complete_is_negative: true,
        }
    }
}

impl VerdictPolicy {
    fn is_culprit(&self, label: MaintenanceLabel) -> bool {
        match label {
            MaintenanceLabel::Active => false,
            MaintenanceLabel::FeatureComplete => self.feature_complete_is_negative,
            MaintenanceLabel::Dormant | MaintenanceLabel::Inactive => true,
        }
    }
}

/// Teleport weight each label contributes to the risk ranking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiskWeights {
    pub active: f64,
    pub feature_complete: f64,
    pub dormant: f64,
    pub inactive: f64,
}

impl Default for RiskWeights {
    fn default() -> Self {
        Self {
            active: 0.0,
            feature_complete: 0.25,
            dormant: 0.6,
            inactive: 1.0,
        }
    }
}

impl RiskWeights {
    pub fn weight(&self, label: MaintenanceLabel) -> f64 {
        match label {
            MaintenanceLabel::Active => self.active,
            MaintenanceLabel::FeatureComplete => self.feature_complete,
            MaintenanceLabel::Dormant => self.dormant,
            MaintenanceLabel::Inactive => self.inactive,
        }
    }
}

fn label_vector(graph: &DependencyGraph, labels: &BTreeMap<LibraryId, MaintenanceLabel>) -> Result<Vec<MaintenanceLabel>> {
    graph
        .nodes()
        .iter()
        .map(|id| {
            labels
                .get(id)
                .copied()
                .ok_or_else(|| Error::validation(format!("no maintenance label for {id}")))
        })
        .collect()
}

/// Activity-weighted personalized PageRank on reversed edges: risk mass starts
/// at poorly maintained libraries and flows to the libraries depending on
/// them. With every library at weight 0 there is no risk and all scores are 0.
pub fn risk_scores(
    graph: &DependencyGraph,
    labels: &BTreeMap<LibraryId, MaintenanceLabel>,
    config: &PropagationConfig,
    weights: &RiskWeights,
) -> Result<NodeScores> {
    let teleport: Vec<f64> = label_vector(graph, labels)?
        .into_iter()
        .map(|l| weights.weight(l))
        .collect();
    if teleport.iter().all(|w| *w == 0.0) {
        return Ok(NodeScores::zeros(graph));
    }
    personalized_pagerank(graph, &config.reversed(), &teleport)
}

/// A node is unsuspicious only when it and every library it transitively
/// depends on are Active.
pub fn aggregate_verdicts(
    graph: &DependencyGraph,
    labels: &BTreeMap<LibraryId, MaintenanceLabel>,
    risk: &NodeScores,
    policy: &VerdictPolicy,
) -> Result<Vec<SuspicionVerdict>> {
    let label_of = label_vector(graph, labels)?;
    let risk_of = |i: usize| risk.get(graph.node(i)).unwrap_or(0.0);
    let verdicts = (0..graph.len())
        .map(|i| {
            let mut culprits: Vec<usize> = graph
                .reachable_from(i)
                .into_iter()
                .filter(|&m| policy.is_culprit(label_of[m]))
                .collect();
            culprits.sort_by(|&a, &b| risk_of(b).total_cmp(&risk_of(a)).then(a.cmp(&b)));
            let self_label = label_of[i];
            let verdict = if self_label == MaintenanceLabel::Active && culprits.is_empty() {
                Verdict::Unsuspicious
            } else {
                Verdict::Suspicious
            };
            SuspicionVerdict {
                node: graph.node(i).clone(),
                self_label,
                verdict,
                culprits: culprits
                    .into_iter()
                    .map(|m| Culprit {
                        id: graph.node(m).clone(),
                        label: label_of[m],
                    })
                    .collect(),
                risk_score: risk_of(i),
            }
        })
        .collect();
    Ok(verdicts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use MaintenanceLabel::*;

    fn id(s: &str) -> LibraryId {
        format!("npm:{s}").parse().unwrap()
    }

    fn graph(nodes: &[&str], edges: &[(&str, &str)]) -> DependencyGraph {
        DependencyGraph::from_edges(
            nodes.iter().map(|n| id(n)),
            edges.iter().map(|(a, b)| (id(a), id(b))),
        )
        .unwrap()
    }

    fn labels(pairs: &[(&str, MaintenanceLabel)]) -> BTreeMap<LibraryId, MaintenanceLabel> {
        pairs.iter().map(|(n, l)| (id(n), *l)).collect()
    }

    fn run(g: &DependencyGraph, l: &BTreeMap<LibraryId, MaintenanceLabel>) -> Vec<SuspicionVerdict> {
        let risk = risk_scores(g, l, &PropagationConfig::default(), &RiskWeights::default()).unwrap();
        aggregate_verdicts(g, l, &risk, &VerdictPolicy::default()).unwrap()
    }

    #[test]
    fn all_active_is_clean() {
        let g = graph(&["A", "B"], &[("A", "B")]);
        let v = run(&g, &labels(&[("A", Active), ("B", Active)]));
        assert!(v.iter().all(|v| !v.is_suspicious() && v.culprits.is_empty() && v.risk_score == 0.0));
    }

    #[test]
    fn dormant_leaf_taints_the_chain() {
        let g = graph(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        let v = run(&g, &labels(&[("A", Active), ("B", Active), ("C", Dormant)]));
        for dependent in &v[..2] {
            assert!(dependent.is_suspicious());
            assert_eq!(dependent.culprits, vec![Culprit { id: id("C"), label: Dormant }]);
        }
        assert!(v[2].is_suspicious());
        assert!(v[2].culprits.is_empty());
    }

    #[test]
    fn active_cycle_is_clean() {
        let g = graph(&["A", "B"], &[("A", "B"), ("B", "A")]);
        let v = run(&g, &labels(&[("A", Active), ("B", Active)]));
        assert!(v.iter().all(|v| !v.is_suspicious()));
    }

    #[test]
    fn culprits_sorted_by_risk() {
        let g = graph(&["A", "B", "C"], &[("A", "B"), ("A", "C")]);
        let v = run(&g, &labels(&[("A", Active), ("B", FeatureComplete), ("C", Inactive)]));
        let ids: Vec<_> = v[0].culprits.iter().map(|c| c.id.clone()).collect();
        assert_eq!(ids, vec![id("C"), id("B")]);
    }

    #[test]
    fn feature_complete_switch_only_affects_dependents() {
        let g = graph(&["A", "B"], &[("A", "B")]);
        let l = labels(&[("A", Active), ("B", FeatureComplete)]);
        let risk = NodeScores::zeros(&g);
        let lenient = VerdictPolicy {
            feature_complete_is_negative: false,
        };
        let v = aggregate_verdicts(&g, &l, &risk, &lenient).unwrap();
        assert!(!v[0].is_suspicious());
        assert!(v[1].is_suspicious());
    }

    #[test]
    fn missing_label_is_rejected() {
        let g = graph(&["A", "B"], &[("A", "B")]);
        let l = labels(&[("A", Active)]);
        let risk = NodeScores::zeros(&g);
        assert!(matches!(
            aggregate_verdicts(&g, &l, &risk, &VerdictPolicy::default()),
            Err(Error::Validation(_))
        ));
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::depgraph::{DependencyGraph, LibraryId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Follow edges dependent → dependency.
    AsIs,
    /// Follow edges dependency → dependent.
    Reversed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationConfig {
    pub damping: f64,
    /// L1 change between iterates at which iteration stops.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub direction: Direction,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            damping: 0.85,
            tolerance: 1e-9,
            max_iterations: 200,
            direction: Direction::AsIs,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::validation(format!("damping {} outside (0, 1)", self.damping)));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::validation("tolerance must be positive"));
        }
        Ok(())
    }

    pub fn reversed(self) -> Self {
        Self {
            direction: Direction::Reversed,
            ..self
        }
    }
}

/// One score per graph node, in the graph's node order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeScores {
    pub nodes: Vec<LibraryId>,
    pub values: Vec<f64>,
    pub iterations: usize,
    /// False when an iterative method hit its iteration cap first.
    pub converged: bool,
}

impl NodeScores {
    pub fn get(&self, id: &LibraryId) -> Option<f64> {
        self.nodes.binary_search(id).ok().map(|i| self.values[i])
    }

    pub fn to_map(&self) -> BTreeMap<LibraryId, f64> {
        self.nodes.iter().cloned().zip(self.values.iter().copied()).collect()
    }

    pub fn zeros(graph: &DependencyGraph) -> Self {
        Self {
            nodes: graph.nodes().to_vec(),
            values: vec![0.0; graph.len()],
            iterations: 0,
            converged: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRankTrace {
    pub scores: NodeScores,
    /// Total mass after every iteration.
    pub mass: Vec<f64>,
}

pub fn pagerank(graph: &DependencyGraph, config: &PropagationConfig) -> Result<NodeScores> {
    pagerank_trace(graph, config, None).map(|t| t.scores)
}

/// PageRank whose teleport (and dangling-node) mass follows `weights`.
pub fn personalized_pagerank(
    graph: &DependencyGraph,
    config: &PropagationConfig,
    weights: &[f64],
) -> Result<NodeScores> {
    pagerank_trace(graph, config, Some(weights)).map(|t| t.scores)
}

/// Power iteration from the uniform vector.
///
/// Each step keeps `1 - d` of the mass for teleporting and sends `d` along
/// out-edges, split evenly. A node without out-edges hands its `d` share to
/// the teleport distribution, so total mass stays 1.
pub fn pagerank_trace(
    graph: &DependencyGraph,
    config: &PropagationConfig,
    weights: Option<&[f64]>,
) -> Result<PageRankTrace> {
    config.validate()?;
    let n = graph.len();
    if n == 0 {
        return Err(Error::validation("pagerank needs a nonempty graph"));
    }
    let teleport = match weights {
        None => vec![1.0 / n as f64; n],
        Some(w) => teleport_distribution(w, n)?,
    };
    let reversed;
    let g = match config.direction {
        Direction::AsIs => graph,
        Direction::Reversed => {
            reversed = graph.reversed();
            &reversed
        }
    };

    let d = config.damping;
    let mut p = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut mass = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        iterations += 1;
        let dangling: f64 = (0..n).filter(|&i| g.successors(i).is_empty()).map(|i| p[i]).sum();
        for (i, slot) in next.iter_mut().enumerate() {
            let inflow: f64 = g
                .predecessors(i)
                .iter()
                .map(|&j| p[j] / g.successors(j).len() as f64)
                .sum();
            *slot = (1.0 - d) * teleport[i] + d * (inflow + dangling * teleport[i]);
        }
        mass.push(next.iter().sum());
        let delta: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut p, &mut next);
        if delta <= config.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("pagerank did not converge within {} iterations", config.max_iterations);
    }
    Ok(PageRankTrace {
        scores: NodeScores {
            nodes: graph.nodes().to_vec(),
            values: p,
            iterations,
            converged,
        },
        mass,
    })
}

fn teleport_distribution(weights: &[f64], n: usize) -> Result<Vec<f64>> {
    if weights.len() != n {
        return Err(Error::validation(format!(
            "expected {n} teleport weights, got {}",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::validation("teleport weights must be finite and nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::validation("teleport weights are all zero"));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn single_node() {
        let s = pagerank(&graph(&["A"], &[]), &PropagationConfig::default()).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_cycle_is_symmetric() {
        let s = pagerank(&graph(&["A", "B"], &[("A", "B"), ("B", "A")]), &PropagationConfig::default()).unwrap();
        assert!((s.values[0] - 0.5).abs() < 1e-12);
        assert!((s.values[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dangling_pair_matches_stationary_equations() {
        // p_A = 0.075 + 0.425 p_B, p_B = 0.075 + 0.85 p_A + 0.425 p_B
        let b = 0.13875 / 0.21375;
        let a = 0.075 + 0.425 * b;
        let s = pagerank(&graph(&["A", "B"], &[("A", "B")]), &PropagationConfig::default()).unwrap();
        assert!((s.values[0] - a).abs() < 1e-4, "{:?}", s.values);
        assert!((s.values[1] - b).abs() < 1e-4);
        assert!((a - 0.3509).abs() < 1e-4 && (b - 0.6491).abs() < 1e-4);
    }

    #[test]
    fn teleport_mass_on_isolated_node() {
        let g = graph(&["A", "B", "X"], &[]);
        let s = personalized_pagerank(&g, &PropagationConfig::default(), &[0.0, 0.0, 5.0]).unwrap();
        assert!((s.get(&id("X")).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_chain_ranks_by_distance_from_source() {
        let g = graph(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        let cfg = PropagationConfig::default().reversed();
        let s = personalized_pagerank(&g, &cfg, &[0.0, 0.0, 1.0]).unwrap();
        let (a, b, c) = (s.values[0], s.values[1], s.values[2]);
        assert!(c > b && b > a && a > 0.0, "{:?}", s.values);
    }

    #[test]
    fn bad_weights_rejected() {
        let g = graph(&["A", "B"], &[]);
        let cfg = PropagationConfig::default();
        assert!(personalized_pagerank(&g, &cfg, &[0.0, 0.0]).is_err());
        assert!(personalized_pagerank(&g, &cfg, &[1.0]).is_err());
        assert!(personalized_pagerank(&g, &cfg, &[-1.0, 2.0]).is_err());
    }

    #[test]
    fn iteration_cap_sets_warning_flag() {
        let g = graph(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        let cfg = PropagationConfig {
            max_iterations: 2,
            ..Default::default()
        };
        let s = pagerank(&g, &cfg).unwrap();
        assert!(!s.converged);
        assert!((s.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_damping() {
        let g = graph(&["A"], &[]);
        for damping in [0.0, 1.0, -0.1] {
            let cfg = PropagationConfig {
                damping,
                ..Default::default()
            };
            assert!(pagerank(&g, &cfg).is_err());
        }
    }
}

use serde::{Deserialize, Serialize};

use super::pagerank::{NodeScores, PropagationConfig};
use crate::depgraph::DependencyGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralityKind {
    /// In-degree plus out-degree.
    Degree,
    InDegree,
    OutDegree,
    Eigenvector,
}

/// Degree kinds divide raw counts by `n - 1` (0 for a single node).
///
/// Eigenvector centrality credits a node with the scores of its dependents:
/// it iterates `x ← (I + Aᵀ) x` with L2 normalization from the uniform
/// vector. The identity shift leaves the dominant eigenvector unchanged and
/// keeps bipartite or cyclic graphs from oscillating.
pub fn centrality(graph: &DependencyGraph, kind: CentralityKind, config: &PropagationConfig) -> Result<NodeScores> {
    let n = graph.len();
    if n == 0 {
        return Err(Error::validation("centrality needs a nonempty graph"));
    }
    let norm = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let degree = |f: &dyn Fn(usize) -> usize| NodeScores {
        nodes: graph.nodes().to_vec(),
        values: (0..n).map(|i| if n > 1 { f(i) as f64 / norm } else { 0.0 }).collect(),
        iterations: 0,
        converged: true,
    };
    Ok(match kind {
        CentralityKind::Degree => degree(&|i| graph.predecessors(i).len() + graph.successors(i).len()),
        CentralityKind::InDegree => degree(&|i| graph.predecessors(i).len()),
        CentralityKind::OutDegree => degree(&|i| graph.successors(i).len()),
        CentralityKind::Eigenvector => eigenvector(graph, config),
    })
}

fn eigenvector(graph: &DependencyGraph, config: &PropagationConfig) -> NodeScores {
    let n = graph.len();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        iterations += 1;
        let mut next: Vec<f64> = (0..n)
            .map(|i| x[i] + graph.predecessors(i).iter().map(|&j| x[j]).sum::<f64>())
            .collect();
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        next.iter_mut().for_each(|v| *v /= norm);
        let delta: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if delta <= config.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("eigenvector centrality did not converge within {} iterations", config.max_iterations);
    }
    NodeScores {
        nodes: graph.nodes().to_vec(),
        values: x,
        iterations,
        converged,
    }
}

//! Transitive impact of maintenance activity across the dependency graph.

mod centrality;
mod pagerank;
mod verdict;

pub use centrality::{centrality, CentralityKind};
pub use pagerank::{
    pagerank, pagerank_trace, personalized_pagerank, Direction, NodeScores, PageRankTrace, PropagationConfig,
};
pub use verdict::{
    aggregate_verdicts, risk_scores, Culprit, RiskWeights, SuspicionVerdict, Verdict, VerdictPolicy,
};

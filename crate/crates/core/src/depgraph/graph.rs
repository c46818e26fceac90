use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::id::LibraryId;
use super::snapshot::DependencySnapshot;
use crate::error::{Error, Result};

/// Directed dependency graph, edges pointing dependent → dependency.
///
/// Nodes are stored in ascending id order; every index-based accessor uses
/// that order, so results are stable for a given node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    nodes: Vec<LibraryId>,
    index: BTreeMap<LibraryId, usize>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct BuiltGraph {
    pub graph: DependencyGraph,
    pub warnings: Vec<String>,
}

pub fn build_graph(snapshot: &DependencySnapshot) -> BuiltGraph {
    let nodes = snapshot.libraries.iter().map(|r| r.id.clone());
    let mut edges = Vec::new();
    let mut warnings = Vec::new();
    for rec in &snapshot.libraries {
        for dep in &rec.direct_deps {
            if dep == &rec.id {
                warnings.push(format!("dropped self-dependency of {}", rec.id));
            } else {
                edges.push((rec.id.clone(), dep.clone()));
            }
        }
    }
    let graph = DependencyGraph::from_edges(nodes, edges)
        .expect("validated snapshot only references declared libraries");
    BuiltGraph { graph, warnings }
}

impl DependencyGraph {
    /// Builds a graph from explicit nodes and edges. Duplicate edges collapse;
    /// self-loops are silently dropped (use [`build_graph`] to get warnings).
    pub fn from_edges<N, E>(nodes: N, edges: E) -> Result<Self>
    where
        N: IntoIterator<Item = LibraryId>,
        E: IntoIterator<Item = (LibraryId, LibraryId)>,
    {
        let set: BTreeSet<LibraryId> = nodes.into_iter().collect();
        let nodes: Vec<LibraryId> = set.into_iter().collect();
        let index: BTreeMap<LibraryId, usize> =
            nodes.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect();

        let mut pairs = BTreeSet::new();
        for (from, to) in edges {
            let f = *index.get(&from).ok_or_else(|| Error::Lookup(from.to_string()))?;
            let t = *index.get(&to).ok_or_else(|| Error::Lookup(to.to_string()))?;
            if f != t {
                pairs.insert((f, t));
            }
        }
        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut in_edges = vec![Vec::new(); nodes.len()];
        for (f, t) in pairs {
            out_edges[f].push(t);
            in_edges[t].push(f);
        }
        for list in &mut in_edges {
            list.sort_unstable();
        }
        Ok(Self {
            nodes,
            index,
            out_edges,
            in_edges,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    pub fn nodes(&self) -> &[LibraryId] {
        &self.nodes
    }

    pub fn index_of(&self, id: &LibraryId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &LibraryId) -> bool {
        self.index.contains_key(id)
    }

    pub fn node(&self, idx: usize) -> &LibraryId {
        &self.nodes[idx]
    }

    /// Dependencies of node `idx`, ascending.
    pub fn successors(&self, idx: usize) -> &[usize] {
        &self.out_edges[idx]
    }

    /// Dependents of node `idx`, ascending.
    pub fn predecessors(&self, idx: usize) -> &[usize] {
        &self.in_edges[idx]
    }

    pub fn edges(&self) -> impl Iterator<Item = (&LibraryId, &LibraryId)> + '_ {
        self.out_edges
            .iter()
            .enumerate()
            .flat_map(move |(f, ts)| ts.iter().map(move |&t| (&self.nodes[f], &self.nodes[t])))
    }

    /// The same node set with every edge flipped.
    pub fn reversed(&self) -> Self {
        Self {
            nodes: self.nodes.clone(),
            index: self.index.clone(),
            out_edges: self.in_edges.clone(),
            in_edges: self.out_edges.clone(),
        }
    }

    /// Indices reachable from `start` through at least one edge.
    pub fn reachable_from(&self, start: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<usize> = self.out_edges[start].iter().copied().collect();
        while let Some(n) = queue.pop_front() {
            if seen.insert(n) {
                queue.extend(self.out_edges[n].iter().copied().filter(|m| !seen.contains(m)));
            }
        }
        seen
    }

    /// Restriction to `roots` plus everything they transitively depend on.
    pub fn closure_subgraph(&self, roots: &[LibraryId]) -> Result<Self> {
        let mut keep = BTreeSet::new();
        for root in roots {
            let idx = self.index_of(root).ok_or_else(|| Error::NotFound(root.to_string()))?;
            keep.insert(idx);
            keep.extend(self.reachable_from(idx));
        }
        let mut edges = Vec::new();
        for &f in &keep {
            for &t in &self.out_edges[f] {
                edges.push((self.nodes[f].clone(), self.nodes[t].clone()));
            }
        }
        Self::from_edges(keep.iter().map(|&i| self.nodes[i].clone()), edges)
    }
}

/// Every library reachable from `node` via one or more dependency links.
/// The node itself appears only when it sits on a cycle.
pub fn transitive_dependencies(graph: &DependencyGraph, node: &LibraryId) -> Result<BTreeSet<LibraryId>> {
    let idx = graph.index_of(node).ok_or_else(|| Error::Lookup(node.to_string()))?;
    Ok(graph
        .reachable_from(idx)
        .into_iter()
        .map(|i| graph.node(i).clone())
        .collect())
}

/// Tarjan's algorithm, iterative. Each component is sorted and the list is
/// ordered by each component's smallest member.
pub fn strongly_connected_components(graph: &DependencyGraph) -> Vec<Vec<LibraryId>> {
    let n = graph.len();
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut components: Vec<Vec<usize>> = Vec::new();

    for start in 0..n {
        if index[start] != UNVISITED {
            continue;
        }
        // (node, position of next successor to visit)
        let mut call: Vec<(usize, usize)> = vec![(start, 0)];
        index[start] = next_index;
        low[start] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = graph.successors(v).get(*pos) {
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
        }
    }

    // Node indices follow id order, so index order is id order.
    components.sort_by_key(|c| c[0]);
    components
        .into_iter()
        .map(|c| c.into_iter().map(|i| graph.node(i).clone()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depgraph::snapshot::{DependencySnapshot, LibraryRecord};

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

    fn snapshot(records: &[(&str, &[&str])]) -> DependencySnapshot {
        DependencySnapshot {
            format_version: 1,
            ecosystem: "npm".into(),
            libraries: records
                .iter()
                .map(|(n, deps)| LibraryRecord {
                    id: id(n),
                    repo: None,
                    direct_deps: deps.iter().map(|d| id(d)).collect(),
                })
                .collect(),
            roots: vec![id(records[0].0)],
        }
    }

    #[test]
    fn duplicate_declarations_collapse() {
        let built = build_graph(&snapshot(&[("A", &["B", "B"]), ("B", &[])]));
        assert_eq!(built.graph.edge_count(), 1);
        assert!(built.warnings.is_empty());
    }

    #[test]
    fn self_dependency_dropped_with_warning() {
        let built = build_graph(&snapshot(&[("A", &["A"])]));
        assert_eq!(built.graph.edge_count(), 0);
        assert_eq!(built.warnings.len(), 1);
    }

    #[test]
    fn diamond() {
        let built = build_graph(&snapshot(&[
            ("A", &["B", "C"]),
            ("B", &["D"]),
            ("C", &["D"]),
            ("D", &[]),
        ]));
        assert_eq!(built.graph.len(), 4);
        assert_eq!(built.graph.edge_count(), 4);
    }

    #[test]
    fn transitive_closure_examples() {
        let g = graph(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        assert!(transitive_dependencies(&g, &id("C")).unwrap().is_empty());
        let deps = transitive_dependencies(&g, &id("A")).unwrap();
        assert_eq!(deps, [id("B"), id("C")].into_iter().collect());
        assert!(matches!(
            transitive_dependencies(&g, &id("Z")),
            Err(Error::Lookup(_))
        ));
    }

    #[test]
    fn cycle_includes_the_start_node() {
        let g = graph(&["A", "B"], &[("A", "B"), ("B", "A")]);
        let deps = transitive_dependencies(&g, &id("A")).unwrap();
        assert_eq!(deps, [id("A"), id("B")].into_iter().collect());
    }

    #[test]
    fn scc_examples() {
        let dag = graph(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        assert_eq!(strongly_connected_components(&dag).len(), 3);

        let cyc = graph(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A")]);
        assert_eq!(
            strongly_connected_components(&cyc),
            vec![vec![id("A"), id("B"), id("C")]]
        );

        let two = graph(
            &["A", "B", "C", "D"],
            &[("A", "B"), ("B", "A"), ("C", "D"), ("D", "C"), ("B", "C")],
        );
        assert_eq!(
            strongly_connected_components(&two),
            vec![vec![id("A"), id("B")], vec![id("C"), id("D")]]
        );
    }

    #[test]
    fn closure_subgraph_keeps_only_reachable_part() {
        let g = graph(&["A", "B", "C", "D"], &[("A", "B"), ("B", "C"), ("D", "C")]);
        let sub = g.closure_subgraph(&[id("B")]).unwrap();
        assert_eq!(sub.nodes(), &[id("B"), id("C")]);
        assert_eq!(sub.edge_count(), 1);
        assert!(matches!(g.closure_subgraph(&[id("Q")]), Err(Error::NotFound(_))));
    }
}

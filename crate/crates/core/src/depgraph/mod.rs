//! Dependency snapshots and the directed dependency graph built from them.

mod graph;
mod id;
mod snapshot;

pub use graph::{build_graph, strongly_connected_components, transitive_dependencies, BuiltGraph, DependencyGraph};
pub use id::{is_registered_ecosystem, LibraryId, ECOSYSTEMS};
pub use snapshot::{
    parse_snapshot, parse_snapshot_with_warnings, DependencySnapshot, LibraryRecord, ParsedSnapshot,
    SNAPSHOT_FORMAT_VERSION,
};

//! depwatch: monitors the maintenance activity of open-source dependencies.
//!
//! The pipeline parses a dependency snapshot into a graph ([`depgraph`]),
//! turns each library's repository history into features and labels
//! ([`metrics`], [`classify`]), spreads risk along dependency links
//! ([`propagate`]), projects activity forward ([`forecast`]) and assembles a
//! CI report ([`report`]).

pub mod classify;
pub mod depgraph;
pub mod error;
pub mod forecast;
pub mod metrics;
pub mod propagate;
pub mod report;

pub use error::{Error, Result};

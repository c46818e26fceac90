//! Scan orchestration, reports, recommended actions and evaluation.

mod action;
mod effort;
mod evaluate;
mod render;
mod scan;
mod synth;

pub use action::{decide, recommend_action, Action, ActionPolicy, LibraryContext};
pub use effort::{effort_metrics, EffortMetrics, ReviewTruth};
pub use evaluate::{evaluate, score_report, BinaryScores, Evaluation};
pub use render::{render_report, to_canonical_json};
pub use scan::{
    run_scan, scan_single, scan_snapshot, ActivitySource, HorizonEntry, OutputFormat, Report, ReportEntry,
    ReportMetadata, ScanConfig, Summary, HISTORY_DAYS, TOOL_VERSION,
};
pub use synth::{
    generate_synthetic_ecosystem, load_truth, EcosystemPaths, GroundTruth, Popularity, SynthConfig,
    SyntheticEcosystem, TruthEntry, SYNTH_HOST,
};

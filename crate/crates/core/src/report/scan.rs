use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::action::{recommend_action, Action, ActionPolicy, LibraryContext};
use super::effort::{effort_metrics, EffortMetrics};
use crate::classify::{Classifier, LabelDistribution, Labeler};
use crate::depgraph::{build_graph, parse_snapshot_with_warnings, DependencyGraph, DependencySnapshot, LibraryId};
use crate::error::{Error, Result};
use crate::forecast::{forecast_labels, ForecastConfig, Horizon};
use crate::metrics::{
    compute_features_with, fetch_all, ActivityProvider, DateWindow, FeatureVector, LabelingStrategy, LiveProvider,
    MaintenanceLabel, OfflineStore, RepoRef, Thresholds,
};
use crate::propagate::{
    aggregate_verdicts, risk_scores, Culprit, PropagationConfig, RiskWeights, SuspicionVerdict, Verdict,
    VerdictPolicy,
};

/// Days of history requested per repository.
pub const HISTORY_DAYS: i64 = 3 * 365;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivitySource {
    /// Offline store directory.
    Store(PathBuf),
    /// Base URL of a live forge API.
    Api(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Text,
    Markdown,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "text" => Ok(Self::Text),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(Error::validation(format!("unknown output format {other:?}"))),
        }
    }
}

/// Everything a scan needs. Deserializes from the JSON config file; every
/// field except the snapshot and the activity source has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub snapshot: PathBuf,
    pub source: ActivitySource,
    /// Defaults to today (UTC).
    #[serde(default)]
    pub as_of: Option<NaiveDate>,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<u32>,
    /// Trained forest; the rule table labels directly when absent.
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub risk_weights: RiskWeights,
    #[serde(default)]
    pub verdict_policy: VerdictPolicy,
    #[serde(default)]
    pub forecast: ForecastConfig,
    #[serde(default)]
    pub action_policy: ActionPolicy,
    /// Context applied to libraries missing from `libraries`.
    #[serde(default)]
    pub default_context: LibraryContext,
    /// Per-library context keyed by id string.
    #[serde(default)]
    pub libraries: BTreeMap<String, LibraryContext>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub cost_per_review_hours: Option<f64>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_horizons() -> Vec<u32> {
    Horizon::MONTHS.to_vec()
}

fn default_parallelism() -> usize {
    4
}

impl ScanConfig {
    pub fn new(snapshot: impl Into<PathBuf>, source: ActivitySource) -> Self {
        Self {
            snapshot: snapshot.into(),
            source,
            as_of: None,
            horizons: default_horizons(),
            model: None,
            propagation: PropagationConfig::default(),
            thresholds: Thresholds::default(),
            risk_weights: RiskWeights::default(),
            verdict_policy: VerdictPolicy::default(),
            forecast: ForecastConfig::default(),
            action_policy: ActionPolicy::default(),
            default_context: LibraryContext::default(),
            libraries: BTreeMap::new(),
            format: OutputFormat::Json,
            cost_per_review_hours: None,
            parallelism: default_parallelism(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.horizons()?;
        self.propagation.validate()?;
        if self.parallelism == 0 {
            return Err(Error::validation("parallelism must be at least 1"));
        }
        for key in self.libraries.keys() {
            key.parse::<LibraryId>()?;
        }
        Ok(())
    }

    pub fn horizons(&self) -> Result<Vec<Horizon>> {
        let set: BTreeSet<u32> = self.horizons.iter().copied().collect();
        set.into_iter().map(Horizon::new).collect()
    }

    pub fn context_for(&self, id: &LibraryId) -> LibraryContext {
        self.libraries
            .get(&id.to_string())
            .copied()
            .unwrap_or(self.default_context)
    }

    fn labeler(&self) -> Result<Labeler> {
        Ok(match &self.model {
            None => Labeler::Rules(LabelingStrategy::new(self.thresholds)),
            Some(path) => {
                let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
                Labeler::Model(Box::new(Classifier::from_json(&bytes)?))
            }
        })
    }

    fn provider(&self) -> Result<Box<dyn ActivityProvider>> {
        Ok(match &self.source {
            ActivitySource::Store(dir) => Box::new(OfflineStore::new(dir)),
            ActivitySource::Api(url) => Box::new(LiveProvider::from_env(url)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonEntry {
    pub horizon_months: u32,
    pub as_of: NaiveDate,
    pub label: MaintenanceLabel,
    pub distribution: LabelDistribution,
    /// Verdict with every library at its predicted label, graph unchanged.
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub id: LibraryId,
    pub data_available: bool,
    pub self_label: MaintenanceLabel,
    pub distribution: LabelDistribution,
    pub verdict: Verdict,
    pub culprits: Vec<Culprit>,
    pub risk_score: f64,
    pub forecasts: Vec<HorizonEntry>,
    pub action: Option<Action>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub label_counts: BTreeMap<MaintenanceLabel, usize>,
    pub suspicious: usize,
    pub effort: EffortMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub labeler: String,
    pub horizons: Vec<u32>,
    /// Forecast verdicts reuse today's dependency graph.
    pub graph_held_fixed_across_horizons: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub as_of: NaiveDate,
    pub metadata: ReportMetadata,
    pub entries: Vec<ReportEntry>,
    pub summary: Summary,
    pub warnings: Vec<String>,
}

impl Report {
    /// 0 when clean, 1 when anything is suspicious.
    pub fn exit_code(&self) -> i32 {
        if self.summary.suspicious > 0 {
            1
        } else {
            0
        }
    }

    pub fn entry(&self, id: &LibraryId) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| &e.id == id)
    }

    /// Recomputes the summary tallies from the entries.
    pub fn tally(&self) -> (BTreeMap<MaintenanceLabel, usize>, usize) {
        let mut counts: BTreeMap<MaintenanceLabel, usize> = MaintenanceLabel::ALL.iter().map(|l| (*l, 0)).collect();
        for e in &self.entries {
            *counts.entry(e.self_label).or_default() += 1;
        }
        let suspicious = self.entries.iter().filter(|e| e.verdict == Verdict::Suspicious).count();
        (counts, suspicious)
    }
}

/// Per-library output of the labeling stage.
struct Assessment {
    data_available: bool,
    distribution: LabelDistribution,
    forecasts: BTreeMap<u32, (NaiveDate, LabelDistribution)>,
}

pub fn run_scan(config: &ScanConfig) -> Result<Report> {
    config.validate()?;
    let bytes = std::fs::read(&config.snapshot).map_err(|e| Error::io(&config.snapshot, e))?;
    let parsed = parse_snapshot_with_warnings(&bytes)?;
    if parsed.snapshot.roots.is_empty() {
        return Err(Error::validation("snapshot declares no roots to scan"));
    }
    let provider = config.provider()?;
    let labeler = config.labeler()?;
    let roots = parsed.snapshot.roots.clone();
    scan_snapshot(&parsed.snapshot, &roots, provider.as_ref(), &labeler, config, parsed.warnings)
}

/// Scans only the given libraries and what they depend on. Ids without a
/// version match the single library of that ecosystem and name.
pub fn scan_single(ids: &[String], config: &ScanConfig) -> Result<Report> {
    config.validate()?;
    if ids.is_empty() {
        return Err(Error::validation("no library ids given"));
    }
    let bytes = std::fs::read(&config.snapshot).map_err(|e| Error::io(&config.snapshot, e))?;
    let parsed = parse_snapshot_with_warnings(&bytes)?;
    let roots = ids
        .iter()
        .map(|s| resolve_id(&parsed.snapshot, s))
        .collect::<Result<Vec<_>>>()?;
    let provider = config.provider()?;
    let labeler = config.labeler()?;
    scan_snapshot(&parsed.snapshot, &roots, provider.as_ref(), &labeler, config, parsed.warnings)
}

fn resolve_id(snapshot: &DependencySnapshot, raw: &str) -> Result<LibraryId> {
    let id: LibraryId = raw.trim().parse()?;
    if snapshot.record(&id).is_some() {
        return Ok(id);
    }
    if id.version().is_none() {
        let mut matches = snapshot
            .libraries
            .iter()
            .filter(|r| r.id.ecosystem() == id.ecosystem() && r.id.name() == id.name());
        if let (Some(only), None) = (matches.next(), matches.next()) {
            return Ok(only.id.clone());
        }
    }
    Err(Error::NotFound(format!("library {raw} is not in the snapshot")))
}

/// The scan pipeline over an in-memory snapshot, restricted to `roots` and
/// their transitive dependencies.
pub fn scan_snapshot(
    snapshot: &DependencySnapshot,
    roots: &[LibraryId],
    provider: &dyn ActivityProvider,
    labeler: &Labeler,
    config: &ScanConfig,
    mut warnings: Vec<String>,
) -> Result<Report> {
    let horizons = config.horizons()?;
    let as_of = config.as_of.unwrap_or_else(|| chrono::Utc::now().date_naive());
    let built = build_graph(snapshot);
    warnings.extend(built.warnings);
    let graph = built.graph.closure_subgraph(roots)?;

    let assessments = assess(snapshot, &graph, provider, labeler, config, &horizons, as_of, &mut warnings)?;
    let current: BTreeMap<LibraryId, MaintenanceLabel> = assessments
        .iter()
        .map(|(id, a)| (id.clone(), a.distribution.argmax()))
        .collect();
    let verdicts = verdicts_for(&graph, &current, config)?;

    let mut future_verdicts: BTreeMap<u32, BTreeMap<LibraryId, Verdict>> = BTreeMap::new();
    for h in &horizons {
        let labels: BTreeMap<LibraryId, MaintenanceLabel> = assessments
            .iter()
            .map(|(id, a)| {
                let label = a.forecasts.get(&h.months()).map_or(current[id], |(_, d)| d.argmax());
                (id.clone(), label)
            })
            .collect();
        let v = verdicts_for(&graph, &labels, config)?;
        future_verdicts.insert(h.months(), v.into_iter().map(|v| (v.node, v.verdict)).collect());
    }

    let entries: Vec<ReportEntry> = verdicts
        .into_iter()
        .map(|v| {
            let a = &assessments[&v.node];
            let forecasts = a
                .forecasts
                .iter()
                .map(|(&months, (date, dist))| HorizonEntry {
                    horizon_months: months,
                    as_of: *date,
                    label: dist.argmax(),
                    distribution: *dist,
                    verdict: future_verdicts[&months][&v.node],
                })
                .collect();
            let action = recommend_action(&v, &config.context_for(&v.node), &config.action_policy);
            ReportEntry {
                id: v.node,
                data_available: a.data_available,
                self_label: v.self_label,
                distribution: a.distribution,
                verdict: v.verdict,
                culprits: v.culprits,
                risk_score: v.risk_score,
                forecasts,
                action,
            }
        })
        .collect();

    let mut report = Report {
        tool_version: TOOL_VERSION.to_string(),
        as_of,
        metadata: ReportMetadata {
            labeler: labeler.mode().to_string(),
            horizons: horizons.iter().map(|h| h.months()).collect(),
            graph_held_fixed_across_horizons: true,
        },
        entries,
        summary: Summary {
            total: 0,
            label_counts: BTreeMap::new(),
            suspicious: 0,
            effort: effort_metrics(0, 0, None)?,
        },
        warnings,
    };
    let (label_counts, suspicious) = report.tally();
    let mut effort = effort_metrics(report.entries.len(), suspicious, None)?;
    if let Some(cost) = config.cost_per_review_hours {
        effort = effort.with_review_cost(cost)?;
    }
    report.summary = Summary {
        total: report.entries.len(),
        label_counts,
        suspicious,
        effort,
    };
    Ok(report)
}

fn verdicts_for(
    graph: &DependencyGraph,
    labels: &BTreeMap<LibraryId, MaintenanceLabel>,
    config: &ScanConfig,
) -> Result<Vec<SuspicionVerdict>> {
    let risk = risk_scores(graph, labels, &config.propagation, &config.risk_weights)?;
    aggregate_verdicts(graph, labels, &risk, &config.verdict_policy)
}

/// Fetches, featurizes, labels and forecasts every library in `graph`.
/// Libraries without usable activity data are labeled Inactive.
#[allow(clippy::too_many_arguments)]
fn assess(
    snapshot: &DependencySnapshot,
    graph: &DependencyGraph,
    provider: &dyn ActivityProvider,
    labeler: &Labeler,
    config: &ScanConfig,
    horizons: &[Horizon],
    as_of: NaiveDate,
    warnings: &mut Vec<String>,
) -> Result<BTreeMap<LibraryId, Assessment>> {
    let missing = |warnings: &mut Vec<String>, id: &LibraryId, why: String| {
        warnings.push(format!("{id}: no data ({why}); labeled inactive"));
        let inactive = LabelDistribution::certain(MaintenanceLabel::Inactive);
        let forecasts = horizons
            .iter()
            .map(|h| (h.months(), (as_of + chrono::Duration::weeks(h.steps() as i64), inactive)))
            .collect();
        Assessment {
            data_available: false,
            distribution: inactive,
            forecasts,
        }
    };

    let with_repo: Vec<(&LibraryId, &RepoRef)> = graph
        .nodes()
        .iter()
        .filter_map(|id| snapshot.record(id).and_then(|r| r.repo.as_ref()).map(|repo| (id, repo)))
        .collect();
    let repos: Vec<RepoRef> = with_repo.iter().map(|(_, r)| (*r).clone()).collect();
    let window = DateWindow::trailing(as_of, HISTORY_DAYS);
    let fetched = fetch_all(provider, &repos, &window, config.parallelism);
    let mut series_by_id: BTreeMap<&LibraryId, Result<_>> = BTreeMap::new();
    for ((id, _), result) in with_repo.iter().zip(fetched) {
        series_by_id.insert(*id, result);
    }

    let mut out = BTreeMap::new();
    for id in graph.nodes() {
        let assessment = match series_by_id.remove(id) {
            None => missing(warnings, id, "no repository".into()),
            Some(Err(e)) if e.is_data_miss() => missing(warnings, id, e.to_string()),
            Some(Err(e)) => return Err(e),
            Some(Ok(series)) => {
                let features: FeatureVector = match compute_features_with(&series, as_of, &config.thresholds) {
                    Ok(f) => f,
                    Err(Error::Domain(msg)) => {
                        out.insert(id.clone(), missing(warnings, id, msg));
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let distribution = labeler.distribution(&features)?;
                let forecast_cfg = ForecastConfig {
                    thresholds: config.thresholds,
                    ..config.forecast
                };
                let forecasts = match forecast_labels(&series, as_of, labeler, horizons, &forecast_cfg) {
                    Ok(list) => list
                        .into_iter()
                        .map(|h| (h.horizon_months, (h.as_of, h.distribution)))
                        .collect(),
                    Err(Error::Fit(msg)) => {
                        warnings.push(format!("{id}: no forecast ({msg}); future verdicts use the current label"));
                        BTreeMap::new()
                    }
                    Err(e) => return Err(e),
                };
                Assessment {
                    data_available: true,
                    distribution,
                    forecasts,
                }
            }
        };
        out.insert(id.clone(), assessment);
    }
    Ok(out)
}

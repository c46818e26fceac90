use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::effort::{effort_metrics, EffortMetrics, ReviewTruth};
use super::scan::{run_scan, ActivitySource, Report, ScanConfig};
use super::synth::{load_truth, EcosystemPaths, GroundTruth};
use crate::classify::{ClassScores, ConfusionMatrix};
use crate::error::{Error, Result};
use crate::propagate::Verdict;

/// Suspicious-vs-not agreement with the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryScores {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub libraries: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassScores>,
    pub confusion: ConfusionMatrix,
    pub binary: BinaryScores,
    pub effort: EffortMetrics,
}

/// Scans a generated ecosystem directory and scores the report against its
/// `truth.json`. Forecasting is skipped: only current labels are judged.
pub fn evaluate(dir: &Path, model: Option<PathBuf>) -> Result<Evaluation> {
    let paths = EcosystemPaths::new(dir);
    let truth = load_truth(&paths.truth)?;
    let mut config = ScanConfig::new(&paths.snapshot, ActivitySource::Store(paths.store.clone()));
    config.as_of = Some(truth.as_of);
    config.horizons = Vec::new();
    config.model = model;
    let report = run_scan(&config)?;
    score_report(&report, &truth)
}

pub fn score_report(report: &Report, truth: &GroundTruth) -> Result<Evaluation> {
    let mut pairs = Vec::with_capacity(truth.libraries.len());
    let (mut tp, mut fp, mut fneg, mut tn) = (0, 0, 0, 0);
    for t in &truth.libraries {
        let e = report
            .entry(&t.id)
            .ok_or_else(|| Error::validation(format!("report has no entry for {}", t.id)))?;
        pairs.push((t.label, e.self_label));
        match (t.suspicious, e.verdict == Verdict::Suspicious) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fneg += 1,
            (false, false) => tn += 1,
        }
    }
    if report.entries.len() != truth.libraries.len() {
        return Err(Error::validation(format!(
            "report covers {} libraries, truth {}",
            report.entries.len(),
            truth.libraries.len()
        )));
    }
    let confusion = ConfusionMatrix::from_pairs(pairs);
    let reported = tp + fp;
    let effort = effort_metrics(
        truth.libraries.len(),
        reported,
        Some(ReviewTruth {
            true_suspicious: tp + fneg,
            true_positives: tp,
        }),
    )?;
    Ok(Evaluation {
        libraries: truth.libraries.len(),
        accuracy: confusion.accuracy(),
        macro_f1: confusion.macro_f1(),
        per_class: confusion.per_class(),
        binary: BinaryScores {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fneg,
            true_negatives: tn,
            precision: effort.precision.unwrap_or(1.0),
            recall: effort.recall.unwrap_or(1.0),
        },
        confusion,
        effort,
    })
}

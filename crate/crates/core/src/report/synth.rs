//! Seeded synthetic ecosystems with known maintenance labels.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::depgraph::{DependencyGraph, DependencySnapshot, LibraryId, LibraryRecord, SNAPSHOT_FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::metrics::{
    compute_features, ActivityTimeSeries, FeatureSchema, LabeledDataset, LabeledRow, MaintenanceLabel,
    OfflineStore, RepoRef, WeekBucket,
};

pub const SYNTH_HOST: &str = "synth.example";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Popularity {
    Low,
    Medium,
    High,
}

impl Popularity {
    pub const ALL: [Popularity; 3] = [Popularity::Low, Popularity::Medium, Popularity::High];

    fn max_weekly_commits(self) -> u32 {
        match self {
            Popularity::Low => 3,
            Popularity::Medium => 6,
            Popularity::High => 12,
        }
    }

    fn star_range(self) -> (u32, u32) {
        match self {
            Popularity::Low => (0, 100),
            Popularity::Medium => (100, 5_000),
            Popularity::High => (5_000, 50_000),
        }
    }

    fn author_pool(self) -> usize {
        match self {
            Popularity::Low => 3,
            Popularity::Medium => 8,
            Popularity::High => 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_libraries: usize,
    /// Shares of Active, FeatureComplete, Dormant, Inactive.
    pub label_mix: [f64; 4],
    /// Shares of low, medium and high popularity.
    pub popularity_mix: [f64; 3],
    /// Probability of each possible edge `i → j` with `i < j`.
    pub edge_density: f64,
    /// Must be a Monday so the as-of date opens a week bucket.
    pub as_of: NaiveDate,
    /// Share of libraries whose activity is drawn for a neighboring label
    /// while the truth keeps the intended one.
    pub label_noise: f64,
    pub ecosystem: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            n_libraries: 20,
            label_mix: [0.25; 4],
            popularity_mix: [1.0 / 3.0; 3],
            edge_density: 0.1,
            as_of: NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date"),
            label_noise: 0.0,
            ecosystem: "npm".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub id: LibraryId,
    pub label: MaintenanceLabel,
    /// Under the all-or-nothing rule applied to the true labels.
    pub suspicious: bool,
    pub popularity: Popularity,
    /// Label whose trajectory was actually drawn, when noise swapped it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_as: Option<MaintenanceLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub as_of: NaiveDate,
    pub label_noise: f64,
    pub libraries: Vec<TruthEntry>,
}

impl GroundTruth {
    pub fn labels(&self) -> BTreeMap<LibraryId, MaintenanceLabel> {
        self.libraries.iter().map(|e| (e.id.clone(), e.label)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticEcosystem {
    pub snapshot: DependencySnapshot,
    pub series: Vec<ActivityTimeSeries>,
    pub truth: GroundTruth,
    /// Features at the as-of date paired with the true labels.
    pub dataset: LabeledDataset,
}

/// File layout written by [`SyntheticEcosystem::write_to`].
pub struct EcosystemPaths {
    pub snapshot: PathBuf,
    pub store: PathBuf,
    pub truth: PathBuf,
    pub dataset: PathBuf,
}

impl EcosystemPaths {
    pub fn new(dir: &Path) -> Self {
        Self {
            snapshot: dir.join("snapshot.json"),
            store: dir.join("store"),
            truth: dir.join("truth.json"),
            dataset: dir.join("dataset.json"),
        }
    }
}

fn check_mix(name: &str, mix: &[f64]) -> Result<()> {
    let sum: f64 = mix.iter().sum();
    if mix.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!("{name} {mix:?} must be nonnegative and sum to 1")));
    }
    Ok(())
}

/// Splits `n` into counts proportional to `mix` by largest remainder,
/// earlier categories winning ties.
fn apportion(n: usize, mix: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = mix.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..mix.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

fn expand<T: Copy>(values: &[T], counts: &[usize], rng: &mut ChaCha8Rng) -> Vec<T> {
    let mut out: Vec<T> = values
        .iter()
        .zip(counts)
        .flat_map(|(v, &c)| std::iter::repeat_n(*v, c))
        .collect();
    out.shuffle(rng);
    out
}

fn neighbor(label: MaintenanceLabel, rng: &mut ChaCha8Rng) -> MaintenanceLabel {
    use MaintenanceLabel::*;
    match label {
        Active => Dormant,
        Dormant => {
            if rng.random_bool(0.5) {
                Active
            } else {
                FeatureComplete
            }
        }
        FeatureComplete => {
            if rng.random_bool(0.5) {
                Dormant
            } else {
                Inactive
            }
        }
        Inactive => FeatureComplete,
    }
}

pub fn generate_synthetic_ecosystem(config: &SynthConfig) -> Result<SyntheticEcosystem> {
    if config.n_libraries == 0 {
        return Err(Error::validation("a synthetic ecosystem needs at least one library"));
    }
    check_mix("label mix", &config.label_mix)?;
    check_mix("popularity mix", &config.popularity_mix)?;
    if !(0.0..=1.0).contains(&config.edge_density) {
        return Err(Error::validation(format!("edge density {} outside [0, 1]", config.edge_density)));
    }
    if !(0.0..=1.0).contains(&config.label_noise) {
        return Err(Error::validation(format!("label noise {} outside [0, 1]", config.label_noise)));
    }
    if chrono::Datelike::weekday(&config.as_of) != chrono::Weekday::Mon {
        return Err(Error::validation(format!("as_of {} is not a Monday", config.as_of)));
    }

    let n = config.n_libraries;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let labels = expand(&MaintenanceLabel::ALL, &apportion(n, &config.label_mix), &mut rng);
    let popularity = expand(&Popularity::ALL, &apportion(n, &config.popularity_mix), &mut rng);

    let width = n.to_string().len().max(4);
    let ids: Vec<LibraryId> = (0..n)
        .map(|i| LibraryId::new(&config.ecosystem, &format!("synth-{i:0width$}"), Some("1.0.0")))
        .collect::<Result<_>>()?;
    let mut deps: Vec<Vec<LibraryId>> = vec![Vec::new(); n];
    for (i, list) in deps.iter_mut().enumerate() {
        for id in ids.iter().skip(i + 1) {
            if rng.random_bool(config.edge_density) {
                list.push(id.clone());
            }
        }
    }

    let mut series = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let intended = labels[i];
        let drawn = if config.label_noise > 0.0 && rng.random_bool(config.label_noise) {
            neighbor(intended, &mut rng)
        } else {
            intended
        };
        let repo = RepoRef::new(SYNTH_HOST, "synth", ids[i].name())?;
        let s = trajectory(repo, drawn, popularity[i], config.as_of, &mut rng);
        rows.push(LabeledRow {
            id: Some(ids[i].to_string()),
            features: compute_features(&s, config.as_of)?,
            label: intended,
        });
        series.push(s);
        truth.push(TruthEntry {
            id: ids[i].clone(),
            label: intended,
            suspicious: false,
            popularity: popularity[i],
            generated_as: (drawn != intended).then_some(drawn),
        });
    }

    let graph = DependencyGraph::from_edges(
        ids.iter().cloned(),
        ids.iter()
            .zip(&deps)
            .flat_map(|(from, list)| list.iter().map(move |to| (from.clone(), to.clone()))),
    )?;
    for (i, entry) in truth.iter_mut().enumerate() {
        let all_active = |m: usize| labels[m] == MaintenanceLabel::Active;
        entry.suspicious = !(all_active(i) && graph.reachable_from(i).into_iter().all(all_active));
    }

    let roots = (0..n)
        .filter(|&i| graph.predecessors(i).is_empty())
        .map(|i| ids[i].clone())
        .collect();
    let libraries = ids
        .iter()
        .zip(deps)
        .zip(&series)
        .map(|((id, direct_deps), s)| LibraryRecord {
            id: id.clone(),
            repo: Some(s.repo.clone()),
            direct_deps,
        })
        .collect();
    let snapshot = DependencySnapshot {
        format_version: SNAPSHOT_FORMAT_VERSION,
        ecosystem: config.ecosystem.clone(),
        libraries,
        roots,
    };
    snapshot.validate()?;
    Ok(SyntheticEcosystem {
        snapshot,
        series,
        truth: GroundTruth {
            seed: config.seed,
            as_of: config.as_of,
            label_noise: config.label_noise,
            libraries: truth,
        },
        dataset: LabeledDataset::new(FeatureSchema::current(), rows)?,
    })
}

/// Draws one repository history whose features at `as_of` satisfy the
/// guard of `label`'s rule (and no rule of higher precedence).
fn trajectory(
    repo: RepoRef,
    label: MaintenanceLabel,
    popularity: Popularity,
    as_of: NaiveDate,
    rng: &mut ChaCha8Rng,
) -> ActivityTimeSeries {
    use MaintenanceLabel::*;

    #[derive(PartialEq)]
    enum InactiveKind {
        Archived,
        Deprecated,
        Abandoned,
    }
    let inactive_kind = match rng.random_range(0..3) {
        0 => InactiveKind::Archived,
        1 => InactiveKind::Deprecated,
        _ => InactiveKind::Abandoned,
    };

    // Weeks between the last commit week and the as-of week; the last
    // commit is then exactly 7·idle days before `as_of`.
    let idle_weeks: i64 = match label {
        Active => rng.random_range(0..=8),
        Dormant => rng.random_range(13..=52),
        FeatureComplete => rng.random_range(53..=156),
        Inactive if inactive_kind == InactiveKind::Abandoned => rng.random_range(53..=156),
        Inactive => rng.random_range(0..=120),
    };
    let age_weeks: i64 = rng.random_range((idle_weeks + 26).max(60)..=idle_weeks + 260);
    let created = as_of - Duration::weeks(age_weeks) + Duration::days(rng.random_range(0..7));
    let first_week = crate::metrics::week_start_of(created);
    let n_weeks = ((as_of - first_week).num_days() / 7 + 1) as usize;
    let last_commit_week = n_weeks - 1 - idle_weeks as usize;

    let (lo, hi) = popularity.star_range();
    let final_stars = rng.random_range(lo..hi);
    let rate = popularity.max_weekly_commits();
    let pool = rng.random_range(1..=popularity.author_pool());
    let stable = match label {
        FeatureComplete => rng.random_bool(0.5),
        Inactive => false,
        _ => rng.random_bool(0.1),
    };

    let mut weeks = Vec::with_capacity(n_weeks);
    let mut releases = Vec::new();
    let mut next_release = rng.random_range(4..30);
    for w in 0..n_weeks {
        let start = first_week + Duration::weeks(w as i64);
        let stars = (final_stars as u64 * (w as u64 + 1) / n_weeks as u64) as u32;
        let mut bucket = WeekBucket::empty(start, stars);
        if w <= last_commit_week {
            let mut commits = rng.random_range(0..=rate);
            if w == last_commit_week {
                commits = commits.max(1);
            }
            for _ in 0..commits {
                // Skewed towards the first authors, like real projects.
                let a = rng.random_range(0..pool).min(rng.random_range(0..pool));
                *bucket.authors.entry(format!("dev-{a:02}")).or_insert(0) += 1;
            }
            bucket.commits = commits;
            bucket.active_contributors = bucket.authors.len() as u32;
            if w >= next_release && start <= as_of {
                releases.push(start + Duration::days(rng.random_range(0..7)).min(as_of - start));
                next_release = w + rng.random_range(4..30);
            }
        }
        let opened = rng.random_range(0..=rate / 2 + 1);
        bucket.issues_opened = opened;
        bucket.issues_closed = if w <= last_commit_week || label == FeatureComplete {
            rng.random_range(0..=opened)
        } else {
            0
        };
        weeks.push(bucket);
    }

    let n_samples = rng.random_range(0..=30);
    let mut sample = |lo: f64, hi: f64| ((lo + rng.random::<f64>() * (hi - lo)) * 10.0).round() / 10.0;
    let issue_response_samples: Vec<f64> = match label {
        FeatureComplete if !stable => (0..n_samples.max(1)).map(|_| sample(1.0, 300.0)).collect(),
        Inactive if inactive_kind == InactiveKind::Abandoned => {
            if n_samples % 2 == 0 {
                Vec::new()
            } else {
                (0..n_samples).map(|_| sample(400.0, 4000.0)).collect()
            }
        }
        Active => (0..n_samples).map(|_| sample(0.5, 200.0)).collect(),
        _ => (0..n_samples).map(|_| sample(1.0, 2000.0)).collect(),
    };

    let archived_at = (label == Inactive && inactive_kind == InactiveKind::Archived).then(|| {
        let span = (as_of - created).num_days().max(0);
        created + Duration::days(rng.random_range(0..=span))
    });
    ActivityTimeSeries {
        repo,
        created_at: created,
        weeks,
        releases,
        issue_response_samples,
        archived_at,
        readme_deprecated: label == Inactive && inactive_kind == InactiveKind::Deprecated,
        readme_stable_declared: stable,
    }
}

impl SyntheticEcosystem {
    pub fn write_to(&self, dir: &Path) -> Result<EcosystemPaths> {
        let paths = EcosystemPaths::new(dir);
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |path: &Path, text: String| std::fs::write(path, text).map_err(|e| Error::io(path, e));
        write(&paths.snapshot, self.snapshot.to_json() + "\n")?;
        write(
            &paths.truth,
            serde_json::to_string_pretty(&self.truth).expect("truth serializes") + "\n",
        )?;
        write(&paths.dataset, self.dataset.to_json() + "\n")?;
        let store = OfflineStore::new(&paths.store);
        for s in &self.series {
            store.store(s)?;
        }
        Ok(paths)
    }
}

pub fn load_truth(path: &Path) -> Result<GroundTruth> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(Error::from_json)
}

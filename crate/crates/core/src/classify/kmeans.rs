//! Lloyd's k-means with k-means++ seeding on z-scored columns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    KMeansPlusPlus,
    /// k distinct rows drawn uniformly.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusteringConfig {
    pub k: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub init: InitMethod,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            k: 4,
            max_iterations: 300,
            seed: 11,
            init: InitMethod::KMeansPlusPlus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    /// Cluster means in the original (unstandardized) units.
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared standardized distances to assigned centroids.
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after each centroid update.
    pub inertia_history: Vec<f64>,
    pub converged: bool,
}

/// Z-scores each column with the population standard deviation; constant
/// columns map to 0.
pub fn standardize(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let d = rows.first().map_or(0, Vec::len);
    let mut out = rows.to_vec();
    for j in 0..d {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for (o, r) in out.iter_mut().zip(rows) {
            o[j] = if sd > 0.0 { (r[j] - mean) / sd } else { 0.0 };
        }
    }
    out
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn kmeans(rows: &[Vec<f64>], config: &ClusteringConfig) -> Result<KMeansResult> {
    if config.k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    if config.k > rows.len() {
        return Err(Error::validation(format!(
            "k = {} exceeds the {} available rows",
            config.k,
            rows.len()
        )));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d || r.iter().any(|v| !v.is_finite())) {
        return Err(Error::validation("rows must share one width and hold finite values"));
    }

    let z = standardize(rows);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids = match config.init {
        InitMethod::KMeansPlusPlus => plus_plus(&z, config.k, &mut rng),
        InitMethod::Random => rand::seq::index::sample(&mut rng, z.len(), config.k)
            .into_iter()
            .map(|i| z[i].clone())
            .collect(),
    };

    let mut assignments = assign(&z, &centroids);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        iterations += 1;
        update_centroids(&z, &assignments, &mut centroids);
        history.push(inertia(&z, &assignments, &centroids));
        let next = assign(&z, &centroids);
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
    }
    let final_inertia = inertia(&z, &assignments, &centroids);

    let mut original = vec![vec![0.0; d]; config.k];
    let mut sizes = vec![0usize; config.k];
    for (row, &c) in rows.iter().zip(&assignments) {
        sizes[c] += 1;
        for (o, v) in original[c].iter_mut().zip(row) {
            *o += v;
        }
    }
    for (c, size) in original.iter_mut().zip(&sizes) {
        if *size > 0 {
            c.iter_mut().for_each(|v| *v /= *size as f64);
        }
    }

    Ok(KMeansResult {
        assignments,
        centroids: original,
        inertia: final_inertia,
        iterations,
        inertia_history: history,
        converged,
    })
}

pub fn kmeans_features(data: &[FeatureVector], config: &ClusteringConfig) -> Result<KMeansResult> {
    let rows: Vec<Vec<f64>> = data.iter().map(|f| f.to_array().to_vec()).collect();
    kmeans(&rows, config)
}

fn plus_plus(z: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![z[rng.random_range(0..z.len())].clone()];
    let mut nearest: Vec<f64> = z.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = z.len() - 1;
            for (i, w) in nearest.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..z.len())
        };
        let c = z[pick].clone();
        for (n, p) in nearest.iter_mut().zip(z) {
            *n = n.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Nearest centroid per row; the lower index wins equal distances.
fn assign(z: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    z.iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let dist = sq_dist(p, centroid);
                if dist < best_d {
                    best = c;
                    best_d = dist;
                }
            }
            best
        })
        .collect()
}

/// Empty clusters keep their previous centroid.
fn update_centroids(z: &[Vec<f64>], assignments: &[usize], centroids: &mut [Vec<f64>]) {
    let d = z[0].len();
    let mut sums = vec![vec![0.0; d]; centroids.len()];
    let mut sizes = vec![0usize; centroids.len()];
    for (p, &c) in z.iter().zip(assignments) {
        sizes[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p) {
            *s += v;
        }
    }
    for ((centroid, sum), size) in centroids.iter_mut().zip(sums).zip(sizes) {
        if size > 0 {
            *centroid = sum.into_iter().map(|s| s / size as f64).collect();
        }
    }
}

fn inertia(z: &[Vec<f64>], assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    z.iter().zip(assignments).map(|(p, &c)| sq_dist(p, &centroids[c])).sum()
}

//! Clustering, PCA and forest checks against independent oracles.

use depwatch_core::classify::{
    classify, feature_importance, kmeans, pca, train_classifier, ClusteringConfig, ConfusionMatrix, ForestParams,
};
use depwatch_core::metrics::{FeatureSchema, LabeledDataset, MaintenanceLabel};
use depwatch_core::report::{generate_synthetic_ecosystem, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Adjusted Rand index from the contingency table.
fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let c2 = |n: u64| (n * n.saturating_sub(1)) as f64 / 2.0;
    let sum_cells: f64 = table.iter().flatten().map(|&n| c2(n)).sum();
    let sum_rows: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let sum_cols: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(a.len() as u64);
    let expected = sum_rows * sum_cols / total;
    let max = (sum_rows + sum_cols) / 2.0;
    (sum_cells - expected) / (max - expected)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[test]
fn ari_oracle_sanity() {
    assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]), 1.0);
    assert!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]) < 0.0);
}

#[test]
fn kmeans_recovers_separated_blobs() {
    let centers = [[0.0, 0.0, 0.0], [10.0, 0.0, 5.0], [0.0, 10.0, -5.0], [10.0, 10.0, 10.0]];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..50 {
            rows.push(center.iter().map(|m| m + gaussian(&mut rng)).collect::<Vec<f64>>());
            truth.push(c);
        }
    }
    let result = kmeans(&rows, &ClusteringConfig::default()).unwrap();
    assert!(result.converged);
    let ari = adjusted_rand_index(&truth, &result.assignments);
    assert!(ari >= 0.95, "ARI {ari}");
    // Lloyd iterations never increase inertia.
    assert!(result.inertia_history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

/// Eigen-decomposition of a symmetric 3×3 matrix in closed form:
/// trigonometric roots of the characteristic cubic, eigenvectors from the
/// cross product of two rows of `A - λI`.
fn sym3_eigen(a: [[f64; 3]; 3]) -> Vec<(f64, [f64; 3])> {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = a;
    for (i, row) in b.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (a[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let phi = (det_b / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let l2 = 3.0 * q - l1 - l3;
    [l1, l2, l3]
        .into_iter()
        .map(|l| {
            let m = |i: usize, j: usize| a[i][j] - if i == j { l } else { 0.0 };
            let rows = [[m(0, 0), m(0, 1), m(0, 2)], [m(1, 0), m(1, 1), m(1, 2)], [m(2, 0), m(2, 1), m(2, 2)]];
            let cross = |u: [f64; 3], v: [f64; 3]| {
                [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
            };
            let candidates = [cross(rows[0], rows[1]), cross(rows[0], rows[2]), cross(rows[1], rows[2])];
            let best = candidates
                .into_iter()
                .max_by(|x, y| norm(x).total_cmp(&norm(y)))
                .unwrap();
            let n = norm(&best);
            let mut v = best.map(|x| x / n);
            let pivot = v.iter().copied().max_by(|x, y| x.abs().total_cmp(&y.abs())).unwrap();
            if pivot < 0.0 {
                v = v.map(|x| -x);
            }
            (l, v)
        })
        .collect()
}

fn norm(v: &[f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn pca_matches_closed_form_on_fixture() {
    let rows = vec![
        vec![2.5, 2.4, 1.2],
        vec![0.5, 0.7, 0.3],
        vec![2.2, 2.9, 1.9],
        vec![1.9, 2.2, 0.4],
        vec![3.1, 3.0, 2.6],
    ];
    let result = pca(&rows, 3).unwrap();

    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..3).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let mut cov = [[0.0; 3]; 3];
    for r in &rows {
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / (n - 1.0);
            }
        }
    }
    let oracle = sym3_eigen(cov);
    for (k, (value, vector)) in oracle.iter().enumerate() {
        assert!((result.explained_variance[k] - value).abs() < 1e-8);
        for j in 0..3 {
            assert!(
                (result.components[k][j] - vector[j]).abs() < 1e-8,
                "component {k}: {:?} vs {vector:?}",
                result.components[k]
            );
        }
    }
    for a in 0..3 {
        for b in 0..3 {
            let dot: f64 = (0..3).map(|j| result.components[a][j] * result.components[b][j]).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-8);
        }
    }
    // Full-rank projection reconstructs the data.
    for (row, proj) in rows.iter().zip(&result.projected) {
        for (x, y) in row.iter().zip(result.reconstruct(proj)) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

fn synthetic_dataset(seed: u64, n: usize) -> LabeledDataset {
    generate_synthetic_ecosystem(&SynthConfig {
        seed,
        n_libraries: n,
        ..SynthConfig::default()
    })
    .unwrap()
    .dataset
}

#[test]
fn forest_is_reproducible_and_accurate_on_held_out_rows() {
    let data = synthetic_dataset(3, 200);
    let (train, test) = data.split(0.7, 3);
    let train = LabeledDataset::new(FeatureSchema::current(), train).unwrap();
    let params = ForestParams {
        n_trees: 30,
        ..ForestParams::default()
    };
    let a = train_classifier(&train, &params).unwrap();
    let b = train_classifier(&train, &params).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.n_trees(), 30);

    let pairs = test.iter().map(|r| (r.label, classify(&a, &r.features).unwrap().argmax()));
    let cm = ConfusionMatrix::from_pairs(pairs);
    assert!(cm.macro_f1() >= 0.85, "macro-F1 {}", cm.macro_f1());

    let importance = feature_importance(&a);
    let total: f64 = importance.iter().map(|(_, v)| v).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert!(importance.windows(2).all(|w| w[0].1 >= w[1].1));
}

#[test]
fn distributions_are_probabilities() {
    let data = synthetic_dataset(5, 60);
    let model = train_classifier(&data, &ForestParams { n_trees: 10, ..Default::default() }).unwrap();
    for row in &data.rows {
        let d = classify(&model, &row.features).unwrap();
        assert!(d.is_valid());
        let sum: f64 = MaintenanceLabel::ALL.iter().map(|l| d.get(*l)).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}

#[test]
fn model_file_round_trips() {
    let data = synthetic_dataset(8, 40);
    let model = train_classifier(&data, &ForestParams { n_trees: 5, ..Default::default() }).unwrap();
    let text = model.to_json();
    let back = depwatch_core::classify::Classifier::from_json(text.as_bytes()).unwrap();
    assert_eq!(back.to_json(), text);
}

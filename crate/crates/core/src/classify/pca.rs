//! Principal component analysis via the symmetric eigendecomposition of the
//! sample covariance matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::kmeans::standardize;
use crate::error::{Error, Result};
use crate::metrics::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub mean: Vec<f64>,
    /// One unit-length row per component, strongest first. Each row's
    /// largest-magnitude entry is positive.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// Centered rows projected onto the components.
    pub projected: Vec<Vec<f64>>,
}

pub fn pca(rows: &[Vec<f64>], n_components: usize) -> Result<PcaResult> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::validation("PCA needs at least two rows"));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d || r.iter().any(|v| !v.is_finite())) {
        return Err(Error::validation("rows must share one width and hold finite values"));
    }
    if n_components == 0 || n_components > d {
        return Err(Error::validation(format!(
            "n_components {n_components} outside 1..={d}"
        )));
    }

    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();

    let mut components = Vec::with_capacity(n_components);
    let mut variance = Vec::with_capacity(n_components);
    for &k in order.iter().take(n_components) {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let pivot = v
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map_or(0.0, |(_, x)| x);
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        variance.push(eig.eigenvalues[k].max(0.0));
    }
    let ratio = variance
        .iter()
        .map(|v| if total > 0.0 { v / total } else { 0.0 })
        .collect();
    let projected = (0..n)
        .map(|i| {
            components
                .iter()
                .map(|c| (0..d).map(|j| centered[(i, j)] * c[j]).sum())
                .collect()
        })
        .collect();

    Ok(PcaResult {
        mean,
        components,
        explained_variance: variance,
        explained_variance_ratio: ratio,
        projected,
    })
}

/// PCA of z-scored feature columns, so star counts do not drown out ratios.
pub fn pca_features(data: &[FeatureVector], n_components: usize) -> Result<PcaResult> {
    let rows: Vec<Vec<f64>> = data.iter().map(|f| f.to_array().to_vec()).collect();
    pca(&standardize(&rows), n_components)
}

impl PcaResult {
    /// Maps projected coordinates back to the original space.
    pub fn reconstruct(&self, projected: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (coef, comp) in projected.iter().zip(&self.components) {
            for (o, c) in out.iter_mut().zip(comp) {
                *o += coef * c;
            }
        }
        out
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::features::{FeatureSchema, FeatureVector};
use super::labeling::{LabelingStrategy, MaintenanceLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub features: FeatureVector,
    pub label: MaintenanceLabel,
}

/// Feature vectors paired with maintenance labels, all on one schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub schema: FeatureSchema,
    pub rows: Vec<LabeledRow>,
}

pub type LabelHistogram = BTreeMap<MaintenanceLabel, usize>;

impl LabeledDataset {
    pub fn new(schema: FeatureSchema, rows: Vec<LabeledRow>) -> Result<Self> {
        let ds = Self { schema, rows };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != FeatureSchema::current() {
            return Err(Error::validation(format!(
                "dataset schema v{} {:?} does not match feature schema v{}",
                self.schema.version,
                self.schema.names,
                FeatureSchema::current().version
            )));
        }
        if self.rows.is_empty() {
            return Err(Error::validation("dataset has no rows"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            row.features
                .validate()
                .map_err(|e| Error::validation(format!("row {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Count per label, with every label present (possibly zero).
    pub fn histogram(&self) -> LabelHistogram {
        let mut hist: LabelHistogram = MaintenanceLabel::ALL.iter().map(|l| (*l, 0)).collect();
        for row in &self.rows {
            *hist.get_mut(&row.label).expect("all labels seeded") += 1;
        }
        hist
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let ds: Self = serde_json::from_slice(bytes).map_err(Error::from_json)?;
        ds.validate()?;
        Ok(ds)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serialization is infallible")
    }

    /// Splits rows into `(train, test)`, taking every row whose position in a
    /// seeded shuffle falls below `train_fraction`.
    pub fn split(&self, train_fraction: f64, seed: u64) -> (Vec<LabeledRow>, Vec<LabeledRow>) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let cut = (self.rows.len() as f64 * train_fraction).round() as usize;
        let pick = |idx: &[usize]| idx.iter().map(|&i| self.rows[i].clone()).collect::<Vec<_>>();
        (pick(&order[..cut]), pick(&order[cut..]))
    }
}

/// Labels every vector with the default rule table.
pub fn label_dataset(vectors: &[FeatureVector]) -> Result<LabeledDataset> {
    label_dataset_with(vectors, &LabelingStrategy::default())
}

pub fn label_dataset_with(vectors: &[FeatureVector], strategy: &LabelingStrategy) -> Result<LabeledDataset> {
    let rows = vectors
        .iter()
        .map(|fv| LabeledRow {
            id: None,
            features: fv.clone(),
            label: strategy.label(fv),
        })
        .collect();
    LabeledDataset::new(FeatureSchema::current(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn active() -> FeatureVector {
        FeatureVector::from_slice(&[
            4.0, 12.0, 50.0, 3.0, 2.0, 2.0, 20.0, 4.0, 10.0, 9.0, 0.9, 12.0, 100.0, 900.0, 0.0, 0.0, 0.0,
        ])
        .unwrap()
    }

    #[test]
    fn one_active_vector() {
        let ds = label_dataset(&[active()]).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.histogram()[&MaintenanceLabel::Active], 1);
        assert_eq!(ds.histogram().values().sum::<usize>(), 1);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(label_dataset(&[]), Err(Error::Validation(_))));
    }

    #[test]
    fn foreign_schema_is_rejected() {
        let mut ds = label_dataset(&[active()]).unwrap();
        ds.schema.names.pop();
        let bytes = ds.to_json();
        assert!(matches!(LabeledDataset::from_json(bytes.as_bytes()), Err(Error::Validation(_))));
    }

    #[test]
    fn split_is_a_seeded_partition() {
        let ds = label_dataset(&vec![active(); 10]).unwrap();
        let (a, b) = ds.split(0.7, 3);
        assert_eq!((a.len(), b.len()), (7, 3));
        assert_eq!(ds.split(0.7, 3).0, a);
    }
}

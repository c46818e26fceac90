//! Random forest of CART trees grown on Gini impurity.
//!
//! Tree `i` draws its bootstrap sample and per-split feature subsets from a
//! ChaCha8 stream seeded with `seed + i`, so a forest depends only on the
//! dataset and hyperparameters, never on thread scheduling.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distribution::LabelDistribution;
use super::evaluation::ConfusionMatrix;
use crate::error::{Error, Result};
use crate::metrics::{FeatureSchema, FeatureVector, LabeledDataset, LabeledRow, MaintenanceLabel};

const N_LABELS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Candidate features per split; `None` means ⌈√n_features⌉.
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 16,
            min_samples_leaf: 1,
            features_per_split: None,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        /// Weighted Gini decrease this split achieved (node share × gain).
        impurity_decrease: f64,
        /// Taken when `value <= threshold`.
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        votes: [u32; N_LABELS],
    },
}

impl Node {
    pub fn leaf(votes: [u32; N_LABELS]) -> Self {
        Node::Leaf { votes }
    }

    fn predict(&self, x: &[f64]) -> MaintenanceLabel {
        let mut node = self;
        loop {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if x[*feature] <= *threshold { left } else { right },
                Node::Leaf { votes } => return majority(votes),
            }
        }
    }

    fn accumulate_importance(&self, out: &mut [f64]) {
        if let Node::Split {
            feature,
            impurity_decrease,
            left,
            right,
            ..
        } = self
        {
            out[*feature] += impurity_decrease;
            left.accumulate_importance(out);
            right.accumulate_importance(out);
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
            Node::Leaf { .. } => 0,
        }
    }
}

/// Majority vote; ties go to the label declared first.
fn majority(votes: &[u32; N_LABELS]) -> MaintenanceLabel {
    let mut best = 0;
    for i in 1..N_LABELS {
        if votes[i] > votes[best] {
            best = i;
        }
    }
    MaintenanceLabel::from_index(best).expect("label index in range")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OobSummary {
    pub rows_scored: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
}

/// A trained forest plus the schema it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub schema: FeatureSchema,
    pub hyperparams: ForestParams,
    pub trees: Vec<Node>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oob: Option<OobSummary>,
}

pub fn train_classifier(data: &LabeledDataset, params: &ForestParams) -> Result<Classifier> {
    data.validate()?;
    train_on_rows(&data.schema, &data.rows, params)
}

fn train_on_rows(schema: &FeatureSchema, rows: &[LabeledRow], params: &ForestParams) -> Result<Classifier> {
    if params.n_trees == 0 {
        return Err(Error::Training("n_trees must be at least 1".into()));
    }
    if params.min_samples_leaf == 0 {
        return Err(Error::Training("min_samples_leaf must be at least 1".into()));
    }
    if rows.is_empty() {
        return Err(Error::Training("no training rows".into()));
    }
    let n_features = schema.len();
    let per_split = params
        .features_per_split
        .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize);
    if per_split == 0 || per_split > n_features {
        return Err(Error::Training(format!(
            "features_per_split {per_split} outside 1..={n_features}"
        )));
    }
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r.features.to_array().to_vec()).collect();
    let y: Vec<usize> = rows.iter().map(|r| r.label.index()).collect();
    let builder = TreeBuilder {
        x: &x,
        y: &y,
        n_features,
        per_split,
        max_depth: params.max_depth,
        min_leaf: params.min_samples_leaf,
    };

    let grown = grow_forest(&builder, params);
    let oob = out_of_bag(&builder, &grown);
    Ok(Classifier {
        schema: schema.clone(),
        hyperparams: *params,
        trees: grown.into_iter().map(|(tree, _)| tree).collect(),
        oob,
    })
}

/// Trains only after checking every label is represented.
pub fn train_classifier_strict(data: &LabeledDataset, params: &ForestParams) -> Result<Classifier> {
    let hist = data.histogram();
    let missing: Vec<&str> = hist.iter().filter(|(_, n)| **n == 0).map(|(l, _)| l.as_str()).collect();
    if !missing.is_empty() {
        return Err(Error::Training(format!("no rows labeled {}", missing.join(", "))));
    }
    train_classifier(data, params)
}

fn grow_forest(builder: &TreeBuilder<'_>, params: &ForestParams) -> Vec<(Node, Vec<bool>)> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(params.n_trees);
    let mut slots: Vec<Option<(Node, Vec<bool>)>> = vec![None; params.n_trees];
    std::thread::scope(|scope| {
        for (t, chunk) in slots.chunks_mut(params.n_trees.div_ceil(threads)).enumerate() {
            let offset = t * params.n_trees.div_ceil(threads);
            scope.spawn(move || {
                for (j, slot) in chunk.iter_mut().enumerate() {
                    let seed = params.seed.wrapping_add((offset + j) as u64);
                    *slot = Some(builder.grow(seed));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("every tree grown")).collect()
}

fn out_of_bag(builder: &TreeBuilder<'_>, grown: &[(Node, Vec<bool>)]) -> Option<OobSummary> {
    let mut truth = Vec::new();
    let mut predicted = Vec::new();
    for (row, x) in builder.x.iter().enumerate() {
        let mut votes = [0u32; N_LABELS];
        for (tree, in_bag) in grown {
            if !in_bag[row] {
                votes[tree.predict(x).index()] += 1;
            }
        }
        if votes.iter().any(|v| *v > 0) {
            truth.push(MaintenanceLabel::from_index(builder.y[row]).expect("label index"));
            predicted.push(majority(&votes));
        }
    }
    if truth.is_empty() {
        return None;
    }
    let cm = ConfusionMatrix::from_pairs(truth.iter().copied().zip(predicted.iter().copied()));
    Some(OobSummary {
        rows_scored: truth.len(),
        accuracy: cm.accuracy(),
        macro_f1: cm.macro_f1(),
    })
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_features: usize,
    per_split: usize,
    max_depth: usize,
    min_leaf: usize,
}

impl TreeBuilder<'_> {
    /// Grows one tree and reports which rows were in its bootstrap sample.
    fn grow(&self, seed: u64) -> (Node, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.x.len();
        let mut in_bag = vec![false; n];
        let mut sample: Vec<usize> = (0..n)
            .map(|_| {
                let i = rng.random_range(0..n);
                in_bag[i] = true;
                i
            })
            .collect();
        sample.sort_unstable();
        let total = sample.len() as f64;
        (self.build(&mut sample, 0, total, &mut rng), in_bag)
    }

    fn counts(&self, idx: &[usize]) -> [u32; N_LABELS] {
        let mut c = [0u32; N_LABELS];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    fn build(&self, idx: &mut [usize], depth: usize, total: f64, rng: &mut ChaCha8Rng) -> Node {
        let votes = self.counts(idx);
        let parent_gini = gini(&votes, idx.len());
        if parent_gini == 0.0 || depth >= self.max_depth || idx.len() < 2 * self.min_leaf {
            return Node::leaf(votes);
        }

        let mut best = self.best_split(idx, sample_indices(rng, self.n_features, self.per_split).into_iter());
        if best.is_none() {
            // Every sampled feature was constant here; try the rest in a random order.
            let mut rest: Vec<usize> = (0..self.n_features).collect();
            for i in (1..rest.len()).rev() {
                rest.swap(i, rng.random_range(0..=i));
            }
            best = self.best_split(idx, rest.into_iter());
        }
        let Some(split) = best else {
            return Node::leaf(votes);
        };

        let cut = partition(idx, |&i| self.x[i][split.feature] <= split.threshold);
        let (left_idx, right_idx) = idx.split_at_mut(cut);
        let share = left_idx.len() as f64 + right_idx.len() as f64;
        let impurity_decrease = share / total * (parent_gini - split.child_gini);
        let left = self.build(left_idx, depth + 1, total, rng);
        let right = self.build(right_idx, depth + 1, total, rng);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            impurity_decrease,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Lowest weighted child Gini over the candidate features; the first
    /// candidate wins exact ties.
    fn best_split(&self, idx: &[usize], features: impl Iterator<Item = usize>) -> Option<SplitChoice> {
        let n = idx.len();
        let mut best: Option<SplitChoice> = None;
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
        for feature in features {
            order.clear();
            order.extend(idx.iter().map(|&i| (self.x[i][feature], self.y[i])));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            if order[0].0 == order[n - 1].0 {
                continue;
            }
            let mut left = [0u32; N_LABELS];
            let mut right = [0u32; N_LABELS];
            for &(_, label) in &order {
                right[label] += 1;
            }
            for pos in 0..n - 1 {
                let label = order[pos].1;
                left[label] += 1;
                right[label] -= 1;
                let n_left = pos + 1;
                if order[pos].0 == order[pos + 1].0 || n_left < self.min_leaf || n - n_left < self.min_leaf {
                    continue;
                }
                let child_gini = (n_left as f64 * gini(&left, n_left)
                    + (n - n_left) as f64 * gini(&right, n - n_left))
                    / n as f64;
                if best.as_ref().is_none_or(|b| child_gini < b.child_gini) {
                    best = Some(SplitChoice {
                        feature,
                        threshold: midpoint(order[pos].0, order[pos + 1].0),
                        child_gini,
                    });
                }
            }
        }
        best
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    child_gini: f64,
}

fn gini(counts: &[u32; N_LABELS], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Midpoint that is guaranteed to separate `lo < hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// Stable in-place partition; returns the count of elements satisfying `pred`.
fn partition(idx: &mut [usize], pred: impl Fn(&usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = idx.iter().partition(|i| pred(i));
    let cut = yes.len();
    idx[..cut].copy_from_slice(&yes);
    idx[cut..].copy_from_slice(&no);
    cut
}

impl Classifier {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn check_schema(&self) -> Result<()> {
        if self.schema != FeatureSchema::current() {
            return Err(Error::validation(format!(
                "model schema v{} does not match feature schema v{}",
                self.schema.version,
                FeatureSchema::current().version
            )));
        }
        Ok(())
    }

    /// Fraction of trees voting for each label.
    pub fn predict_values(&self, x: &[f64]) -> Result<LabelDistribution> {
        if x.len() != self.schema.len() {
            return Err(Error::validation(format!(
                "expected {} feature values, got {}",
                self.schema.len(),
                x.len()
            )));
        }
        if self.trees.is_empty() {
            return Err(Error::validation("model has no trees"));
        }
        let mut votes = [0u32; N_LABELS];
        for tree in &self.trees {
            votes[tree.predict(x).index()] += 1;
        }
        Ok(LabelDistribution::from_counts(&votes))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization is infallible")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let model: Self = serde_json::from_slice(bytes).map_err(Error::from_json)?;
        if model.trees.len() != model.hyperparams.n_trees {
            return Err(Error::validation(format!(
                "model declares {} trees but holds {}",
                model.hyperparams.n_trees,
                model.trees.len()
            )));
        }
        Ok(model)
    }
}

pub fn classify(model: &Classifier, features: &FeatureVector) -> Result<LabelDistribution> {
    model.check_schema()?;
    model.predict_values(&features.to_array())
}

/// Mean decrease in Gini impurity per feature, normalized to sum to 1 and
/// sorted descending (ties by name). A forest with no splits at all scores
/// every feature 0.
pub fn feature_importance(model: &Classifier) -> Vec<(String, f64)> {
    let n = model.schema.len();
    let mut total = vec![0.0; n];
    for tree in &model.trees {
        let mut per_tree = vec![0.0; n];
        tree.accumulate_importance(&mut per_tree);
        let sum: f64 = per_tree.iter().sum();
        if sum > 0.0 {
            for (t, v) in total.iter_mut().zip(&per_tree) {
                *t += v / sum;
            }
        }
    }
    let sum: f64 = total.iter().sum();
    if sum > 0.0 {
        for v in &mut total {
            *v /= sum;
        }
    }
    let mut ranked: Vec<(String, f64)> = model.schema.names.iter().cloned().zip(total).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stub(trees: Vec<Node>) -> Classifier {
        Classifier {
            schema: FeatureSchema::current(),
            hyperparams: ForestParams {
                n_trees: trees.len(),
                ..ForestParams::default()
            },
            trees,
            oob: None,
        }
    }

    #[test]
    fn vote_fractions() {
        let vote = |l: usize| {
            let mut v = [0; N_LABELS];
            v[l] = 3;
            Node::leaf(v)
        };
        let model = stub(vec![vote(0), vote(0), vote(1), vote(2)]);
        let dist = model.predict_values(&[0.0; 17]).unwrap();
        assert_eq!(dist.probabilities(), [0.5, 0.25, 0.25, 0.0]);
        assert_eq!(dist.argmax(), MaintenanceLabel::Active);
    }

    #[test]
    fn leaf_ties_go_to_first_label() {
        assert_eq!(majority(&[0, 2, 2, 1]), MaintenanceLabel::FeatureComplete);
        assert_eq!(majority(&[0, 0, 0, 0]), MaintenanceLabel::Active);
    }

    #[test]
    fn rejects_wrong_width_input() {
        let model = stub(vec![Node::leaf([1, 0, 0, 0])]);
        assert!(matches!(model.predict_values(&[0.0; 3]), Err(Error::Validation(_))));
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[4, 0, 0, 0], 4), 0.0);
        assert!((gini(&[2, 2, 0, 0], 4) - 0.5).abs() < 1e-15);
        assert!((gini(&[1, 1, 1, 1], 4) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn midpoint_separates_adjacent_floats() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let m = midpoint(lo, hi);
        assert!(lo <= m && m < hi);
    }
}

//! Random-forest stack over raw slice bytes: a high-precision forest fit on
//! the imbalanced data, a high-recall forest fit on SMOTE-oversampled data,
//! and a meta forest over the two base probabilities. Five estimators each,
//! Gini splits, no depth limit.

pub mod io;
pub mod smote;
pub mod tree;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::heap::SliceSample;
pub use io::{load_model, render_model, save_model};
pub use smote::{smote_oversample, DEFAULT_K_NEIGHBORS};
use tree::{bootstrap_rows, grow_tree, ByteTable, FeatureTable, FloatTable, Tree};

/// Width of the classifier input: one feature per slice byte.
pub const N_FEATURES: usize = 128;
/// "the only non-default parameter being the number of estimators set as 5"
pub const DEFAULT_ESTIMATORS: usize = 5;
/// Fraction of the training rows held out to fit the meta forest without
/// reusing base-forest training rows.
pub const DEFAULT_HOLDOUT_FRACTION: f64 = 0.25;
pub const DEFAULT_DECISION_THRESHOLD: f64 = 0.5;

/// Labeled 128-byte rows in training order.
#[derive(Debug, Clone, Default)]
pub struct TrainingSet {
    pub features: ByteTable,
    pub labels: Vec<bool>,
}

impl TrainingSet {
    pub fn new(n_features: usize) -> Self {
        TrainingSet {
            features: ByteTable {
                n_features,
                data: Vec::new(),
            },
            labels: Vec::new(),
        }
    }

    pub fn from_slices(slices: &[SliceSample]) -> Self {
        let mut set = TrainingSet::new(slices.first().map_or(N_FEATURES, |s| s.data.len()));
        for slice in slices {
            set.push(&slice.data, slice.label);
        }
        set
    }

    pub fn push(&mut self, row: &[u8], label: bool) {
        self.features.push_row(row);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    fn select(&self, rows: &[u32]) -> TrainingSet {
        let mut out = TrainingSet::new(self.features.n_features);
        for &row in rows {
            out.push(self.features.row(row as usize), self.labels[row as usize]);
        }
        out
    }
}

/// A trained forest; prediction is the mean of the per-tree leaf
/// probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_estimators: usize,
    pub n_features: usize,
    pub rng_seed: u64,
    pub training_rows: usize,
    pub training_positives: usize,
}

impl ForestModel {
    fn probability_with(&self, feature: &dyn Fn(usize) -> f64) -> Result<f64> {
        if self.trees.is_empty() {
            return Err(Error::UntrainedModel);
        }
        let sum: f64 = self.trees.iter().map(|t| t.probability(feature)).sum();
        Ok(sum / self.trees.len() as f64)
    }

    /// Probability that a raw byte row is positive.
    pub fn predict_probability(&self, row: &[u8]) -> Result<f64> {
        debug_assert_eq!(row.len(), self.n_features);
        self.probability_with(&|f| row[f] as f64)
    }

    pub fn predict_probability_f64(&self, row: &[f64]) -> Result<f64> {
        debug_assert_eq!(row.len(), self.n_features);
        self.probability_with(&|f| row[f])
    }
}

/// Train one forest: per-tree bootstrap resamples of the full input,
/// sqrt-of-features candidate subsets, grown until pure.
pub fn train_forest(set: &TrainingSet, seed: u64, n_estimators: usize) -> Result<ForestModel> {
    train_forest_on(&set.features, &set.labels, seed, n_estimators)
}

fn train_forest_on<T: FeatureTable>(
    table: &T,
    labels: &[bool],
    seed: u64,
    n_estimators: usize,
) -> Result<ForestModel> {
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClassData);
    }
    let trees: Vec<Tree> = (0..n_estimators)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, index as u64));
            let rows = bootstrap_rows(labels.len(), &mut rng);
            grow_tree(table, labels, rows, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_estimators,
        n_features: table.n_features(),
        rng_seed: seed,
        training_rows: labels.len(),
        training_positives: positives,
    })
}

/// High-precision + high-recall base forests and the meta forest stitched
/// over their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedModel {
    pub high_precision: ForestModel,
    pub high_recall: ForestModel,
    pub meta: ForestModel,
    pub decision_threshold: f64,
    pub seed: u64,
    pub holdout_fraction: f64,
    /// Rows of the training set used only for the meta forest; the base
    /// forests trained on the complement.
    pub holdout_indices: Vec<u32>,
}

impl StackedModel {
    /// Meta probability for one slice.
    pub fn predict_probability(&self, row: &[u8]) -> Result<f64> {
        let p_hp = self.high_precision.predict_probability(row)?;
        let p_hr = self.high_recall.predict_probability(row)?;
        self.meta.predict_probability_f64(&[p_hp, p_hr])
    }

    pub fn predict_positive(&self, row: &[u8]) -> Result<bool> {
        Ok(self.predict_probability(row)? >= self.decision_threshold)
    }

    /// (high-precision, high-recall, meta) probabilities in one walk.
    pub fn predict_all(&self, row: &[u8]) -> Result<(f64, f64, f64)> {
        let p_hp = self.high_precision.predict_probability(row)?;
        let p_hr = self.high_recall.predict_probability(row)?;
        let p_meta = self.meta.predict_probability_f64(&[p_hp, p_hr])?;
        Ok((p_hp, p_hr, p_meta))
    }
}

/// Train the whole stack. A stratified holdout (default 25%) is carved out
/// first; the base forests never see it, and the meta forest trains only on
/// the base probabilities of those held-out rows.
pub fn train_stacked(set: &TrainingSet, holdout_fraction: f64, seed: u64) -> Result<StackedModel> {
    if set.positives() == 0 || set.positives() == set.len() {
        return Err(Error::SingleClassData);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let mut positives: Vec<u32> = Vec::new();
    let mut negatives: Vec<u32> = Vec::new();
    for (i, &label) in set.labels.iter().enumerate() {
        if label {
            positives.push(i as u32)
        } else {
            negatives.push(i as u32)
        };
    }
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);

    // stratified: the same fraction of each class, at least one row of each
    let take =
        |v: &[u32]| ((v.len() as f64 * holdout_fraction).round() as usize).clamp(1, v.len() - 1);
    let mut holdout: Vec<u32> = positives[..take(&positives)].to_vec();
    holdout.extend_from_slice(&negatives[..take(&negatives)]);
    holdout.sort_unstable();
    let mut base: Vec<u32> = positives[take(&positives)..].to_vec();
    base.extend_from_slice(&negatives[take(&negatives)..]);
    base.sort_unstable();

    let base_set = set.select(&base);
    let high_precision = train_forest(&base_set, derive_seed(seed, 1), DEFAULT_ESTIMATORS)?;
    let oversampled = smote_oversample(&base_set, DEFAULT_K_NEIGHBORS, 1.0, derive_seed(seed, 2))?;
    let high_recall = train_forest(&oversampled, derive_seed(seed, 3), DEFAULT_ESTIMATORS)?;

    let mut meta_table = FloatTable {
        n_features: 2,
        data: Vec::new(),
    };
    let mut meta_labels = Vec::with_capacity(holdout.len());
    for &row in &holdout {
        let bytes = set.features.row(row as usize);
        let p_hp = high_precision.predict_probability(bytes)?;
        let p_hr = high_recall.predict_probability(bytes)?;
        meta_table.push_row(&[p_hp, p_hr]);
        meta_labels.push(set.labels[row as usize]);
    }
    let meta = train_forest_on(
        &meta_table,
        &meta_labels,
        derive_seed(seed, 4),
        DEFAULT_ESTIMATORS,
    )?;

    Ok(StackedModel {
        high_precision,
        high_recall,
        meta,
        decision_threshold: DEFAULT_DECISION_THRESHOLD,
        seed,
        holdout_fraction,
        holdout_indices: holdout,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// positives have byte 0 >= 200, negatives <= 50; the rest is inert
    fn separable_set(n_pos: usize, n_neg: usize, seed: u64) -> TrainingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = TrainingSet::new(N_FEATURES);
        for i in 0..n_pos.max(n_neg) {
            let mut row = vec![7u8; N_FEATURES];
            if i < n_pos {
                row[0] = rng.gen_range(200..=255);
                set.push(&row, true);
            }
            if i < n_neg {
                row[0] = rng.gen_range(0..=50);
                set.push(&row, false);
            }
        }
        set
    }

    #[test]
    fn separable_data_trains_to_perfect_accuracy() {
        let set = separable_set(40, 40, 1);
        let model = train_forest(&set, 7, DEFAULT_ESTIMATORS).unwrap();
        for i in 0..set.len() {
            let p = model.predict_probability(set.features.row(i)).unwrap();
            assert_eq!(p >= 0.5, set.labels[i], "row {i} p={p}");
        }
    }

    #[test]
    fn training_is_deterministic() {
        let set = separable_set(30, 50, 2);
        let a = train_forest(&set, 11, DEFAULT_ESTIMATORS).unwrap();
        let b = train_forest(&set, 11, DEFAULT_ESTIMATORS).unwrap();
        assert_eq!(a, b);
        let c = train_forest(&set, 12, DEFAULT_ESTIMATORS).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_class_data_is_rejected() {
        let mut set = TrainingSet::new(4);
        for i in 0..10u8 {
            set.push(&[i, i, i, i], true);
        }
        assert!(matches!(
            train_forest(&set, 0, 5),
            Err(Error::SingleClassData)
        ));
    }

    #[test]
    fn forest_probability_is_mean_of_tree_probabilities() {
        let set = separable_set(25, 60, 3);
        let model = train_forest(&set, 5, DEFAULT_ESTIMATORS).unwrap();
        let row = set.features.row(4);
        let mean: f64 = model
            .trees
            .iter()
            .map(|t| t.probability(&|f| row[f] as f64))
            .sum::<f64>()
            / model.trees.len() as f64;
        assert_eq!(model.predict_probability(row).unwrap(), mean);
    }

    #[test]
    fn memorized_sample_has_probability_one() {
        let set = separable_set(20, 20, 4);
        let model = train_forest(&set, 9, DEFAULT_ESTIMATORS).unwrap();
        let positive_row = set.features.row(0);
        assert_eq!(model.predict_probability(positive_row).unwrap(), 1.0);
    }

    #[test]
    fn untrained_model_errors() {
        let model = ForestModel {
            trees: Vec::new(),
            n_estimators: 0,
            n_features: N_FEATURES,
            rng_seed: 0,
            training_rows: 0,
            training_positives: 0,
        };
        assert!(matches!(
            model.predict_probability(&[0; N_FEATURES]),
            Err(Error::UntrainedModel)
        ));
    }

    #[test]
    fn stacked_trains_and_separates() {
        let set = separable_set(60, 240, 5);
        let model = train_stacked(&set, DEFAULT_HOLDOUT_FRACTION, 21).unwrap();
        assert_eq!(model.meta.n_features, 2);
        assert_eq!(model.high_precision.n_estimators, 5);
        for i in 0..set.len() {
            let positive = model.predict_positive(set.features.row(i)).unwrap();
            assert_eq!(positive, set.labels[i], "row {i}");
        }
    }

    #[test]
    fn meta_rows_are_disjoint_from_base_rows() {
        let set = separable_set(40, 160, 6);
        let model = train_stacked(&set, DEFAULT_HOLDOUT_FRACTION, 33).unwrap();
        let holdout: std::collections::HashSet<u32> =
            model.holdout_indices.iter().copied().collect();
        assert_eq!(holdout.len(), model.holdout_indices.len());
        let base_rows = set.len() - holdout.len();
        assert_eq!(model.high_precision.training_rows, base_rows);
        // every index is in exactly one side
        assert!(holdout.iter().all(|&i| (i as usize) < set.len()));
        // ~25% of each class held out
        let holdout_pos = model
            .holdout_indices
            .iter()
            .filter(|&&i| set.labels[i as usize])
            .count();
        assert_eq!(holdout_pos, 10);
        assert_eq!(model.holdout_indices.len() - holdout_pos, 40);
    }

    #[test]
    fn batch_and_single_predictions_agree() {
        let set = separable_set(20, 40, 8);
        let model = train_stacked(&set, DEFAULT_HOLDOUT_FRACTION, 3).unwrap();
        let one_by_one: Vec<f64> = (0..set.len())
            .map(|i| model.predict_probability(set.features.row(i)).unwrap())
            .collect();
        let again: Vec<f64> = (0..set.len())
            .map(|i| model.predict_probability(set.features.row(i)).unwrap())
            .collect();
        assert_eq!(one_by_one, again);
    }
}

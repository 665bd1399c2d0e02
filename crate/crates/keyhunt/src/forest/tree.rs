//! Single decision tree: Gini-impurity splits over a random candidate
//! feature subset, grown until pure or out of samples.
//!
//! Split costs are compared as exact integer fractions, so the chosen split
//! never depends on floating-point summation order and identical seeds give
//! bit-identical trees on every platform.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Child index marking a leaf node.
pub const LEAF: u32 = u32::MAX;

/// One node of a serialized tree. Internal nodes route on
/// `feature <= threshold`; leaves carry the positive fraction of the
/// training rows that reached them. `leaf_probability` is also recorded for
/// internal nodes as plain metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub feature_index: u16,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub leaf_probability: f64,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.left == LEAF
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    /// Probability that a sample is positive, via a feature accessor.
    pub fn probability(&self, feature: &dyn Fn(usize) -> f64) -> f64 {
        let mut index = 0usize;
        loop {
            let node = &self.nodes[index];
            if node.is_leaf() {
                return node.leaf_probability;
            }
            index = if feature(node.feature_index as usize) <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }
}

/// Row-major training table; the tree builder only needs indexed access.
pub trait FeatureTable: Sync {
    fn n_rows(&self) -> usize;
    fn n_features(&self) -> usize;
    fn value(&self, row: usize, feature: usize) -> f64;
    /// Raw bytes when features are u8, enabling the counting-sort splitter.
    fn byte_row(&self, _row: usize) -> Option<&[u8]> {
        None
    }
}

/// Raw 0-255 features (heap slice bytes).
#[derive(Debug, Clone, Default)]
pub struct ByteTable {
    pub n_features: usize,
    pub data: Vec<u8>,
}

impl ByteTable {
    pub fn with_capacity(n_features: usize, rows: usize) -> Self {
        ByteTable {
            n_features,
            data: Vec::with_capacity(n_features * rows),
        }
    }

    pub fn push_row(&mut self, row: &[u8]) {
        debug_assert_eq!(row.len(), self.n_features);
        self.data.extend_from_slice(row);
    }

    pub fn row(&self, index: usize) -> &[u8] {
        &self.data[index * self.n_features..(index + 1) * self.n_features]
    }
}

impl FeatureTable for ByteTable {
    fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.n_features).unwrap_or(0)
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn value(&self, row: usize, feature: usize) -> f64 {
        self.data[row * self.n_features + feature] as f64
    }

    fn byte_row(&self, row: usize) -> Option<&[u8]> {
        Some(self.row(row))
    }
}

/// Real-valued features (the meta forest's probability pairs).
#[derive(Debug, Clone, Default)]
pub struct FloatTable {
    pub n_features: usize,
    pub data: Vec<f64>,
}

impl FloatTable {
    pub fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.n_features);
        self.data.extend_from_slice(row);
    }
}

impl FeatureTable for FloatTable {
    fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.n_features).unwrap_or(0)
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn value(&self, row: usize, feature: usize) -> f64 {
        self.data[row * self.n_features + feature]
    }
}

/// Weighted Gini impurity of a split as the exact fraction
/// `cost = (nl^2 - pl^2 - ql^2)/nl + (nr^2 - pr^2 - qr^2)/nr`,
/// kept unreduced so comparisons are pure integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitCost {
    numerator: u128,
    denominator: u128,
}

impl SplitCost {
    pub fn new(left_pos: u64, left_neg: u64, right_pos: u64, right_neg: u64) -> Self {
        let nl = (left_pos + left_neg) as u128;
        let nr = (right_pos + right_neg) as u128;
        debug_assert!(nl > 0 && nr > 0);
        let al = (left_pos as u128) * (left_pos as u128) + (left_neg as u128) * (left_neg as u128);
        let ar =
            (right_pos as u128) * (right_pos as u128) + (right_neg as u128) * (right_neg as u128);
        SplitCost {
            numerator: (nl * nl - al) * nr + (nr * nr - ar) * nl,
            denominator: nl * nr,
        }
    }

    pub fn improves_on(&self, other: &SplitCost) -> bool {
        // strict: equal costs keep the earlier (lower feature, lower
        // threshold) candidate
        self.numerator * other.denominator < other.numerator * self.denominator
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub cost: SplitCost,
}

/// Best split over `candidates` (must be sorted ascending) for the rows of
/// one node. Thresholds are midpoints between consecutive distinct feature
/// values; ties in cost resolve to the lowest feature index, then the lowest
/// threshold.
pub fn best_split<T: FeatureTable>(
    table: &T,
    labels: &[bool],
    rows: &[u32],
    candidates: &[usize],
) -> Option<Split> {
    debug_assert!(candidates.windows(2).all(|w| w[0] < w[1]));
    let total_pos: u64 = rows.iter().filter(|&&r| labels[r as usize]).count() as u64;
    let total = rows.len() as u64;
    let mut best: Option<Split> = None;
    let mut scratch: Vec<(f64, bool)> = Vec::with_capacity(rows.len());

    for &feature in candidates {
        if let Some(split) =
            best_split_for_feature(table, labels, rows, feature, total, total_pos, &mut scratch)
        {
            let better = match &best {
                None => true,
                Some(current) => split.cost.improves_on(&current.cost),
            };
            if better {
                best = Some(split);
            }
        }
    }
    best
}

fn best_split_for_feature<T: FeatureTable>(
    table: &T,
    labels: &[bool],
    rows: &[u32],
    feature: usize,
    total: u64,
    total_pos: u64,
    scratch: &mut Vec<(f64, bool)>,
) -> Option<Split> {
    // counting path for byte features
    if rows
        .first()
        .and_then(|&r| table.byte_row(r as usize))
        .is_some()
    {
        let mut count = [0u32; 256];
        let mut pos = [0u32; 256];
        for &row in rows {
            let v = table.byte_row(row as usize).unwrap()[feature] as usize;
            count[v] += 1;
            if labels[row as usize] {
                pos[v] += 1;
            }
        }
        let mut best: Option<Split> = None;
        let mut cum = 0u64;
        let mut cum_pos = 0u64;
        let mut previous: Option<usize> = None;
        for v in 0..256usize {
            if count[v] == 0 {
                continue;
            }
            if let Some(prev) = previous {
                // boundary between prev and v
                let left_pos = cum_pos;
                let left_neg = cum - cum_pos;
                let right_pos = total_pos - cum_pos;
                let right_neg = (total - cum) - right_pos;
                let cost = SplitCost::new(left_pos, left_neg, right_pos, right_neg);
                let threshold = (prev as f64 + v as f64) / 2.0;
                if best.as_ref().is_none_or(|b| cost.improves_on(&b.cost)) {
                    best = Some(Split {
                        feature,
                        threshold,
                        cost,
                    });
                }
            }
            cum += count[v] as u64;
            cum_pos += pos[v] as u64;
            previous = Some(v);
        }
        return best;
    }

    // sort path for real-valued features
    scratch.clear();
    scratch.extend(
        rows.iter()
            .map(|&r| (table.value(r as usize, feature), labels[r as usize])),
    );
    scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<Split> = None;
    let mut cum = 0u64;
    let mut cum_pos = 0u64;
    for i in 0..scratch.len() - 1 {
        cum += 1;
        if scratch[i].1 {
            cum_pos += 1;
        }
        let (a, b) = (scratch[i].0, scratch[i + 1].0);
        if a == b {
            continue;
        }
        let left_pos = cum_pos;
        let left_neg = cum - cum_pos;
        let right_pos = total_pos - cum_pos;
        let right_neg = (total - cum) - right_pos;
        let cost = SplitCost::new(left_pos, left_neg, right_pos, right_neg);
        let threshold = (a + b) / 2.0;
        if best.as_ref().is_none_or(|b| cost.improves_on(&b.cost)) {
            best = Some(Split {
                feature,
                threshold,
                cost,
            });
        }
    }
    best
}

/// Grow one tree on `rows` (bootstrap indices into `table`).
pub fn grow_tree<T: FeatureTable>(
    table: &T,
    labels: &[bool],
    rows: Vec<u32>,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let n_features = table.n_features();
    let n_candidates = ((n_features as f64).sqrt().floor() as usize).max(1);
    let mut nodes: Vec<TreeNode> = Vec::new();
    // LIFO of (node index, rows); children are allocated left then right
    let mut pending: Vec<(usize, Vec<u32>)> = Vec::new();
    nodes.push(placeholder());
    pending.push((0, rows));
    let mut feature_order: Vec<usize> = (0..n_features).collect();

    while let Some((index, node_rows)) = pending.pop() {
        let positives = node_rows.iter().filter(|&&r| labels[r as usize]).count();
        let fraction = positives as f64 / node_rows.len() as f64;
        if node_rows.len() < 2 || positives == 0 || positives == node_rows.len() {
            nodes[index] = leaf(fraction);
            continue;
        }

        // draw candidate batches without replacement until one splits
        feature_order.shuffle(rng);
        let mut split = None;
        for batch in feature_order.chunks(n_candidates) {
            let mut candidates = batch.to_vec();
            candidates.sort_unstable();
            split = best_split(table, labels, &node_rows, &candidates);
            if split.is_some() {
                break;
            }
        }
        let Some(split) = split else {
            // duplicate feature rows with conflicting labels
            nodes[index] = leaf(fraction);
            continue;
        };

        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = node_rows
            .iter()
            .partition(|&&r| table.value(r as usize, split.feature) <= split.threshold);
        debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

        let left = nodes.len() as u32;
        nodes.push(placeholder());
        let right = nodes.len() as u32;
        nodes.push(placeholder());
        nodes[index] = TreeNode {
            feature_index: split.feature as u16,
            threshold: split.threshold,
            left,
            right,
            leaf_probability: fraction,
        };
        // push right first so the left subtree is processed (and numbered)
        // depth-first immediately after its parent
        pending.push((right as usize, right_rows));
        pending.push((left as usize, left_rows));
    }
    Tree { nodes }
}

/// Bootstrap resample of `n` row indices (with replacement, same size).
pub fn bootstrap_rows(n: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(0..n) as u32).collect()
}

fn placeholder() -> TreeNode {
    TreeNode {
        feature_index: 0,
        threshold: 0.0,
        left: LEAF,
        right: LEAF,
        leaf_probability: 0.0,
    }
}

fn leaf(probability: f64) -> TreeNode {
    TreeNode {
        feature_index: 0,
        threshold: 0.0,
        left: LEAF,
        right: LEAF,
        leaf_probability: probability,
    }
}

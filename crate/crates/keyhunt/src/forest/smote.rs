//! Synthetic minority oversampling: new minority rows interpolated between
//! a minority point and one of its k nearest minority neighbors.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forest::TrainingSet;

pub const DEFAULT_K_NEIGHBORS: usize = 5;

/// Oversample the minority class until `minority : majority == target_ratio`
/// (±1 sample from rounding). Original rows keep their order; synthetic rows
/// are appended. Deterministic under `seed`.
pub fn smote_oversample(
    set: &TrainingSet,
    k_neighbors: usize,
    target_ratio: f64,
    seed: u64,
) -> Result<TrainingSet> {
    let positives = set.labels.iter().filter(|&&l| l).count();
    let negatives = set.labels.len() - positives;
    let minority_label = positives <= negatives;
    let (minority, majority) = if minority_label {
        (positives, negatives)
    } else {
        (negatives, positives)
    };
    if minority < k_neighbors + 1 {
        return Err(Error::TooFewMinority {
            got: minority,
            need: k_neighbors + 1,
        });
    }

    let wanted = (majority as f64 * target_ratio).round() as usize;
    let mut out = set.clone();
    if wanted <= minority {
        return Ok(out);
    }
    let synth_count = wanted - minority;

    let width = set.features.n_features;
    let minority_rows: Vec<&[u8]> = set
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == minority_label)
        .map(|(i, _)| set.features.row(i))
        .collect();

    // k nearest minority neighbors per minority point, squared Euclidean
    // distance over the raw bytes; ties resolve to the lower index
    let neighbors: Vec<Vec<usize>> = minority_rows
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let mut distances: Vec<(u64, usize)> = minority_rows
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(j, b)| (squared_distance(a, b), j))
                .collect();
            distances.sort_unstable();
            distances.truncate(k_neighbors);
            distances.into_iter().map(|(_, j)| j).collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut synthetic = vec![0u8; width];
    for _ in 0..synth_count {
        let base = rng.gen_range(0..minority_rows.len());
        let neighbor = neighbors[base][rng.gen_range(0..k_neighbors)];
        let step: f64 = rng.gen();
        let (x, n) = (minority_rows[base], minority_rows[neighbor]);
        for ((s, &a), &b) in synthetic.iter_mut().zip(x).zip(n) {
            let value = a as f64 + step * (b as f64 - a as f64);
            *s = value.round().clamp(0.0, 255.0) as u8;
        }
        out.features.push_row(&synthetic);
        out.labels.push(minority_label);
    }
    Ok(out)
}

fn squared_distance(a: &[u8], b: &[u8]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as u64;
            d * d
        })
        .sum()
}

//! Seeded train/validation/test splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::HarnessError;

/// Disjoint index sets covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n` with the given seed and cuts it into train/val/test by the
/// requested ratios (train and val sizes round down, test takes the rest).
/// The three sets are pairwise disjoint and cover the dataset by construction.
pub fn split_indices(
    n: usize,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<SplitIndices, HarnessError> {
    let (tr, va, te) = ratios;
    for r in [tr, va, te] {
        if !(r.is_finite() && (0.0..=1.0).contains(&r)) {
            return Err(HarnessError::Config(format!(
                "split ratios must lie in [0, 1], got {r}"
            )));
        }
    }
    if (tr + va + te - 1.0).abs() > 1e-9 {
        return Err(HarnessError::Config(format!(
            "split ratios must sum to 1, got {tr} + {va} + {te}"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (tr * n as f64).floor() as usize;
    let n_val = (va * n as f64).floor() as usize;
    let split = SplitIndices {
        train: order[..n_train].to_vec(),
        val: order[n_train..n_train + n_val].to_vec(),
        test: order[n_train + n_val..].to_vec(),
    };

    if split.train.is_empty() {
        return Err(HarnessError::Config(format!(
            "dataset of {n} samples leaves an empty training split"
        )));
    }
    for (name, ratio, part) in [("validation", va, &split.val), ("test", te, &split.test)] {
        if ratio > 0.0 && part.is_empty() {
            return Err(HarnessError::Config(format!(
                "dataset of {n} samples leaves an empty {name} split at ratio {ratio}"
            )));
        }
    }
    Ok(split)
}

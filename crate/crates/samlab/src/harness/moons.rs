//! Two-moons synthetic dataset for the vector (MLP) task.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::autodiff::Tensor;

use super::HarnessError;

/// Generates `n` points on two interleaved half circles with additive
/// Gaussian noise of the given standard deviation. The first half (rounding
/// up) lies on the upper moon with label 0, the rest on the lower moon with
/// label 1; downstream seeded splits take care of shuffling.
pub fn generate_moons(
    n: usize,
    seed: u64,
    noise: f64,
) -> Result<(Tensor, Vec<f64>), HarnessError> {
    if n < 2 {
        return Err(HarnessError::Config(format!(
            "two-moons needs at least 2 samples, got {n}"
        )));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(HarnessError::Config(format!(
            "moons noise must be finite and non-negative, got {noise}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_upper = n.div_ceil(2);
    let n_lower = n - n_upper;
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);

    let arc = |i: usize, count: usize| -> f64 {
        if count <= 1 {
            0.0
        } else {
            std::f64::consts::PI * i as f64 / (count - 1) as f64
        }
    };
    for i in 0..n_upper {
        let t = arc(i, n_upper);
        data.push(t.cos());
        data.push(t.sin());
        labels.push(0.0);
    }
    for i in 0..n_lower {
        let t = arc(i, n_lower);
        data.push(1.0 - t.cos());
        data.push(0.5 - t.sin());
        labels.push(1.0);
    }
    if noise > 0.0 {
        for v in &mut data {
            let jitter: f64 = rng.sample(StandardNormal);
            *v += noise * jitter;
        }
    }
    Ok((Tensor::new(n, 2, data)?, labels))
}

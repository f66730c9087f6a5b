use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::ParamVector;

use super::config::{ModelConfig, SegmentInit};
use super::error::ModelError;

/// Fresh parameters for a model: weights uniform in
/// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases zero.
///
/// Deterministic in `config.init_seed`; segments are filled in layout order
/// from a single ChaCha stream, so the same config always produces the same
/// vector bit for bit.
pub fn init_model(config: &ModelConfig) -> Result<ParamVector, ModelError> {
    let layout = config.segment_layout()?;
    let map = config.segment_map()?;
    let mut params = ParamVector::zeros(&map);
    let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
    for segment in &layout {
        match segment.init {
            SegmentInit::Zero => {}
            SegmentInit::UniformFanIn { fan_in } => {
                let bound = 1.0 / (fan_in as f64).sqrt();
                let values: Vec<f64> =
                    (0..segment.rows * segment.cols).map(|_| rng.random_range(-bound..=bound)).collect();
                params.set_segment(&segment.name, &values)?;
            }
        }
    }
    Ok(params)
}

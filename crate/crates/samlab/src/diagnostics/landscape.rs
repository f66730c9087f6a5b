//! Loss-landscape probes: one-dimensional slices and a sampled sharpness
//! estimate.
//!
//! Both probes are pure with respect to the caller's state: they evaluate
//! cloned tapes at shifted copies of the parameters, so the model and the
//! optimizer never see the probe points. Every random direction is derived
//! from an explicit seed, which makes the probes reproducible and lets the
//! sharpness estimate fan out across threads without changing its result.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::autodiff::{GradVector, ParamVector, Tape};
use crate::parallel::map_indexed;
use crate::seeds::splitmix64;

use super::DiagnosticsError;

/// A 1-D cut through the loss surface: `losses[i]` is the loss at
/// `params + phis[i] * direction`, where the direction is regenerated from
/// `direction_seed` via [`sample_direction`].
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeSlice {
    pub phis: Vec<f64>,
    pub losses: Vec<f64>,
    pub direction_seed: u64,
}

/// Draws a random slice direction matched to the parameter scale: each
/// segment is standard normal, rescaled so its norm equals the norm of the
/// corresponding parameter segment. Segments whose parameters are all zero
/// get a zero direction (they have no scale to match, and perturbing them
/// would dominate the slice in unscaled units).
pub fn sample_direction(params: &ParamVector, seed: u64) -> GradVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut direction = GradVector::zeros(params.map());
    let map = params.map().clone();
    for spec in map.segments() {
        let draw: Vec<f64> = (0..spec.len())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let draw_norm = draw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let param_norm = params
            .segment(&spec.name)
            .expect("segment comes from the same map")
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        let scale = if draw_norm == 0.0 {
            0.0
        } else {
            param_norm / draw_norm
        };
        let scaled: Vec<f64> = draw.iter().map(|v| v * scale).collect();
        direction
            .set_segment(&spec.name, &scaled)
            .expect("segment comes from the same map");
    }
    direction
}

/// Evaluates the loss along `params + phi * direction` for every `phi`.
///
/// The grid must contain `phi = 0` so the slice passes through the current
/// loss; the loss at that grid point equals the unperturbed loss exactly,
/// since adding a zero offset leaves every parameter bit unchanged.
pub fn landscape_slice(
    tape: &Tape,
    params: &ParamVector,
    phis: &[f64],
    direction_seed: u64,
) -> Result<LandscapeSlice, DiagnosticsError> {
    if !phis.iter().all(|p| p.is_finite()) {
        return Err(DiagnosticsError::Input(
            "slice offsets must be finite".to_string(),
        ));
    }
    if !phis.contains(&0.0) {
        return Err(DiagnosticsError::Input(
            "slice grid must contain phi = 0 so the cut passes through the current loss"
                .to_string(),
        ));
    }
    let direction = sample_direction(params, direction_seed);
    let losses = map_indexed(phis.len(), |i| {
        let mut probe = tape.clone();
        let shifted = params
            .axpy(phis[i], &direction)
            .expect("direction shares the parameter map");
        probe.forward(&shifted)
    });
    let losses = losses
        .into_iter()
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(LandscapeSlice {
        phis: phis.to_vec(),
        losses,
        direction_seed,
    })
}

/// Writes a slice as two-column CSV (`phi,loss`), replacing any existing file.
pub fn write_landscape_csv(path: &Path, slice: &LandscapeSlice) -> Result<(), DiagnosticsError> {
    let mut out = String::from("phi,loss\n");
    for (phi, loss) in slice.phis.iter().zip(&slice.losses) {
        out.push_str(&format!("{phi},{loss}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Largest observed loss increase over random unit directions at radius
/// `rho`: `max_d L(params + rho * d) - L(params)` with `||d|| = 1`.
///
/// Directions are drawn from per-index seeds derived from `seed`, so the
/// estimate is reproducible and independent of how the evaluations are
/// scheduled across threads. A higher value means the loss surface rises
/// more steeply somewhere on the sampled sphere; the estimate can be
/// negative when every sampled direction runs downhill.
pub fn sharpness_estimate(
    tape: &Tape,
    params: &ParamVector,
    rho: f64,
    num_directions: usize,
    seed: u64,
) -> Result<f64, DiagnosticsError> {
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(DiagnosticsError::Input(format!(
            "sharpness radius must be finite and non-negative, got {rho}"
        )));
    }
    if num_directions == 0 {
        return Err(DiagnosticsError::Input(
            "sharpness estimate needs at least one direction".to_string(),
        ));
    }
    let base_loss = tape.clone().forward(params)?;
    let gaps = map_indexed(num_directions, |i| {
        let dir_seed = splitmix64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(dir_seed);
        let mut direction = GradVector::zeros(params.map());
        for v in direction.as_mut_slice() {
            *v = rng.sample(StandardNormal);
        }
        let norm = direction.norm2();
        if norm > 0.0 {
            direction = direction.scale(1.0 / norm);
        }
        let shifted = params
            .axpy(rho, &direction)
            .expect("direction shares the parameter map");
        tape.clone().forward(&shifted).map(|l| l - base_loss)
    });
    let mut best = f64::NEG_INFINITY;
    for gap in gaps {
        best = best.max(gap?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::SegmentMap;
    use crate::models::QuadraticBowl;

    fn bowl_and_params(n: usize, values: Vec<f64>) -> (QuadraticBowl, ParamVector) {
        let bowl = QuadraticBowl::standard(n).unwrap();
        let params = ParamVector::from_data(bowl.map(), values).unwrap();
        (bowl, params)
    }

    #[test]
    fn direction_matches_parameter_scale_per_segment() {
        let map = SegmentMap::new(&[("a", 1, 3), ("b", 1, 2)]).unwrap();
        let params = ParamVector::from_data(&map, vec![3.0, 4.0, 0.0, 0.0, 0.0]).unwrap();
        let d = sample_direction(&params, 99);
        let norm_a = d.segment("a").unwrap().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm_a - 5.0).abs() < 1e-12);
        // The all-zero segment has no scale to match, so it stays untouched.
        assert_eq!(d.segment("b").unwrap(), &[0.0, 0.0]);
    }

    #[test]
    fn slice_requires_a_zero_offset() {
        let (bowl, params) = bowl_and_params(2, vec![1.0, 0.5]);
        let tape = bowl.build_tape().unwrap();
        let err = landscape_slice(&tape, &params, &[-0.1, 0.1], 3);
        assert!(matches!(err, Err(DiagnosticsError::Input(_))));
    }

    #[test]
    fn slice_at_zero_equals_the_unperturbed_loss_exactly() {
        let (bowl, params) = bowl_and_params(3, vec![0.7, -0.4, 1.2]);
        let tape = bowl.build_tape().unwrap();
        let slice = landscape_slice(&tape, &params, &[-0.2, 0.0, 0.2], 5).unwrap();
        let base = bowl.loss_analytic(&params).unwrap();
        assert_eq!(slice.losses[1], base);
    }

    #[test]
    fn quadratic_slice_matches_the_closed_form() {
        // On a pure quadratic the slice is exactly
        //   L(p) + phi * <grad, D> + phi^2 * ||D||^2 / n,
        // so the evaluated losses must reproduce it to rounding error.
        let (bowl, params) = bowl_and_params(4, vec![0.6, -0.2, 1.1, 0.4]);
        let tape = bowl.build_tape().unwrap();
        let phis = [-0.5, -0.1, 0.0, 0.3, 1.0];
        let slice = landscape_slice(&tape, &params, &phis, 42).unwrap();

        let direction = sample_direction(&params, 42);
        let base = bowl.loss_analytic(&params).unwrap();
        let grad = bowl.gradient_analytic(&params).unwrap();
        let lin = grad.dot(&direction).unwrap();
        let quad = direction.dot(&direction).unwrap() / params.len() as f64;
        for (phi, loss) in slice.phis.iter().zip(&slice.losses) {
            let expected = base + phi * lin + phi * phi * quad;
            assert!(
                (loss - expected).abs() < 1e-10,
                "phi={phi}: {loss} vs {expected}"
            );
        }
    }

    #[test]
    fn same_seed_reproduces_the_slice_bit_for_bit() {
        let (bowl, params) = bowl_and_params(3, vec![0.3, 0.9, -1.5]);
        let tape = bowl.build_tape().unwrap();
        let phis = [-1.0, 0.0, 1.0];
        let a = landscape_slice(&tape, &params, &phis, 7).unwrap();
        let b = landscape_slice(&tape, &params, &phis, 7).unwrap();
        assert_eq!(a, b);
        let c = landscape_slice(&tape, &params, &phis, 8).unwrap();
        assert_ne!(a.losses, c.losses);
    }

    #[test]
    fn landscape_csv_has_two_columns() {
        let slice = LandscapeSlice {
            phis: vec![-0.5, 0.0, 0.5],
            losses: vec![1.25, 1.0, 1.25],
            direction_seed: 1,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("slice.csv");
        write_landscape_csv(&path, &slice).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "phi,loss\n-0.5,1.25\n0,1\n0.5,1.25\n");
    }

    #[test]
    fn sharpness_is_zero_at_zero_radius() {
        let (bowl, params) = bowl_and_params(3, vec![1.0, -2.0, 0.5]);
        let tape = bowl.build_tape().unwrap();
        let est = sharpness_estimate(&tape, &params, 0.0, 16, 21).unwrap();
        assert_eq!(est, 0.0);
    }

    #[test]
    fn sharpness_is_positive_at_the_bowl_center() {
        // At the minimum every direction runs uphill.
        let (bowl, params) = bowl_and_params(3, vec![0.0, 0.0, 0.0]);
        let tape = bowl.build_tape().unwrap();
        let est = sharpness_estimate(&tape, &params, 0.1, 16, 22).unwrap();
        assert!(est > 0.0);
    }

    #[test]
    fn sharpness_respects_the_quadratic_upper_bound() {
        // For L = mean((theta - c)^2) and a unit direction d,
        //   L(p + rho d) - L(p) = rho <grad, d> + rho^2 / n
        //                       <= rho ||grad|| + (rho^2 / 2) * (2 / n),
        // so the sampled maximum can never exceed the analytic bound.
        let (bowl, params) = bowl_and_params(4, vec![1.0, 0.0, 0.0, 0.0]);
        let tape = bowl.build_tape().unwrap();
        let rho = 0.05;
        let est = sharpness_estimate(&tape, &params, rho, 64, 23).unwrap();
        let grad_norm = bowl.gradient_analytic(&params).unwrap().norm2();
        let bound = rho * grad_norm + 0.5 * rho * rho * bowl.curvature();
        assert!(est > 0.0);
        assert!(est <= bound + 1e-12, "{est} vs bound {bound}");
    }

    #[test]
    fn sharpness_is_deterministic_per_seed() {
        let (bowl, params) = bowl_and_params(3, vec![0.4, 0.4, -0.8]);
        let tape = bowl.build_tape().unwrap();
        let a = sharpness_estimate(&tape, &params, 0.05, 32, 77).unwrap();
        let b = sharpness_estimate(&tape, &params, 0.05, 32, 77).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn sharpness_rejects_bad_inputs() {
        let (bowl, params) = bowl_and_params(2, vec![1.0, 1.0]);
        let tape = bowl.build_tape().unwrap();
        assert!(sharpness_estimate(&tape, &params, -0.1, 8, 1).is_err());
        assert!(sharpness_estimate(&tape, &params, f64::NAN, 8, 1).is_err());
        assert!(sharpness_estimate(&tape, &params, 0.1, 0, 1).is_err());
    }
}

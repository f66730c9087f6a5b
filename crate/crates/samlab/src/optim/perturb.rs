use crate::autodiff::GradVector;

use super::error::OptimError;

/// When the moving-average variant discards its accumulated perturbation
/// gradient and recomputes it from a fresh forward/backward pass at the
/// current parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReanchorPolicy {
    /// Recompute on every step. The moving average never survives a step, so
    /// the variant collapses to plain two-pass sharpness-aware minimization.
    EveryStep,
    /// Recompute at the first step of every K-th epoch (epochs 0, K, 2K, ...).
    EveryKEpochs(u32),
    /// Anchor once at the very first step and never again.
    Never,
}

impl ReanchorPolicy {
    pub fn validate(&self) -> Result<(), OptimError> {
        if let Self::EveryKEpochs(0) = self {
            return Err(OptimError::Config("re-anchor period K must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// Scales `epsilon` onto the sphere of radius `rho`: `rho * eps / ||eps||`.
///
/// Returns the zero vector when `rho == 0` or `||eps|| == 0`. The elementwise
/// form `rho * sign(eps) |eps| / ||eps||` that sometimes appears in write-ups
/// is the same quantity, since `sign(x)|x| = x`; there is only this one
/// implementation.
pub fn project_perturbation(epsilon: &GradVector, rho: f64) -> Result<GradVector, OptimError> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(OptimError::Config(format!("rho must be finite and >= 0, got {rho}")));
    }
    let norm = epsilon.norm2();
    if norm == 0.0 || rho == 0.0 {
        return Ok(GradVector::zeros(epsilon.map()));
    }
    Ok(epsilon.scale(rho / norm))
}

/// Stepped geometric decay of the perturbation radius:
/// `rho(epoch) = rho_initial * gamma^(epoch div lambda)`.
///
/// The exponent uses integer division, so the radius is piecewise constant
/// over `lambda`-epoch windows. `gamma = 1` keeps it constant forever.
pub fn rho_schedule(rho_initial: f64, gamma: f64, lambda: u32, epoch: u32) -> f64 {
    rho_initial * gamma.powi((epoch / lambda) as i32)
}

/// Unrolled form of the perturbation-gradient moving average after `t` =
/// `omegas.len()` folds:
///
/// `beta^t eps0 + sum_i beta^(t-1-i) (1 - beta) omega_i / ||omega_i||`
///
/// This is the oracle the iterative update is checked against, so it refuses
/// un-normalizable (zero) omega terms instead of guessing.
pub fn closed_form_epsilon(
    epsilon0: &GradVector,
    omegas: &[GradVector],
    beta: f64,
) -> Result<GradVector, OptimError> {
    if !(0.0..1.0).contains(&beta) {
        return Err(OptimError::Config(format!("beta must be in [0, 1), got {beta}")));
    }
    let t = omegas.len();
    let mut acc = epsilon0.scale(beta.powi(t as i32));
    for (i, omega) in omegas.iter().enumerate() {
        let norm = omega.norm2();
        if norm == 0.0 {
            return Err(OptimError::Config(format!(
                "omega {i} has zero norm and cannot be normalized"
            )));
        }
        let coeff = beta.powi((t - 1 - i) as i32) * (1.0 - beta);
        acc.axpy_in_place(coeff / norm, omega)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{ParamVector, SegmentMap};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn vec2(a: f64, b: f64) -> GradVector {
        let map = SegmentMap::new(&[("theta", 1, 2)]).unwrap();
        ParamVector::from_data(&map, vec![a, b]).unwrap()
    }

    fn vec_n(map: &Arc<SegmentMap>, data: Vec<f64>) -> GradVector {
        ParamVector::from_data(map, data).unwrap()
    }

    #[test]
    fn three_four_five_projection() {
        let out = project_perturbation(&vec2(3.0, 4.0), 0.1).unwrap();
        assert!((out.as_slice()[0] - 0.06).abs() < 1e-15);
        assert!((out.as_slice()[1] - 0.08).abs() < 1e-15);
    }

    #[test]
    fn degenerate_projections_are_zero() {
        assert_eq!(project_perturbation(&vec2(5.0, -2.0), 0.0).unwrap().as_slice(), &[0.0, 0.0]);
        assert_eq!(project_perturbation(&vec2(0.0, 0.0), 0.1).unwrap().as_slice(), &[0.0, 0.0]);
        assert!(project_perturbation(&vec2(1.0, 1.0), -0.5).is_err());
    }

    #[test]
    fn projected_norm_equals_rho() {
        let map = SegmentMap::new(&[("theta", 1, 16)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let data: Vec<f64> = (0..16).map(|_| rng.random_range(-3.0..3.0)).collect();
            let eps = vec_n(&map, data);
            let out = project_perturbation(&eps, 0.05).unwrap();
            assert!((out.norm2() - 0.05).abs() < 1e-12);
        }
    }

    #[test]
    fn schedule_hand_values() {
        assert_eq!(rho_schedule(0.05, 0.5, 1, 0), 0.05);
        // Two halvings: 0.05 * 0.25. Scaling by a power of two is exact.
        assert_eq!(rho_schedule(0.05, 0.5, 1, 2), 0.0125);
        // lambda = 3 holds the radius for three epochs before each decay.
        for epoch in 0..3 {
            assert_eq!(rho_schedule(0.05, 0.5, 3, epoch), 0.05);
        }
        assert_eq!(rho_schedule(0.05, 0.5, 3, 3), 0.05 * 0.5);
        assert_eq!(rho_schedule(0.05, 1.0, 1, 40), 0.05);
    }

    proptest! {
        #[test]
        fn schedule_never_increases_with_epoch(
            gamma in 0.01_f64..=1.0,
            lambda in 1_u32..6,
            e1 in 0_u32..200,
            delta in 0_u32..200,
        ) {
            let a = rho_schedule(0.05, gamma, lambda, e1);
            let b = rho_schedule(0.05, gamma, lambda, e1 + delta);
            prop_assert!(b <= a + 1e-18, "rho rose from {a} to {b}");
        }
    }

    #[test]
    fn closed_form_base_cases() {
        let eps0 = vec2(2.0, -1.0);
        let same = closed_form_epsilon(&eps0, &[], 0.99).unwrap();
        assert_eq!(same.as_slice(), eps0.as_slice());

        // beta = 0 forgets eps0 entirely and returns the normalized omega.
        let out = closed_form_epsilon(&eps0, &[vec2(0.0, 5.0)], 0.0).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 1.0]);

        assert!(closed_form_epsilon(&eps0, &[vec2(0.0, 0.0)], 0.5).is_err());
        assert!(closed_form_epsilon(&eps0, &[], 1.0).is_err());
    }

    #[test]
    fn closed_form_matches_iterative_recurrence() {
        // Five random folds, checked against the step-by-step recurrence
        // eps <- beta * eps + (1 - beta) * omega / ||omega||.
        let map = SegmentMap::new(&[("theta", 1, 4)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut draw = || {
            let data: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            vec_n(&map, data)
        };
        let beta = 0.99;
        let eps0 = draw();
        let omegas: Vec<GradVector> = (0..5).map(|_| draw()).collect();

        let mut iterative = eps0.clone();
        for omega in &omegas {
            let mut next = iterative.scale(beta);
            next.axpy_in_place((1.0 - beta) / omega.norm2(), omega).unwrap();
            iterative = next;
        }
        let closed = closed_form_epsilon(&eps0, &omegas, beta).unwrap();
        for (a, b) in closed.as_slice().iter().zip(iterative.as_slice()) {
            assert!((a - b).abs() < 1e-12, "closed {a} vs iterative {b}");
        }
    }

    #[test]
    fn reanchor_policy_validation() {
        assert!(ReanchorPolicy::EveryKEpochs(0).validate().is_err());
        assert!(ReanchorPolicy::EveryKEpochs(1).validate().is_ok());
        assert!(ReanchorPolicy::EveryStep.validate().is_ok());
        assert!(ReanchorPolicy::Never.validate().is_ok());
    }
}

use std::sync::Arc;

use crate::autodiff::{GradVector, ParamVector, SegmentMap};

use super::error::OptimError;

/// Adam moment estimates plus the hyperparameters that drive them.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: GradVector,
    pub v: GradVector,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    pub eta: f64,
}

impl AdamState {
    /// Fresh state with zero moments and the usual defaults
    /// (`beta1 = 0.9`, `beta2 = 0.999`, `eps = 1e-8`).
    pub fn new(map: &Arc<SegmentMap>, eta: f64) -> Result<Self, OptimError> {
        Self::with_hyperparameters(map, eta, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparameters(
        map: &Arc<SegmentMap>,
        eta: f64,
        beta1: f64,
        beta2: f64,
        eps_adam: f64,
    ) -> Result<Self, OptimError> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(OptimError::Config(format!("eta must be positive and finite, got {eta}")));
        }
        for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(OptimError::Config(format!("{name} must be in [0, 1), got {b}")));
            }
        }
        if !(eps_adam > 0.0 && eps_adam.is_finite()) {
            return Err(OptimError::Config(format!(
                "eps_adam must be positive and finite, got {eps_adam}"
            )));
        }
        Ok(Self {
            m: GradVector::zeros(map),
            v: GradVector::zeros(map),
            t: 0,
            beta1,
            beta2,
            eps_adam,
            eta,
        })
    }
}

/// One bias-corrected Adam update. Moments and the step counter advance in
/// place; the updated parameters are returned as a new vector.
pub fn adam_step(
    state: &mut AdamState,
    grad: &GradVector,
    params: &ParamVector,
) -> Result<ParamVector, OptimError> {
    if params.map().as_ref() != state.m.map().as_ref() {
        return Err(OptimError::State("params do not match the Adam state's segment map".to_string()));
    }
    if grad.map().as_ref() != params.map().as_ref() {
        return Err(OptimError::State("grad does not match the params' segment map".to_string()));
    }
    state.t += 1;
    let (beta1, beta2, eps, eta) = (state.beta1, state.beta2, state.eps_adam, state.eta);
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    let mut out = params.clone();
    let p = out.as_mut_slice();
    let g = grad.as_slice();
    let m = state.m.as_mut_slice();
    let v = state.v.as_mut_slice();
    for i in 0..p.len() {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        p[i] -= eta * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(out)
}

/// The update rule the perturbation variants delegate to.
#[derive(Debug, Clone)]
pub enum BaseOptimizer {
    /// Plain gradient descent, `p -= eta * g`. Used by the analytic examples.
    Sgd { eta: f64 },
    /// Bias-corrected Adam.
    Adam(AdamState),
}

impl BaseOptimizer {
    pub fn sgd(eta: f64) -> Result<Self, OptimError> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(OptimError::Config(format!("eta must be positive and finite, got {eta}")));
        }
        Ok(Self::Sgd { eta })
    }

    pub fn adam(map: &Arc<SegmentMap>, eta: f64) -> Result<Self, OptimError> {
        Ok(Self::Adam(AdamState::new(map, eta)?))
    }

    pub fn eta(&self) -> f64 {
        match self {
            Self::Sgd { eta } => *eta,
            Self::Adam(state) => state.eta,
        }
    }

    /// Applies one descent update with `grad` and returns the new parameters.
    pub fn apply(
        &mut self,
        params: &ParamVector,
        grad: &GradVector,
    ) -> Result<ParamVector, OptimError> {
        match self {
            Self::Sgd { eta } => Ok(params.axpy(-*eta, grad)?),
            Self::Adam(state) => adam_step(state, grad, params),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::QuadraticBowl;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn map2() -> Arc<SegmentMap> {
        SegmentMap::new(&[("theta", 1, 2)]).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let map = map2();
        let mut state = AdamState::new(&map, 1e-3).unwrap();
        let params = ParamVector::from_data(&map, vec![0.5, -0.25]).unwrap();
        let out = adam_step(&mut state, &GradVector::zeros(&map), &params).unwrap();
        assert_eq!(out.as_slice(), params.as_slice());
        assert_eq!(state.t, 1);
    }

    #[test]
    fn first_step_moves_each_coordinate_by_almost_eta() {
        // At t = 1 the bias corrections give m_hat = g and v_hat = g*g, so the
        // per-coordinate move is eta * g / (|g| + eps), which is eta up to a
        // relative error of eps / |g|.
        let map = map2();
        let eta = 0.01;
        let mut state = AdamState::new(&map, eta).unwrap();
        let params = ParamVector::from_data(&map, vec![1.0, 1.0]).unwrap();
        let grad = GradVector::from_data(&map, vec![3.0, -2.0]).unwrap();
        let out = adam_step(&mut state, &grad, &params).unwrap();
        let delta0 = out.as_slice()[0] - 1.0;
        let delta1 = out.as_slice()[1] - 1.0;
        assert!((delta0 + eta).abs() < 1e-9, "moved {delta0}, expected about -eta");
        assert!((delta1 - eta).abs() < 1e-9, "moved {delta1}, expected about +eta");
    }

    #[test]
    fn ten_step_trajectory_matches_scalar_reimplementation() {
        // Independent scalar Adam, one running tuple per coordinate, driven by
        // the analytic bowl gradient. The vectorized implementation must track
        // it step for step.
        let bowl = QuadraticBowl::standard(2).unwrap();
        let map = bowl.map().clone();
        let (eta, beta1, beta2, eps) = (0.05, 0.9, 0.999, 1e-8);
        let mut state = AdamState::with_hyperparameters(&map, eta, beta1, beta2, eps).unwrap();
        let mut params = ParamVector::from_data(&map, vec![1.0, -0.5]).unwrap();

        let mut x = [1.0_f64, -0.5];
        let mut m = [0.0_f64; 2];
        let mut v = [0.0_f64; 2];
        for t in 1..=10 {
            let grad_vec = bowl.gradient_analytic(&params).unwrap();
            params = adam_step(&mut state, &grad_vec, &params).unwrap();

            for i in 0..2 {
                let g = x[i]; // gradient of (x0^2 + x1^2)/2
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                let m_hat = m[i] / (1.0 - beta1.powi(t));
                let v_hat = v[i] / (1.0 - beta2.powi(t));
                x[i] -= eta * m_hat / (v_hat.sqrt() + eps);
            }
            for i in 0..2 {
                assert!(
                    (params.as_slice()[i] - x[i]).abs() < 1e-12,
                    "step {t} coordinate {i}: {} vs scalar {}",
                    params.as_slice()[i],
                    x[i]
                );
            }
        }
    }

    #[test]
    fn second_moment_stays_nonnegative() {
        let map = map2();
        let mut state = AdamState::new(&map, 1e-3).unwrap();
        let mut params = ParamVector::from_data(&map, vec![0.3, -0.8]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let grad = GradVector::from_data(
                &map,
                vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)],
            )
            .unwrap();
            params = adam_step(&mut state, &grad, &params).unwrap();
            assert!(state.v.as_slice().iter().all(|&x| x >= 0.0));
        }
        assert_eq!(state.t, 100);
    }

    #[test]
    fn sgd_step_is_exact() {
        let map = map2();
        let mut base = BaseOptimizer::sgd(0.1).unwrap();
        let params = ParamVector::from_data(&map, vec![1.0, 0.0]).unwrap();
        let grad = GradVector::from_data(&map, vec![1.0, 0.0]).unwrap();
        let out = base.apply(&params, &grad).unwrap();
        assert_eq!(out.as_slice(), &[0.9, 0.0]);
    }

    #[test]
    fn mismatched_maps_are_rejected() {
        let map = map2();
        let other = SegmentMap::new(&[("w", 1, 3)]).unwrap();
        let mut state = AdamState::new(&map, 1e-3).unwrap();
        let params = ParamVector::zeros(&other);
        let grad = GradVector::zeros(&other);
        assert!(matches!(adam_step(&mut state, &grad, &params), Err(OptimError::State(_))));
    }

    #[test]
    fn bad_hyperparameters_are_rejected() {
        let map = map2();
        assert!(AdamState::with_hyperparameters(&map, 0.0, 0.9, 0.999, 1e-8).is_err());
        assert!(AdamState::with_hyperparameters(&map, 1e-3, 1.0, 0.999, 1e-8).is_err());
        assert!(AdamState::with_hyperparameters(&map, 1e-3, 0.9, -0.1, 1e-8).is_err());
        assert!(AdamState::with_hyperparameters(&map, 1e-3, 0.9, 0.999, 0.0).is_err());
        assert!(BaseOptimizer::sgd(f64::NAN).is_err());
    }
}

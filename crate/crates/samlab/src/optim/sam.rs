use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{GradVector, ParamVector};

use super::adam::BaseOptimizer;
use super::error::OptimError;
use super::objective::Objective;
use super::perturb::{project_perturbation, rho_schedule, ReanchorPolicy};

/// Which step rule the optimizer runs.
///
/// All sharpness-aware variants share the same two ingredients: a
/// perturbation gradient ε that defines the ascent direction, and an updating
/// gradient ω taken at the perturbed point `θ + ε̂`. They differ only in how
/// often ε is recomputed from scratch versus reused or approximated.
#[derive(Debug, Clone, PartialEq)]
pub enum VariantConfig {
    /// The base optimizer alone; no perturbation.
    Adam,
    /// Fresh ε = ∇L(θ) every step: two forward/backward passes per step.
    Sam,
    /// ε maintained as a moving average of normalized past ω, re-anchored to
    /// a fresh gradient per [`ReanchorPolicy`]; one pass on non-anchor steps.
    GraphSam,
    /// ε computed once at the very first step and reused forever.
    SamOne,
    /// ε recomputed every `k`-th global step and reused in between.
    SamK { k: u32 },
    /// Full two-pass step every `k`-th global step; in between, one pass for
    /// g = ∇L(θ) plus the stored sharpness component scaled by `alpha_look`.
    LookSam { k: u32, alpha_look: f64 },
    /// Full step only when the squared gradient norm is large relative to its
    /// running statistics: `||g||² ≥ μ + z·σ` with `z` the standard-normal
    /// quantile of `quantile`.
    AeSam { quantile: f64 },
    /// Full step with probability `p_rst` per step (seeded Bernoulli stream),
    /// base step otherwise.
    Rst { p_rst: f64, rng_seed: u64 },
}

impl VariantConfig {
    /// Stable identifier used by config files and report tables.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Adam => "adam",
            Self::Sam => "sam",
            Self::GraphSam => "graphsam",
            Self::SamOne => "sam_one",
            Self::SamK { .. } => "sam_k",
            Self::LookSam { .. } => "looksam",
            Self::AeSam { .. } => "aesam",
            Self::Rst { .. } => "rst",
        }
    }

    fn validate(&self) -> Result<(), OptimError> {
        match *self {
            Self::SamK { k } | Self::LookSam { k, .. } if k == 0 => {
                Err(OptimError::Config("period k must be at least 1".to_string()))
            }
            Self::LookSam { alpha_look, .. } if !(alpha_look >= 0.0 && alpha_look.is_finite()) => {
                Err(OptimError::Config(format!("alpha_look must be finite and >= 0, got {alpha_look}")))
            }
            Self::AeSam { quantile } if !(quantile > 0.0 && quantile <= 1.0) => {
                Err(OptimError::Config(format!("aesam quantile must be in (0, 1], got {quantile}")))
            }
            Self::Rst { p_rst, .. } if !(0.0..=1.0).contains(&p_rst) => {
                Err(OptimError::Config(format!("p_rst must be in [0, 1], got {p_rst}")))
            }
            _ => Ok(()),
        }
    }
}

/// Hyperparameters shared by the whole variant family.
#[derive(Debug, Clone)]
pub struct SamConfig {
    pub variant: VariantConfig,
    /// Perturbation radius at epoch 0. Zero is allowed: every variant then
    /// walks the base optimizer's trajectory, which the degeneracy tests rely
    /// on.
    pub rho_initial: f64,
    /// Radius decay factor per scheduler window, in (0, 1]. 1 disables decay.
    pub gamma: f64,
    /// Scheduler window length in epochs.
    pub lambda: u32,
    /// Moving-average weight on the previous ε, in [0, 1).
    pub beta: f64,
    /// Re-anchor schedule for the moving-average variant.
    pub reanchor: ReanchorPolicy,
}

impl SamConfig {
    /// Defaults used across the lab: ρ = 0.05, γ = 0.5, λ = 1, β = 0.99,
    /// re-anchor at the start of every epoch.
    pub fn new(variant: VariantConfig) -> Self {
        Self {
            variant,
            rho_initial: 0.05,
            gamma: 0.5,
            lambda: 1,
            beta: 0.99,
            reanchor: ReanchorPolicy::EveryKEpochs(1),
        }
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        self.variant.validate()?;
        self.reanchor.validate()?;
        if !(self.rho_initial >= 0.0 && self.rho_initial.is_finite()) {
            return Err(OptimError::Config(format!(
                "rho_initial must be finite and >= 0, got {}",
                self.rho_initial
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(OptimError::Config(format!("gamma must be in (0, 1], got {}", self.gamma)));
        }
        if self.lambda == 0 {
            return Err(OptimError::Config("lambda must be at least 1".to_string()));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(OptimError::Config(format!("beta must be in [0, 1), got {}", self.beta)));
        }
        Ok(())
    }
}

/// Live perturbation bookkeeping, readable between steps.
#[derive(Debug, Clone)]
pub struct PerturbState {
    /// Current perturbation gradient ε_t; `None` until the first anchor.
    pub epsilon: Option<GradVector>,
    pub rho_initial: f64,
    /// Radius in force this epoch: `rho_initial * gamma^(epoch div lambda)`.
    pub rho_current: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: u32,
    pub reanchor: ReanchorPolicy,
    pub epoch: u32,
    pub step_in_epoch: u64,
}

/// Everything one optimizer step produced.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub new_params: ParamVector,
    /// Loss at θ when this step evaluated there (fresh and base steps), else
    /// the loss at the perturbed point θ + ε̂ (reuse steps evaluate only
    /// there).
    pub loss_at_theta_or_adv: f64,
    /// The gradient handed to the base update rule.
    pub omega: GradVector,
    /// The applied perturbation ε̂ (ρ-projected; zero on base-path steps).
    pub epsilon_used: GradVector,
    /// The un-projected perturbation gradient ε_t (zero on base-path steps).
    pub epsilon_raw: GradVector,
    /// Whether ω was taken at a perturbed point this step.
    pub perturbed: bool,
    pub forwards: u64,
    pub backwards: u64,
}

/// The variant family under one step function.
///
/// Drive it with [`SamOptimizer::begin_epoch`] at each epoch boundary and
/// [`SamOptimizer::step`] once per minibatch. The optimizer owns its base
/// update rule and all per-variant state; parameters flow through untouched
/// (each step returns a new vector).
#[derive(Debug, Clone)]
pub struct SamOptimizer {
    config: SamConfig,
    base: BaseOptimizer,
    perturb: PerturbState,
    global_step: u64,
    /// LookSam: component of ω orthogonal to g from the last full step.
    look_gv: Option<GradVector>,
    /// AeSam: running (mean, variance) of squared gradient norms.
    ae_stats: Option<(f64, f64)>,
    ae_z: f64,
    rst_rng: Option<ChaCha8Rng>,
}

impl SamOptimizer {
    pub fn new(config: SamConfig, base: BaseOptimizer) -> Result<Self, OptimError> {
        config.validate()?;
        let ae_z = match config.variant {
            VariantConfig::AeSam { quantile } => standard_normal_quantile(quantile),
            _ => 0.0,
        };
        let rst_rng = match config.variant {
            VariantConfig::Rst { rng_seed, .. } => Some(ChaCha8Rng::seed_from_u64(rng_seed)),
            _ => None,
        };
        let perturb = PerturbState {
            epsilon: None,
            rho_initial: config.rho_initial,
            rho_current: rho_schedule(config.rho_initial, config.gamma, config.lambda, 0),
            beta: config.beta,
            gamma: config.gamma,
            lambda: config.lambda,
            reanchor: config.reanchor,
            epoch: 0,
            step_in_epoch: 0,
        };
        Ok(Self {
            config,
            base,
            perturb,
            global_step: 0,
            look_gv: None,
            ae_stats: None,
            ae_z,
            rst_rng,
        })
    }

    pub fn config(&self) -> &SamConfig {
        &self.config
    }

    pub fn perturb_state(&self) -> &PerturbState {
        &self.perturb
    }

    pub fn global_step(&self) -> u64 {
        self.global_step
    }

    /// Resets the in-epoch step counter and reschedules the radius. Call at
    /// the start of every epoch, including epoch 0.
    pub fn begin_epoch(&mut self, epoch: u32) {
        self.perturb.epoch = epoch;
        self.perturb.step_in_epoch = 0;
        self.perturb.rho_current =
            rho_schedule(self.config.rho_initial, self.config.gamma, self.config.lambda, epoch);
    }

    /// Runs one optimizer step at `params` and returns the update.
    pub fn step(
        &mut self,
        objective: &mut dyn Objective,
        params: &ParamVector,
    ) -> Result<StepOutcome, OptimError> {
        let variant = self.config.variant.clone();
        let outcome = match variant {
            VariantConfig::Adam => self.base_path(objective, params)?,
            VariantConfig::Sam => self.perturbation_step(objective, params, true)?,
            VariantConfig::GraphSam => {
                let anchor = self.global_step == 0
                    || match self.config.reanchor {
                        ReanchorPolicy::EveryStep => true,
                        ReanchorPolicy::Never => false,
                        ReanchorPolicy::EveryKEpochs(k) => {
                            self.perturb.step_in_epoch == 0 && self.perturb.epoch % k == 0
                        }
                    };
                let out = self.perturbation_step(objective, params, anchor)?;
                // Prepare the next step's ε from this step's ω; an anchor on
                // the next step simply overwrites it.
                self.fold_moving_average(&out.omega)?;
                out
            }
            VariantConfig::SamOne => {
                let fresh = self.global_step == 0;
                self.perturbation_step(objective, params, fresh)?
            }
            VariantConfig::SamK { k } => {
                let fresh = self.global_step % u64::from(k) == 0;
                self.perturbation_step(objective, params, fresh)?
            }
            VariantConfig::LookSam { k, alpha_look } => {
                self.looksam_path(objective, params, k, alpha_look)?
            }
            VariantConfig::AeSam { .. } => self.aesam_path(objective, params)?,
            VariantConfig::Rst { p_rst, .. } => {
                let take_full = self
                    .rst_rng
                    .as_mut()
                    .expect("rst optimizer constructed with an rng")
                    .random_bool(p_rst);
                if take_full {
                    self.perturbation_step(objective, params, true)?
                } else {
                    self.base_path(objective, params)?
                }
            }
        };
        self.perturb.step_in_epoch += 1;
        self.global_step += 1;
        Ok(outcome)
    }

    /// The shared perturbed update. `fresh` recomputes ε = ∇L(θ) first (two
    /// passes); otherwise the stored ε is reused and only the perturbed point
    /// is evaluated (one pass).
    fn perturbation_step(
        &mut self,
        objective: &mut dyn Objective,
        params: &ParamVector,
        fresh: bool,
    ) -> Result<StepOutcome, OptimError> {
        if fresh {
            let (loss_theta, g) = objective.loss_and_grad(params)?;
            self.perturb.epsilon = Some(g.clone());
            let (new_params, _loss_adv, omega, epsilon_used) =
                self.perturbed_update(objective, params, &g)?;
            Ok(StepOutcome {
                new_params,
                loss_at_theta_or_adv: loss_theta,
                omega,
                epsilon_used,
                epsilon_raw: g,
                perturbed: true,
                forwards: 2,
                backwards: 2,
            })
        } else {
            let epsilon = self.perturb.epsilon.clone().ok_or_else(|| {
                OptimError::State("perturbation reuse requested before the first anchor".to_string())
            })?;
            let (new_params, loss_adv, omega, epsilon_used) =
                self.perturbed_update(objective, params, &epsilon)?;
            Ok(StepOutcome {
                new_params,
                loss_at_theta_or_adv: loss_adv,
                omega,
                epsilon_used,
                epsilon_raw: epsilon,
                perturbed: true,
                forwards: 1,
                backwards: 1,
            })
        }
    }

    /// Projects ε, evaluates ω at θ + ε̂, and applies the base update at θ.
    /// The perturbation never persists into the returned parameters.
    fn perturbed_update(
        &mut self,
        objective: &mut dyn Objective,
        params: &ParamVector,
        epsilon: &GradVector,
    ) -> Result<(ParamVector, f64, GradVector, GradVector), OptimError> {
        let epsilon_used = project_perturbation(epsilon, self.perturb.rho_current)?;
        let shifted = params.axpy(1.0, &epsilon_used)?;
        let (loss_adv, omega) = objective.loss_and_grad(&shifted)?;
        let new_params = self.base.apply(params, &omega)?;
        Ok((new_params, loss_adv, omega, epsilon_used))
    }

    fn base_path(
        &mut self,
        objective: &mut dyn Objective,
        params: &ParamVector,
    ) -> Result<StepOutcome, OptimError> {
        let (loss, g) = objective.loss_and_grad(params)?;
        let new_params = self.base.apply(params, &g)?;
        let zero = GradVector::zeros(params.map());
        Ok(StepOutcome {
            new_params,
            loss_at_theta_or_adv: loss,
            omega: g,
            epsilon_used: zero.clone(),
            epsilon_raw: zero,
            perturbed: false,
            forwards: 1,
            backwards: 1,
        })
    }

    /// ε ← β·ε + (1−β)·ω/‖ω‖; a zero ω only decays the average.
    fn fold_moving_average(&mut self, omega: &GradVector) -> Result<(), OptimError> {
        let beta = self.config.beta;
        let epsilon = self.perturb.epsilon.as_mut().ok_or_else(|| {
            OptimError::State("moving average folded before the first anchor".to_string())
        })?;
        let norm = omega.norm2();
        let mut next = epsilon.scale(beta);
        if norm > 0.0 {
            next.axpy_in_place((1.0 - beta) / norm, omega)?;
        }
        *epsilon = next;
        Ok(())
    }

    fn looksam_path(
        &mut self,
        objective: &mut dyn Objective,
        params: &ParamVector,
        k: u32,
        alpha_look: f64,
    ) -> Result<StepOutcome, OptimError> {
        if self.global_step % u64::from(k) == 0 {
            let (loss_theta, g) = objective.loss_and_grad(params)?;
            self.perturb.epsilon = Some(g.clone());
            let (new_params, _loss_adv, omega, epsilon_used) =
                self.perturbed_update(objective, params, &g)?;
            // Store the component of ω orthogonal to g; between full steps it
            // stands in for the sharpness contribution.
            let g_norm2 = g.dot(&g)?;
            let g_v = if g_norm2 == 0.0 {
                GradVector::zeros(params.map())
            } else {
                omega.axpy(-(omega.dot(&g)? / g_norm2), &g)?
            };
            self.look_gv = Some(g_v);
            Ok(StepOutcome {
                new_params,
                loss_at_theta_or_adv: loss_theta,
                omega,
                epsilon_used,
                epsilon_raw: g,
                perturbed: true,
                forwards: 2,
                backwards: 2,
            })
        } else {
            let (loss_theta, g) = objective.loss_and_grad(params)?;
            let g_v = self.look_gv.as_ref().ok_or_else(|| {
                OptimError::State("intermediate step before the first full step".to_string())
            })?;
            let gv_norm = g_v.norm2();
            // Fall back to the plain gradient when there is no usable stored
            // direction.
            let direction = if gv_norm == 0.0 {
                g.clone()
            } else {
                g.axpy(alpha_look * g.norm2() / gv_norm, g_v)?
            };
            let new_params = self.base.apply(params, &direction)?;
            let zero = GradVector::zeros(params.map());
            Ok(StepOutcome {
                new_params,
                loss_at_theta_or_adv: loss_theta,
                omega: direction,
                epsilon_used: zero.clone(),
                epsilon_raw: zero,
                perturbed: false,
                forwards: 1,
                backwards: 1,
            })
        }
    }

    fn aesam_path(
        &mut self,
        objective: &mut dyn Objective,
        params: &ParamVector,
    ) -> Result<StepOutcome, OptimError> {
        let (loss_theta, g) = objective.loss_and_grad(params)?;
        let s = g.dot(&g)?;
        // Decide against the statistics gathered so far, then fold s in. The
        // very first step has no statistics and always takes the full step.
        // With variance 0 and z = ∞ the threshold is NaN and the comparison
        // is false, which is the intended "never" behavior for quantile 1.
        let take_full = match self.ae_stats {
            None => true,
            Some((mu, var)) => s >= mu + self.ae_z * var.sqrt(),
        };
        self.ae_stats = Some(match self.ae_stats {
            None => (s, 0.0),
            Some((mu, var)) => {
                let mu_new = 0.9 * mu + 0.1 * s;
                let var_new = 0.9 * var + 0.1 * (s - mu_new) * (s - mu_new);
                (mu_new, var_new)
            }
        });
        if take_full {
            self.perturb.epsilon = Some(g.clone());
            let (new_params, _loss_adv, omega, epsilon_used) =
                self.perturbed_update(objective, params, &g)?;
            Ok(StepOutcome {
                new_params,
                loss_at_theta_or_adv: loss_theta,
                omega,
                epsilon_used,
                epsilon_raw: g,
                perturbed: true,
                forwards: 2,
                backwards: 2,
            })
        } else {
            let new_params = self.base.apply(params, &g)?;
            let zero = GradVector::zeros(params.map());
            Ok(StepOutcome {
                new_params,
                loss_at_theta_or_adv: loss_theta,
                omega: g,
                epsilon_used: zero.clone(),
                epsilon_raw: zero,
                perturbed: false,
                forwards: 1,
                backwards: 1,
            })
        }
    }
}

fn standard_normal_quantile(q: f64) -> f64 {
    if q >= 1.0 {
        return f64::INFINITY;
    }
    use statrs::distribution::ContinuousCDF;
    statrs::distribution::Normal::new(0.0, 1.0)
        .expect("unit normal is a valid distribution")
        .inverse_cdf(q)
}

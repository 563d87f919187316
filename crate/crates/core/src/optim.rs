//! Momentum SGD on fresh Gaussian batches, as used for the linear simulations.

use rand::Rng;

use crate::linalg::Mat;
use crate::loss::{gradient, symmetric_gradient, Gradients};
use crate::mean_flow::mean_field_gradient;
use crate::model::{sample_batch, GradMode, LrSchedule, ModelState, SimConfig};
use crate::Result;

/// Half-cosine decay: `lr0 · (1 + cos(π · step / total)) / 2`.
pub fn cosine_annealing(lr0: f64, step: usize, total: usize) -> f64 {
    if total == 0 {
        return lr0;
    }
    let frac = (step.min(total) as f64) / total as f64;
    0.5 * lr0 * (1.0 + (std::f64::consts::PI * frac).cos())
}

pub fn learning_rate(config: &SimConfig, step: usize) -> f64 {
    match config.schedule {
        LrSchedule::Constant => config.gamma,
        LrSchedule::Cosine => cosine_annealing(config.gamma, step, config.steps),
    }
}

/// Heavy-ball SGD in the PyTorch convention: `v ← μv + g`, `θ ← θ − lr·v`.
#[derive(Debug, Clone)]
pub struct MomentumSgd {
    pub momentum: f64,
    vel_phi: Mat,
    vel_w: Mat,
}

impl MomentumSgd {
    pub fn new(state: &ModelState, momentum: f64) -> Self {
        Self {
            momentum,
            vel_phi: Mat::zeros(state.phi.nrows(), state.phi.ncols()),
            vel_w: Mat::zeros(state.w.nrows(), state.w.ncols()),
        }
    }

    pub fn apply(&mut self, state: &mut ModelState, grads: &Gradients, lr: f64) {
        self.vel_phi *= self.momentum;
        self.vel_phi += &grads.phi;
        self.vel_w *= self.momentum;
        self.vel_w += &grads.w;
        state.phi -= &self.vel_phi * lr;
        state.w -= &self.vel_w * lr;
    }
}

/// Gradient for one step according to the configured loss, gradient mode and
/// symmetric-loss flag. Monte Carlo mode draws `config.batch` fresh pairs.
pub fn step_gradient<R: Rng + ?Sized>(state: &ModelState, config: &SimConfig, rng: &mut R) -> Result<Gradients> {
    match config.grad_mode {
        GradMode::MeanField => mean_field_gradient(config.loss_kind, state, config.sigma2, config.rho),
        GradMode::MonteCarlo => {
            let batch = sample_batch(config.batch, config.d, config.sigma2, rng)?;
            if config.symmetric_loss {
                symmetric_gradient(config.loss_kind, state, &batch, config.rho)
            } else {
                gradient(config.loss_kind, state, &batch, config.rho)
            }
        }
    }
}

/// One optimizer update; time advances by `γ` regardless of `lr`.
pub fn sgd_step<R: Rng + ?Sized>(
    state: &mut ModelState,
    opt: &mut MomentumSgd,
    config: &SimConfig,
    rng: &mut R,
    lr: f64,
) -> Result<()> {
    let grads = step_gradient(state, config, rng)?;
    opt.apply(state, &grads, lr);
    state.time += config.gamma;
    Ok(())
}

/// Runs `config.steps` updates. `observe(step, state)` is called before the first
/// update (step 0) and after every update.
pub fn train<R, F>(state: &mut ModelState, config: &SimConfig, rng: &mut R, mut observe: F) -> Result<()>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &ModelState) -> Result<()>,
{
    let mut opt = MomentumSgd::new(state, config.momentum);
    observe(0, state)?;
    for step in 0..config.steps {
        let lr = learning_rate(config, step);
        sgd_step(state, &mut opt, config, rng, lr)?;
        observe(step + 1, state)?;
    }
    Ok(())
}

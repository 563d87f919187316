//! Cosine and L2 objectives with stop-gradient on the target branch, plus their
//! closed-form batch gradients.
//!
//! Every function treats the second view `x′` as the target: its encoding `Φx′` is a
//! constant for differentiation purposes.

use crate::linalg::{Mat, Vector};
use crate::model::{LossKind, ModelState, PairBatch};
use crate::{Error, Result};

/// Normalizers below this value are reported as a blow-up instead of being clamped.
pub const NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub loss_value: f64,
    pub reg_value: f64,
    pub total: f64,
}

impl LossReport {
    fn new(loss_value: f64, reg_value: f64) -> Self {
        Self {
            loss_value,
            reg_value,
            total: loss_value + reg_value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub phi: Mat,
    pub w: Mat,
}

impl Gradients {
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            phi: &self.phi * c,
            w: &self.w * c,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.phi.norm_squared() + self.w.norm_squared()).sqrt()
    }
}

/// Per-sample unit vectors entering the cosine gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    /// `Φx′ / ‖Φx′‖`
    pub z_prime: Vector,
    /// `WΦx / ‖WΦx‖`
    pub omega: Vector,
    pub alignment: f64,
}

pub fn gradient_sample(state: &ModelState, x: &Vector, x_prime: &Vector) -> Result<GradientSample> {
    let pred = &state.w * (&state.phi * x);
    let target = &state.phi * x_prime;
    let (np, nt) = (pred.norm(), target.norm());
    check_norm("prediction", np, 0)?;
    check_norm("target", nt, 0)?;
    let omega = pred / np;
    let z_prime = target / nt;
    let alignment = omega.dot(&z_prime);
    Ok(GradientSample {
        z_prime,
        omega,
        alignment,
    })
}

/// `R(Φ, W) = ρ/2 (‖Φ‖² + ‖W‖²)`
pub fn regularizer(state: &ModelState, rho: f64) -> f64 {
    0.5 * rho * (state.phi.norm_squared() + state.w.norm_squared())
}

fn check_norm(which: &'static str, value: f64, sample: usize) -> Result<()> {
    if value < NORM_FLOOR || !value.is_finite() {
        return Err(Error::NormBlowup { which, value, sample });
    }
    Ok(())
}

fn check_batch(state: &ModelState, batch: &PairBatch) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    if batch.dim() != state.d() {
        return Err(Error::Shape(format!(
            "batch dimension {} does not match d = {}",
            batch.dim(),
            state.d()
        )));
    }
    Ok(())
}

/// Cosine loss where the target branch is encoded by `target_phi`. With
/// `target_phi = state.phi` this is the ordinary objective; holding it fixed while
/// perturbing `state` realises the stop-gradient for finite-difference checks.
pub fn cosine_loss_with_target(
    state: &ModelState,
    target_phi: &Mat,
    batch: &PairBatch,
    rho: f64,
) -> Result<LossReport> {
    check_batch(state, batch)?;
    let pred = &state.w * (&state.phi * &batch.x);
    let target = target_phi * &batch.x_prime;
    let mut acc = 0.0;
    for j in 0..batch.len() {
        let (p, t) = (pred.column(j), target.column(j));
        let (np, nt) = (p.norm(), t.norm());
        check_norm("prediction", np, j)?;
        check_norm("target", nt, j)?;
        acc += p.dot(&t) / (np * nt);
    }
    Ok(LossReport::new(-acc / batch.len() as f64, regularizer(state, rho)))
}

pub fn cosine_loss(state: &ModelState, batch: &PairBatch, rho: f64) -> Result<LossReport> {
    cosine_loss_with_target(state, &state.phi, batch, rho)
}

pub fn l2_loss_with_target(
    state: &ModelState,
    target_phi: &Mat,
    batch: &PairBatch,
    rho: f64,
) -> Result<LossReport> {
    check_batch(state, batch)?;
    let resid = &state.w * (&state.phi * &batch.x) - target_phi * &batch.x_prime;
    let value = 0.5 * resid.norm_squared() / batch.len() as f64;
    Ok(LossReport::new(value, regularizer(state, rho)))
}

pub fn l2_loss(state: &ModelState, batch: &PairBatch, rho: f64) -> Result<LossReport> {
    l2_loss_with_target(state, &state.phi, batch, rho)
}

/// Assembles `(∇Φ, ∇W)` from `∂L/∂(WΦx)` stacked column-wise in `dpred`.
fn backprop(state: &ModelState, enc: &Mat, dpred: &Mat, x: &Mat, rho: f64) -> Gradients {
    let n = x.ncols() as f64;
    let w = dpred * enc.transpose() / n + &state.w * rho;
    let phi = state.w.transpose() * (dpred * x.transpose()) / n + &state.phi * rho;
    Gradients { phi, w }
}

pub fn grad_cosine(state: &ModelState, batch: &PairBatch, rho: f64) -> Result<Gradients> {
    check_batch(state, batch)?;
    let enc = &state.phi * &batch.x;
    let pred = &state.w * &enc;
    let target = &state.phi * &batch.x_prime;
    let mut dpred = Mat::zeros(pred.nrows(), pred.ncols());
    for j in 0..batch.len() {
        let (p, t) = (pred.column(j), target.column(j));
        let (np, nt) = (p.norm(), t.norm());
        check_norm("prediction", np, j)?;
        check_norm("target", nt, j)?;
        let omega = p / np;
        let z = t / nt;
        let align = omega.dot(&z);
        dpred.set_column(j, &((omega * align - z) / np));
    }
    Ok(backprop(state, &enc, &dpred, &batch.x, rho))
}

pub fn grad_l2(state: &ModelState, batch: &PairBatch, rho: f64) -> Result<Gradients> {
    check_batch(state, batch)?;
    let enc = &state.phi * &batch.x;
    let resid = &state.w * &enc - &state.phi * &batch.x_prime;
    Ok(backprop(state, &enc, &resid, &batch.x, rho))
}

pub fn loss(kind: LossKind, state: &ModelState, batch: &PairBatch, rho: f64) -> Result<LossReport> {
    match kind {
        LossKind::Cosine => cosine_loss(state, batch, rho),
        LossKind::L2 => l2_loss(state, batch, rho),
    }
}

pub fn gradient(kind: LossKind, state: &ModelState, batch: &PairBatch, rho: f64) -> Result<Gradients> {
    match kind {
        LossKind::Cosine => grad_cosine(state, batch, rho),
        LossKind::L2 => grad_l2(state, batch, rho),
    }
}

/// Averages the gradient over both assignments of prediction and target views.
pub fn symmetric_gradient(
    kind: LossKind,
    state: &ModelState,
    batch: &PairBatch,
    rho: f64,
) -> Result<Gradients> {
    let a = gradient(kind, state, batch, rho)?;
    let b = gradient(kind, state, &batch.swapped(), rho)?;
    Ok(Gradients {
        phi: (a.phi + b.phi) * 0.5,
        w: (a.w + b.w) * 0.5,
    })
}

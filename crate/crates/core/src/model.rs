//! Configuration, trainable state and the Gaussian data/augmentation model.
//!
//! Inputs are anchors `x0 ~ N(0, I_d)`; the two views are drawn independently from
//! `N(x0, σ² I_d)`. The encoder is a representation net `Φ` (h×d) followed by a
//! projection head `W` (h×h).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{gaussian_matrix, symmetrize, Mat, Vector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Cosine,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GradMode {
    /// Closed-form drift obtained after norm concentration.
    MeanField,
    /// Average over `batch` freshly sampled pairs.
    #[default]
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    /// Half-cosine decay from the base rate to zero over `steps` updates.
    #[default]
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub d: usize,
    pub h: usize,
    /// Augmentation variance σ².
    pub sigma2: f64,
    /// Weight-decay strength ρ.
    pub rho: f64,
    /// Step size γ; also the base learning rate of the SGD runs.
    pub gamma: f64,
    pub steps: usize,
    pub seed: u64,
    pub symmetrize_w: bool,
    pub loss_kind: LossKind,
    pub grad_mode: GradMode,
    pub batch: usize,
    pub momentum: f64,
    pub schedule: LrSchedule,
    /// Average the loss over both branch assignments instead of the one-directional form.
    pub symmetric_loss: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            d: 512,
            h: 64,
            sigma2: 1.0,
            rho: 0.005,
            gamma: 0.05,
            steps: 3000,
            seed: 0,
            symmetrize_w: true,
            loss_kind: LossKind::Cosine,
            grad_mode: GradMode::MonteCarlo,
            batch: 512,
            momentum: 0.9,
            schedule: LrSchedule::Cosine,
            symmetric_loss: false,
        }
    }
}

impl SimConfig {
    pub fn alpha(&self) -> f64 {
        self.d as f64 / self.h as f64
    }

    /// Continuous horizon `t = γ · t̄`.
    pub fn horizon(&self) -> f64 {
        self.gamma * self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.d == 0 || self.h == 0 {
            return bad(format!("dimensions must be positive (d = {}, h = {})", self.d, self.h));
        }
        if !(self.sigma2 >= 0.0) || !self.sigma2.is_finite() {
            return bad(format!("sigma2 must be finite and >= 0, got {}", self.sigma2));
        }
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return bad(format!("rho must be finite and >= 0, got {}", self.rho));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be finite and > 0, got {}", self.gamma));
        }
        if self.batch == 0 {
            return bad("batch must be positive".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        Ok(())
    }
}

/// Trainable parameters. `Ψ = WΦ` and `F = ΦΦᵀ` are always derived on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub phi: Mat,
    pub w: Mat,
    pub time: f64,
}

impl ModelState {
    pub fn new(phi: Mat, w: Mat) -> Result<Self> {
        if w.nrows() != w.ncols() || w.nrows() != phi.nrows() {
            return Err(Error::Shape(format!(
                "phi is {}x{}, w is {}x{}",
                phi.nrows(),
                phi.ncols(),
                w.nrows(),
                w.ncols()
            )));
        }
        Ok(Self { phi, w, time: 0.0 })
    }

    pub fn h(&self) -> usize {
        self.phi.nrows()
    }

    pub fn d(&self) -> usize {
        self.phi.ncols()
    }

    pub fn psi(&self) -> Mat {
        &self.w * &self.phi
    }

    pub fn gram(&self) -> Mat {
        &self.phi * self.phi.transpose()
    }
}

/// Draws `Φ(0)` with entries of variance `1/d` and `W(0)` with entries of variance `1/h`,
/// then symmetrizes `W` when requested.
pub fn init_params<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> ModelState {
    let (d, h) = (config.d, config.h);
    let phi = gaussian_matrix(h, d, 1.0 / (d as f64).sqrt(), rng);
    let mut w = gaussian_matrix(h, h, 1.0 / (h as f64).sqrt(), rng);
    if config.symmetrize_w {
        w = symmetrize(&w);
    }
    ModelState { phi, w, time: 0.0 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub x0: Vector,
    pub x: Vector,
    pub x_prime: Vector,
}

#[derive(Debug, Clone)]
pub enum AnchorMode {
    Random,
    Given(Vector),
}

pub fn sample_pair<R: Rng + ?Sized>(
    anchor: AnchorMode,
    config: &SimConfig,
    rng: &mut R,
) -> Result<SamplePair> {
    if config.sigma2 < 0.0 {
        return Err(Error::NegativeVariance(config.sigma2));
    }
    let d = config.d;
    let x0 = match anchor {
        AnchorMode::Random => Vector::from_fn(d, |_, _| rng.sample(StandardNormal)),
        AnchorMode::Given(v) => {
            if v.len() != d {
                return Err(Error::Shape(format!("anchor has length {}, expected {d}", v.len())));
            }
            v
        }
    };
    let (x, x_prime) = if config.sigma2 == 0.0 {
        (x0.clone(), x0.clone())
    } else {
        let s = config.sigma2.sqrt();
        let x = Vector::from_fn(d, |i, _| x0[i] + s * rng.sample::<f64, _>(StandardNormal));
        let xp = Vector::from_fn(d, |i, _| x0[i] + s * rng.sample::<f64, _>(StandardNormal));
        (x, xp)
    };
    Ok(SamplePair { x0, x, x_prime })
}

/// A batch of pairs stored column-wise: each of `x0`, `x`, `x_prime` is `d × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBatch {
    pub x0: Mat,
    pub x: Mat,
    pub x_prime: Mat,
}

impl PairBatch {
    pub fn len(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn from_pairs(pairs: &[SamplePair]) -> Self {
        let d = pairs.first().map_or(0, |p| p.x.len());
        let n = pairs.len();
        let col = |f: fn(&SamplePair) -> &Vector| DMatrix::from_fn(d, n, |i, j| f(&pairs[j])[i]);
        Self {
            x0: col(|p| &p.x0),
            x: col(|p| &p.x),
            x_prime: col(|p| &p.x_prime),
        }
    }

    /// The same pairs with the two views exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            x0: self.x0.clone(),
            x: self.x_prime.clone(),
            x_prime: self.x.clone(),
        }
    }
}

pub fn sample_batch<R: Rng + ?Sized>(n: usize, d: usize, sigma2: f64, rng: &mut R) -> Result<PairBatch> {
    if sigma2 < 0.0 {
        return Err(Error::NegativeVariance(sigma2));
    }
    let x0 = gaussian_matrix(d, n, 1.0, rng);
    if sigma2 == 0.0 {
        return Ok(PairBatch {
            x: x0.clone(),
            x_prime: x0.clone(),
            x0,
        });
    }
    let s = sigma2.sqrt();
    let x = &x0 + gaussian_matrix(d, n, s, rng);
    let x_prime = &x0 + gaussian_matrix(d, n, s, rng);
    Ok(PairBatch { x0, x, x_prime })
}

//! Learning dynamics of a two-layer linear non-contrastive learner (SimSiam-style
//! online/target branches with a stop-gradient) under the cosine loss with feature
//! normalization, contrasted with the L2 loss.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: configuration, parameter initialization and the Gaussian data/augmentation samplers.
//! - [`loss`] and [`optim`]: loss values, closed-form stop-gradient gradients and the momentum SGD stepper.
//! - [`mean_flow`]: the mean-field drift, the deterministic matrix flow on `(W, F)` and its diagnostics.
//! - [`eigen`]: per-mode eigenvalue dynamics, the invariant parabola and the reduced 1-D dynamics.
//! - [`equilibria`]: root finding, stability labels, regime classification and basins.
//! - [`concentration`]: Monte Carlo checks of norm concentration and of the mean-field drift.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concentration;
pub mod eigen;
pub mod equilibria;
mod error;
pub mod linalg;
pub mod loss;
pub mod mean_flow;
pub mod model;
pub mod ode;
pub mod optim;
pub mod rng;

pub use error::{Error, Result};
pub use model::{GradMode, LossKind, ModelState, PairBatch, SamplePair, SimConfig};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("augmentation variance must be non-negative, got {0}")]
    NegativeVariance(f64),

    /// A per-sample normalizer fell below the floor; the empirical representation collapsed.
    #[error("normalizer {which} = {value:e} fell below the floor (sample {sample})")]
    NormBlowup {
        which: &'static str,
        value: f64,
        sample: usize,
    },

    #[error("degenerate norms: N_phi = {n_phi:e}, N_psi = {n_psi:e}")]
    DegenerateNorms { n_phi: f64, n_psi: f64 },

    #[error("projection head is singular (condition number {condition:e})")]
    SingularProjector { condition: f64 },

    #[error("projection head is not symmetric (relative asymmetry {asym:e})")]
    AsymmetricProjector { asym: f64 },

    #[error("dimension h = {h} is too large for the dense Kronecker assembly (max {max})")]
    DimensionTooLarge { h: usize, max: usize },

    #[error("root bracketing failed: {0}")]
    BracketingFailure(String),

    #[error("unclassifiable root pattern {0:?}")]
    UnclassifiableRootPattern(Vec<f64>),

    #[error("shape mismatch: {0}")]
    Shape(String),
}

impl Error {
    /// True for the failures that signal a numerical breakdown of the dynamics
    /// rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NormBlowup { .. }
                | Error::DegenerateNorms { .. }
                | Error::SingularProjector { .. }
                | Error::AsymmetricProjector { .. }
                | Error::BracketingFailure(_)
                | Error::UnclassifiableRootPattern(_)
        )
    }
}

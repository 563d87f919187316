//! Concentration-limit drift `Ĥ`, the deterministic flow on `(W, F)` and its diagnostics.

use nalgebra::linalg::LU;

use crate::linalg::{
    asym_rel, commutator, condition_number, kron, kron_sum, min_sym_eigenvalue, sorted_sym_eigen,
    symmetrize, unsigned_angle, Mat,
};
use crate::loss::Gradients;
use crate::model::{LossKind, ModelState};
use crate::ode::{rk4_step, step_count, OdeState};
use crate::{Error, Result};

pub const DEGENERATE_NORM: f64 = 1e-12;
pub const MAX_CONDITION: f64 = 1e10;
pub const MAX_ASYMMETRY: f64 = 1e-6;
pub const DIVERGENCE_NORM: f64 = 1e6;
/// Largest head width for which the `h² × h²` commutator operator is assembled.
pub const MAX_COMMUTATOR_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct NormDiagnostics {
    pub n_phi: f64,
    pub n_psi: f64,
    pub n_times: f64,
    pub asym_rel: f64,
    pub comm_rel: f64,
}

/// `(N_Φ, N_Ψ, N_×)` from `W` and `F = ΦΦᵀ` alone.
pub fn norms_from_wf(w: &Mat, f: &Mat) -> (f64, f64, f64) {
    let n_phi = f.trace().max(0.0).sqrt();
    let n_psi = (w * f * w.transpose()).trace().max(0.0).sqrt();
    let n_times = if n_phi > 0.0 && n_psi > 0.0 {
        (w * f).trace() / (n_phi * n_psi)
    } else {
        0.0
    };
    (n_phi, n_psi, n_times)
}

fn comm_rel(w: &Mat, f: &Mat) -> f64 {
    let denom = f.norm() * w.norm();
    if denom == 0.0 {
        0.0
    } else {
        commutator(f, w).norm() / denom
    }
}

pub fn diagnostics(state: &ModelState) -> NormDiagnostics {
    let f = state.gram();
    let n_phi = state.phi.norm();
    let psi = state.psi();
    let n_psi = psi.norm();
    let n_times = if n_phi > 0.0 && n_psi > 0.0 {
        state.phi.dot(&psi) / (n_phi * n_psi)
    } else {
        0.0
    };
    NormDiagnostics {
        n_phi,
        n_psi,
        n_times,
        asym_rel: asym_rel(&state.w),
        comm_rel: comm_rel(&state.w, &f),
    }
}

pub fn flow_diagnostics(state: &FlowState) -> NormDiagnostics {
    let (n_phi, n_psi, n_times) = norms_from_wf(&state.w, &state.f);
    NormDiagnostics {
        n_phi,
        n_psi,
        n_times,
        asym_rel: asym_rel(&state.w),
        comm_rel: comm_rel(&state.w, &state.f),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldDrift {
    pub h_hat: Mat,
}

fn checked_norms(w: &Mat, f: &Mat) -> Result<(f64, f64, f64)> {
    let (n_phi, n_psi, n_times) = norms_from_wf(w, f);
    if !(n_phi > DEGENERATE_NORM && n_psi > DEGENERATE_NORM) {
        return Err(Error::DegenerateNorms { n_phi, n_psi });
    }
    Ok((n_phi, n_psi, n_times))
}

/// `Ĥ = k [FW/(N_Φ N_Ψ) − 2WFWFW/(N_Φ N_Ψ³) − N_× WFW/N_Ψ²]` with `k = 1/(1+σ²)`.
pub fn hhat_wf(w: &Mat, f: &Mat, sigma2: f64) -> Result<Mat> {
    let (n_phi, n_psi, n_times) = checked_norms(w, f)?;
    let k = 1.0 / (1.0 + sigma2);
    let fw = f * w;
    let wfw = w * &fw;
    let wfwfw = &wfw * &fw;
    Ok((fw / (n_phi * n_psi) - wfwfw * (2.0 / (n_phi * n_psi.powi(3))) - wfw * (n_times / (n_psi * n_psi))) * k)
}

pub fn compute_hhat(state: &ModelState, sigma2: f64) -> Result<MeanFieldDrift> {
    Ok(MeanFieldDrift {
        h_hat: hhat_wf(&state.w, &state.gram(), sigma2)?,
    })
}

/// Expected cosine-loss gradients after norm concentration. For symmetric `W` the
/// head gradient satisfies `−∇_W L · Wᵀ = Ĥ` (up to the decay term).
pub fn mean_field_grad_cosine(state: &ModelState, sigma2: f64, rho: f64) -> Result<Gradients> {
    let w = &state.w;
    let phi = &state.phi;
    let f = state.gram();
    let (n_phi, n_psi, n_times) = checked_norms(w, &f)?;
    let k = 1.0 / (1.0 + sigma2);
    let c1 = 1.0 / (n_phi * n_psi);
    let c3 = 1.0 / (n_phi * n_psi.powi(3));
    let c2 = n_times / (n_psi * n_psi);
    let wf = w * &f;
    let w_sym2 = w + w.transpose();
    let cubic = &wf * &w_sym2;
    let grad_w = -(&f * c1 - &cubic * &f * c3 - &wf * c2) * k + w * rho;
    let inner = phi * c1 - &cubic * phi * c3 - w * phi * c2;
    let grad_phi = -(w.transpose() * inner) * k + phi * rho;
    Ok(Gradients { phi: grad_phi, w: grad_w })
}

/// Exact expected L2-loss gradients.
pub fn mean_field_grad_l2(state: &ModelState, sigma2: f64, rho: f64) -> Gradients {
    let s = 1.0 + sigma2;
    let f = state.gram();
    let grad_w = &state.w * &f * s - &f + &state.w * rho;
    let resid = &state.w * &state.phi * s - &state.phi;
    let grad_phi = state.w.transpose() * resid + &state.phi * rho;
    Gradients { phi: grad_phi, w: grad_w }
}

pub fn mean_field_gradient(kind: LossKind, state: &ModelState, sigma2: f64, rho: f64) -> Result<Gradients> {
    match kind {
        LossKind::Cosine => mean_field_grad_cosine(state, sigma2, rho),
        LossKind::L2 => Ok(mean_field_grad_l2(state, sigma2, rho)),
    }
}

/// State of the deterministic flow: projection head and representation Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub w: Mat,
    pub f: Mat,
    pub time: f64,
}

impl FlowState {
    pub fn from_model(state: &ModelState) -> Self {
        Self {
            w: state.w.clone(),
            f: state.gram(),
            time: state.time,
        }
    }

    pub fn diagonal(w: &[f64], f: &[f64]) -> Self {
        Self {
            w: Mat::from_diagonal(&nalgebra::DVector::from_column_slice(w)),
            f: Mat::from_diagonal(&nalgebra::DVector::from_column_slice(f)),
            time: 0.0,
        }
    }

    /// Rotates both matrices into the basis `U`: `(U Wd Uᵀ, U Fd Uᵀ)`.
    pub fn rotated(&self, u: &Mat) -> Self {
        Self {
            w: symmetrize(&(u * &self.w * u.transpose())),
            f: symmetrize(&(u * &self.f * u.transpose())),
            time: self.time,
        }
    }
}

impl OdeState for FlowState {
    fn axpy(&self, a: f64, dir: &Self) -> Self {
        Self {
            w: &self.w + &dir.w * a,
            f: &self.f + &dir.f * a,
            time: self.time,
        }
    }
}

fn guard_projector(w: &Mat) -> Result<LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let asym = asym_rel(w);
    if asym > MAX_ASYMMETRY {
        return Err(Error::AsymmetricProjector { asym });
    }
    let condition = condition_number(w);
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularProjector { condition });
    }
    Ok(w.clone().lu())
}

/// Right-hand side `(Ẇ, Ḟ)` of the flow. The head equation is
/// `Ẇ = sym(W⁻¹Ĥ) − ρW`; symmetrization only removes terms that vanish while `W`
/// and `F` commute, and it keeps the head on the symmetric manifold.
pub fn flow_rhs(state: &FlowState, sigma2: f64, rho: f64) -> Result<(Mat, Mat)> {
    let lu = guard_projector(&state.w)?;
    let hh = hhat_wf(&state.w, &state.f, sigma2)?;
    let singular = || Error::SingularProjector { condition: f64::INFINITY };
    let winv_h = lu.solve(&hh).ok_or_else(singular)?;
    let dw = symmetrize(&winv_h) - &state.w * rho;
    let m = lu.solve(&(hh.transpose() * &state.w)).ok_or_else(singular)?;
    let df = &m + m.transpose() - &state.f * (2.0 * rho);
    Ok((dw, df))
}

pub fn flow_step(state: &FlowState, sigma2: f64, rho: f64, dt: f64) -> Result<FlowState> {
    let mut next = rk4_step(state, state.time, dt, |_, s| {
        let (w, f) = flow_rhs(s, sigma2, rho)?;
        Ok::<_, Error>(FlowState { w, f, time: s.time })
    })?;
    next.time = state.time + dt;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Completed,
    Singular,
    Degenerate,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub step: usize,
    pub time: f64,
    pub diag: NormDiagnostics,
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub records: Vec<FlowRecord>,
    pub status: FlowStatus,
    pub final_state: FlowState,
    /// Time and cause of an early halt.
    pub failure: Option<(f64, Error)>,
}

/// Fixed-step RK4 from `init` up to `t_end`, recording diagnostics every
/// `record_every` steps (and at both ends).
pub fn integrate_flow(
    init: &FlowState,
    sigma2: f64,
    rho: f64,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<FlowTrajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    let every = record_every.max(1);
    let n = step_count(t_end - init.time, dt);
    let h = if n == 0 { dt } else { (t_end - init.time) / n as f64 };
    let mut state = init.clone();
    let mut records = vec![FlowRecord {
        step: 0,
        time: state.time,
        diag: flow_diagnostics(&state),
    }];
    for step in 1..=n {
        let next = match flow_step(&state, sigma2, rho, h) {
            Ok(s) => s,
            Err(e) => {
                let status = match e {
                    Error::DegenerateNorms { .. } => FlowStatus::Degenerate,
                    _ => FlowStatus::Singular,
                };
                return Ok(FlowTrajectory {
                    records,
                    status,
                    failure: Some((state.time, e)),
                    final_state: state,
                });
            }
        };
        state = next;
        let diverged = !(state.w.norm() <= DIVERGENCE_NORM) || !state.f.iter().all(|v| v.is_finite());
        if diverged || step % every == 0 || step == n {
            records.push(FlowRecord {
                step,
                time: state.time,
                diag: flow_diagnostics(&state),
            });
        }
        if diverged {
            return Ok(FlowTrajectory {
                records,
                status: FlowStatus::Diverged,
                final_state: state,
                failure: None,
            });
        }
    }
    Ok(FlowTrajectory {
        records,
        status: FlowStatus::Completed,
        final_state: state,
        failure: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorGap {
    pub min_eig_k: f64,
    pub comm_norm: f64,
}

/// The three pieces of the commutator operator `K`: the quartic-order Kronecker
/// terms, the quadratic-order terms and the decay `3ρI`, each already scaled.
#[derive(Debug, Clone)]
pub struct CommutatorParts {
    pub quartic: Mat,
    pub quadratic: Mat,
    pub decay: Mat,
}

impl CommutatorParts {
    pub fn total(&self) -> Mat {
        &self.quartic + &self.quadratic + &self.decay
    }
}

pub fn commutator_parts(state: &FlowState, sigma2: f64, rho: f64) -> Result<CommutatorParts> {
    let h = state.w.nrows();
    if h > MAX_COMMUTATOR_DIM {
        return Err(Error::DimensionTooLarge { h, max: MAX_COMMUTATOR_DIM });
    }
    let lu = guard_projector(&state.w)?;
    let (n_phi, n_psi, n_times) = checked_norms(&state.w, &state.f)?;
    let (w, f) = (&state.w, &state.f);
    let eye = Mat::identity(h, h);
    let w2 = w * w;
    let winv = lu
        .try_inverse()
        .ok_or(Error::SingularProjector { condition: f64::INFINITY })?;
    let s = 1.0 + sigma2;
    let quartic = kron_sum(w, &(w * f * w)) + kron(&eye, &w2) * kron_sum(&(f * w), &eye);
    let quadratic = kron_sum(&winv, f) - kron_sum(&(w - &w2 * n_times), &eye);
    Ok(CommutatorParts {
        quartic: quartic * (2.0 / (s * n_phi * n_psi.powi(3))),
        quadratic: quadratic / (s * n_phi * n_psi),
        decay: Mat::identity(h * h, h * h) * (3.0 * rho),
    })
}

/// The `h² × h²` operator `K` with `d vec(L)/dt = −K vec(L)` for `L = [F, W]`.
pub fn commutator_operator(state: &FlowState, sigma2: f64, rho: f64) -> Result<Mat> {
    Ok(commutator_parts(state, sigma2, rho)?.total())
}

pub fn commutator_gap(state: &FlowState, sigma2: f64, rho: f64) -> Result<CommutatorGap> {
    let k = commutator_operator(state, sigma2, rho)?;
    Ok(CommutatorGap {
        min_eig_k: min_sym_eigenvalue(&k),
        comm_norm: commutator(&state.f, &state.w).norm(),
    })
}

/// Largest angle between each eigenvector of `before` and its best-aligned
/// eigenvector of `after` (sign and ordering are ignored).
pub fn basis_drift(before: &Mat, after: &Mat) -> f64 {
    let (_, u0) = sorted_sym_eigen(before);
    let (_, u1) = sorted_sym_eigen(after);
    let overlap = u0.transpose() * &u1;
    (0..u0.ncols())
        .map(|j| {
            let k = (0..u1.ncols())
                .max_by(|&a, &b| overlap[(j, a)].abs().total_cmp(&overlap[(j, b)].abs()))
                .unwrap_or(j);
            unsigned_angle(&u0.column(j).into_owned(), &u1.column(k).into_owned())
        })
        .fold(0.0, f64::max)
}

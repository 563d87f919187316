//! Per-mode dynamics of simultaneously diagonalizable `(W, F)`: the coupled
//! `(w, f)` system, its reduction onto the parabola `f = w²`, and the L2 counterpart.

use serde::Serialize;

use crate::ode::{rk4_step, step_count};

pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Frozen coefficients of the per-mode equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenParams {
    pub n_phi: f64,
    pub n_psi: f64,
    pub n_times: f64,
    pub sigma2: f64,
    pub rho: f64,
}

impl EigenParams {
    pub fn new(rho: f64, n_phi: f64, n_psi: f64, n_times: f64, sigma2: f64) -> Self {
        Self {
            n_phi,
            n_psi,
            n_times,
            sigma2,
            rho,
        }
    }

    fn k(&self) -> f64 {
        1.0 / (1.0 + self.sigma2)
    }

    /// Coefficients `(c₆, c₃, c₂)` of `ẇ + ρw = −c₆w⁶ − c₃w³ + c₂w²` on the parabola.
    pub fn reduced_coefficients(&self) -> (f64, f64, f64) {
        let k = self.k();
        let (a, b) = (self.n_phi, self.n_psi);
        (
            2.0 * k / (a * b.powi(3)),
            k * self.n_times / (b * b),
            k / (a * b),
        )
    }
}

/// One eigenmode: head eigenvalue `w`, Gram eigenvalue `f`, and the offset
/// `c = f(0) − w(0)²` fixed at the start of integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenPair {
    pub w: f64,
    pub f: f64,
    pub c: f64,
}

impl EigenPair {
    pub fn new(w: f64, f: f64) -> Self {
        Self { w, f, c: f - w * w }
    }

    pub fn on_parabola(w: f64) -> Self {
        Self::new(w, w * w)
    }
}

pub fn d_term(pair: &EigenPair, p: &EigenParams) -> f64 {
    let (w, f) = (pair.w, pair.f);
    let (a, b) = (p.n_phi, p.n_psi);
    p.k() * (2.0 * f * f * w * w / (a * b.powi(3)) + p.n_times * f * w / (b * b) - f / (a * b))
}

/// `(ẇ, ḟ) = (−D − ρw, −2Dw − 2ρf)`.
pub fn eigen_rhs(pair: &EigenPair, p: &EigenParams) -> (f64, f64) {
    let d = d_term(pair, p);
    (-d - p.rho * pair.w, -2.0 * d * pair.w - 2.0 * p.rho * pair.f)
}

pub fn reduced_rhs_cos(w: f64, p: &EigenParams) -> f64 {
    let (c6, c3, c2) = p.reduced_coefficients();
    let w2 = w * w;
    -c6 * w2 * w2 * w2 - c3 * w2 * w + c2 * w2 - p.rho * w
}

pub fn reduced_rhs_cos_deriv(w: f64, p: &EigenParams) -> f64 {
    let (c6, c3, c2) = p.reduced_coefficients();
    let w2 = w * w;
    -6.0 * c6 * w2 * w2 * w - 3.0 * c3 * w2 + 2.0 * c2 * w - p.rho
}

/// `ẇ = w²(1 − (1+σ²)w) − ρw`.
pub fn reduced_rhs_l2(w: f64, sigma2: f64, rho: f64) -> f64 {
    w * w * (1.0 - (1.0 + sigma2) * w) - rho * w
}

pub fn reduced_rhs_l2_deriv(w: f64, sigma2: f64, rho: f64) -> f64 {
    2.0 * w - 3.0 * (1.0 + sigma2) * w * w - rho
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsKind {
    Coupled,
    ReducedCos,
    ReducedL2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenStatus {
    Completed,
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenSample {
    pub t: f64,
    pub w: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenTrajectory {
    pub samples: Vec<EigenSample>,
    pub status: EigenStatus,
    pub c: f64,
}

impl EigenTrajectory {
    pub fn last(&self) -> EigenSample {
        *self.samples.last().expect("trajectory always holds the initial sample")
    }
}

/// Fixed-step RK4 up to `t_end`. Reduced kinds evolve `w` alone and report `f = w²`.
/// Integration stops with `Diverged` once `|w|` exceeds `DIVERGENCE_LIMIT`.
pub fn integrate_eigen(
    initial: EigenPair,
    kind: RhsKind,
    params: &EigenParams,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> EigenTrajectory {
    assert!(dt > 0.0, "dt must be positive");
    let every = record_every.max(1);
    let n = step_count(t_end, dt);
    let h = if n == 0 { dt } else { t_end / n as f64 };
    let mut y = match kind {
        RhsKind::Coupled => [initial.w, initial.f],
        _ => [initial.w, initial.w * initial.w],
    };
    let c = match kind {
        RhsKind::Coupled => initial.c,
        _ => 0.0,
    };
    let p = *params;
    let rhs = |_: f64, y: &[f64; 2]| -> Result<[f64; 2], std::convert::Infallible> {
        Ok(match kind {
            RhsKind::Coupled => {
                let (dw, df) = eigen_rhs(&EigenPair { w: y[0], f: y[1], c }, &p);
                [dw, df]
            }
            RhsKind::ReducedCos => [reduced_rhs_cos(y[0], &p), 0.0],
            RhsKind::ReducedL2 => [reduced_rhs_l2(y[0], p.sigma2, p.rho), 0.0],
        })
    };
    let mut samples = vec![EigenSample { t: 0.0, w: y[0], f: y[1] }];
    for step in 1..=n {
        let t = (step - 1) as f64 * h;
        y = match rk4_step(&y, t, h, rhs) {
            Ok(v) => v,
            Err(never) => match never {},
        };
        if kind != RhsKind::Coupled {
            y[1] = y[0] * y[0];
        }
        let diverged = !(y[0].abs() <= DIVERGENCE_LIMIT);
        if diverged || step % every == 0 || step == n {
            samples.push(EigenSample {
                t: step as f64 * h,
                w: y[0],
                f: y[1],
            });
        }
        if diverged {
            return EigenTrajectory {
                samples,
                status: EigenStatus::Diverged,
                c,
            };
        }
    }
    EigenTrajectory {
        samples,
        status: EigenStatus::Completed,
        c,
    }
}

/// `f(t) − w(t)² − c·e^{−2ρt}` at every recorded sample.
pub fn parabola_offset(traj: &EigenTrajectory, rho: f64) -> Vec<f64> {
    traj.samples
        .iter()
        .map(|s| s.f - s.w * s.w - traj.c * (-2.0 * rho * s.t).exp())
        .collect()
}

/// All modes of a commuting state evolved together, with the norms recomputed from
/// the modes at every stage: `N_Φ² = Σf`, `N_Ψ² = Σw²f`, `N_× = Σwf / (N_Φ N_Ψ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeEnsemble {
    pub w: Vec<f64>,
    pub f: Vec<f64>,
}

impl ModeEnsemble {
    pub fn params(&self, sigma2: f64, rho: f64) -> EigenParams {
        let n_phi = self.f.iter().sum::<f64>().max(0.0).sqrt();
        let n_psi = self.w.iter().zip(&self.f).map(|(w, f)| w * w * f).sum::<f64>().max(0.0).sqrt();
        let cross: f64 = self.w.iter().zip(&self.f).map(|(w, f)| w * f).sum();
        let n_times = if n_phi > 0.0 && n_psi > 0.0 {
            cross / (n_phi * n_psi)
        } else {
            0.0
        };
        EigenParams::new(rho, n_phi, n_psi, n_times, sigma2)
    }

    fn pack(&self) -> Vec<f64> {
        self.w.iter().chain(&self.f).copied().collect()
    }

    fn unpack(y: &[f64]) -> Self {
        let h = y.len() / 2;
        Self {
            w: y[..h].to_vec(),
            f: y[h..].to_vec(),
        }
    }

    /// One RK4 step of the self-consistent mode system.
    pub fn rk4(&self, sigma2: f64, rho: f64, dt: f64) -> Self {
        let rhs = |_: f64, y: &Vec<f64>| -> Result<Vec<f64>, std::convert::Infallible> {
            let e = Self::unpack(y);
            let p = e.params(sigma2, rho);
            let (dw, df): (Vec<f64>, Vec<f64>) = e
                .w
                .iter()
                .zip(&e.f)
                .map(|(&w, &f)| eigen_rhs(&EigenPair { w, f, c: 0.0 }, &p))
                .unzip();
            Ok(dw.into_iter().chain(df).collect())
        };
        match rk4_step(&self.pack(), 0.0, dt, rhs) {
            Ok(y) => Self::unpack(&y),
            Err(never) => match never {},
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n_times: f64, sigma2: f64, rho: f64) -> EigenParams {
        EigenParams::new(rho, 1.0, 1.0, n_times, sigma2)
    }

    #[test]
    fn d_term_values() {
        assert_eq!(d_term(&EigenPair::new(3.0, 0.0), &unit(1.0, 0.0, 0.0)), 0.0);
        assert_eq!(d_term(&EigenPair::new(1.0, 1.0), &unit(1.0, 0.0, 0.0)), 2.0);
        assert_eq!(d_term(&EigenPair::new(1.0, 1.0), &unit(0.0, 0.0, 0.0)), 1.0);
    }

    #[test]
    fn eigen_rhs_values() {
        assert_eq!(eigen_rhs(&EigenPair::new(0.0, 0.0), &unit(1.0, 0.1, 0.3)), (0.0, 0.0));
        assert_eq!(eigen_rhs(&EigenPair::new(1.0, 1.0), &unit(1.0, 0.0, 0.0)), (-2.0, -4.0));
    }

    #[test]
    fn reduced_cos_hand_value() {
        let p = EigenParams::new(0.5, 1.0, 1.0, 1.0, 0.1);
        assert_eq!(reduced_rhs_cos(0.0, &p), 0.0);
        let expected = -2.0 / 1.1 - 0.5;
        assert!((reduced_rhs_cos(1.0, &p) - expected).abs() < 1e-14);
        assert!((reduced_rhs_cos(1.0, &p) + 2.3182).abs() < 1e-4);
    }

    #[test]
    fn reduced_l2_values() {
        assert_eq!(reduced_rhs_l2(0.0, 0.3, 0.2), 0.0);
        assert_eq!(reduced_rhs_l2(1.0, 0.0, 0.0), 0.0);
        assert_eq!(reduced_rhs_l2(0.5, 0.0, 0.0), 0.125);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let p = EigenParams::new(0.2, 0.7, 0.4, 0.6, 0.3);
        for &w in &[-1.3, -0.2, 0.4, 0.9] {
            let h = 1e-6;
            let fd = (reduced_rhs_cos(w + h, &p) - reduced_rhs_cos(w - h, &p)) / (2.0 * h);
            assert!((fd - reduced_rhs_cos_deriv(w, &p)).abs() < 1e-6);
            let fd = (reduced_rhs_l2(w + h, 0.3, 0.2) - reduced_rhs_l2(w - h, 0.3, 0.2)) / (2.0 * h);
            assert!((fd - reduced_rhs_l2_deriv(w, 0.3, 0.2)).abs() < 1e-6);
        }
    }

    #[test]
    fn l2_collapse_and_survival() {
        let p = EigenParams::new(0.3, 1.0, 1.0, 1.0, 0.0);
        let tr = integrate_eigen(EigenPair::on_parabola(0.5), RhsKind::ReducedL2, &p, 50.0, 1e-3, 1000);
        assert!(tr.last().w.abs() < 1e-4);

        let p = EigenParams { rho: 0.1, ..p };
        let tr = integrate_eigen(EigenPair::on_parabola(0.5), RhsKind::ReducedL2, &p, 200.0, 1e-3, 1000);
        let root = (1.0 + (1.0f64 - 0.4).sqrt()) / 2.0;
        assert!((tr.last().w - root).abs() < 1e-4);
    }

    #[test]
    fn on_parabola_start_stays_on_parabola() {
        let p = EigenParams::new(0.1, 0.5, 0.5, 1.0, 0.1);
        let tr = integrate_eigen(EigenPair::on_parabola(0.8), RhsKind::Coupled, &p, 20.0, 1e-3, 100);
        assert!(parabola_offset(&tr, p.rho).iter().all(|r| r.abs() < 1e-8));
    }

    #[test]
    fn offset_parabola_decays() {
        let p = EigenParams::new(0.1, 0.5, 0.5, 1.0, 0.1);
        let init = EigenPair::new(0.8, 0.8 * 0.8 + 0.5);
        let tr = integrate_eigen(init, RhsKind::Coupled, &p, 50.0, 1e-3, 100);
        let res = parabola_offset(&tr, p.rho);
        assert!(res.iter().all(|r| r.abs() < 1e-6));
        for s in &tr.samples {
            assert!((s.f - s.w * s.w).abs() <= 0.5 * (-2.0 * p.rho * s.t).exp() * (1.0 + 1e-6));
        }
    }

    #[test]
    fn divergence_is_a_status() {
        let p = EigenParams::new(0.5, 0.5, 0.5, 1.0, 0.1);
        let tr = integrate_eigen(EigenPair::on_parabola(-5.0), RhsKind::ReducedCos, &p, 50.0, 1e-3, 100);
        assert_eq!(tr.status, EigenStatus::Diverged);
        assert!(tr.last().w < -DIVERGENCE_LIMIT);
    }

    #[test]
    fn ensemble_norms() {
        let e = ModeEnsemble {
            w: vec![1.0, -2.0],
            f: vec![4.0, 5.0],
        };
        let p = e.params(0.0, 0.0);
        assert!((p.n_phi - 3.0).abs() < 1e-15);
        assert!((p.n_psi - 24.0f64.sqrt()).abs() < 1e-15);
        assert!((p.n_times - (4.0 - 10.0) / (3.0 * 24.0f64.sqrt())).abs() < 1e-15);
    }
}

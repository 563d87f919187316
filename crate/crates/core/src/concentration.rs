//! Empirical checks of norm concentration, of the closed-form drift against its
//! Monte Carlo definition, and of the initial eigenvalue spread.

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::EigenParams;
use crate::equilibria::find_equilibria_cos;
use crate::linalg::{gaussian_matrix, sorted_sym_eigen, Mat};
use crate::mean_flow::{compute_hhat, diagnostics};
use crate::model::{init_params, ModelState, SimConfig};
use crate::rng::stream;
use crate::{Error, Result};

/// Columns drawn per work unit; each unit has its own derived RNG stream.
const CHUNK: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub median: f64,
    pub p90: f64,
    pub mean: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            if v.is_empty() {
                return f64::NAN;
            }
            let pos = p * (v.len() - 1) as f64;
            let (i, frac) = (pos.floor() as usize, pos.fract());
            if i + 1 < v.len() {
                v[i] * (1.0 - frac) + v[i + 1] * frac
            } else {
                v[i]
            }
        };
        Self {
            median: q(0.5),
            p90: q(0.9),
            mean: v.iter().sum::<f64>() / v.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub h: usize,
    pub d: usize,
    pub n_samples: usize,
    /// `| ‖Φx‖²/(hσ²) − ‖Φ‖²/h − ‖Φx₀‖²/(hσ²) |`
    pub noise_split_phi: Summary,
    /// `| ‖Ψx‖²/(h²σ²) − ‖Ψ‖²/h² − ‖Ψx₀‖²/(h²σ²) |`
    pub noise_split_psi: Summary,
    /// `| ‖Φx₀‖ − ‖Φ‖ | / √(hσ²)`
    pub anchor_phi: Summary,
    /// `| ‖Ψx₀‖ − ‖Ψ‖ | / √(h²σ²)`
    pub anchor_psi: Summary,
    /// `| ‖Φx₀‖/‖Φ‖ − 1 |`
    pub anchor_phi_ratio: Summary,
    /// `| ‖Ψx₀‖/‖Ψ‖ − 1 |`
    pub anchor_psi_ratio: Summary,
}

fn chunks(n: usize) -> Vec<(u64, usize)> {
    (0..n.div_ceil(CHUNK))
        .map(|i| (i as u64, CHUNK.min(n - i * CHUNK)))
        .collect()
}

fn column_sq_norms(m: &Mat) -> Vec<f64> {
    m.column_iter().map(|c| c.norm_squared()).collect()
}

/// Deviations for `n_samples` fresh `(x₀, x)` draws against a fixed `state`.
pub fn norm_concentration_for(
    state: &ModelState,
    sigma2: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidConfig(format!("concentration needs sigma2 > 0, got {sigma2}")));
    }
    let (h, d) = (state.h() as f64, state.d());
    let psi = state.psi();
    let phi_f2 = state.phi.norm_squared();
    let psi_f2 = psi.norm_squared();
    let s = sigma2.sqrt();
    let per_chunk: Vec<[Vec<f64>; 6]> = chunks(n_samples)
        .into_par_iter()
        .map(|(idx, n)| {
            let mut rng = stream(seed, idx);
            let x0 = gaussian_matrix(d, n, 1.0, &mut rng);
            let x = &x0 + gaussian_matrix(d, n, s, &mut rng);
            let phi_x0 = column_sq_norms(&(&state.phi * &x0));
            let phi_x = column_sq_norms(&(&state.phi * &x));
            let psi_x0 = column_sq_norms(&(&psi * &x0));
            let psi_x = column_sq_norms(&(&psi * &x));
            let mut out: [Vec<f64>; 6] = Default::default();
            for j in 0..n {
                out[0].push((phi_x[j] / (h * sigma2) - phi_f2 / h - phi_x0[j] / (h * sigma2)).abs());
                out[1].push((psi_x[j] / (h * h * sigma2) - psi_f2 / (h * h) - psi_x0[j] / (h * h * sigma2)).abs());
                out[2].push((phi_x0[j].sqrt() - phi_f2.sqrt()).abs() / (h * sigma2).sqrt());
                out[3].push((psi_x0[j].sqrt() - psi_f2.sqrt()).abs() / (h * h * sigma2).sqrt());
                out[4].push((phi_x0[j].sqrt() / phi_f2.sqrt() - 1.0).abs());
                out[5].push((psi_x0[j].sqrt() / psi_f2.sqrt() - 1.0).abs());
            }
            out
        })
        .collect();
    let gather = |k: usize| -> Summary {
        let all: Vec<f64> = per_chunk.iter().flat_map(|c| c[k].iter().copied()).collect();
        Summary::of(&all)
    };
    Ok(ConcentrationReport {
        h: state.h(),
        d,
        n_samples,
        noise_split_phi: gather(0),
        noise_split_psi: gather(1),
        anchor_phi: gather(2),
        anchor_psi: gather(3),
        anchor_phi_ratio: gather(4),
        anchor_psi_ratio: gather(5),
    })
}

/// Fresh initialization from `config.seed`, then `norm_concentration_for`.
pub fn check_norm_concentration(config: &SimConfig, n_samples: usize) -> Result<ConcentrationReport> {
    config.validate()?;
    let state = init_params(config, &mut stream(config.seed, 0));
    norm_concentration_for(&state, config.sigma2, n_samples, crate::rng::derive_seed(config.seed, 1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftComparison {
    pub h: usize,
    pub d: usize,
    pub n_samples: usize,
    /// `‖H_mc − Ĥ‖ / ‖Ĥ‖` for the plain sample mean.
    pub plain_rel_err: f64,
    /// Same with the control variate `k (Φx′)(Ψx)ᵀ / (N_Φ N_Ψ)` subtracted and its exact
    /// mean `k ΦΨᵀ / (N_Φ N_Ψ)` added back.
    pub cv_rel_err: f64,
    /// Batch-means standard error of each estimate, relative to `‖Ĥ‖`.
    pub plain_se: f64,
    pub cv_se: f64,
}

/// Sums of `z′ωᵀ − (ωᵀz′)ωωᵀ` and of the control variate over one chunk.
fn drift_chunk(state: &ModelState, psi: &Mat, x: &Mat, xp: &Mat, cv_scale: f64) -> Result<(Mat, Mat)> {
    let mut omega = psi * x;
    let mut zp = &state.phi * xp;
    let cv = &zp * omega.transpose() * cv_scale;
    for (j, (mut o, mut z)) in omega.column_iter_mut().zip(zp.column_iter_mut()).enumerate() {
        let (no, nz) = (o.norm(), z.norm());
        if no < crate::loss::NORM_FLOOR || nz < crate::loss::NORM_FLOOR {
            return Err(Error::NormBlowup {
                which: if no < nz { "prediction" } else { "target" },
                value: no.min(nz),
                sample: j,
            });
        }
        o /= no;
        z /= nz;
    }
    let mut weighted = omega.clone();
    for (mut wc, (o, z)) in weighted.column_iter_mut().zip(omega.column_iter().zip(zp.column_iter())) {
        wc *= o.dot(&z);
    }
    let sum = &zp * omega.transpose() - weighted * omega.transpose();
    Ok((sum, cv))
}

pub fn drift_comparison_for(state: &ModelState, sigma2: f64, n_samples: usize, seed: u64) -> Result<DriftComparison> {
    let reference = compute_hhat(state, sigma2)?.h_hat;
    let diag = diagnostics(state);
    let k = 1.0 / (1.0 + sigma2);
    let cv_scale = k / (diag.n_phi * diag.n_psi);
    let psi = state.psi();
    let cv_mean = &state.phi * psi.transpose() * cv_scale;
    let d = state.d();
    let s = sigma2.sqrt();
    let parts: Vec<(usize, Mat, Mat)> = chunks(n_samples)
        .into_par_iter()
        .map(|(idx, n)| {
            let mut rng = stream(seed, idx);
            let x0 = gaussian_matrix(d, n, 1.0, &mut rng);
            let (x, xp) = if sigma2 == 0.0 {
                (x0.clone(), x0)
            } else {
                let x = &x0 + gaussian_matrix(d, n, s, &mut rng);
                let xp = &x0 + gaussian_matrix(d, n, s, &mut rng);
                (x, xp)
            };
            drift_chunk(state, &psi, &x, &xp, cv_scale).map(|(a, b)| (n, a, b))
        })
        .collect::<Result<_>>()?;

    let total = n_samples as f64;
    let hh = state.h();
    let mut plain = Mat::zeros(hh, hh);
    let mut cv = Mat::zeros(hh, hh);
    for (_, a, b) in &parts {
        plain += a;
        cv += b;
    }
    let plain_mean = &plain / total;
    let cv_est = (&plain - &cv) / total + &cv_mean;
    let norm = reference.norm();

    // Batch means over (up to) 20 groups of chunks.
    let groups = parts.len().clamp(1, 20);
    let mut g_plain = vec![(0usize, Mat::zeros(hh, hh)); groups];
    let mut g_cv = vec![Mat::zeros(hh, hh); groups];
    for (i, (n, a, b)) in parts.iter().enumerate() {
        let g = i % groups;
        g_plain[g].0 += n;
        g_plain[g].1 += a;
        g_cv[g] += &(a - b);
    }
    let se = |means: Vec<Mat>, overall: &Mat| -> f64 {
        if means.len() < 2 {
            return f64::NAN;
        }
        let b = means.len() as f64;
        let ss: f64 = means.iter().map(|m| (m - overall).norm_squared()).sum();
        (ss / (b * (b - 1.0))).sqrt() / norm
    };
    let plain_groups: Vec<Mat> = g_plain.iter().map(|(n, m)| m / *n as f64).collect();
    let cv_groups: Vec<Mat> = g_plain
        .iter()
        .zip(&g_cv)
        .map(|((n, _), m)| m / *n as f64 + &cv_mean)
        .collect();
    Ok(DriftComparison {
        h: hh,
        d,
        n_samples,
        plain_rel_err: (&plain_mean - &reference).norm() / norm,
        cv_rel_err: (&cv_est - &reference).norm() / norm,
        plain_se: se(plain_groups, &plain_mean),
        cv_se: se(cv_groups, &cv_est),
    })
}

pub fn check_h_vs_hhat(config: &SimConfig, n_samples: usize) -> Result<DriftComparison> {
    config.validate()?;
    let state = init_params(config, &mut stream(config.seed, 0));
    drift_comparison_for(&state, config.sigma2, n_samples, crate::rng::derive_seed(config.seed, 2))
}

/// True when `errors` decrease except for at most one increase that lies within
/// 1.96 combined standard errors.
pub fn decreasing_within_noise(errors: &[f64], ses: &[f64]) -> bool {
    let mut inversions = 0;
    for i in 1..errors.len() {
        if errors[i] >= errors[i - 1] {
            let band = 1.96 * (ses[i].powi(2) + ses[i - 1].powi(2)).sqrt();
            if errors[i] - errors[i - 1] > band {
                return false;
            }
            inversions += 1;
        }
    }
    inversions <= 1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            if v >= lo && v <= hi {
                let i = (((v - lo) / width) as usize).min(bins - 1);
                counts[i] += 1;
            }
        }
        Self { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenInitStudy {
    pub d: usize,
    pub h: usize,
    pub rho: f64,
    pub sigma2: f64,
    pub n_trials: usize,
    /// Norms averaged over trials.
    pub n_phi: f64,
    pub n_psi: f64,
    pub n_times: f64,
    /// `w▲(−)` at the averaged norms.
    pub w_unstable_neg: f64,
    pub fraction_below: f64,
    /// Number of trials with at least one eigenvalue below `w▲(−)`.
    pub trials_below: usize,
    pub min_eigenvalue: f64,
    pub mean_eigenvalue: f64,
    pub histogram: Histogram,
    #[serde(skip)]
    pub eigenvalues: Vec<f64>,
}

/// Pools the spectra of symmetrized `W(0)` over `n_trials` initializations and
/// compares them with `w▲(−)` evaluated at the measured initial norms.
pub fn eigen_init_study(
    d: usize,
    h: usize,
    rho: f64,
    sigma2: f64,
    n_trials: usize,
    seed: u64,
    bins: usize,
) -> Result<EigenInitStudy> {
    let config = SimConfig {
        d,
        h,
        rho,
        sigma2,
        seed,
        symmetrize_w: true,
        ..SimConfig::default()
    };
    config.validate()?;
    if n_trials == 0 {
        return Err(Error::InvalidConfig("n_trials must be positive".into()));
    }
    let trials: Vec<(Vec<f64>, f64, f64, f64)> = (0..n_trials as u64)
        .into_par_iter()
        .map(|t| {
            let st = init_params(&config, &mut stream(seed, t));
            let diag = diagnostics(&st);
            let (eigs, _) = sorted_sym_eigen(&st.w);
            (eigs, diag.n_phi, diag.n_psi, diag.n_times)
        })
        .collect();
    let n = n_trials as f64;
    let n_phi = trials.iter().map(|t| t.1).sum::<f64>() / n;
    let n_psi = trials.iter().map(|t| t.2).sum::<f64>() / n;
    let n_times = trials.iter().map(|t| t.3).sum::<f64>() / n;
    let report = find_equilibria_cos(&EigenParams::new(rho, n_phi, n_psi, n_times, sigma2), None)?;
    let threshold = report
        .w_unstable_neg()
        .ok_or_else(|| Error::UnclassifiableRootPattern(report.raw_roots.iter().map(|r| r.value).collect()))?;
    let eigenvalues: Vec<f64> = trials.iter().flat_map(|t| t.0.iter().copied()).collect();
    let below = eigenvalues.iter().filter(|&&e| e < threshold).count();
    let trials_below = trials.iter().filter(|t| t.0.iter().any(|&e| e < threshold)).count();
    let extent = eigenvalues.iter().fold(threshold.abs(), |m, e| m.max(e.abs())) * 1.05;
    Ok(EigenInitStudy {
        d,
        h,
        rho,
        sigma2,
        n_trials,
        n_phi,
        n_psi,
        n_times,
        w_unstable_neg: threshold,
        fraction_below: below as f64 / eigenvalues.len() as f64,
        trials_below,
        min_eigenvalue: eigenvalues.iter().copied().fold(f64::INFINITY, f64::min),
        mean_eigenvalue: eigenvalues.iter().sum::<f64>() / eigenvalues.len() as f64,
        histogram: Histogram::new(&eigenvalues, -extent, extent, bins.max(1)),
        eigenvalues,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_quantiles() {
        let s = Summary::of(&[3.0, 1.0, 2.0, 4.0, 5.0]);
        assert_eq!(s.median, 3.0);
        assert!((s.p90 - 4.6).abs() < 1e-12);
        assert_eq!(s.mean, 3.0);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [64.0, 128.0, 256.0, 512.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((loglog_slope(&xs, &ys) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn identity_encoder_noise_split_is_small() {
        let h = 64;
        let st = ModelState::new(Mat::identity(h, h), Mat::identity(h, h)).unwrap();
        // x₀ = 0 is emulated by reading the noise part: ‖x − x₀‖²/h has mean 1 = ‖I/√h‖².
        let r = norm_concentration_for(&st, 1.0, 4000, 3).unwrap();
        assert!(r.noise_split_phi.median < 0.5);
    }

    #[test]
    fn scalar_drift_is_zero() {
        let st = ModelState::new(Mat::from_element(1, 1, 0.7), Mat::from_element(1, 1, -1.3)).unwrap();
        let mut rng = stream(4, 0);
        let x0 = gaussian_matrix(1, 500, 1.0, &mut rng);
        let psi = st.psi();
        let (sum, _) = drift_chunk(&st, &psi, &x0, &x0, 0.0).unwrap();
        assert_eq!(sum[(0, 0)], 0.0);
    }

    #[test]
    fn histogram_counts_everything_in_range() {
        let h = Histogram::new(&[-1.0, -0.5, 0.0, 0.5, 1.0], -1.0, 1.0, 4);
        assert_eq!(h.counts.iter().sum::<usize>(), 5);
        assert_eq!(h.edges.len(), 5);
    }

    #[test]
    fn decreasing_rule() {
        assert!(decreasing_within_noise(&[0.4, 0.3, 0.2, 0.1], &[0.01; 4]));
        assert!(decreasing_within_noise(&[0.4, 0.3, 0.305, 0.1], &[0.01; 4]));
        assert!(!decreasing_within_noise(&[0.4, 0.3, 0.5, 0.1], &[0.01; 4]));
        assert!(!decreasing_within_noise(&[0.4, 0.41, 0.42, 0.1], &[0.01; 4]));
    }
}

use cosflow::concentration::{
    check_h_vs_hhat, check_norm_concentration, decreasing_within_noise, loglog_slope, ConcentrationReport,
    DriftComparison,
};
use cosflow::SimConfig;
use serde::Serialize;

use super::parse_list;
use crate::cli::ConcentrationArgs;
use crate::config::RunConfig;
use crate::manifest::RunManifest;
use crate::output::{float, Emitter};
use crate::{CliError, Result};

fn sized(base: &SimConfig, h: usize, alpha: usize) -> SimConfig {
    SimConfig {
        h,
        d: alpha * h,
        ..base.clone()
    }
}

/// Norm deviations at each `h` with `d = alpha · h`.
pub fn norm_sweep(base: &SimConfig, hs: &[usize], alpha: usize, samples: usize) -> Result<Vec<ConcentrationReport>> {
    if alpha == 0 || samples == 0 {
        return Err(CliError::Config("alpha and samples must be positive".into()));
    }
    hs.iter()
        .map(|&h| Ok(check_norm_concentration(&sized(base, h, alpha), samples)?))
        .collect()
}

/// Monte Carlo drift against its closed form at each `h` with `d = alpha · h`.
pub fn drift_sweep(base: &SimConfig, hs: &[usize], alpha: usize, samples: usize) -> Result<Vec<DriftComparison>> {
    if alpha == 0 || samples == 0 {
        return Err(CliError::Config("alpha and samples must be positive".into()));
    }
    hs.iter()
        .map(|&h| Ok(check_h_vs_hhat(&sized(base, h, alpha), samples)?))
        .collect()
}

/// Log-log slope of the median noise-split deviations of `Φ` and `Ψ` against `h`.
pub fn noise_split_slopes(reports: &[ConcentrationReport]) -> (f64, f64) {
    let hs: Vec<f64> = reports.iter().map(|r| r.h as f64).collect();
    let phi: Vec<f64> = reports.iter().map(|r| r.noise_split_phi.median).collect();
    let psi: Vec<f64> = reports.iter().map(|r| r.noise_split_psi.median).collect();
    (loglog_slope(&hs, &phi), loglog_slope(&hs, &psi))
}

#[derive(Debug, Serialize)]
struct Summary {
    alpha: usize,
    noise_split_phi_slope: f64,
    noise_split_psi_slope: f64,
    drift_cv_decreasing: Option<bool>,
    drift_plain_decreasing: Option<bool>,
}

pub fn run(config: &RunConfig, args: &ConcentrationArgs) -> Result<RunManifest> {
    let hs = parse_list::<usize>(&args.hs)?;
    let reports = norm_sweep(&config.sim, &hs, args.alpha, args.samples)?;
    let drift = if args.drift_samples > 0 {
        drift_sweep(&config.sim, &parse_list::<usize>(&args.drift_hs)?, args.alpha, args.drift_samples)?
    } else {
        Vec::new()
    };
    let mut em = Emitter::create(&config.out)?;
    em.csv(
        "concentration.csv",
        &[
            "h",
            "d",
            "n_samples",
            "noise_split_phi_median",
            "noise_split_phi_p90",
            "noise_split_psi_median",
            "noise_split_psi_p90",
            "anchor_phi_median",
            "anchor_psi_median",
            "anchor_phi_ratio_median",
            "anchor_psi_ratio_median",
        ],
        reports.iter().map(|r| {
            vec![
                r.h.to_string(),
                r.d.to_string(),
                r.n_samples.to_string(),
                float(r.noise_split_phi.median),
                float(r.noise_split_phi.p90),
                float(r.noise_split_psi.median),
                float(r.noise_split_psi.p90),
                float(r.anchor_phi.median),
                float(r.anchor_psi.median),
                float(r.anchor_phi_ratio.median),
                float(r.anchor_psi_ratio.median),
            ]
        }),
    )?;
    if !drift.is_empty() {
        em.csv(
            "drift.csv",
            &["h", "d", "n_samples", "plain_rel_err", "plain_se", "cv_rel_err", "cv_se"],
            drift.iter().map(|c| {
                vec![
                    c.h.to_string(),
                    c.d.to_string(),
                    c.n_samples.to_string(),
                    float(c.plain_rel_err),
                    float(c.plain_se),
                    float(c.cv_rel_err),
                    float(c.cv_se),
                ]
            }),
        )?;
    }
    let (phi_slope, psi_slope) = noise_split_slopes(&reports);
    let decreasing = |err: fn(&DriftComparison) -> (f64, f64)| {
        (!drift.is_empty()).then(|| {
            let (e, s): (Vec<f64>, Vec<f64>) = drift.iter().map(err).unzip();
            decreasing_within_noise(&e, &s)
        })
    };
    em.json(
        "concentration.json",
        &Summary {
            alpha: args.alpha,
            noise_split_phi_slope: phi_slope,
            noise_split_psi_slope: psi_slope,
            drift_cv_decreasing: decreasing(|c| (c.cv_rel_err, c.cv_se)),
            drift_plain_decreasing: decreasing(|c| (c.plain_rel_err, c.plain_se)),
        },
    )?;
    em.finish("concentration", config)
}

use cosflow::eigen::{integrate_eigen, EigenPair, EigenParams, RhsKind};
use cosflow::mean_flow::{diagnostics, NormDiagnostics};
use cosflow::model::init_params;
use cosflow::rng::stream;
use cosflow::{LossKind, SimConfig};
use rayon::prelude::*;
use serde::Serialize;

use super::parse_list;
use super::sim::{simulate, EpochRecord};
use crate::cli::{CompareArgs, NormSource};
use crate::config::RunConfig;
use crate::manifest::RunManifest;
use crate::output::{float, Emitter};
use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossComparison {
    pub rho: f64,
    pub sigma2: f64,
    pub l2_final_w: f64,
    /// Frozen norms: the reduced cosine equation from `w0`. Refreshed norms: leading `|w₁|`
    /// of the matrix run.
    pub cos_final_w: f64,
    /// Reduced cosine equation from `w0` at the norms used for this row.
    pub cos_reduced_w: f64,
    pub n_phi: f64,
    pub n_psi: f64,
    pub n_times: f64,
}

/// Weight decay above which the reduced L2 dynamics has no nonzero equilibrium.
pub fn l2_threshold(sigma2: f64) -> f64 {
    1.0 / (4.0 * (1.0 + sigma2))
}

fn final_w(kind: RhsKind, w0: f64, p: &EigenParams, horizon: f64, dt: f64) -> f64 {
    integrate_eigen(EigenPair::on_parabola(w0), kind, p, horizon, dt, usize::MAX).last().w
}

#[derive(Debug, Clone, Copy)]
pub struct CompareSettings {
    pub w0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub norms: NormSource,
}

pub fn compare_losses(base: &SimConfig, rhos: &[f64], s: CompareSettings) -> Result<Vec<LossComparison>> {
    if !(s.horizon > 0.0 && s.dt > 0.0 && s.w0.is_finite()) {
        return Err(CliError::Config("need horizon > 0, dt > 0 and finite w0".into()));
    }
    if rhos.iter().any(|r| !(*r >= 0.0)) {
        return Err(CliError::Config("rho values must be >= 0".into()));
    }
    base.validate()?;
    let frozen = diagnostics(&init_params(base, &mut stream(base.seed, 0)));
    rhos.par_iter()
        .map(|&rho| {
            let (diag, cos_matrix): (NormDiagnostics, Option<f64>) = match s.norms {
                NormSource::Frozen => (frozen, None),
                NormSource::Refreshed => {
                    let config = SimConfig {
                        rho,
                        loss_kind: LossKind::Cosine,
                        ..base.clone()
                    };
                    let run = simulate(&config, config.steps.max(1))?;
                    let last: &EpochRecord = run.records.last().expect("final epoch is recorded");
                    (last.diag, Some(last.leading()))
                }
            };
            let p = EigenParams::new(rho, diag.n_phi, diag.n_psi, diag.n_times, base.sigma2);
            let cos_reduced_w = final_w(RhsKind::ReducedCos, s.w0, &p, s.horizon, s.dt);
            Ok(LossComparison {
                rho,
                sigma2: base.sigma2,
                l2_final_w: final_w(RhsKind::ReducedL2, s.w0, &p, s.horizon, s.dt),
                cos_final_w: cos_matrix.unwrap_or(cos_reduced_w),
                cos_reduced_w,
                n_phi: diag.n_phi,
                n_psi: diag.n_psi,
                n_times: diag.n_times,
            })
        })
        .collect()
}

pub fn run(config: &RunConfig, args: &CompareArgs) -> Result<RunManifest> {
    let rhos = parse_list::<f64>(&args.rhos)?;
    let settings = CompareSettings {
        w0: args.w0,
        horizon: args.horizon,
        dt: args.dt,
        norms: args.norms,
    };
    let rows = compare_losses(&config.sim, &rhos, settings)?;
    let norms = match args.norms {
        NormSource::Frozen => "frozen",
        NormSource::Refreshed => "refreshed",
    };
    let mut em = Emitter::create(&config.out)?;
    em.csv(
        "compare_losses.csv",
        &[
            "rho",
            "sigma2",
            "norms",
            "l2_final_w",
            "cos_final_w",
            "cos_reduced_w",
            "n_phi",
            "n_psi",
            "n_times",
        ],
        rows.iter().map(|r| {
            vec![
                float(r.rho),
                float(r.sigma2),
                norms.to_string(),
                float(r.l2_final_w),
                float(r.cos_final_w),
                float(r.cos_reduced_w),
                float(r.n_phi),
                float(r.n_psi),
                float(r.n_times),
            ]
        }),
    )?;
    em.json(
        "compare_losses.json",
        &serde_json::json!({
            "l2_threshold": l2_threshold(config.sim.sigma2),
            "w0": args.w0,
            "horizon": args.horizon,
            "dt": args.dt,
            "norms": norms,
        }),
    )?;
    em.finish("compare-losses", config)
}

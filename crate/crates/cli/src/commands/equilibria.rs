use cosflow::eigen::{reduced_rhs_cos, EigenParams};
use cosflow::equilibria::{find_equilibria_cos, find_equilibria_l2, regime_scan, EquilibriumReport, Regime};
use serde::Serialize;

use super::{linspace, parse_list};
use crate::cli::{LossArg, PortraitArgs, RootsArgs, ScanArgs};
use crate::config::RunConfig;
use crate::manifest::RunManifest;
use crate::output::{float, opt_float, Emitter};
use crate::{CliError, Result};

/// `(ρ, N_Φ, N_Ψ)` cells of the reference phase portraits, in Collapse, Acute, Stable pairs.
pub const REFERENCE_CELLS: [(f64, f64, f64); 6] = [
    (0.5, 1.0, 1.0),
    (0.5, 1.0, 0.5),
    (0.5, 0.5, 0.5),
    (0.1, 1.0, 1.0),
    (0.5, 0.25, 0.5),
    (0.1, 0.25, 0.5),
];

#[derive(Debug, Clone, Serialize)]
pub struct PortraitCell {
    pub rho: f64,
    pub n_phi: f64,
    pub n_psi: f64,
    pub n_times: f64,
    pub sigma2: f64,
    pub report: EquilibriumReport,
    #[serde(skip)]
    pub field: Vec<(f64, f64)>,
}

fn parse_cells(text: &str) -> Result<Vec<(f64, f64, f64)>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|cell| match parse_list::<f64>(cell)?.as_slice() {
            &[r, a, b] => Ok((r, a, b)),
            _ => Err(CliError::Config(format!("cell `{cell}` needs rho,n_phi,n_psi"))),
        })
        .collect()
}

fn check_params(rho: f64, n_phi: f64, n_psi: f64, n_times: f64, sigma2: f64) -> Result<()> {
    let ok = rho >= 0.0 && n_phi > 0.0 && n_psi > 0.0 && n_times.abs() <= 1.0 && sigma2 >= 0.0;
    if ok && [rho, n_phi, n_psi, n_times, sigma2].iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "need rho >= 0, norms > 0, |n_times| <= 1, sigma2 >= 0; got rho={rho} n_phi={n_phi} n_psi={n_psi} n_times={n_times} sigma2={sigma2}"
        )))
    }
}

pub fn phase_portrait(
    cells: &[(f64, f64, f64)],
    n_times: f64,
    sigma2: f64,
    points: usize,
    w_max: f64,
) -> Result<Vec<PortraitCell>> {
    let grid = linspace(-w_max, w_max, points);
    cells
        .iter()
        .map(|&(rho, n_phi, n_psi)| {
            check_params(rho, n_phi, n_psi, n_times, sigma2)?;
            let p = EigenParams::new(rho, n_phi, n_psi, n_times, sigma2);
            let report = find_equilibria_cos(&p, None)?;
            let field = grid.iter().map(|&w| (w, reduced_rhs_cos(w, &p))).collect();
            Ok(PortraitCell {
                rho,
                n_phi,
                n_psi,
                n_times,
                sigma2,
                report,
                field,
            })
        })
        .collect()
}

pub fn run_phase_portrait(config: &RunConfig, args: &PortraitArgs) -> Result<RunManifest> {
    let cells = match &args.cells {
        Some(text) => parse_cells(text)?,
        None => REFERENCE_CELLS.to_vec(),
    };
    if args.points < 2 || !(args.w_max > 0.0) {
        return Err(CliError::Config("need points >= 2 and w_max > 0".into()));
    }
    let portrait = phase_portrait(&cells, args.n_times, args.sigma2, args.points, args.w_max)?;
    let mut em = Emitter::create(&config.out)?;
    let rows = portrait.iter().flat_map(|c| {
        c.field
            .iter()
            .map(move |&(w, dw)| vec![float(c.rho), float(c.n_phi), float(c.n_psi), float(w), float(dw)])
    });
    em.csv("phase_portrait.csv", &["rho", "n_phi", "n_psi", "w", "dw"], rows)?;
    em.json("phase_portrait_roots.json", &portrait)?;
    em.finish("phase-portrait", config)
}

#[derive(Debug, Clone, Serialize)]
struct RootsRecord<'a> {
    loss: &'static str,
    rho: f64,
    n_phi: Option<f64>,
    n_psi: Option<f64>,
    n_times: Option<f64>,
    sigma2: f64,
    w_unstable_neg: Option<f64>,
    w_unstable_pos: Option<f64>,
    w_stable_pos: Option<f64>,
    w_saddle: Option<f64>,
    report: &'a EquilibriumReport,
}

pub fn run_roots(config: &RunConfig, a: &RootsArgs) -> Result<RunManifest> {
    check_params(a.rho, a.n_phi, a.n_psi, a.n_times, a.sigma2)?;
    let (report, loss) = match a.loss {
        LossArg::Cosine => (
            find_equilibria_cos(&EigenParams::new(a.rho, a.n_phi, a.n_psi, a.n_times, a.sigma2), None)?,
            "cosine",
        ),
        LossArg::L2 => (find_equilibria_l2(a.sigma2, a.rho), "l2"),
    };
    let cos = a.loss == LossArg::Cosine;
    let record = RootsRecord {
        loss,
        rho: a.rho,
        n_phi: cos.then_some(a.n_phi),
        n_psi: cos.then_some(a.n_psi),
        n_times: cos.then_some(a.n_times),
        sigma2: a.sigma2,
        w_unstable_neg: report.w_unstable_neg(),
        w_unstable_pos: report.w_unstable_pos(),
        w_stable_pos: report.w_stable_pos(),
        w_saddle: report.w_saddle(),
        report: &report,
    };
    let mut em = Emitter::create(&config.out)?;
    let rows = report.raw_roots.iter().map(|r| {
        vec![
            float(r.value),
            format!("{:?}", r.stability).to_lowercase(),
            r.multiplicity.to_string(),
            float(r.slope),
        ]
    });
    em.csv("roots.csv", &["w", "stability", "multiplicity", "slope"], rows)?;
    em.json("roots.json", &record)?;
    println!("regime {}: {:?}", report.regime, report.roots.iter().map(|r| r.value).collect::<Vec<_>>());
    em.finish("roots", config)
}

/// Geometric grid of `N_Φ` values, `N_Ψ = ratio · N_Φ`, crossed with a linear `ρ` grid.
pub fn scan_grid(a: &ScanArgs) -> Result<Vec<(f64, f64, f64)>> {
    if !(a.norm_min > 0.0 && a.norm_max >= a.norm_min && a.psi_ratio > 0.0 && a.rho_min >= 0.0 && a.rho_max >= a.rho_min)
        || a.rho_steps == 0
        || a.norm_steps == 0
    {
        return Err(CliError::Config("invalid scan ranges".into()));
    }
    let rhos = linspace(a.rho_min, a.rho_max, a.rho_steps);
    let norms: Vec<f64> = linspace(a.norm_min.ln(), a.norm_max.ln(), a.norm_steps)
        .into_iter()
        .map(f64::exp)
        .collect();
    Ok(rhos
        .iter()
        .flat_map(|&r| norms.iter().map(move |&n| (r, n, n * a.psi_ratio)))
        .collect())
}

pub fn run_regime_scan(config: &RunConfig, a: &ScanArgs) -> Result<RunManifest> {
    check_params(a.rho_min, a.norm_min, a.norm_min * a.psi_ratio, a.n_times, a.sigma2)?;
    let grid = scan_grid(a)?;
    let cells = regime_scan(&grid, a.n_times, a.sigma2);
    let mut em = Emitter::create(&config.out)?;
    let rows = cells.iter().map(|c| {
        vec![
            float(c.rho),
            float(c.n_phi),
            float(c.n_psi),
            c.regime.map(Regime::as_str).unwrap_or("").to_string(),
            c.n_roots.to_string(),
            opt_float(c.saddle_gap),
        ]
    });
    em.csv(
        "regime_scan.csv",
        &["rho", "n_phi", "n_psi", "regime", "n_roots", "saddle_gap"],
        rows,
    )?;
    em.finish("regime-scan", config)
}

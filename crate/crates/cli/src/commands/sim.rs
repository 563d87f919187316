use cosflow::eigen::EigenParams;
use cosflow::equilibria::{find_equilibria_cos, Fate, Regime};
use cosflow::linalg::{sorted_sym_eigen, symmetrize};
use cosflow::mean_flow::{diagnostics, NormDiagnostics, DEGENERATE_NORM};
use cosflow::model::init_params;
use cosflow::optim::train;
use cosflow::rng::stream;
use cosflow::{ModelState, SimConfig};
use serde::Serialize;

use crate::config::RunConfig;
use crate::manifest::RunManifest;
use crate::output::{float, opt_float, Emitter};
use crate::{CliError, Result};

/// Regime bands on the `w` axis implied by the measured norms of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bands {
    pub regime: Option<Regime>,
    /// Upper edge of the divergent basin `(−∞, w▲(−))`.
    pub w_div_hi: Option<f64>,
    pub w_collapse_lo: Option<f64>,
    pub w_collapse_hi: Option<f64>,
    /// `w▼(+)`, the attractor of the stable-convergence interval.
    pub w_stable_root: Option<f64>,
    pub w_stable_lo: Option<f64>,
    pub w_stable_hi: Option<f64>,
}

impl Bands {
    pub fn at(diag: &NormDiagnostics, sigma2: f64, rho: f64) -> Self {
        let p = EigenParams::new(rho, diag.n_phi, diag.n_psi, diag.n_times, sigma2);
        let Ok(report) = find_equilibria_cos(&p, None) else {
            return Self::unknown();
        };
        let div_hi = report
            .basins
            .iter()
            .filter(|b| b.fate == Fate::Diverge && b.hi.is_finite())
            .map(|b| b.hi)
            .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
        let collapse = report.collapse_interval();
        let stable = report.stable_interval();
        Self {
            regime: Some(report.regime),
            w_div_hi: div_hi,
            w_collapse_lo: collapse.map(|c| c.0),
            w_collapse_hi: collapse.map(|c| c.1),
            w_stable_root: report.w_stable_pos(),
            w_stable_lo: stable.map(|s| s.0),
            w_stable_hi: stable.map(|s| s.1),
        }
    }

    fn unknown() -> Self {
        Self {
            regime: None,
            w_div_hi: None,
            w_collapse_lo: None,
            w_collapse_hi: None,
            w_stable_root: None,
            w_stable_lo: None,
            w_stable_hi: None,
        }
    }

    /// True when `w` lies in the basin that converges to `w▼(+)`.
    pub fn in_stable_interval(&self, w: f64) -> bool {
        match (self.w_stable_lo, self.w_stable_hi) {
            (Some(lo), Some(hi)) => w > lo && w <= hi,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub diag: NormDiagnostics,
    /// `|w_j|` of the symmetric part of `W`, largest first.
    pub abs_eigs: Vec<f64>,
    pub bands: Bands,
}

impl EpochRecord {
    pub fn measure(epoch: usize, state: &ModelState, config: &SimConfig) -> Self {
        let diag = diagnostics(state);
        let (eigs, _) = sorted_sym_eigen(&symmetrize(&state.w));
        let mut abs_eigs: Vec<f64> = eigs.iter().map(|e| e.abs()).collect();
        abs_eigs.sort_by(|a, b| b.total_cmp(a));
        Self {
            epoch,
            diag,
            abs_eigs,
            bands: Bands::at(&diag, config.sigma2, config.rho),
        }
    }

    pub fn leading(&self) -> f64 {
        self.abs_eigs.first().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub records: Vec<EpochRecord>,
    pub final_state: ModelState,
}

impl SimRun {
    /// Epochs at which the recorded regime moves from Collapse to anything else.
    pub fn collapse_exits(&self) -> Vec<(usize, Option<Regime>)> {
        self.records
            .windows(2)
            .filter(|w| w[0].bands.regime == Some(Regime::Collapse) && w[1].bands.regime != Some(Regime::Collapse))
            .map(|w| (w[1].epoch, w[1].bands.regime))
            .collect()
    }
}

/// SGD from a seeded initialization, recording every `record_every` epochs and the last one.
pub fn simulate(config: &SimConfig, record_every: usize) -> Result<SimRun> {
    config.validate()?;
    let every = record_every.max(1);
    let mut state = init_params(config, &mut stream(config.seed, 0));
    let mut rng = stream(config.seed, 1);
    let mut records = Vec::new();
    let mut epoch = 0;
    let last = config.steps;
    train(&mut state, config, &mut rng, |step, st| {
        epoch = step;
        if step % every == 0 || step == last {
            let (n_phi, n_psi) = (st.phi.norm(), st.psi().norm());
            if !(n_phi.is_finite() && n_psi.is_finite() && n_phi > DEGENERATE_NORM && n_psi > DEGENERATE_NORM) {
                return Err(cosflow::Error::DegenerateNorms { n_phi, n_psi });
            }
            records.push(EpochRecord::measure(step, st, config));
        }
        // A failure inside the next update belongs to the next epoch.
        epoch = step + 1;
        Ok(())
    })
    .map_err(|source| CliError::NumericalAt { epoch, source })?;
    Ok(SimRun {
        records,
        final_state: state,
    })
}

pub fn run(config: &RunConfig) -> Result<RunManifest> {
    let sim = simulate(&config.sim, config.record_every)?;
    let mut em = Emitter::create(&config.out)?;
    emit(&mut em, &sim)?;
    em.finish("sim-linear", config)
}

pub fn emit(em: &mut Emitter, sim: &SimRun) -> Result<()> {
    let recs = &sim.records;
    em.csv(
        "norms.csv",
        &["epoch", "n_phi", "n_psi", "n_times"],
        recs.iter().map(|r| {
            vec![
                r.epoch.to_string(),
                float(r.diag.n_phi),
                float(r.diag.n_psi),
                float(r.diag.n_times),
            ]
        }),
    )?;
    em.csv(
        "sym.csv",
        &["epoch", "asym_rel", "comm_rel"],
        recs.iter()
            .map(|r| vec![r.epoch.to_string(), float(r.diag.asym_rel), float(r.diag.comm_rel)]),
    )?;
    em.csv(
        "eigs.csv",
        &["epoch", "j", "abs_w"],
        recs.iter().flat_map(|r| {
            r.abs_eigs
                .iter()
                .enumerate()
                .map(move |(j, &w)| vec![r.epoch.to_string(), (j + 1).to_string(), float(w)])
        }),
    )?;
    em.csv(
        "regimes.csv",
        &["epoch", "regime", "w_div_hi", "w_collapse_lo", "w_collapse_hi", "w_stable_root"],
        recs.iter().map(|r| {
            let b = &r.bands;
            vec![
                r.epoch.to_string(),
                b.regime.map(Regime::as_str).unwrap_or("").to_string(),
                opt_float(b.w_div_hi),
                opt_float(b.w_collapse_lo),
                opt_float(b.w_collapse_hi),
                opt_float(b.w_stable_root),
            ]
        }),
    )
}

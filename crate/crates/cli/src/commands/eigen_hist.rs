use cosflow::concentration::eigen_init_study;

use super::sim::{simulate, SimRun};
use crate::cli::{EigenHistArgs, HistMode};
use crate::config::RunConfig;
use crate::manifest::RunManifest;
use crate::output::{float, Emitter};
use crate::{CliError, Result};

pub fn run(config: &RunConfig, args: &EigenHistArgs) -> Result<RunManifest> {
    match args.mode {
        HistMode::Init => run_init(config, args),
        HistMode::Evolution => run_evolution(config, args),
    }
}

fn run_init(config: &RunConfig, args: &EigenHistArgs) -> Result<RunManifest> {
    let c = &config.sim;
    if args.trials == 0 || args.bins == 0 {
        return Err(CliError::Config("trials and bins must be positive".into()));
    }
    let study = eigen_init_study(c.d, c.h, c.rho, c.sigma2, args.trials, c.seed, args.bins)?;
    let mut em = Emitter::create(&config.out)?;
    let hist = &study.histogram;
    em.csv(
        "eigen_hist.csv",
        &["bin_lo", "bin_hi", "count"],
        hist.counts
            .iter()
            .enumerate()
            .map(|(i, n)| vec![float(hist.edges[i]), float(hist.edges[i + 1]), n.to_string()]),
    )?;
    em.json("eigen_init.json", &study)?;
    em.finish("eigen-hist-init", config)
}

/// Mean of `values` over recorded epochs within `[epoch − half, epoch + half]`.
pub fn moving_average(epochs: &[usize], values: &[f64], half: usize) -> Vec<f64> {
    epochs
        .iter()
        .map(|&e| {
            let (lo, hi) = (e.saturating_sub(half), e + half);
            let (sum, n) = epochs
                .iter()
                .zip(values)
                .filter(|(&t, _)| t >= lo && t <= hi)
                .fold((0.0, 0usize), |(s, n), (_, &v)| (s + v, n + 1));
            sum / n as f64
        })
        .collect()
}

pub fn emit_evolution(em: &mut Emitter, sim: &SimRun, window: usize) -> Result<()> {
    let epochs: Vec<usize> = sim.records.iter().map(|r| r.epoch).collect();
    let h = sim.records.first().map_or(0, |r| r.abs_eigs.len());
    let smoothed: Vec<Vec<f64>> = (0..h)
        .map(|j| {
            let track: Vec<f64> = sim.records.iter().map(|r| r.abs_eigs[j]).collect();
            if window > 0 {
                moving_average(&epochs, &track, window)
            } else {
                track
            }
        })
        .collect();
    let ma_col = format!("abs_w_ma{window}");
    let mut header = vec!["epoch", "j", "abs_w"];
    if window > 0 {
        header.push(&ma_col);
    }
    let rows = sim.records.iter().enumerate().flat_map(|(i, r)| {
        let smoothed = &smoothed;
        r.abs_eigs.iter().enumerate().map(move |(j, &w)| {
            let mut row = vec![r.epoch.to_string(), (j + 1).to_string(), float(w)];
            if window > 0 {
                row.push(float(smoothed[j][i]));
            }
            row
        })
    });
    em.csv("eigen_evolution.csv", &header, rows)
}

fn run_evolution(config: &RunConfig, args: &EigenHistArgs) -> Result<RunManifest> {
    let sim = simulate(&config.sim, config.record_every)?;
    let mut em = Emitter::create(&config.out)?;
    emit_evolution(&mut em, &sim, args.window)?;
    em.finish("eigen-hist-evolution", config)
}

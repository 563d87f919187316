//! End-to-end runs of the `cosflow` binary: exit codes, CSV contracts, manifests and
//! byte stability under a fixed seed.

use std::path::Path;
use std::process::{Command, Output};

use cosflow::eigen::EigenParams;
use cosflow::equilibria::find_equilibria_cos;
use cosflow_cli::manifest::verify_dir;

fn cosflow(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cosflow"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) {
    let o = cosflow(out, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    verify_dir(out).expect("manifest matches outputs");
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

const TINY_SIM: [&str; 8] = ["--set", "d=32", "--set", "h=8", "--set", "batch=64", "--set", "steps=40"];

#[test]
fn phase_portrait_contract() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["phase-portrait"]);
    let (header, rows) = read_csv(&dir.path().join("phase_portrait.csv"));
    assert_eq!(header, ["rho", "n_phi", "n_psi", "w", "dw"]);
    assert_eq!(rows.len(), 6 * 2001);
    for row in rows.iter().filter(|r| num(&r[3]) == 0.0) {
        assert_eq!(num(&row[4]), 0.0);
    }
    assert_eq!(rows.iter().filter(|r| num(&r[3]) == 0.0).count(), 6);

    let sidecar: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("phase_portrait_roots.json")).unwrap()).unwrap();
    let cells = sidecar.as_array().unwrap();
    let regimes: Vec<&str> = cells.iter().map(|c| c["report"]["regime"].as_str().unwrap()).collect();
    assert_eq!(regimes, ["Collapse", "Collapse", "Acute", "Acute", "Stable", "Stable"]);
    for c in cells {
        let f = |k: &str| c[k].as_f64().unwrap();
        let p = EigenParams::new(f("rho"), f("n_phi"), f("n_psi"), f("n_times"), f("sigma2"));
        let expect = find_equilibria_cos(&p, None).unwrap();
        let got = c["report"]["raw_roots"].as_array().unwrap();
        assert_eq!(got.len(), expect.raw_roots.len());
        for (g, e) in got.iter().zip(&expect.raw_roots) {
            assert!((g["value"].as_f64().unwrap() - e.value).abs() < 1e-9);
        }
    }
}

#[test]
fn outputs_are_byte_stable() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        ok(dir.path(), &[&TINY_SIM[..], &["--record-every", "5", "sim-linear"]].concat());
    }
    for name in ["norms.csv", "sym.csv", "eigs.csv", "regimes.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty() && x == y, "{name} differs between runs");
    }
}

#[test]
fn sim_linear_contract() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &[&TINY_SIM[..], &["--record-every", "10", "sim-linear"]].concat());
    let (h, rows) = read_csv(&dir.path().join("norms.csv"));
    assert_eq!(h, ["epoch", "n_phi", "n_psi", "n_times"]);
    let epochs: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(epochs, ["0", "10", "20", "30", "40"]);
    assert_eq!(read_csv(&dir.path().join("sym.csv")).0, ["epoch", "asym_rel", "comm_rel"]);
    let (h, rows) = read_csv(&dir.path().join("eigs.csv"));
    assert_eq!(h, ["epoch", "j", "abs_w"]);
    assert_eq!(rows.len(), 5 * 8);
    for epoch in rows.chunks(8) {
        assert!(epoch.windows(2).all(|w| num(&w[0][2]) >= num(&w[1][2])));
    }
    let (h, rows) = read_csv(&dir.path().join("regimes.csv"));
    assert_eq!(
        h,
        ["epoch", "regime", "w_div_hi", "w_collapse_lo", "w_collapse_hi", "w_stable_root"]
    );
    assert!(rows.iter().all(|r| ["Collapse", "Acute", "Stable"].contains(&r[1].as_str())));
    let text = std::fs::read_to_string(dir.path().join("norms.csv")).unwrap();
    let first_float = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    assert_eq!(first_float.split('e').next().unwrap().replace(['-', '.'], "").len(), 17);
}

#[test]
fn eigen_hist_modes() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["--set", "d=256", "--set", "h=16", "--set", "rho=0.05", "eigen-hist", "--trials", "4", "--bins", "10"],
    );
    let (h, rows) = read_csv(&dir.path().join("eigen_hist.csv"));
    assert_eq!(h, ["bin_lo", "bin_hi", "count"]);
    assert_eq!(rows.iter().map(|r| r[2].parse::<usize>().unwrap()).sum::<usize>(), 4 * 16);
    let study: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("eigen_init.json")).unwrap()).unwrap();
    assert!(study["w_unstable_neg"].as_f64().unwrap() < 0.0);

    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[&TINY_SIM[..], &["eigen-hist", "--mode", "evolution", "--window", "10"]].concat(),
    );
    let (h, rows) = read_csv(&dir.path().join("eigen_evolution.csv"));
    assert_eq!(h, ["epoch", "j", "abs_w", "abs_w_ma10"]);
    assert_eq!(rows.len(), 5 * 8);
}

#[test]
fn compare_losses_frozen_and_refreshed() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["--set", "sigma2=0.1", "--set", "d=64", "--set", "h=16", "compare-losses", "--rhos", "0.05,0.3"],
    );
    let (h, rows) = read_csv(&dir.path().join("compare_losses.csv"));
    assert_eq!(h[..6], ["rho", "sigma2", "norms", "l2_final_w", "cos_final_w", "cos_reduced_w"]);
    let (low, high) = (&rows[0], &rows[1]);
    assert!(num(&high[3]).abs() < 1e-4, "L2 above the threshold collapses");
    assert!(num(&low[3]) > 0.1 && num(&low[4]).abs() > 0.0);

    let dir = tempfile::tempdir().unwrap();
    let refresh = [
        "--set", "sigma2=0.1", "--set", "d=64", "--set", "h=16", "--set", "batch=128", "--set", "steps=2000",
        "--set", "schedule=\"constant\"", "compare-losses", "--rhos", "0.05,0.3", "--norms", "refreshed",
    ];
    ok(dir.path(), &refresh);
    let (_, rows) = read_csv(&dir.path().join("compare_losses.csv"));
    assert_eq!(rows[1][2], "refreshed");
    assert!(num(&rows[1][3]).abs() < 1e-4);
    assert!(num(&rows[1][4]) > 0.1, "cosine escapes collapse: |w1| = {}", rows[1][4]);
    assert!(num(&rows[0][3]) > 0.1 && num(&rows[0][4]) > 0.1);
}

#[test]
fn roots_and_scan() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["roots", "--rho", "0.5", "--n-phi", "0.5", "--n-psi", "0.5"]);
    let (h, rows) = read_csv(&dir.path().join("roots.csv"));
    assert_eq!(h, ["w", "stability", "multiplicity", "slope"]);
    assert_eq!(rows.len(), 4);
    ok(dir.path(), &["roots", "--loss", "l2", "--rho", "0.3"]);
    let (_, rows) = read_csv(&dir.path().join("roots.csv"));
    assert_eq!(rows.len(), 1);

    ok(
        dir.path(),
        &["regime-scan", "--rho-min", "0.1", "--rho-max", "0.5", "--rho-steps", "3", "--norm-steps", "5"],
    );
    let (h, rows) = read_csv(&dir.path().join("regime_scan.csv"));
    assert_eq!(h, ["rho", "n_phi", "n_psi", "regime", "n_roots", "saddle_gap"]);
    assert_eq!(rows.len(), 15);
}

#[test]
fn concentration_outputs() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["concentration", "--hs", "8,16", "--samples", "500", "--drift-hs", "8,16", "--drift-samples", "2000"],
    );
    assert_eq!(read_csv(&dir.path().join("concentration.csv")).1.len(), 2);
    assert_eq!(read_csv(&dir.path().join("drift.csv")).1.len(), 2);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["--set", "sigma2=-1", "sim-linear"][..],
        &["--set", "no_such_key=1", "sim-linear"],
        &["--config", "/nonexistent/run.toml", "roots", "--rho", "0.1"],
        &["roots", "--rho", "-0.1"],
        &["phase-portrait", "--cells", "0.1,1"],
        &["bogus-command"],
    ] {
        let o = cosflow(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "d = 0\n").unwrap();
    assert_eq!(cosflow(dir.path(), &["--config", cfg.to_str().unwrap(), "sim-linear"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = cosflow(
        dir.path(),
        &[&TINY_SIM[..], &["--set", "loss_kind=l2", "--set", "gamma=50", "--record-every", "1", "sim-linear"]].concat(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epoch"));
}

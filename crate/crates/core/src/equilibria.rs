//! Equilibria of the reduced one-dimensional dynamics, their stability, the regime
//! they imply and the basins of attraction.
//!
//! The cosine dynamics factors as `ẇ = w · q(w)` with the quintic
//! `q(w) = a₅w⁵ + a₂w² + a₁w + a₀`. Real roots of `q` are isolated by a uniform
//! sign-change scan whose grid is augmented with the critical points of `q`, so every
//! cell is monotone and holds at most one root; tangencies surface as critical points
//! where `q` vanishes.

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::EigenParams;
use crate::{Error, Result};

pub const SCAN_CELLS: usize = 4096;
/// Relative gap `w▲(+) / w▼(+)` below which the middle pair counts as merged.
pub const SADDLE_TOL: f64 = 0.17;
const DOUBLE_ROOT_TOL: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Saddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Regime {
    Collapse,
    Acute,
    Stable,
    /// Tangential pair away from the origin (only reported by the L2 dynamics).
    SaddleNode,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Collapse => "Collapse",
            Regime::Acute => "Acute",
            Regime::Stable => "Stable",
            Regime::SaddleNode => "SaddleNode",
        }
    }

    /// Position along the Collapse → Acute → Stable bifurcation order.
    pub fn rank(self) -> u8 {
        match self {
            Regime::Collapse => 0,
            Regime::Acute | Regime::SaddleNode => 1,
            Regime::Stable => 2,
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub value: f64,
    pub stability: Stability,
    pub multiplicity: u8,
    /// `dẇ/dw` at the root.
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "root", rename_all = "snake_case")]
pub enum Fate {
    Diverge,
    CollapseToZero,
    ConvergeTo(f64),
}

/// Initial conditions in `[lo, hi]` share a fate; infinite ends are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Basin {
    pub lo: f64,
    pub hi: f64,
    pub fate: Fate,
}

impl Basin {
    pub fn contains(&self, w: f64) -> bool {
        w >= self.lo && w <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    /// Equilibria in increasing order, with a merged middle pair shown as one saddle.
    pub roots: Vec<Root>,
    pub regime: Regime,
    pub basins: Vec<Basin>,
    /// Every distinct real root found, before any merging.
    pub raw_roots: Vec<Root>,
    /// `w▲(+) / w▼(+)` when both exist.
    pub saddle_gap: Option<f64>,
    pub search: (f64, f64),
    pub scale: f64,
}

impl EquilibriumReport {
    fn find(&self, pick: impl Fn(&Root) -> bool) -> Option<f64> {
        self.roots.iter().find(|r| pick(r)).map(|r| r.value)
    }

    /// `w▲(−)`: the unstable negative equilibrium.
    pub fn w_unstable_neg(&self) -> Option<f64> {
        self.find(|r| r.value < 0.0 && r.stability == Stability::Unstable)
    }

    /// `w▲(+)`: the unstable positive equilibrium (Acute only).
    pub fn w_unstable_pos(&self) -> Option<f64> {
        self.find(|r| r.value > 0.0 && r.stability == Stability::Unstable)
    }

    /// `w▼(+)`: the non-degenerate stable equilibrium.
    pub fn w_stable_pos(&self) -> Option<f64> {
        self.roots
            .iter()
            .rev()
            .find(|r| r.value > 0.0 && r.stability == Stability::Stable)
            .map(|r| r.value)
    }

    /// `w♦`
    pub fn w_saddle(&self) -> Option<f64> {
        self.find(|r| r.stability == Stability::Saddle)
    }

    pub fn fate_of(&self, w: f64) -> Option<Fate> {
        self.basins.iter().find(|b| b.contains(w)).map(|b| b.fate)
    }

    /// Interval of initial values that collapse to zero (excluding isolated points).
    pub fn collapse_interval(&self) -> Option<(f64, f64)> {
        self.basins
            .iter()
            .find(|b| b.fate == Fate::CollapseToZero && b.hi > b.lo)
            .map(|b| (b.lo, b.hi))
    }

    /// Interval of initial values that converge to `w▼(+)`, the union of such basins
    /// when it is contiguous up to a single excluded point.
    pub fn stable_interval(&self) -> Option<(f64, f64)> {
        let conv: Vec<&Basin> = self
            .basins
            .iter()
            .filter(|b| matches!(b.fate, Fate::ConvergeTo(r) if r > 0.0))
            .collect();
        let lo = conv.iter().map(|b| b.lo).fold(f64::INFINITY, f64::min);
        let hi = conv.iter().map(|b| b.hi).fold(f64::NEG_INFINITY, f64::max);
        (!conv.is_empty()).then_some((lo, hi))
    }

    pub fn converges_to_stable(&self, w: f64) -> bool {
        matches!(self.fate_of(w), Some(Fate::ConvergeTo(r)) if r > 0.0)
    }
}

/// `a₅w⁵ + a₂w² + a₁w + a₀` with `a₅ < 0`.
#[derive(Debug, Clone, Copy)]
struct Quintic {
    a5: f64,
    a2: f64,
    a1: f64,
    a0: f64,
}

impl Quintic {
    fn eval(&self, w: f64) -> f64 {
        ((self.a5 * w * w * w + self.a2) * w + self.a1) * w + self.a0
    }

    fn deriv(&self, w: f64) -> f64 {
        5.0 * self.a5 * w.powi(4) + 2.0 * self.a2 * w + self.a1
    }

    fn deriv2(&self, w: f64) -> f64 {
        20.0 * self.a5 * w * w * w + 2.0 * self.a2
    }

    /// Bound on the modulus of every real root of `q` and `q′`.
    fn cauchy_bound(&self) -> f64 {
        let m = self.a2.abs().max(self.a1.abs()).max(self.a0.abs());
        1.0 + m / self.a5.abs()
    }

    /// Real critical points: `q″` has the single root `w*`, so `q′` is unimodal and has
    /// at most one root on each side of it.
    fn critical_points(&self, radius: f64) -> Vec<f64> {
        let w_star = (-self.a2 / (10.0 * self.a5)).cbrt();
        let dq = |w: f64| self.deriv(w);
        let mut out = Vec::new();
        for (lo, hi) in [(-radius, w_star), (w_star, radius)] {
            if lo < hi && dq(lo).signum() != dq(hi).signum() {
                out.push(bisect(dq, lo, hi));
            }
        }
        if dq(w_star) == 0.0 {
            out.push(w_star);
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Bisection to full precision on a sign-changing bracket.
fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut glo = g(lo);
    if glo == 0.0 {
        return lo;
    }
    if g(hi) == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisection followed by a few bracket-safe Newton steps.
fn refine(q: &Quintic, lo: f64, hi: f64) -> f64 {
    let mut x = bisect(|w| q.eval(w), lo, hi);
    for _ in 0..3 {
        let d = q.deriv(x);
        if d == 0.0 {
            break;
        }
        let next = x - q.eval(x) / d;
        if !(next >= lo && next <= hi) || q.eval(next).abs() >= q.eval(x).abs() {
            break;
        }
        x = next;
    }
    x
}

/// Distinct real roots of `w · q(w)` in `[-radius, radius]` with multiplicities.
fn roots_of_factored(q: &Quintic, radius: f64, scale: f64) -> Result<Vec<(f64, u8)>> {
    let crit = q.critical_points(radius);
    let mut grid: Vec<f64> = (0..=SCAN_CELLS)
        .map(|i| -radius + 2.0 * radius * i as f64 / SCAN_CELLS as f64)
        .collect();
    grid.extend(crit.iter().copied().filter(|c| c.abs() < radius));
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let tol = RESIDUAL_TOL * scale;
    let mut roots: Vec<(f64, u8)> = Vec::new();
    let mut values: Vec<f64> = grid.iter().map(|&w| q.eval(w)).collect();
    for v in values.iter_mut() {
        if v.abs() == 0.0 {
            *v = 0.0;
        }
    }
    for i in 0..grid.len() - 1 {
        let (a, b) = (values[i], values[i + 1]);
        if a != 0.0 && b != 0.0 && a.signum() != b.signum() {
            roots.push((refine(q, grid[i], grid[i + 1]), 1));
        }
    }
    // Grid points that hit a root exactly and tangencies at critical points.
    for (i, &w) in grid.iter().enumerate() {
        if values[i] == 0.0 {
            let tangent = crit.contains(&w);
            roots.push((w, if tangent { 2 } else { 1 }));
        }
    }
    for &c in &crit {
        let v = q.eval(c);
        if v != 0.0 && v.abs() < tol && q.deriv2(c) != 0.0 {
            // A near-tangency counts as a double root only if no simple pair was found.
            let close = roots.iter().any(|&(r, _)| (r - c).abs() < 1e-6 * scale);
            if !close {
                roots.push((c, 2));
            }
        }
    }
    // The factor w.
    roots.push((0.0, 1));
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut merged: Vec<(f64, u8)> = Vec::new();
    for (r, m) in roots {
        match merged.last_mut() {
            Some(last) if (r - last.0).abs() <= 1e-9 * scale => {
                last.1 += m;
                if r == 0.0 {
                    last.0 = 0.0;
                }
            }
            _ => merged.push((r, m)),
        }
    }
    let parity_ok = merged.iter().map(|&(_, m)| m as usize).sum::<usize>() <= 6;
    if !parity_ok {
        return Err(Error::BracketingFailure(format!("too many roots: {merged:?}")));
    }
    Ok(merged)
}

fn label(value: f64, multiplicity: u8, slope: f64, scale: f64) -> Root {
    let stability = if multiplicity.is_multiple_of(2) || slope.abs() < DOUBLE_ROOT_TOL * scale && multiplicity > 1 {
        Stability::Saddle
    } else if slope < 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    };
    Root {
        value,
        stability,
        multiplicity,
        slope,
    }
}

fn cosine_scale(p: &EigenParams) -> f64 {
    (p.n_phi * p.n_psi.powi(3) / 2.0).powf(0.25).max(1.0)
}

fn build_report(q: &Quintic, scale: f64, radius: f64) -> Result<EquilibriumReport> {
    let raw = roots_of_factored(q, radius, scale)?;
    let raw_roots: Vec<Root> = raw
        .iter()
        .map(|&(r, m)| {
            // dẇ/dw = q(r) + r q′(r)
            let slope = q.eval(r) + r * q.deriv(r);
            let m = if r == 0.0 && slope.abs() < DOUBLE_ROOT_TOL * scale { m.max(2) } else { m };
            label(r, m, slope, scale)
        })
        .collect();
    let mut report = EquilibriumReport {
        roots: raw_roots.clone(),
        regime: Regime::Collapse,
        basins: Vec::new(),
        raw_roots,
        saddle_gap: None,
        search: (-radius, radius),
        scale,
    };
    classify_regime(&mut report)?;
    report.basins = basin_intervals(&report);
    Ok(report)
}

/// Labels the regime from the root pattern and, for Stable, merges the middle pair.
///
/// * `{w▲(−), 0}` → Collapse
/// * `{w▲(−), 0, w▲(+), w▼(+)}` → Acute, or Stable when `w▲(+)/w▼(+) < SADDLE_TOL`
/// * `{w▲(−), 0 (double), w▼(+)}` → Stable
pub fn classify_regime(report: &mut EquilibriumReport) -> Result<Regime> {
    let raw = &report.raw_roots;
    let neg: Vec<&Root> = raw.iter().filter(|r| r.value < 0.0).collect();
    let zero = raw.iter().find(|r| r.value == 0.0);
    let pos: Vec<&Root> = raw.iter().filter(|r| r.value > 0.0).collect();
    let unclassifiable = || Error::UnclassifiableRootPattern(raw.iter().map(|r| r.value).collect());
    if neg.len() != 1 || neg[0].stability != Stability::Unstable {
        return Err(unclassifiable());
    }
    let zero = zero.ok_or_else(unclassifiable)?;
    let regime = match (zero.stability, pos.as_slice()) {
        (Stability::Stable, []) => Regime::Collapse,
        (Stability::Stable, [lo, hi]) if lo.stability == Stability::Unstable && hi.stability == Stability::Stable => {
            let gap = lo.value / hi.value;
            report.saddle_gap = Some(gap);
            if gap < SADDLE_TOL {
                report.roots = vec![
                    *neg[0],
                    Root {
                        value: 0.0,
                        stability: Stability::Saddle,
                        multiplicity: 2,
                        slope: zero.slope,
                    },
                    **hi,
                ];
                Regime::Stable
            } else {
                Regime::Acute
            }
        }
        (Stability::Saddle, [hi]) if hi.stability == Stability::Stable => {
            report.saddle_gap = Some(0.0);
            Regime::Stable
        }
        _ => return Err(unclassifiable()),
    };
    report.regime = regime;
    Ok(regime)
}

/// Fates of initial values between consecutive equilibria. The saddle point itself is
/// assigned `CollapseToZero` by convention.
pub fn basin_intervals(report: &EquilibriumReport) -> Vec<Basin> {
    let inf = f64::INFINITY;
    let b = |lo: f64, hi: f64, fate: Fate| Basin { lo, hi, fate };
    let neg = report.w_unstable_neg();
    let stable = report.w_stable_pos();
    match (report.regime, neg) {
        (Regime::Collapse, Some(n)) => vec![b(-inf, n, Fate::Diverge), b(n, inf, Fate::CollapseToZero)],
        (Regime::Acute, Some(n)) => {
            let up = report.w_unstable_pos().unwrap_or(0.0);
            let s = stable.unwrap_or(up);
            vec![
                b(-inf, n, Fate::Diverge),
                b(n, up, Fate::CollapseToZero),
                b(up, inf, Fate::ConvergeTo(s)),
            ]
        }
        (Regime::Stable, Some(n)) => {
            let sd = report.w_saddle().unwrap_or(0.0);
            let s = stable.unwrap_or(sd);
            vec![
                b(-inf, n, Fate::Diverge),
                b(n, sd, Fate::ConvergeTo(s)),
                b(sd, sd, Fate::CollapseToZero),
                b(sd, inf, Fate::ConvergeTo(s)),
            ]
        }
        _ => l2_basins(report),
    }
}

fn l2_basins(report: &EquilibriumReport) -> Vec<Basin> {
    let inf = f64::INFINITY;
    let b = |lo: f64, hi: f64, fate: Fate| Basin { lo, hi, fate };
    match report.regime {
        Regime::Collapse => vec![b(-inf, inf, Fate::CollapseToZero)],
        Regime::SaddleNode => {
            let r = report.w_saddle().unwrap_or(0.0);
            vec![b(-inf, r, Fate::CollapseToZero), b(r, inf, Fate::ConvergeTo(r))]
        }
        Regime::Acute => {
            let lo = report.w_unstable_pos().unwrap_or(0.0);
            let hi = report.w_stable_pos().unwrap_or(lo);
            vec![b(-inf, lo, Fate::CollapseToZero), b(lo, inf, Fate::ConvergeTo(hi))]
        }
        Regime::Stable => {
            let hi = report.w_stable_pos().unwrap_or(0.0);
            vec![b(-inf, 0.0, Fate::CollapseToZero), b(0.0, inf, Fate::ConvergeTo(hi))]
        }
    }
}

/// Equilibria of the reduced cosine dynamics. `search` defaults to
/// `±10·scale` (widened to the Cauchy bound when that is larger).
pub fn find_equilibria_cos(params: &EigenParams, search: Option<f64>) -> Result<EquilibriumReport> {
    if !(params.n_phi > 0.0 && params.n_psi > 0.0) {
        return Err(Error::DegenerateNorms {
            n_phi: params.n_phi,
            n_psi: params.n_psi,
        });
    }
    let (c6, c3, c2) = params.reduced_coefficients();
    let q = Quintic {
        a5: -c6,
        a2: -c3,
        a1: c2,
        a0: -params.rho,
    };
    let scale = cosine_scale(params);
    let radius = search.unwrap_or(10.0 * scale).max(q.cauchy_bound());
    build_report(&q, scale, radius)
}

/// Equilibria of `ẇ = w²(1 − (1+σ²)w) − ρw` from the quadratic formula.
pub fn find_equilibria_l2(sigma2: f64, rho: f64) -> EquilibriumReport {
    let s = 1.0 + sigma2;
    let slope = |w: f64| crate::eigen::reduced_rhs_l2_deriv(w, sigma2, rho);
    let disc = 1.0 - 4.0 * s * rho;
    let zero = if rho == 0.0 {
        label(0.0, 2, 0.0, 1.0)
    } else {
        label(0.0, 1, slope(0.0), 1.0)
    };
    let mut roots = vec![zero];
    let regime = if disc.abs() < 1e-12 {
        let r = 1.0 / (2.0 * s);
        roots.push(label(r, 2, slope(r), 1.0));
        Regime::SaddleNode
    } else if disc < 0.0 {
        Regime::Collapse
    } else {
        let sq = disc.sqrt();
        for r in [(1.0 - sq) / (2.0 * s), (1.0 + sq) / (2.0 * s)] {
            if r != 0.0 {
                roots.push(label(r, 1, slope(r), 1.0));
            }
        }
        if rho == 0.0 {
            Regime::Stable
        } else {
            Regime::Acute
        }
    };
    roots.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut report = EquilibriumReport {
        roots: roots.clone(),
        regime,
        basins: Vec::new(),
        raw_roots: roots,
        saddle_gap: None,
        search: (f64::NEG_INFINITY, f64::INFINITY),
        scale: 1.0,
    };
    report.basins = l2_basins(&report);
    report
}

/// `A = 2/N_Ψ²`, `B = ρ(1+σ²)N_Φ N_Ψ` of the normalized sextic `−Ax⁶ + x² − Bx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BifurcationParams {
    pub a_coef: f64,
    pub b_coef: f64,
}

impl BifurcationParams {
    pub fn from_eigen(p: &EigenParams) -> Self {
        Self {
            a_coef: 2.0 / (p.n_psi * p.n_psi),
            b_coef: p.rho * (1.0 + p.sigma2) * p.n_phi * p.n_psi,
        }
    }
}

/// Roots of `−Ax⁶ + x² − Bx` isolated independently of the scan: the quintic factor
/// `−Ax⁵ + x − B` has critical points exactly at `±(5A)^{−1/4}`, which bracket its
/// (at most three) real roots. At `B = 0` the closed form `{0 (double), ±A^{−1/4}}` is used.
pub fn sextic_roots(bp: &BifurcationParams) -> Result<EquilibriumReport> {
    let (a, b) = (bp.a_coef, bp.b_coef);
    if !(a > 0.0) || !(b >= 0.0) {
        return Err(Error::InvalidConfig(format!("need A > 0 and B >= 0, got A = {a}, B = {b}")));
    }
    let q = Quintic {
        a5: -a,
        a2: 0.0,
        a1: 1.0,
        a0: -b,
    };
    let scale = a.powf(-0.25).max(1.0);
    let slope = |x: f64| q.eval(x) + x * q.deriv(x);
    let mut raw: Vec<Root> = Vec::new();
    if b == 0.0 {
        let r = a.powf(-0.25);
        raw.push(label(-r, 1, slope(-r), scale));
        raw.push(label(0.0, 2, 0.0, scale));
        raw.push(label(r, 1, slope(r), scale));
    } else {
        let xc = (5.0 * a).powf(-0.25);
        let far = q.cauchy_bound();
        let g = |x: f64| q.eval(x);
        raw.push(label(0.0, 1, slope(0.0), scale));
        // Decreasing on (−∞, −xc): always exactly one negative root since g(−xc) < 0 ≤ g(−∞).
        for (lo, hi) in [(-far, -xc), (-xc, xc), (xc, far)] {
            if g(lo).signum() != g(hi).signum() {
                let x = refine(&q, lo, hi);
                raw.push(label(x, 1, slope(x), scale));
            } else if g(hi) == 0.0 && hi == xc {
                raw.push(label(xc, 2, 0.0, scale));
            }
        }
        raw.sort_by(|p, q| p.value.total_cmp(&q.value));
    }
    let mut report = EquilibriumReport {
        roots: raw.clone(),
        regime: Regime::Collapse,
        basins: Vec::new(),
        raw_roots: raw,
        saddle_gap: None,
        search: (f64::NEG_INFINITY, f64::INFINITY),
        scale,
    };
    classify_regime(&mut report)?;
    report.basins = basin_intervals(&report);
    Ok(report)
}

/// Number of real roots counted with multiplicity.
pub fn root_count_with_multiplicity(report: &EquilibriumReport) -> usize {
    report.raw_roots.iter().map(|r| r.multiplicity as usize).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanCell {
    pub rho: f64,
    pub n_phi: f64,
    pub n_psi: f64,
    pub regime: Option<Regime>,
    pub n_roots: usize,
    pub saddle_gap: Option<f64>,
}

/// Classifies every `(ρ, N_Φ, N_Ψ)` cell; output order matches input order.
pub fn regime_scan(grid: &[(f64, f64, f64)], n_times: f64, sigma2: f64) -> Vec<ScanCell> {
    grid.par_iter()
        .map(|&(rho, n_phi, n_psi)| {
            let p = EigenParams::new(rho, n_phi, n_psi, n_times, sigma2);
            match find_equilibria_cos(&p, None) {
                Ok(r) => ScanCell {
                    rho,
                    n_phi,
                    n_psi,
                    regime: Some(r.regime),
                    n_roots: r.raw_roots.len(),
                    saddle_gap: r.saddle_gap,
                },
                Err(_) => ScanCell {
                    rho,
                    n_phi,
                    n_psi,
                    regime: None,
                    n_roots: 0,
                    saddle_gap: None,
                },
            }
        })
        .collect()
}

/// True when regimes along a ray never step back in the Collapse → Acute → Stable order.
pub fn is_monotone_progression(regimes: &[Regime]) -> bool {
    regimes.windows(2).all(|w| w[0].rank() <= w[1].rank())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::reduced_rhs_cos;

    fn reference(rho: f64, n_phi: f64, n_psi: f64) -> EigenParams {
        EigenParams::new(rho, n_phi, n_psi, 1.0, 0.1)
    }

    #[test]
    fn six_reference_sets() {
        let sets = [
            (0.5, 1.0, 1.0),
            (0.5, 1.0, 0.5),
            (0.5, 0.5, 0.5),
            (0.1, 1.0, 1.0),
            (0.5, 0.25, 0.5),
            (0.1, 0.25, 0.5),
        ];
        let got: Vec<Regime> = sets
            .iter()
            .map(|&(r, a, b)| find_equilibria_cos(&reference(r, a, b), None).unwrap().regime)
            .collect();
        use Regime::*;
        assert_eq!(got, vec![Collapse, Collapse, Acute, Acute, Stable, Stable]);
    }

    #[test]
    fn collapse_example() {
        let r = find_equilibria_cos(&reference(0.5, 1.0, 1.0), None).unwrap();
        assert_eq!(r.regime, Regime::Collapse);
        assert_eq!(r.roots.len(), 2);
        assert!(r.roots[0].value < 0.0 && r.roots[0].stability == Stability::Unstable);
        assert_eq!(r.roots[1].value, 0.0);
        assert_eq!(r.roots[1].stability, Stability::Stable);
    }

    #[test]
    fn acute_example() {
        let r = find_equilibria_cos(&reference(0.5, 0.5, 0.5), None).unwrap();
        assert_eq!(r.regime, Regime::Acute);
        let v: Vec<f64> = r.roots.iter().map(|x| x.value).collect();
        assert_eq!(v.len(), 4);
        assert!(v[0] < 0.0 && v[1] == 0.0 && 0.0 < v[2] && v[2] < v[3]);
        let s: Vec<Stability> = r.roots.iter().map(|x| x.stability).collect();
        use Stability::*;
        assert_eq!(s, vec![Unstable, Stable, Unstable, Stable]);
    }

    #[test]
    fn stable_example_merges_middle_pair() {
        let r = find_equilibria_cos(&reference(0.5, 0.25, 0.5), None).unwrap();
        assert_eq!(r.regime, Regime::Stable);
        assert_eq!(r.roots.len(), 3);
        assert_eq!(r.roots[1].stability, Stability::Saddle);
        assert!(r.w_saddle().is_some());
    }

    #[test]
    fn residuals_are_tiny() {
        for p in [reference(0.5, 1.0, 1.0), reference(0.1, 1.0, 1.0), reference(0.1, 0.25, 0.5)] {
            let r = find_equilibria_cos(&p, None).unwrap();
            for root in &r.raw_roots {
                assert!(reduced_rhs_cos(root.value, &p).abs() < 1e-9 * r.scale);
            }
        }
    }

    #[test]
    fn zero_decay_gives_exact_saddle() {
        let r = find_equilibria_cos(&reference(0.0, 0.7, 0.8), None).unwrap();
        assert_eq!(r.regime, Regime::Stable);
        assert_eq!(r.raw_roots.len(), 3);
        assert_eq!(r.raw_roots[1].multiplicity, 2);
    }

    #[test]
    fn l2_cases() {
        let r = find_equilibria_l2(0.0, 0.0);
        let v: Vec<f64> = r.roots.iter().map(|x| x.value).collect();
        assert_eq!(v, vec![0.0, 1.0]);
        assert_eq!(r.roots[0].multiplicity, 2);

        let r = find_equilibria_l2(0.0, 0.25);
        assert_eq!(r.regime, Regime::SaddleNode);
        assert_eq!(r.roots[1].value, 0.5);
        assert_eq!(r.roots[1].stability, Stability::Saddle);

        let r = find_equilibria_l2(0.0, 0.3);
        assert_eq!(r.regime, Regime::Collapse);
        assert_eq!(r.roots.len(), 1);
        assert_eq!(r.roots[0].stability, Stability::Stable);
    }

    #[test]
    fn sextic_closed_form_and_counts() {
        let bp = |b| BifurcationParams { a_coef: 1.5, b_coef: b };
        let r = sextic_roots(&bp(0.0)).unwrap();
        let v: Vec<f64> = r.raw_roots.iter().map(|x| x.value).collect();
        assert!((v[0] + 0.90360).abs() < 1e-5 && (v[2] - 0.90360).abs() < 1e-5);
        assert_eq!(root_count_with_multiplicity(&r), 4);
        let r = sextic_roots(&bp(0.4)).unwrap();
        assert_eq!(r.raw_roots.len(), 4);
        assert_eq!(r.regime, Regime::Acute);
        let r = sextic_roots(&bp(0.6)).unwrap();
        assert_eq!(r.raw_roots.len(), 2);
        assert_eq!(r.regime, Regime::Collapse);
    }

    #[test]
    fn ray_progression() {
        let grid: Vec<(f64, f64, f64)> = (0..=90).map(|i| 1.0 - 0.01 * i as f64).map(|s| (0.5, s, s)).collect();
        let cells = regime_scan(&grid, 1.0, 0.1);
        let regimes: Vec<Regime> = cells.iter().map(|c| c.regime.unwrap()).collect();
        assert!(is_monotone_progression(&regimes));
        assert_eq!(regimes[0], Regime::Collapse);
        assert_ne!(*regimes.last().unwrap(), Regime::Collapse);
    }

    #[test]
    fn basins_cover_line() {
        let r = find_equilibria_cos(&reference(0.5, 0.5, 0.5), None).unwrap();
        let n = r.w_unstable_neg().unwrap();
        let up = r.w_unstable_pos().unwrap();
        let s = r.w_stable_pos().unwrap();
        assert_eq!(r.fate_of(n - 1.0), Some(Fate::Diverge));
        assert_eq!(r.fate_of(0.5 * up), Some(Fate::CollapseToZero));
        assert_eq!(r.fate_of(s + 1.0), Some(Fate::ConvergeTo(s)));
    }
}

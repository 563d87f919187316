use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Parser)]
#[command(name = "cosflow", version, about = "Linear SimSiam eigenvalue dynamics experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Each mirrors a key of the flat config file and wins over it.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Flat TOML file with simulation and runner keys.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Record diagnostics every N epochs.
    #[arg(long, global = true, value_name = "N")]
    pub record_every: Option<usize>,

    /// Override any config key, e.g. `--set rho=0.01`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Reduced vector field on a w-grid for a list of (rho, n_phi, n_psi) cells.
    PhasePortrait(PortraitArgs),
    /// Equilibria, stability and regime of one parameter set.
    Roots(RootsArgs),
    /// Regime over a rho x norm-scale grid.
    RegimeScan(ScanArgs),
    /// Initial eigenvalue histogram or eigenvalue evolution of an SGD run.
    EigenHist(EigenHistArgs),
    /// SGD run of the linear model with per-epoch norms, symmetry and regime bands.
    SimLinear,
    /// Final eigenvalues of the reduced L2 and cosine dynamics over a grid of rho.
    CompareLosses(CompareArgs),
    /// Concentration of the norms and of the closed-form drift with growing h.
    Concentration(ConcentrationArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PortraitArgs {
    /// Cells as `rho,n_phi,n_psi` separated by `;`. Defaults to the six reference cells.
    #[arg(long)]
    pub cells: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub n_times: f64,
    #[arg(long, default_value_t = 0.1)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 2001)]
    pub points: usize,
    #[arg(long, default_value_t = 1.5)]
    pub w_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Cosine,
    L2,
}

#[derive(Debug, Clone, Args)]
pub struct RootsArgs {
    #[arg(long, value_enum, default_value_t = LossArg::Cosine)]
    pub loss: LossArg,
    #[arg(long)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub n_phi: f64,
    #[arg(long, default_value_t = 1.0)]
    pub n_psi: f64,
    #[arg(long, default_value_t = 1.0)]
    pub n_times: f64,
    #[arg(long, default_value_t = 0.1)]
    pub sigma2: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 0.0)]
    pub rho_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho_max: f64,
    #[arg(long, default_value_t = 41)]
    pub rho_steps: usize,
    /// Smallest and largest `n_phi`; the grid is geometric.
    #[arg(long, default_value_t = 0.05)]
    pub norm_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub norm_max: f64,
    #[arg(long, default_value_t = 41)]
    pub norm_steps: usize,
    /// `n_psi / n_phi` along the grid.
    #[arg(long, default_value_t = 1.0)]
    pub psi_ratio: f64,
    #[arg(long, default_value_t = 1.0)]
    pub n_times: f64,
    #[arg(long, default_value_t = 0.1)]
    pub sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HistMode {
    Init,
    Evolution,
}

#[derive(Debug, Clone, Args)]
pub struct EigenHistArgs {
    #[arg(long, value_enum, default_value_t = HistMode::Init)]
    pub mode: HistMode,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 60)]
    pub bins: usize,
    /// Half-width of the moving average written next to the raw evolution (0 disables).
    #[arg(long, default_value_t = 0)]
    pub window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormSource {
    /// Norms measured at initialization, held fixed.
    Frozen,
    /// Norms taken from a matrix SGD run at each `rho`.
    Refreshed,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Comma-separated weight-decay values.
    #[arg(long, default_value = "0.05,0.1,0.2,0.3,0.5")]
    pub rhos: String,
    #[arg(long, default_value_t = 0.5)]
    pub w0: f64,
    #[arg(long, default_value_t = 200.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub dt: f64,
    #[arg(long, value_enum, default_value_t = NormSource::Frozen)]
    pub norms: NormSource,
}

#[derive(Debug, Clone, Args)]
pub struct ConcentrationArgs {
    /// Representation sizes for the norm deviations.
    #[arg(long, default_value = "64,128,256,512")]
    pub hs: String,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Representation sizes for the drift comparison.
    #[arg(long, default_value = "32,64,128,256")]
    pub drift_hs: String,
    /// Monte Carlo samples per drift estimate (0 skips the comparison).
    #[arg(long, default_value_t = 100_000)]
    pub drift_samples: usize,
    /// Input-to-representation ratio `d / h`.
    #[arg(long, default_value_t = 8)]
    pub alpha: usize,
}

//! `jjdyn`: trajectories, stability sweeps, basins, border dimensions,
//! frequency tables and images from the command line.
//!
//! Every invocation writes a run manifest; `jjdyn rerun --from <file>`
//! replays it with identical outputs.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jjdyn::dynamics::DEFAULT_DTAU;
use jjdyn::sweep::{DEFAULT_KAPPA, DEFAULT_TAU_MEASURE, DEFAULT_TAU_TRANSIENT};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "jjdyn", version, about = "Driven planar rotor / series Josephson junction simulator")]
struct Cli {
    /// Manifest path; defaults to `<primary output>.manifest.json`.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Integrate one trajectory, write `tau,phi,v` and classify it.
    Trajectory(TrajectoryArgs),
    /// Stability diagram over initial phase and drive amplitude.
    Sweep(SweepArgs),
    /// Basin of attraction over initial phase and velocity.
    Basin(BasinArgs),
    /// Box-counting dimension of a region border in a grid file.
    Dimension(DimensionArgs),
    /// Label frequency table of a grid file.
    Freq(FreqArgs),
    /// Render a grid file as a PPM image.
    Render(RenderArgs),
    /// Replay a run manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct IntegrationArgs {
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    pub kappa: f64,
    #[arg(long, default_value_t = DEFAULT_TAU_TRANSIENT)]
    pub tau_transient: f64,
    #[arg(long, default_value_t = DEFAULT_TAU_MEASURE)]
    pub tau_measure: f64,
    /// RK4 step in dimensionless time.
    #[arg(long, default_value_t = DEFAULT_DTAU)]
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrajectoryArgs {
    #[arg(long)]
    pub eps: f64,
    /// Initial phase in units of pi.
    #[arg(long)]
    pub phi0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub v0: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub integration: IntegrationArgs,
    /// Keep every `stride`-th step in the CSV.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Also write the transient.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Phase-portrait image of the measurement window.
    #[arg(long)]
    pub portrait: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GridArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub integration: IntegrationArgs,
    /// Skip the doubled-horizon retry of unclassified cells.
    #[arg(long)]
    pub no_retry: bool,
    /// Refine a `base_nx` x `base_ny` lattice this many times instead of a direct sweep.
    #[arg(long)]
    pub bisect_levels: Option<u32>,
    #[arg(long, default_value_t = 2)]
    pub base_nx: usize,
    #[arg(long, default_value_t = 2)]
    pub base_ny: usize,
    /// Continue a bisection from a checkpointed grid file.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long, env = "JJDYN_WORKERS")]
    pub workers: Option<usize>,
    /// Grid file; checkpointed after every bisection level.
    #[arg(long)]
    pub out: PathBuf,
    /// Image path; defaults to the grid path with a `.ppm` extension.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Provenance timestamp (seconds since the epoch); defaults to now.
    #[arg(long, hide = true)]
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Phase range in units of pi.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub phi_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub phi_max: f64,
    #[arg(long, default_value_t = 0.3)]
    pub eps_min: f64,
    #[arg(long, default_value_t = 0.56)]
    pub eps_max: f64,
    #[arg(long, default_value_t = 128)]
    pub nx: usize,
    #[arg(long, default_value_t = 256)]
    pub ny: usize,
    /// 896 x 2048 lattice.
    #[arg(long)]
    pub full_resolution: bool,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub v0: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BasinArgs {
    #[arg(long)]
    pub eps: f64,
    /// Phase range in units of pi.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub phi_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub phi_max: f64,
    #[arg(long, default_value_t = -jjdyn::sweep::DEFAULT_BASIN_V0, allow_hyphen_values = true)]
    pub v_min: f64,
    #[arg(long, default_value_t = jjdyn::sweep::DEFAULT_BASIN_V0, allow_hyphen_values = true)]
    pub v_max: f64,
    #[arg(long, default_value_t = 256)]
    pub nx: usize,
    #[arg(long, default_value_t = 256)]
    pub ny: usize,
    /// 1024 x 1024 lattice.
    #[arg(long)]
    pub full_resolution: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DimensionArgs {
    #[arg(long)]
    pub grid: PathBuf,
    /// Comma-separated: unstable, zero, pi, unclassified, all-cycles, <n>-cycle.
    #[arg(long)]
    pub labels: String,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FreqArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RenderArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    #[arg(long = "from")]
    pub from: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command, cli.manifest) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

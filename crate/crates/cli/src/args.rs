use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{CriticalLayer, SimulateLayer, SweepLayer, TrajectoryLayer, WignerLayer};

#[derive(Debug, Parser)]
#[command(
    name = "twophoton",
    version,
    about = "Steady states of the two-photon driven dissipative oscillator",
    arg_required_else_help = true
)]
pub struct Cli {
    /// TOML file with default settings; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (defaults to one per core). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output file; standard output when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Built-in parameter set (overview, threshold and bunching sweeps,
    /// marginal Wigner comparison, scaling report).
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,

    /// Run the normalization and consistency suite and exit (3 on failure).
    #[arg(long)]
    pub check: bool,

    /// Like --check, followed by every Monte-Carlo cross-validation.
    #[arg(long)]
    pub full: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Sweep over delta/eta in [0, 40].
    Overview,
    /// Dense sweep over [14, 26] around threshold.
    Threshold,
    /// Sweep over [10, 30] for the g2 crossover.
    Bunching,
    /// Reduced Wigner functions at delta = G.
    Marginal,
    /// Critical report over G/eta = 20..100.
    Scaling,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Observables over a detuning range, one row per point.
    Sweep(SweepArgs),
    /// Wigner function on a square grid, or its x marginal with --reduced.
    Wigner(WignerArgs),
    /// Observables at delta = G over a list of pump rates, with power-law fits.
    Critical(CriticalArgs),
    /// One Langevin trajectory or an ensemble summary.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub g_over_eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Comma-separated subset of semiclassical, exact, boltzmann, langevin.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[command(flatten)]
    pub trajectory: TrajectoryArgs,
}

impl SweepArgs {
    pub fn layer(&self) -> SweepLayer {
        SweepLayer {
            g_over_eta: self.g_over_eta,
            delta_min: self.delta_min,
            delta_max: self.delta_max,
            points: self.points,
            methods: self.methods.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct WignerArgs {
    /// exact or boltzmann
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Points per axis (odd).
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Write the x marginal of both methods instead of the full grid.
    #[arg(long)]
    pub reduced: bool,
}

impl WignerArgs {
    pub fn layer(&self) -> WignerLayer {
        WignerLayer {
            method: self.method.clone(),
            delta: self.delta,
            g: self.g,
            eta: self.eta,
            half_width: self.half_width,
            resolution: self.resolution,
            reduced: self.reduced.then_some(true),
        }
    }
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    /// Comma-separated G/eta values.
    #[arg(long, value_delimiter = ',')]
    pub g_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[command(flatten)]
    pub trajectory: TrajectoryArgs,
}

impl CriticalArgs {
    pub fn layer(&self) -> CriticalLayer {
        CriticalLayer {
            g_grid: self.g_grid.clone(),
            methods: self.methods.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// single or ensemble
    #[arg(long)]
    pub mode: Option<String>,
    /// Drop the noise terms (single trajectories only).
    #[arg(long)]
    pub no_noise: bool,
    /// Noise stream of the single trajectory.
    #[arg(long)]
    pub index: Option<usize>,
    #[command(flatten)]
    pub trajectory: TrajectoryArgs,
}

impl SimulateArgs {
    pub fn layer(&self) -> SimulateLayer {
        SimulateLayer {
            delta: self.delta,
            g: self.g,
            eta: self.eta,
            mode: self.mode.clone(),
            noise: self.no_noise.then_some(false),
            index: self.index,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_burn: Option<f64>,
    #[arg(long)]
    pub t_sample: Option<f64>,
    #[arg(long)]
    pub sample_stride: Option<usize>,
    #[arg(long)]
    pub n_traj: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// ito_euler_maruyama or stratonovich_heun
    #[arg(long)]
    pub scheme: Option<String>,
    /// full_complex, full_quadrature or reduced_critical
    #[arg(long)]
    pub system: Option<String>,
}

impl TrajectoryArgs {
    pub fn layer(&self) -> TrajectoryLayer {
        TrajectoryLayer {
            dt: self.dt,
            t_burn: self.t_burn,
            t_sample: self.t_sample,
            sample_stride: self.sample_stride,
            n_traj: self.n_traj,
            seed: self.seed,
            scheme: self.scheme.clone(),
            system: self.system.clone(),
        }
    }
}

//! `mesh-anneal`: switching campaigns, capability sweeps, target
//! distributions, heater calibration, chip-length estimates and switch
//! telemetry from one binary.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 a run missed its
//! threshold under `--strict`, 3 a heater calibration was degenerate.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mesh_anneal::Architecture;

use crate::config::{CampaignConfig, ModeName};

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_THRESHOLD: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;

#[derive(Parser)]
#[command(name = "mesh-anneal", version, about = "Programmable interferometer campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Broadband port-to-port switching over a wavelength table.
    Switch(Common),
    /// Switching capability over a transmission grid, per architecture.
    Sweep(Common),
    /// Anneal toward an arbitrary output distribution.
    Target(Common),
    /// Fit heater laws to current sweeps and write a heater model.
    Calibrate(CalibrateArgs),
    /// Compare chip lengths of the three layouts.
    Geometry(GeometryArgs),
    /// Heater switch counts of a full campaign.
    Telemetry(TelemetryArgs),
}

/// Flags shared by the campaign commands; they override the config file.
#[derive(Args, Clone, Default)]
pub struct Common {
    /// Campaign configuration document (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Exit with code 2 when any run misses the threshold.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeName>,
    /// `et` or `clements`.
    #[arg(long)]
    arch: Option<Architecture>,
    #[arg(long)]
    threshold: Option<f64>,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<CampaignConfig> {
        let mut c = match &self.config {
            Some(p) => CampaignConfig::load(p)?,
            None => CampaignConfig::default(),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(r) = self.restarts {
            c.restarts = r;
        }
        if let Some(m) = self.mode {
            c.mode = m;
        }
        if let Some(a) = self.arch {
            c.architecture = a;
            c.sweep.architectures = vec![a];
        }
        if let Some(t) = self.threshold {
            c.threshold = t;
        }
        Ok(c)
    }
}

#[derive(Args)]
pub struct CalibrateArgs {
    /// One sweep file per heater, in heater order.
    #[arg(required = true)]
    sweeps: Vec<PathBuf>,
    /// Where to write the fitted heater model.
    #[arg(long, default_value = "results/heater_model.json")]
    model: PathBuf,
    /// Output port whose power is fitted.
    #[arg(long, default_value_t = 0)]
    port: usize,
    /// Milliamperes per current unit; defaults to 26.1 mA per full turn of
    /// the strongest tabulated heater.
    #[arg(long)]
    ma_per_unit: Option<f64>,
    /// Heater resistance in ohms written to the model.
    #[arg(long, default_value_t = mesh_anneal::hardware::CHIP_RESISTANCE_OHM)]
    resistance: f64,
}

#[derive(Args)]
pub struct GeometryArgs {
    #[command(flatten)]
    common: Common,
    /// Bend radius (mm).
    #[arg(long)]
    radius: Option<f64>,
    /// Port pitch (um).
    #[arg(long)]
    pitch: Option<f64>,
    /// Heater length (mm).
    #[arg(long)]
    heater_length: Option<f64>,
    /// Coupler gap (um).
    #[arg(long)]
    gap: Option<f64>,
    /// Coupler interaction length (mm).
    #[arg(long)]
    interaction: Option<f64>,
    #[arg(long)]
    modes: Option<usize>,
}

#[derive(Args)]
pub struct TelemetryArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    heaters: Option<usize>,
    #[arg(long)]
    wavelengths: Option<usize>,
    #[arg(long)]
    inputs: Option<usize>,
    #[arg(long)]
    outputs: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("MESH_ANNEAL_THREADS") {
        let n: usize =
            v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
                anyhow::anyhow!("MESH_ANNEAL_THREADS must be a positive integer, got `{v}`")
            })?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    let degenerate = err.chain().any(|e| {
        matches!(e.downcast_ref::<mesh_anneal::Error>(), Some(mesh_anneal::Error::Unidentifiable(_)))
    });
    if degenerate {
        EXIT_DEGENERATE
    } else {
        EXIT_CONFIG
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Switch(c) => commands::switch(c),
        Command::Sweep(c) => commands::sweep(c),
        Command::Target(c) => commands::target(c),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::Geometry(a) => commands::geometry(a),
        Command::Telemetry(a) => commands::telemetry(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

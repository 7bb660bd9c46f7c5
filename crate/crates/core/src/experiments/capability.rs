use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_switch, Mode};
use crate::annealer::AnnealConfig;
use crate::error::{Error, Result};
use crate::mesh::{build_mesh, sample_transmissions, Architecture, MeshLayout};
use crate::rng::derive_seed;
use crate::table::{fmt_float, CsvTable};

/// Jittered sweeps draw each coupler from `T +- 0.15 * scale`.
pub const JITTER_HALF_WIDTH_SCALE: f64 = 0.15;
const JITTER_STREAM: u64 = 0x6a69_7474_6572;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    pub n_modes: usize,
    /// A switch converges when its best infidelity is below this.
    pub threshold: f64,
    pub restarts: usize,
    /// When set, couplers are sampled around each grid value instead of
    /// taking it uniformly.
    pub jitter_scale: Option<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { n_modes: 8, threshold: 1e-3, restarts: 3, jitter_scale: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilityRecord {
    pub architecture: Architecture,
    pub input: usize,
    pub transmission: f64,
    /// `worst_infidelity < threshold`.
    pub capable: bool,
    pub worst_infidelity: f64,
    /// Best infidelity reached for each output port.
    pub per_output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilityMap {
    pub threshold: f64,
    pub records: Vec<CapabilityRecord>,
}

impl CapabilityMap {
    pub fn get(
        &self,
        architecture: Architecture,
        input: usize,
        transmission: f64,
    ) -> Option<&CapabilityRecord> {
        self.records
            .iter()
            .find(|r| r.architecture == architecture && r.input == input && r.transmission == transmission)
    }

    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["architecture", "input", "T", "capable", "worst_infidelity"]);
        for r in &self.records {
            t.push_row(vec![
                r.architecture.short_name().to_owned(),
                r.input.to_string(),
                fmt_float(r.transmission),
                r.capable.to_string(),
                fmt_float(r.worst_infidelity),
            ]);
        }
        t
    }

    /// One row per `(architecture, input, T, output)`.
    pub fn to_long_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["architecture", "input", "T", "output", "best_infidelity", "converged"]);
        for r in &self.records {
            for (o, v) in r.per_output.iter().enumerate() {
                t.push_row(vec![
                    r.architecture.short_name().to_owned(),
                    r.input.to_string(),
                    fmt_float(r.transmission),
                    o.to_string(),
                    fmt_float(*v),
                    (*v < self.threshold).to_string(),
                ]);
            }
        }
        t
    }
}

/// Upper bound on the power a balanced-or-not Clements mesh with an even
/// number of modes can move from input 0 to output `N - 1`: only light
/// crossing at the first MZI can get there, and one MZI crosses at most
/// `4T(1 - T)`.
pub fn clements_corner_bound(transmission: f64) -> f64 {
    4.0 * transmission * (1.0 - transmission)
}

fn sweep_mesh(
    architecture: Architecture,
    transmission: f64,
    options: &SweepOptions,
    seed: u64,
) -> Result<MeshLayout> {
    let uniform = build_mesh(architecture, options.n_modes, transmission)?;
    match options.jitter_scale {
        None => Ok(uniform),
        Some(scale) => {
            let ts = sample_transmissions(
                transmission,
                JITTER_HALF_WIDTH_SCALE * scale,
                uniform.blocks().len(),
                derive_seed(seed, &[JITTER_STREAM, transmission.to_bits()]),
            )?;
            build_mesh(architecture, options.n_modes, ts)
        }
    }
}

/// Decides, for each `(input, T)`, whether switching to every output
/// converges below the threshold within the budget (best of
/// `options.restarts` seeded restarts).
///
/// Restart `r` of a run uses the same stream whatever the restart count,
/// so raising the count can only turn verdicts from not capable to capable.
pub fn sweep_capability(
    architecture: Architecture,
    t_grid: &[f64],
    inputs: &[usize],
    options: &SweepOptions,
    config: &AnnealConfig,
) -> Result<CapabilityMap> {
    if t_grid.is_empty() {
        return Err(Error::config("transmission grid is empty"));
    }
    if let Some(t) = t_grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::domain(format!("grid transmission {t} is outside [0, 1]")));
    }
    if !(options.threshold > 0.0) {
        return Err(Error::config(format!("threshold {} must be positive", options.threshold)));
    }
    let n = options.n_modes;
    if let Some(&bad) = inputs.iter().find(|&&i| i >= n) {
        return Err(Error::domain(format!("input port {bad} out of range for {n} modes")));
    }
    let meshes = t_grid
        .iter()
        .map(|&t| sweep_mesh(architecture, t, options, config.seed))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize, usize)> = inputs
        .iter()
        .flat_map(|&i| (0..t_grid.len()).flat_map(move |k| (0..n).map(move |o| (i, k, o))))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(input, k, output)| {
            let seed = derive_seed(
                config.seed,
                &[architecture as u64, input as u64, t_grid[k].to_bits(), output as u64],
            );
            let cfg = config.with_seed(seed);
            run_switch(&meshes[k], output, input, &cfg, &Mode::IdealPhase, options.restarts)
                .map(|o| o.best_infidelity())
        })
        .collect::<Result<Vec<f64>>>()?;

    let records = results
        .chunks(n)
        .zip(inputs.iter().flat_map(|&i| (0..t_grid.len()).map(move |k| (i, k))))
        .map(|(per_output, (input, k))| {
            let worst = per_output.iter().copied().fold(0.0, f64::max);
            CapabilityRecord {
                architecture,
                input,
                transmission: t_grid[k],
                capable: worst < options.threshold,
                worst_infidelity: worst,
                per_output: per_output.to_vec(),
            }
        })
        .collect();
    Ok(CapabilityMap { threshold: options.threshold, records })
}

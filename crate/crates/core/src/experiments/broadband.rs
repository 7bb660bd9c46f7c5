use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_switch, Mode};
use crate::annealer::AnnealConfig;
use crate::error::{Error, Result};
use crate::mesh::{build_mesh, Architecture};
use crate::rng::derive_seed;
use crate::table::{fmt_float, CsvTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthEntry {
    pub wavelength_nm: f64,
    pub transmission: f64,
}

/// Coupler transmission at each operating wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<WavelengthEntry>", into = "Vec<WavelengthEntry>")]
pub struct WavelengthTable {
    entries: Vec<WavelengthEntry>,
}

impl WavelengthTable {
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        for &(w, t) in &entries {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::config(format!("wavelength {w} nm must be positive")));
            }
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::config(format!("transmission {t} at {w} nm is outside [0, 1]")));
            }
        }
        Ok(Self {
            entries: entries
                .into_iter()
                .map(|(wavelength_nm, transmission)| WavelengthEntry { wavelength_nm, transmission })
                .collect(),
        })
    }

    pub fn entries(&self) -> &[WavelengthEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Default for WavelengthTable {
    /// 920, 945 and 980 nm at T = 0.55, 0.65 and 0.75.
    fn default() -> Self {
        Self::new(vec![(920.0, 0.55), (945.0, 0.65), (980.0, 0.75)]).expect("valid defaults")
    }
}

impl TryFrom<Vec<WavelengthEntry>> for WavelengthTable {
    type Error = Error;

    fn try_from(v: Vec<WavelengthEntry>) -> Result<Self> {
        Self::new(v.into_iter().map(|e| (e.wavelength_nm, e.transmission)).collect())
    }
}

impl From<WavelengthTable> for Vec<WavelengthEntry> {
    fn from(t: WavelengthTable) -> Self {
        t.entries
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroadbandRecord {
    pub wavelength_nm: f64,
    pub transmission: f64,
    pub input: usize,
    pub output: usize,
    pub fidelity: f64,
    /// Evaluations spent by the best restart.
    pub iterations: usize,
    /// Improvements of the best restart, see [`AnnealRun::trace_changes`].
    ///
    /// [`AnnealRun::trace_changes`]: crate::annealer::AnnealRun::trace_changes
    pub trace: Vec<(usize, f64)>,
}

/// Fidelity grid over wavelength x input x output, in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroadbandSuite {
    pub records: Vec<BroadbandRecord>,
}

impl BroadbandSuite {
    pub fn get(&self, wavelength_nm: f64, input: usize, output: usize) -> Option<&BroadbandRecord> {
        self.records
            .iter()
            .find(|r| r.wavelength_nm == wavelength_nm && r.input == input && r.output == output)
    }

    pub fn min_fidelity(&self) -> Option<f64> {
        self.records.iter().map(|r| r.fidelity).min_by(f64::total_cmp)
    }

    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["wavelength", "input", "output", "fidelity", "iterations"]);
        for r in &self.records {
            t.push_row(vec![
                r.wavelength_nm.to_string(),
                r.input.to_string(),
                r.output.to_string(),
                fmt_float(r.fidelity),
                r.iterations.to_string(),
            ]);
        }
        t
    }
}

/// Switches every input in `inputs` to every output, once per wavelength,
/// on a mesh rebuilt with that wavelength's transmission.
///
/// Run seeds depend on `(T, input, output)` only, so relabelling or
/// reordering wavelengths leaves each run unchanged.
pub fn run_broadband_suite(
    architecture: Architecture,
    n_modes: usize,
    wavelengths: &WavelengthTable,
    inputs: &[usize],
    config: &AnnealConfig,
    mode: &Mode,
    restarts: usize,
) -> Result<BroadbandSuite> {
    if wavelengths.is_empty() {
        return Err(Error::config("wavelength table is empty"));
    }
    let meshes = wavelengths
        .entries()
        .iter()
        .map(|e| build_mesh(architecture, n_modes, e.transmission))
        .collect::<Result<Vec<_>>>()?;
    if let Some(&bad) = inputs.iter().find(|&&i| i >= n_modes) {
        return Err(Error::domain(format!("input port {bad} out of range for {n_modes} modes")));
    }
    let jobs: Vec<(usize, usize, usize)> = (0..meshes.len())
        .flat_map(|w| inputs.iter().flat_map(move |&i| (0..n_modes).map(move |o| (w, i, o))))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(w, input, output)| {
            let entry = wavelengths.entries()[w];
            let seed = derive_seed(config.seed, &[entry.transmission.to_bits(), input as u64, output as u64]);
            let out = run_switch(&meshes[w], output, input, &config.with_seed(seed), mode, restarts)?;
            Ok(BroadbandRecord {
                wavelength_nm: entry.wavelength_nm,
                transmission: entry.transmission,
                input,
                output,
                fidelity: out.run.best_fidelity,
                iterations: out.run.evaluations,
                trace: out.run.trace_changes(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BroadbandSuite { records })
}

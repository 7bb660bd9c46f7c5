//! End-to-end campaigns: switching, broadband suites, capability sweeps,
//! arbitrary target distributions and chip-length estimates.

mod broadband;
mod capability;
mod geometry;

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

pub use broadband::{run_broadband_suite, BroadbandRecord, BroadbandSuite, WavelengthTable};
pub use capability::{
    clements_corner_bound, sweep_capability, CapabilityMap, CapabilityRecord, SweepOptions,
    JITTER_HALF_WIDTH_SCALE,
};
pub use geometry::{estimate_length, s_bend_length, ConnectionStyle, GeometrySpec, LengthReport};

use crate::annealer::{optimize, overlap, AnnealConfig, AnnealRun};
use crate::error::{Error, Result};
use crate::hardware::{
    dissipated_power, hardware_objective, quantize_currents, HeaterModel, SwitchTelemetry,
};
use crate::mesh::{MeshLayout, PowerDistribution};
use crate::rng::derive_seed;

/// How the optimizer's coordinates reach the mesh.
#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    /// Coordinates are the phases themselves.
    IdealPhase,
    /// Coordinates are heater drive levels mapped to currents, then through
    /// crosstalk, quantization and offsets to phases.
    Hardware(HeaterModel),
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::IdealPhase => "ideal",
            Mode::Hardware(_) => "hardware",
        }
    }
}

/// Extra results of a hardware-mode run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareReport {
    /// Quantized currents (mA) at the best point.
    pub currents: Vec<f64>,
    pub total_power_w: f64,
    pub power_per_heater_w: Vec<f64>,
    /// Heater settings changed over every evaluation of every restart.
    pub telemetry: SwitchTelemetry,
    /// Heaters whose requested current exceeded the source limit.
    pub clipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchOutcome {
    /// Best of the restarts.
    pub run: AnnealRun,
    /// Best infidelity of each restart, in restart order.
    pub restart_infidelities: Vec<f64>,
    pub hardware: Option<HardwareReport>,
}

impl SwitchOutcome {
    pub fn best_infidelity(&self) -> f64 {
        self.run.best_infidelity()
    }
}

/// Seed of restart `r` of a run whose config carries `base`.
pub fn restart_seed(base: u64, restart: usize) -> u64 {
    derive_seed(base, &[restart as u64])
}

/// Anneals the mesh so that light entering `input_port` exits as `target`.
/// Runs `restarts` independent seeded restarts and keeps the best.
pub fn run_target_distribution(
    mesh: &MeshLayout,
    target: &PowerDistribution,
    input_port: usize,
    config: &AnnealConfig,
    mode: &Mode,
    restarts: usize,
) -> Result<SwitchOutcome> {
    if target.len() != mesh.n_modes() {
        return Err(Error::contract(format!(
            "target has {} ports, mesh has {} modes",
            target.len(),
            mesh.n_modes()
        )));
    }
    if input_port >= mesh.n_modes() {
        return Err(Error::domain(format!(
            "input port {input_port} out of range for {} modes",
            mesh.n_modes()
        )));
    }
    if restarts == 0 {
        return Err(Error::config("`restarts` must be at least 1"));
    }
    let base = config.with_dims(mesh.n_phases());
    base.validate()?;
    let mut runs = Vec::with_capacity(restarts);
    let mut telemetry = match mode {
        Mode::Hardware(model) => Some(SwitchTelemetry::new(model.n_heaters())),
        Mode::IdealPhase => None,
    };
    for r in 0..restarts {
        let cfg = base.with_seed(restart_seed(config.seed, r));
        let run = match mode {
            Mode::IdealPhase => {
                let objective = |phases: &[f64]| match mesh.propagate(phases, input_port) {
                    Ok(p) => 1.0 - overlap(p.as_slice(), target.as_slice()),
                    Err(_) => f64::NAN,
                };
                optimize(objective, &cfg, None)?
            }
            Mode::Hardware(model) => {
                let inner = hardware_objective(mesh, model, target, input_port)?;
                let state = RefCell::new((None::<Vec<f64>>, SwitchTelemetry::new(model.n_heaters())));
                let objective = |drive: &[f64]| {
                    let currents = model.drive_currents(drive);
                    let applied = quantize_currents(&currents, model).currents;
                    let mut s = state.borrow_mut();
                    let changed = match &s.0 {
                        Some(prev) => SwitchTelemetry::changed_heaters(prev, &applied),
                        None => (0..applied.len()).collect(),
                    };
                    s.1.record_switch(&changed).expect("indices come from the model");
                    s.0 = Some(applied);
                    inner(&currents)
                };
                let run = optimize(objective, &cfg, None)?;
                if let Some(t) = telemetry.as_mut() {
                    t.merge(&state.into_inner().1)?;
                }
                run
            }
        };
        runs.push(run);
    }
    let restart_infidelities: Vec<f64> = runs.iter().map(AnnealRun::best_infidelity).collect();
    let best_idx = restart_infidelities
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("restarts >= 1");
    let run = runs.swap_remove(best_idx);
    let hardware = match mode {
        Mode::IdealPhase => None,
        Mode::Hardware(model) => {
            let q = quantize_currents(&model.drive_currents(&run.best_phases), model);
            let (total, per) = dissipated_power(&q.currents, model)?;
            Some(HardwareReport {
                currents: q.currents,
                total_power_w: total,
                power_per_heater_w: per,
                telemetry: telemetry.expect("hardware mode tracks telemetry"),
                clipped: q.clipped,
            })
        }
    };
    Ok(SwitchOutcome { run, restart_infidelities, hardware })
}

/// Routes all power from `input_port` to `target_output`.
pub fn run_switch(
    mesh: &MeshLayout,
    target_output: usize,
    input_port: usize,
    config: &AnnealConfig,
    mode: &Mode,
    restarts: usize,
) -> Result<SwitchOutcome> {
    let target = PowerDistribution::indicator(mesh.n_modes(), target_output)?;
    run_target_distribution(mesh, &target, input_port, config, mode, restarts)
}

/// Output fidelity of a finished run, re-evaluated from its best point.
pub fn evaluate_fidelity(
    mesh: &MeshLayout,
    phases: &[f64],
    input_port: usize,
    target: &PowerDistribution,
) -> Result<f64> {
    let p = mesh.propagate(phases, input_port)?;
    Ok(overlap(p.as_slice(), target.as_slice()))
}

/// Largest power found at `output` for light entering `input_port`, by
/// exact coordinate ascent from `starts` random phase vectors.
///
/// The output amplitude is `a + b exp(i phi_k)` in each single phase, so
/// every coordinate step jumps to that coordinate's exact optimum
/// `arg(a) - arg(b)`. Sweeps stop when a full pass gains less than `1e-15`.
/// Independent of the annealer; used to tell structural power limits from
/// optimizer shortfalls.
pub fn coordinate_ascent_switch(
    mesh: &MeshLayout,
    input_port: usize,
    output: usize,
    starts: usize,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    use num_complex::Complex64;
    use rand::Rng;
    use std::f64::consts::{PI, TAU};

    let n = mesh.n_modes();
    if input_port >= n || output >= n {
        return Err(Error::domain(format!("ports ({input_port}, {output}) out of range for {n} modes")));
    }
    let amplitude = |phases: &[f64]| -> Result<Complex64> {
        let mut field = vec![Complex64::new(0.0, 0.0); n];
        field[input_port] = Complex64::new(1.0, 0.0);
        mesh.propagate_amplitudes(phases, &mut field)?;
        Ok(field[output])
    };
    let mut rng = crate::rng::seeded(seed);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for _ in 0..starts.max(1) {
        let mut phases: Vec<f64> = (0..mesh.n_phases()).map(|_| rng.random_range(0.0..TAU)).collect();
        let mut power = amplitude(&phases)?.norm_sqr();
        for _ in 0..10_000 {
            let before = power;
            for k in 0..phases.len() {
                phases[k] = 0.0;
                let plus = amplitude(&phases)?;
                phases[k] = PI;
                let minus = amplitude(&phases)?;
                let (a, b) = ((plus + minus) / 2.0, (plus - minus) / 2.0);
                phases[k] = (a.arg() - b.arg()).rem_euclid(TAU);
            }
            power = amplitude(&phases)?.norm_sqr();
            if power - before < 1e-15 {
                break;
            }
        }
        if power > best.0 {
            best = (power, phases);
        }
    }
    Ok(best)
}

/// Bookkeeping of a full experimental campaign where every step drives all
/// heaters: `wavelengths * inputs * outputs * iterations` reconfigurations.
pub fn campaign_telemetry(
    n_heaters: usize,
    wavelengths: usize,
    inputs: usize,
    outputs: usize,
    iterations: usize,
) -> SwitchTelemetry {
    let mut t = SwitchTelemetry::new(n_heaters);
    for _ in 0..wavelengths * inputs * outputs * iterations {
        t.record_full_reconfiguration();
    }
    t
}

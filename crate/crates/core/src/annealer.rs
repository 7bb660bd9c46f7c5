//! Overlap fidelity between power distributions and a Very Fast Simulated
//! Annealing (VFSA) optimizer over phase vectors.
//!
//! The optimizer perturbs every coordinate of the phase vector on each
//! iteration using the VFSA generation law, cools with
//! `T_k = T_0 exp(-c k^(1/D))`, accepts with the Metropolis rule at a
//! separately scheduled acceptance temperature and reports the best state
//! seen so far.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{PhaseVector, PowerDistribution};
use crate::rng::{seeded, StreamRng};
use crate::table::{fmt_float, CsvTable};

/// `(sum_j sqrt(x_j y_j))^2`, clamped to `[0, 1]`. No validation.
#[inline]
pub fn overlap(x: &[f64], y: &[f64]) -> f64 {
    let s: f64 = x.iter().zip(y).map(|(a, b)| (a * b).sqrt()).sum();
    (s * s).clamp(0.0, 1.0)
}

pub fn fidelity(x: &PowerDistribution, y: &PowerDistribution) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::domain(format!(
            "distributions have different lengths ({} and {})",
            x.len(),
            y.len()
        )));
    }
    Ok(overlap(x.as_slice(), y.as_slice()))
}

pub fn infidelity(x: &PowerDistribution, y: &PowerDistribution) -> Result<f64> {
    fidelity(x, y).map(|f| 1.0 - f)
}

/// `t0 * exp(-c * k^(1/dims))`.
pub fn vfsa_temperature(k: u64, t0: f64, c: f64, dims: usize) -> f64 {
    t0 * (-c * (k as f64).powf(1.0 / dims.max(1) as f64)).exp()
}

/// Maps a uniform draw `u` in `[0, 1]` to a VFSA step in `[-1, 1]`:
/// `sgn(u - 1/2) * temp * ((1 + 1/temp)^|2u - 1| - 1)`.
#[inline]
pub fn vfsa_step(u: f64, temp: f64) -> f64 {
    let a = (2.0 * u - 1.0).abs();
    let mag = if a >= 1.0 {
        1.0
    } else {
        // temp^(1-a) (1 + temp)^a - temp, stable when temp underflows.
        let temp = temp.max(f64::MIN_POSITIVE);
        ((temp.ln() + a * (1.0 / temp).ln_1p()).exp() - temp).clamp(0.0, 1.0)
    };
    if u > 0.5 {
        mag
    } else if u < 0.5 {
        -mag
    } else {
        0.0
    }
}

#[inline]
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Perturbs every coordinate by a full-circle-scaled VFSA step and wraps
/// into `[0, 2pi)`.
pub fn vfsa_propose(phases: &[f64], temp: f64, rng: &mut impl Rng) -> PhaseVector {
    phases.iter().map(|&p| wrap_phase(p + TAU * vfsa_step(rng.random::<f64>(), temp))).collect()
}

/// Metropolis rule: always accept improvements, otherwise accept with
/// probability `exp(-delta / temp)`.
pub fn metropolis_accept(delta: f64, temp: f64, rng: &mut impl Rng) -> bool {
    if delta <= 0.0 {
        return true;
    }
    rng.random::<f64>() < (-delta / temp.max(f64::MIN_POSITIVE)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealConfig {
    /// Initial generation temperature.
    pub t0: f64,
    /// Generation cooling coefficient.
    pub c: f64,
    /// Number of optimized parameters.
    pub dims: usize,
    /// `D` in the `k^(1/D)` cooling exponent.
    pub schedule_dims: usize,
    pub iterations: usize,
    pub seed: u64,
    pub accept_t0: f64,
    pub accept_c: f64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            t0: 1.0,
            c: 2.0,
            dims: 56,
            schedule_dims: 2,
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
            accept_t0: 0.1,
            accept_c: 2.0,
        }
    }
}

/// Iterations giving a 20 000-evaluation budget (the initial point counts).
pub const DEFAULT_ITERATIONS: usize = 19_999;

impl AnnealConfig {
    pub fn validate(&self) -> Result<()> {
        let positive =
            [("t0", self.t0), ("c", self.c), ("accept_t0", self.accept_t0), ("accept_c", self.accept_c)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("anneal config `{name}` must be positive, got {v}")));
            }
        }
        if self.dims == 0 || self.schedule_dims == 0 {
            return Err(Error::config("anneal config `dims` and `schedule_dims` must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(Error::config("anneal config `iterations` must be at least 1"));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_dims(self, dims: usize) -> Self {
        Self { dims, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealRun {
    /// `(iteration, best infidelity so far)`, one entry per evaluation.
    pub trace: Vec<(usize, f64)>,
    pub best_phases: PhaseVector,
    pub best_fidelity: f64,
    pub evaluations: usize,
}

impl AnnealRun {
    pub fn best_infidelity(&self) -> f64 {
        self.trace.last().map_or(1.0, |&(_, v)| v)
    }

    pub fn trace_table(&self, comment: Option<String>) -> CsvTable {
        Self::table_of(&self.trace, comment)
    }

    /// The trace restricted to its first entry, every improvement and the
    /// final iteration. The full trace is the step function through these.
    pub fn trace_changes(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for &(k, v) in &self.trace {
            if out.last().is_none_or(|&(_, prev)| v < prev) {
                out.push((k, v));
            }
        }
        if let (Some(&last), Some(&(k, _))) = (self.trace.last(), out.last()) {
            if last.0 != k {
                out.push(last);
            }
        }
        out
    }

    pub fn changes_table(&self, comment: Option<String>) -> CsvTable {
        Self::table_of(&self.trace_changes(), comment)
    }

    fn table_of(trace: &[(usize, f64)], comment: Option<String>) -> CsvTable {
        let mut t = CsvTable::new(["iteration", "best_infidelity"]);
        if let Some(c) = comment {
            t = t.with_comment(c);
        }
        for &(k, v) in trace {
            t.push_row(vec![k.to_string(), fmt_float(v)]);
        }
        t
    }

    /// Sidecar document holding the best phases, fidelity, config and seed.
    pub fn sidecar(&self, config: &AnnealConfig) -> serde_json::Value {
        serde_json::json!({
            "best_phases": self.best_phases,
            "best_fidelity": self.best_fidelity,
            "best_infidelity": self.best_infidelity(),
            "evaluations": self.evaluations,
            "config": config,
            "seed": config.seed,
        })
    }
}

fn checked(iteration: usize, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteObjective { iteration, value })
    }
}

/// Minimizes `objective` over `[0, 2pi)^D` where `D = config.dims`.
///
/// Starts from `initial` when given, otherwise from a uniformly random point
/// drawn from the run's stream.
pub fn optimize<F>(objective: F, config: &AnnealConfig, initial: Option<&[f64]>) -> Result<AnnealRun>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    let dims = config.dims;
    let mut rng: StreamRng = seeded(config.seed);
    let mut current: PhaseVector = match initial {
        Some(p) if p.len() != dims => {
            return Err(Error::contract(format!(
                "initial point has {} coordinates, config expects {dims}",
                p.len()
            )))
        }
        Some(p) => p.iter().map(|&x| wrap_phase(x)).collect(),
        None => (0..dims).map(|_| rng.random_range(0.0..TAU)).collect(),
    };
    let mut current_value = checked(0, objective(&current))?;
    let mut best = current.clone();
    let mut best_value = current_value;
    let mut trace = Vec::with_capacity(config.iterations + 1);
    trace.push((0, best_value));

    for k in 1..=config.iterations {
        let gen_temp = vfsa_temperature(k as u64, config.t0, config.c, config.schedule_dims);
        let acc_temp = vfsa_temperature(k as u64, config.accept_t0, config.accept_c, config.schedule_dims);
        let candidate = vfsa_propose(&current, gen_temp, &mut rng);
        let value = checked(k, objective(&candidate))?;
        if value < best_value {
            best_value = value;
            best.clone_from(&candidate);
        }
        if metropolis_accept(value - current_value, acc_temp, &mut rng) {
            current = candidate;
            current_value = value;
        }
        trace.push((k, best_value));
    }

    Ok(AnnealRun {
        trace,
        best_phases: best,
        best_fidelity: 1.0 - best_value,
        evaluations: config.iterations + 1,
    })
}

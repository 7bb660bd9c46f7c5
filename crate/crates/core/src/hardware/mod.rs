//! Thermo-optic actuation: currents to phases through a quadratic heater law
//! with transverse thermal crosstalk, current quantization, dissipated power,
//! calibration fits and switch counting.
//!
//! Phase at shifter `i` for heater currents `x` (in current units):
//!
//! ```text
//! phi_i = phi0_i + sum_j alpha[i][j] * x_j^2      (wrapped to [0, 2pi))
//! ```
//!
//! Currents are supplied in mA and converted to current units by
//! `ma_per_unit`.

mod calibration;
mod telemetry;

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use calibration::{fit_heater_model, synthetic_sweep, CalibrationSweep, HeaterFit};
pub use telemetry::SwitchTelemetry;

use crate::annealer::{overlap, wrap_phase};
use crate::error::{Error, Result};
use crate::mesh::{MeshLayout, PhaseVector, PowerDistribution};

/// Fitted `(alpha, phi0, A, B)` for the three heaters of one column,
/// all observed at the phase of the first.
pub const TABLE_ONE: [TableRow; 3] = [
    TableRow { alpha: 1.27e-4, phi0: 0.104, a: 0.68, b: 0.30 },
    TableRow { alpha: 3.85e-5, phi0: 0.115, a: 0.68, b: 0.32 },
    TableRow { alpha: 2.03e-5, phi0: 0.169, a: 0.68, b: 0.32 },
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub alpha: f64,
    pub phi0: f64,
    pub a: f64,
    pub b: f64,
}

/// Direct-heater strength divided by first- and second-neighbour crosstalk.
pub const NEIGHBOR_RATIO: f64 = 3.26;
pub const NEXT_NEIGHBOR_RATIO: f64 = 6.35;

/// Current giving a full `2pi` on a chip heater, and the heater resistance
/// it was measured with.
pub const TWO_PI_CURRENT_MA: f64 = 26.1;
pub const CHIP_RESISTANCE_OHM: f64 = 480.0;
pub const CHIP_CURRENT_MAX_MA: f64 = 60.0;
pub const CHIP_CURRENT_STEP_MA: f64 = 0.01;

/// mA per current unit that makes `alpha * (26.1 mA / scale)^2 = 2pi`.
pub fn two_pi_scale(alpha: f64) -> f64 {
    TWO_PI_CURRENT_MA * (alpha / TAU).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeaterModel {
    n: usize,
    /// Row-major `n x n`.
    alpha: Vec<f64>,
    phi0: Vec<f64>,
    resistance: Vec<f64>,
    current_max: f64,
    current_step: f64,
    ma_per_unit: f64,
}

impl HeaterModel {
    pub fn new(
        alpha: Vec<f64>,
        phi0: Vec<f64>,
        resistance: Vec<f64>,
        current_max: f64,
        current_step: f64,
        ma_per_unit: f64,
    ) -> Result<Self> {
        let n = phi0.len();
        if n == 0 {
            return Err(Error::config("heater model has no heaters"));
        }
        if alpha.len() != n * n || resistance.len() != n {
            return Err(Error::config(format!(
                "heater model for {n} heaters needs {} alpha entries and {n} resistances, got {} and {}",
                n * n,
                alpha.len(),
                resistance.len()
            )));
        }
        for i in 0..n {
            let d = alpha[i * n + i];
            if !(d > 0.0) {
                return Err(Error::config(format!("alpha[{i}][{i}] = {d} must be positive")));
            }
            for j in (0..n).filter(|&j| j != i) {
                let a = alpha[i * n + j];
                if !(a >= 0.0 && a < d) {
                    return Err(Error::config(format!(
                        "alpha[{i}][{j}] = {a} must lie in [0, alpha[{i}][{i}])"
                    )));
                }
            }
        }
        if let Some((i, r)) = resistance.iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
            return Err(Error::config(format!("resistance[{i}] = {r} must be positive")));
        }
        if phi0.iter().any(|p| !p.is_finite()) {
            return Err(Error::config("phi0 entries must be finite"));
        }
        for (name, v) in
            [("current_max", current_max), ("current_step", current_step), ("ma_per_unit", ma_per_unit)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} = {v} must be positive")));
            }
        }
        Ok(Self { n, alpha, phi0, resistance, current_max, current_step, ma_per_unit })
    }

    /// Independent heaters with the given per-heater strengths.
    pub fn diagonal(alpha_diag: &[f64], phi0: Vec<f64>, resistance: f64, ma_per_unit: f64) -> Result<Self> {
        let n = alpha_diag.len();
        let mut alpha = vec![0.0; n * n];
        for (i, &a) in alpha_diag.iter().enumerate() {
            alpha[i * n + i] = a;
        }
        Self::new(alpha, phi0, vec![resistance; n], CHIP_CURRENT_MAX_MA, CHIP_CURRENT_STEP_MA, ma_per_unit)
    }

    /// Chip model for `layout`: table strength on the diagonal, neighbour
    /// crosstalk within each heater column, table offsets tiled across
    /// heaters and the 26.1 mA full-turn current scale.
    pub fn chip_default(layout: &MeshLayout) -> Result<Self> {
        let alpha_d = TABLE_ONE[0].alpha;
        let alpha = crosstalk_matrix_default(layout, alpha_d);
        let h = layout.n_phases();
        let phi0 = (0..h).map(|i| TABLE_ONE[i % TABLE_ONE.len()].phi0).collect();
        Self::new(
            alpha,
            phi0,
            vec![CHIP_RESISTANCE_OHM; h],
            CHIP_CURRENT_MAX_MA,
            CHIP_CURRENT_STEP_MA,
            two_pi_scale(alpha_d),
        )
    }

    /// Same model with crosstalk removed.
    pub fn without_crosstalk(&self) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            for j in (0..self.n).filter(|&j| j != i) {
                m.alpha[i * self.n + j] = 0.0;
            }
        }
        m
    }

    /// Same model with offsets drawn uniformly from `[0, 2pi)`.
    pub fn with_random_offsets(&self, seed: u64) -> Self {
        use rand::Rng;
        let mut rng = crate::rng::seeded(seed);
        let mut m = self.clone();
        for p in &mut m.phi0 {
            *p = rng.random_range(0.0..TAU);
        }
        m
    }

    pub fn n_heaters(&self) -> usize {
        self.n
    }

    pub fn alpha(&self, i: usize, j: usize) -> f64 {
        self.alpha[i * self.n + j]
    }

    pub fn phi0(&self) -> &[f64] {
        &self.phi0
    }

    pub fn resistance(&self) -> &[f64] {
        &self.resistance
    }

    pub fn current_max(&self) -> f64 {
        self.current_max
    }

    pub fn current_step(&self) -> f64 {
        self.current_step
    }

    pub fn ma_per_unit(&self) -> f64 {
        self.ma_per_unit
    }

    /// Current (mA) that turns heater `i` alone through a full `2pi`.
    pub fn full_turn_current(&self, i: usize) -> f64 {
        self.ma_per_unit * (TAU / self.alpha(i, i)).sqrt()
    }

    /// Maps drive coordinates `v_i` in `[0, 2pi)` to currents
    /// `x_i = I_2pi,i * sqrt(v_i / 2pi)`, so that without crosstalk heater
    /// `i` adds exactly `v_i` to its offset.
    pub fn drive_currents(&self, drive: &[f64]) -> Vec<f64> {
        drive
            .iter()
            .enumerate()
            .map(|(i, &v)| self.full_turn_current(i) * (wrap_phase(v) / TAU).sqrt())
            .collect()
    }

    /// Inverse of [`drive_currents`](Self::drive_currents) for currents up
    /// to one full turn.
    pub fn drive_from_currents(&self, currents: &[f64]) -> Vec<f64> {
        currents.iter().enumerate().map(|(i, &x)| TAU * (x / self.full_turn_current(i)).powi(2)).collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct HeaterModelDoc {
    alpha: Vec<f64>,
    phi0: Vec<f64>,
    resistance: Vec<f64>,
    current_max: f64,
    current_step: f64,
    #[serde(default = "one")]
    ma_per_unit: f64,
}

fn one() -> f64 {
    1.0
}

impl Serialize for HeaterModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HeaterModelDoc {
            alpha: self.alpha.clone(),
            phi0: self.phi0.clone(),
            resistance: self.resistance.clone(),
            current_max: self.current_max,
            current_step: self.current_step,
            ma_per_unit: self.ma_per_unit,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HeaterModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = HeaterModelDoc::deserialize(d)?;
        HeaterModel::new(
            doc.alpha,
            doc.phi0,
            doc.resistance,
            doc.current_max,
            doc.current_step,
            doc.ma_per_unit,
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Quantized currents and how many inputs had to be clipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub currents: Vec<f64>,
    pub clipped: usize,
}

/// Clips to `[0, current_max]` and rounds to the nearest multiple of
/// `current_step`. Non-finite inputs become 0 and count as clipped.
pub fn quantize_currents(currents: &[f64], model: &HeaterModel) -> Quantized {
    let step = model.current_step;
    let k_max = (model.current_max / step + 1e-9).floor();
    let mut clipped = 0;
    let out = currents
        .iter()
        .map(|&x| {
            if !x.is_finite() || x < 0.0 || x > model.current_max {
                clipped += 1;
            }
            let x = if x.is_finite() { x } else { 0.0 };
            (x / step).round().clamp(0.0, k_max) * step
        })
        .collect();
    Quantized { currents: out, clipped }
}

/// Phases before wrapping.
pub fn raw_phases_from_currents(currents: &[f64], model: &HeaterModel) -> Result<Vec<f64>> {
    let n = model.n;
    if currents.len() != n {
        return Err(Error::contract(format!(
            "heater model has {n} heaters, got {} currents",
            currents.len()
        )));
    }
    let sq: Vec<f64> = currents
        .iter()
        .map(|&x| {
            let u = x / model.ma_per_unit;
            u * u
        })
        .collect();
    Ok((0..n)
        .map(|i| {
            let row = &model.alpha[i * n..(i + 1) * n];
            model.phi0[i] + row.iter().zip(&sq).map(|(a, s)| a * s).sum::<f64>()
        })
        .collect())
}

pub fn phases_from_currents(currents: &[f64], model: &HeaterModel) -> Result<PhaseVector> {
    Ok(raw_phases_from_currents(currents, model)?.into_iter().map(wrap_phase).collect())
}

/// Crosstalk matrix for the heaters of `layout`: `alpha_diag` on the
/// diagonal, `alpha_diag / 3.26` for the nearest heater in the same column,
/// `alpha_diag / 6.35` for the next one, zero elsewhere.
pub fn crosstalk_matrix_default(layout: &MeshLayout, alpha_diag: f64) -> Vec<f64> {
    let h = layout.n_phases();
    let sites = layout.phase_sites();
    let mut alpha = vec![0.0; h * h];
    let mut by_column: Vec<Vec<(usize, usize)>> = vec![Vec::new(); layout.n_columns()];
    for (idx, &(col, top)) in sites.iter().enumerate() {
        by_column[col].push((top, idx));
    }
    for col in &mut by_column {
        col.sort_unstable();
        for (pos, &(_, i)) in col.iter().enumerate() {
            alpha[i * h + i] = alpha_diag;
            for (dist, ratio) in [(1, NEIGHBOR_RATIO), (2, NEXT_NEIGHBOR_RATIO)] {
                for other in [pos.checked_sub(dist), Some(pos + dist)].into_iter().flatten() {
                    if let Some(&(_, j)) = col.get(other) {
                        alpha[i * h + j] = alpha_diag / ratio;
                    }
                }
            }
        }
    }
    alpha
}

/// Electrical power per heater, `(x / 1000)^2 R`, in watts, and the total.
pub fn dissipated_power(currents: &[f64], model: &HeaterModel) -> Result<(f64, Vec<f64>)> {
    if currents.len() != model.n {
        return Err(Error::contract(format!(
            "heater model has {} heaters, got {} currents",
            model.n,
            currents.len()
        )));
    }
    let per: Vec<f64> =
        currents.iter().zip(&model.resistance).map(|(x, r)| (x / 1000.0).powi(2) * r).collect();
    Ok((per.iter().sum(), per))
}

/// Infidelity of the mesh output as a function of heater currents (mA):
/// quantize, map to phases, propagate from `input_port`, compare to `target`.
pub fn hardware_objective<'a>(
    mesh: &'a MeshLayout,
    model: &'a HeaterModel,
    target: &'a PowerDistribution,
    input_port: usize,
) -> Result<impl Fn(&[f64]) -> f64 + Send + Sync + 'a> {
    if mesh.n_phases() != model.n_heaters() {
        return Err(Error::contract(format!(
            "mesh has {} phase shifters but the heater model has {} heaters",
            mesh.n_phases(),
            model.n_heaters()
        )));
    }
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
    Ok(move |currents: &[f64]| {
        let q = quantize_currents(currents, model);
        match phases_from_currents(&q.currents, model).and_then(|p| mesh.propagate(&p, input_port)) {
            Ok(p) => 1.0 - overlap(p.as_slice(), target.as_slice()),
            Err(_) => f64::NAN,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, Architecture};

    fn single(alpha: f64, phi0: f64) -> HeaterModel {
        HeaterModel::diagonal(&[alpha], vec![phi0], 480.0, 1.0).unwrap()
    }

    #[test]
    fn quantize_rounds_and_clips() {
        let m = single(1e-3, 0.0);
        let q = quantize_currents(&[12.3456, 75.0, -1.0, f64::NAN, 0.004], &m);
        assert!((q.currents[0] - 12.35).abs() < 1e-12);
        assert!((q.currents[1] - 60.0).abs() < 1e-12);
        assert_eq!(q.currents[2], 0.0);
        assert_eq!(q.currents[3], 0.0);
        assert_eq!(q.currents[4], 0.0);
        assert_eq!(q.clipped, 3);
        let again = quantize_currents(&q.currents, &m);
        assert_eq!(again.currents, q.currents);
        assert_eq!(again.clipped, 0);
    }

    #[test]
    fn table_row_phase() {
        let m = single(1.27e-4, 0.104);
        let p = phases_from_currents(&[28.0], &m).unwrap();
        assert!((p[0] - (1.27e-4 * 784.0 + 0.104)).abs() < 1e-15);
        assert!((p[0] - 0.20357).abs() < 1e-5);
        assert_eq!(phases_from_currents(&[0.0], &m).unwrap(), vec![0.104]);
    }

    #[test]
    fn phases_wrap_and_check_length() {
        let m = single(1.0, 7.0);
        let p = phases_from_currents(&[0.0], &m).unwrap();
        assert!((p[0] - (7.0 - TAU)).abs() < 1e-12);
        assert!(matches!(phases_from_currents(&[0.0, 1.0], &m), Err(Error::Contract(_))));
    }

    #[test]
    fn diagonal_model_is_independent_heaters() {
        let m = HeaterModel::diagonal(&[1e-3, 2e-3, 5e-4], vec![0.1, 0.2, 0.3], 450.0, 1.0).unwrap();
        let x = [10.0, 20.0, 30.0];
        let p = phases_from_currents(&x, &m).unwrap();
        for i in 0..3 {
            let single = phases_from_currents(&[x[i]], &single(m.alpha(i, i), m.phi0()[i])).unwrap();
            assert!((p[i] - single[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn default_crosstalk_entries() {
        let mesh = build_mesh(Architecture::ErrorTolerant, 8, 0.65).unwrap();
        let a = crosstalk_matrix_default(&mesh, 1.27e-4);
        let h = mesh.n_phases();
        // Column 0 holds heaters 0..4 on pairs (0,1), (2,3), (4,5), (6,7).
        assert_eq!(a[0], 1.27e-4);
        assert!((a[1] - 3.896e-5).abs() < 1e-8);
        assert!((a[2] - 2.0e-5).abs() < 1e-7);
        assert_eq!(a[3], 0.0);
        assert!((a[0] / a[1] - 3.26).abs() < 1e-12);
        assert!((a[0] / a[2] - 6.35).abs() < 1e-12);
        // Symmetric within a column; nothing across columns.
        for i in 0..h {
            for j in 0..h {
                assert_eq!(a[i * h + j], a[j * h + i]);
            }
        }
        assert_eq!(a[4], 0.0);
        // Middle heater of a 3-heater column has two first neighbours.
        let row4: Vec<f64> = (0..h).map(|j| a[4 * h + j]).filter(|&v| v > 0.0).collect();
        assert_eq!(row4.len(), 3);
    }

    #[test]
    fn isolated_heater_has_only_diagonal() {
        let mesh = build_mesh(Architecture::ErrorTolerant, 3, 0.65).unwrap();
        let a = crosstalk_matrix_default(&mesh, 2.0);
        let h = mesh.n_phases();
        for i in 0..h {
            for j in 0..h {
                assert_eq!(a[i * h + j], if i == j { 2.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn power_examples() {
        let m = single(1e-4, 0.0);
        let (total, per) = dissipated_power(&[26.1], &m).unwrap();
        assert!((total - 0.3269808).abs() < 1e-7);
        assert_eq!(per.len(), 1);
        assert!(((total - 0.33) / 0.33).abs() < 0.01);
        assert_eq!(dissipated_power(&[0.0], &m).unwrap().0, 0.0);
        let two = HeaterModel::diagonal(&[1e-4, 1e-4], vec![0.0, 0.0], 450.0, 1.0).unwrap();
        assert!((dissipated_power(&[10.0, 10.0], &two).unwrap().0 - 0.09).abs() < 1e-15);
        assert!(dissipated_power(&[1.0, 2.0], &m).is_err());
    }

    #[test]
    fn chip_default_full_turn() {
        let mesh = build_mesh(Architecture::ErrorTolerant, 8, 0.65).unwrap();
        let m = HeaterModel::chip_default(&mesh).unwrap();
        assert_eq!(m.n_heaters(), 56);
        assert!((m.full_turn_current(0) - 26.1).abs() < 1e-9);
        let d = [0.0, 1.0, 3.0, 6.0];
        let back = m.drive_from_currents(&m.drive_currents(&d));
        for (a, b) in d.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let text = serde_json::to_string(&m).unwrap();
        let back: HeaterModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn model_validation() {
        assert!(
            HeaterModel::new(vec![1.0, 2.0, 0.0, 1.0], vec![0.0; 2], vec![1.0; 2], 60.0, 0.01, 1.0).is_err()
        );
        assert!(HeaterModel::new(vec![0.0], vec![0.0], vec![1.0], 60.0, 0.01, 1.0).is_err());
        assert!(HeaterModel::new(vec![1.0], vec![0.0], vec![0.0], 60.0, 0.01, 1.0).is_err());
        assert!(HeaterModel::new(vec![1.0], vec![0.0], vec![1.0], 60.0, 0.0, 1.0).is_err());
        let doc = r#"{"alpha":[1e-4],"phi0":[0.1],"resistance":[450],"current_max":60,"current_step":0.01}"#;
        let m: HeaterModel = serde_json::from_str(doc).unwrap();
        assert_eq!(m.ma_per_unit(), 1.0);
    }

    #[test]
    fn hardware_objective_checks_dimensions() {
        let mesh = build_mesh(Architecture::ErrorTolerant, 4, 0.65).unwrap();
        let small = single(1e-3, 0.0);
        let target = PowerDistribution::indicator(4, 1).unwrap();
        assert!(matches!(hardware_objective(&mesh, &small, &target, 0), Err(Error::Contract(_))));
        let m = HeaterModel::chip_default(&mesh).unwrap();
        assert!(hardware_objective(&mesh, &m, &target, 4).is_err());
        let wrong = PowerDistribution::indicator(3, 1).unwrap();
        assert!(hardware_objective(&mesh, &m, &wrong, 0).is_err());
    }

    #[test]
    fn zero_currents_give_offset_only_mesh() {
        let mesh = build_mesh(Architecture::ErrorTolerant, 4, 0.65).unwrap();
        let m = HeaterModel::chip_default(&mesh).unwrap();
        let target = PowerDistribution::indicator(4, 2).unwrap();
        let obj = hardware_objective(&mesh, &m, &target, 0).unwrap();
        let zero = vec![0.0; m.n_heaters()];
        let p = mesh.propagate(m.phi0(), 0).unwrap();
        let expect = 1.0 - overlap(p.as_slice(), target.as_slice());
        assert!((obj(&zero) - expect).abs() < 1e-15);
    }
}

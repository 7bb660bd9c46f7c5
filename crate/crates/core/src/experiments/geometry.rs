//! Chip length of a mesh built from s-bends and straight sections.
//!
//! Waveguides sit at the port pitch outside couplers and at the coupler
//! gap inside them, so entering or leaving a coupler displaces each guide
//! by `h = (pitch - gap) / 2`. Moving a guide from one coupler pair to the
//! neighbouring pair of the next column displaces it by `2h`. Any section
//! that hosts a phase shifter is at least one heater long.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{build_mesh, Architecture};
use crate::table::CsvTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometrySpec {
    pub bend_radius_mm: f64,
    pub port_pitch_um: f64,
    pub heater_length_mm: f64,
    pub coupler_gap_um: f64,
    /// Straight length of each coupler's interaction region.
    pub interaction_length_mm: f64,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            bend_radius_mm: 60.0,
            port_pitch_um: 127.0,
            heater_length_mm: 2.7,
            coupler_gap_um: 7.8,
            interaction_length_mm: 0.0,
        }
    }
}

impl GeometrySpec {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("bend_radius_mm", self.bend_radius_mm),
            ("port_pitch_um", self.port_pitch_um),
            ("heater_length_mm", self.heater_length_mm),
            ("coupler_gap_um", self.coupler_gap_um),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("geometry `{name}` must be positive, got {v}")));
            }
        }
        if !(self.interaction_length_mm >= 0.0 && self.interaction_length_mm.is_finite()) {
            return Err(Error::domain(format!(
                "geometry `interaction_length_mm` must be non-negative, got {}",
                self.interaction_length_mm
            )));
        }
        if self.port_pitch_um <= self.coupler_gap_um {
            return Err(Error::domain(format!(
                "port pitch {} um must exceed the coupler gap {} um",
                self.port_pitch_um, self.coupler_gap_um
            )));
        }
        Ok(())
    }

    /// Lateral displacement into or out of a coupler, in mm.
    pub fn coupler_offset_mm(&self) -> f64 {
        (self.port_pitch_um - self.coupler_gap_um) / 2.0 / 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionStyle {
    /// Guides return to the port pitch between every pair of coupler
    /// columns.
    Straight,
    /// Guides move directly between couplers of adjacent columns.
    Diagonal,
}

/// Horizontal length of an s-bend of lateral offset `h` made from two arcs
/// of radius `r`: `2 sqrt(h r - h^2 / 4)`.
pub fn s_bend_length(h: f64, r: f64) -> Result<f64> {
    if !(h >= 0.0) || !(r > 0.0) {
        return Err(Error::domain(format!("s-bend needs h >= 0 and r > 0, got h = {h}, r = {r}")));
    }
    if h > 2.0 * r {
        return Err(Error::domain(format!("s-bend offset {h} mm exceeds twice the bend radius {r} mm")));
    }
    Ok(2.0 * (h * r - h * h / 4.0).sqrt())
}

/// Total length in mm of an `n_modes` mesh: fan-in, coupler columns, the
/// sections between them, and fan-out.
pub fn estimate_length(
    architecture: Architecture,
    n_modes: usize,
    geometry: &GeometrySpec,
    style: ConnectionStyle,
) -> Result<f64> {
    geometry.validate()?;
    let columns = build_mesh(architecture, n_modes, 0.5)?.n_columns();
    let r = geometry.bend_radius_mm;
    let h = geometry.coupler_offset_mm();
    let heater = geometry.heater_length_mm;
    let one = s_bend_length(h, r)?;
    let shift = s_bend_length(2.0 * h, r)?;
    let out_and_back = (2.0 * one).max(heater);
    let gaps = columns - 1;

    let sections = match (style, architecture) {
        (ConnectionStyle::Straight, _) => gaps as f64 * out_and_back,
        (ConnectionStyle::Diagonal, Architecture::ErrorTolerant) => gaps as f64 * shift.max(heater),
        (ConnectionStyle::Diagonal, Architecture::ClementsMzi) => {
            // MZI internal arms separate and rejoin; MZIs of adjacent
            // columns share one diagonal bend.
            let mzis = columns / 2;
            mzis as f64 * out_and_back + (mzis - 1) as f64 * shift.max(heater)
        }
    };
    let fan = one.max(heater);
    Ok(one + sections + fan + columns as f64 * geometry.interaction_length_mm)
}

/// The three lengths compared for eight-mode meshes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthReport {
    pub error_tolerant_diagonal_mm: f64,
    pub clements_diagonal_mm: f64,
    pub clements_straight_mm: f64,
}

impl LengthReport {
    pub fn new(n_modes: usize, geometry: &GeometrySpec) -> Result<Self> {
        Ok(Self {
            error_tolerant_diagonal_mm: estimate_length(
                Architecture::ErrorTolerant,
                n_modes,
                geometry,
                ConnectionStyle::Diagonal,
            )?,
            clements_diagonal_mm: estimate_length(
                Architecture::ClementsMzi,
                n_modes,
                geometry,
                ConnectionStyle::Diagonal,
            )?,
            clements_straight_mm: estimate_length(
                Architecture::ClementsMzi,
                n_modes,
                geometry,
                ConnectionStyle::Straight,
            )?,
        })
    }

    /// Fractional reduction of the error-tolerant layout against `other`.
    pub fn reduction_vs(&self, other: f64) -> f64 {
        1.0 - self.error_tolerant_diagonal_mm / other
    }

    pub fn ordered(&self) -> bool {
        self.error_tolerant_diagonal_mm < self.clements_diagonal_mm
            && self.clements_diagonal_mm < self.clements_straight_mm
    }

    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["layout", "length_mm", "et_reduction_percent"]);
        let rows = [
            ("et_diagonal", self.error_tolerant_diagonal_mm),
            ("clements_diagonal", self.clements_diagonal_mm),
            ("clements_straight", self.clements_straight_mm),
        ];
        for (name, len) in rows {
            t.push_row(vec![
                name.to_owned(),
                format!("{len:.3}"),
                format!("{:.2}", 100.0 * self.reduction_vs(len)),
            ]);
        }
        t
    }
}

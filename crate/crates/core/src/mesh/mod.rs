//! Interferometer meshes built from 2x2 blocks embedded in `N` modes.
//!
//! A mesh is an ordered list of [`CouplerBlock`]s grouped in columns. Each
//! block is a directional coupler on modes `(top_mode, top_mode + 1)`
//! followed, optionally, by a phase shifter on its top output arm. Light
//! propagates through the columns left to right.

mod elements;
mod matrix;
mod power;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use elements::{dc_unitary, mzi_unitary, ps_unitary};
pub use matrix::{ComplexVector, TransferMatrix};
pub use power::{PowerDistribution, NORMALIZATION_TOL};

use crate::error::{Error, Result};
use crate::rng::seeded;
use elements::{check_transmission, dc_coefficients};

/// Tunable phases in radians, one per phase shifter.
pub type PhaseVector = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// One coupler and one phase shifter per block, `2N` brickwork columns.
    ErrorTolerant,
    /// Rectangular MZI mesh; each MZI is two coupler blocks on the same pair.
    #[serde(alias = "clements")]
    ClementsMzi,
}

impl Architecture {
    pub fn short_name(self) -> &'static str {
        match self {
            Architecture::ErrorTolerant => "et",
            Architecture::ClementsMzi => "clements",
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.short_name())
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "et" | "error_tolerant" | "error-tolerant" => Ok(Architecture::ErrorTolerant),
            "clements" | "clements_mzi" | "mzi" => Ok(Architecture::ClementsMzi),
            other => Err(Error::config(format!("unknown architecture `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplerBlock {
    pub column: usize,
    pub top_mode: usize,
    pub transmission: f64,
    pub phase_index: Option<usize>,
}

impl CouplerBlock {
    /// `PS . DC` on the block's mode pair.
    #[inline]
    fn coefficients(&self, phases: &[f64]) -> [[Complex64; 2]; 2] {
        let mut m = dc_coefficients(self.transmission);
        if let Some(idx) = self.phase_index {
            let e = Complex64::from_polar(1.0, phases[idx]);
            m[0][0] *= e;
            m[0][1] *= e;
        }
        m
    }
}

/// Per-block transmission assignment for [`build_mesh`].
#[derive(Debug, Clone, PartialEq)]
pub enum Transmissions {
    Uniform(f64),
    PerBlock(Vec<f64>),
}

impl From<f64> for Transmissions {
    fn from(t: f64) -> Self {
        Transmissions::Uniform(t)
    }
}

impl From<Vec<f64>> for Transmissions {
    fn from(ts: Vec<f64>) -> Self {
        Transmissions::PerBlock(ts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshLayout {
    architecture: Architecture,
    n_modes: usize,
    blocks: Vec<CouplerBlock>,
    n_phases: usize,
}

impl MeshLayout {
    /// Validates and assembles a layout. Blocks are sorted into propagation
    /// order (column, then top mode).
    pub fn from_blocks(
        architecture: Architecture,
        n_modes: usize,
        mut blocks: Vec<CouplerBlock>,
    ) -> Result<Self> {
        if n_modes < 2 {
            return Err(Error::config(format!("a mesh needs at least 2 modes, got {n_modes}")));
        }
        blocks.sort_by_key(|b| (b.column, b.top_mode));
        for b in &blocks {
            check_transmission(b.transmission)?;
            if b.top_mode + 1 >= n_modes {
                return Err(Error::config(format!(
                    "block at column {} acts on modes ({}, {}) beyond {n_modes} modes",
                    b.column,
                    b.top_mode,
                    b.top_mode + 1
                )));
            }
        }
        for pair in blocks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.column == b.column && b.top_mode <= a.top_mode + 1 {
                return Err(Error::config(format!(
                    "blocks at column {} overlap on modes {} and {}",
                    a.column, a.top_mode, b.top_mode
                )));
            }
        }
        let mut indices: Vec<usize> = blocks.iter().filter_map(|b| b.phase_index).collect();
        let n_phases = indices.len();
        indices.sort_unstable();
        if indices.iter().enumerate().any(|(i, &p)| i != p) {
            return Err(Error::config(format!("phase indices must enumerate 0..{n_phases} exactly once")));
        }
        Ok(Self { architecture, n_modes, blocks, n_phases })
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_phases(&self) -> usize {
        self.n_phases
    }

    pub fn blocks(&self) -> &[CouplerBlock] {
        &self.blocks
    }

    pub fn n_columns(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.column + 1)
    }

    /// Blocks grouped by column.
    pub fn columns(&self) -> Vec<&[CouplerBlock]> {
        self.blocks.chunk_by(|a, b| a.column == b.column).collect()
    }

    /// For each phase index, the column and top mode of the block carrying it.
    pub fn phase_sites(&self) -> Vec<(usize, usize)> {
        let mut sites = vec![(0, 0); self.n_phases];
        for b in &self.blocks {
            if let Some(idx) = b.phase_index {
                sites[idx] = (b.column, b.top_mode);
            }
        }
        sites
    }

    fn check_phases(&self, phases: &[f64]) -> Result<()> {
        if phases.len() != self.n_phases {
            return Err(Error::contract(format!(
                "mesh has {} phase shifters, got {} phases",
                self.n_phases,
                phases.len()
            )));
        }
        Ok(())
    }

    /// Full transfer matrix for the given phases.
    pub fn compose_unitary(&self, phases: &[f64]) -> Result<TransferMatrix> {
        self.check_phases(phases)?;
        let mut u = TransferMatrix::identity(self.n_modes);
        for b in &self.blocks {
            u.apply_block_rows(b.top_mode, &b.coefficients(phases));
        }
        Ok(u)
    }

    /// Propagates field amplitudes in place without forming the matrix.
    pub fn propagate_amplitudes(&self, phases: &[f64], field: &mut [Complex64]) -> Result<()> {
        self.check_phases(phases)?;
        if field.len() != self.n_modes {
            return Err(Error::contract(format!(
                "field has {} modes, mesh has {}",
                field.len(),
                self.n_modes
            )));
        }
        for b in &self.blocks {
            let m = b.coefficients(phases);
            let (a0, a1) = (field[b.top_mode], field[b.top_mode + 1]);
            field[b.top_mode] = m[0][0] * a0 + m[0][1] * a1;
            field[b.top_mode + 1] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(())
    }

    /// Output powers for unit power injected at `input_port`.
    pub fn propagate(&self, phases: &[f64], input_port: usize) -> Result<PowerDistribution> {
        let input = ComplexVector::basis(self.n_modes, input_port)?;
        let mut field = input.as_slice().to_vec();
        self.propagate_amplitudes(phases, &mut field)?;
        Ok(PowerDistribution::from_unitary_output(field.iter().map(|z| z.norm_sqr()).collect()))
    }

    /// Same topology and phase wiring with new transmissions.
    pub fn with_transmissions(&self, transmissions: &Transmissions) -> Result<Self> {
        let ts = expand_transmissions(transmissions, self.blocks.len())?;
        let blocks =
            self.blocks.iter().zip(ts).map(|(b, t)| CouplerBlock { transmission: t, ..*b }).collect();
        Self::from_blocks(self.architecture, self.n_modes, blocks)
    }
}

fn expand_transmissions(t: &Transmissions, n_blocks: usize) -> Result<Vec<f64>> {
    let ts = match t {
        Transmissions::Uniform(t) => vec![*t; n_blocks],
        Transmissions::PerBlock(ts) => {
            if ts.len() != n_blocks {
                return Err(Error::config(format!(
                    "mesh has {n_blocks} couplers, got {} transmissions",
                    ts.len()
                )));
            }
            ts.clone()
        }
    };
    for &t in &ts {
        check_transmission(t)?;
    }
    Ok(ts)
}

/// Mode pairs of a brickwork column. For two modes every column acts on the
/// single pair.
fn brickwork_pairs(n_modes: usize, column: usize) -> Vec<usize> {
    let start = if n_modes == 2 { 0 } else { column % 2 };
    (start..n_modes - 1).step_by(2).collect()
}

/// Brickwork columns, in order, until `n_blocks` blocks are placed.
fn brickwork(n_modes: usize, n_blocks: usize) -> Vec<(usize, Vec<usize>)> {
    let mut out = Vec::new();
    let mut placed = 0;
    let mut column = 0;
    while placed < n_blocks {
        let pairs = brickwork_pairs(n_modes, column);
        placed += pairs.len();
        out.push((column, pairs));
        column += 1;
    }
    out
}

/// Builds one of the supported mesh architectures.
///
/// The error-tolerant mesh holds `N(N-1)` single-coupler blocks in brickwork
/// columns starting with the `(0,1), (2,3), ...` column (16 columns for
/// `N = 8`); every block carries one phase shifter. The Clements mesh holds
/// `N(N-1)/2` MZIs in brickwork columns, each MZI expanded into two coupler
/// blocks on the same pair, both carrying a phase shifter.
pub fn build_mesh(
    architecture: Architecture,
    n_modes: usize,
    transmissions: impl Into<Transmissions>,
) -> Result<MeshLayout> {
    if n_modes < 2 {
        return Err(Error::config(format!("{architecture} mesh needs at least 2 modes, got {n_modes}")));
    }
    let mut sites = Vec::new();
    match architecture {
        Architecture::ErrorTolerant => {
            for (column, pairs) in brickwork(n_modes, n_modes * (n_modes - 1)) {
                sites.extend(pairs.into_iter().map(|top| (column, top)));
            }
        }
        Architecture::ClementsMzi => {
            for (mzi_col, pairs) in brickwork(n_modes, n_modes * (n_modes - 1) / 2) {
                for top in pairs {
                    sites.push((2 * mzi_col, top));
                    sites.push((2 * mzi_col + 1, top));
                }
            }
            sites.sort_unstable();
        }
    }
    let ts = expand_transmissions(&transmissions.into(), sites.len())?;
    let blocks = sites
        .into_iter()
        .zip(ts)
        .enumerate()
        .map(|(i, ((column, top_mode), transmission))| CouplerBlock {
            column,
            top_mode,
            transmission,
            phase_index: Some(i),
        })
        .collect();
    MeshLayout::from_blocks(architecture, n_modes, blocks)
}

/// `n_blocks` transmissions drawn uniformly from `mean +- half_width`.
pub fn sample_transmissions(mean: f64, half_width: f64, n_blocks: usize, seed: u64) -> Result<Vec<f64>> {
    let (lo, hi) = (mean - half_width, mean + half_width);
    if !(half_width >= 0.0) || lo < 0.0 || hi > 1.0 {
        return Err(Error::domain(format!("transmission interval [{lo}, {hi}] escapes [0, 1]")));
    }
    if half_width == 0.0 {
        return Ok(vec![mean; n_blocks]);
    }
    let mut rng = seeded(seed);
    Ok((0..n_blocks).map(|_| rng.random_range(lo..=hi)).collect())
}

#[derive(Serialize, Deserialize)]
struct ColumnDoc {
    top_modes: Vec<usize>,
    transmissions: Vec<f64>,
    phase_indices: Vec<Option<usize>>,
}

#[derive(Serialize, Deserialize)]
struct MeshDoc {
    architecture: Architecture,
    n_modes: usize,
    columns: Vec<ColumnDoc>,
}

impl Serialize for MeshLayout {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut columns: Vec<ColumnDoc> = (0..self.n_columns())
            .map(|_| ColumnDoc {
                top_modes: Vec::new(),
                transmissions: Vec::new(),
                phase_indices: Vec::new(),
            })
            .collect();
        for b in &self.blocks {
            let c = &mut columns[b.column];
            c.top_modes.push(b.top_mode);
            c.transmissions.push(b.transmission);
            c.phase_indices.push(b.phase_index);
        }
        MeshDoc { architecture: self.architecture, n_modes: self.n_modes, columns }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MeshLayout {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = MeshDoc::deserialize(d)?;
        let mut blocks = Vec::new();
        for (column, c) in doc.columns.iter().enumerate() {
            if c.transmissions.len() != c.top_modes.len() || c.phase_indices.len() != c.top_modes.len() {
                return Err(D::Error::custom(format!("column {column}: field lengths differ")));
            }
            for i in 0..c.top_modes.len() {
                blocks.push(CouplerBlock {
                    column,
                    top_mode: c.top_modes[i],
                    transmission: c.transmissions[i],
                    phase_index: c.phase_indices[i],
                });
            }
        }
        MeshLayout::from_blocks(doc.architecture, doc.n_modes, blocks).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use super::*;

    #[test]
    fn error_tolerant_eight_mode_counts() {
        let mesh = build_mesh(Architecture::ErrorTolerant, 8, 0.65).unwrap();
        assert_eq!(mesh.blocks().len(), 56);
        assert_eq!(mesh.n_phases(), 56);
        assert_eq!(mesh.n_columns(), 16);
        for (i, col) in mesh.columns().iter().enumerate() {
            let tops: Vec<usize> = col.iter().map(|b| b.top_mode).collect();
            if i % 2 == 0 {
                assert_eq!(tops, vec![0, 2, 4, 6]);
            } else {
                assert_eq!(tops, vec![1, 3, 5]);
            }
        }
        assert!(mesh.blocks().iter().all(|b| b.phase_index.is_some()));
    }

    #[test]
    fn clements_eight_mode_counts() {
        let mesh = build_mesh(Architecture::ClementsMzi, 8, 0.5).unwrap();
        assert_eq!(mesh.blocks().len(), 56);
        assert_eq!(mesh.n_phases(), 56);
        // 28 MZIs: blocks come in identical-pair couples across column 2k, 2k+1.
        let cols = mesh.columns();
        assert_eq!(cols.len(), 16);
        for k in 0..8 {
            let a: Vec<usize> = cols[2 * k].iter().map(|b| b.top_mode).collect();
            let b: Vec<usize> = cols[2 * k + 1].iter().map(|b| b.top_mode).collect();
            assert_eq!(a, b);
            assert_eq!(a.len(), if k % 2 == 0 { 4 } else { 3 });
        }
        assert_eq!(mesh.blocks().len() / 2, 8 * 7 / 2);
    }

    #[test]
    fn block_counts_for_small_and_odd_meshes() {
        for n in 2..=9 {
            let et = build_mesh(Architecture::ErrorTolerant, n, 0.6).unwrap();
            assert_eq!(et.n_phases(), n * (n - 1));
            let cl = build_mesh(Architecture::ClementsMzi, n, 0.5).unwrap();
            assert_eq!(cl.n_phases(), n * (n - 1));
        }
    }

    #[test]
    fn two_mode_error_tolerant_is_two_columns() {
        let mesh = build_mesh(Architecture::ErrorTolerant, 2, 0.7).unwrap();
        assert_eq!(mesh.n_columns(), 2);
        assert!(mesh.columns().iter().all(|c| c.len() == 1));
    }

    #[test]
    fn build_rejects_bad_configuration() {
        assert!(matches!(build_mesh(Architecture::ErrorTolerant, 1, 0.5), Err(Error::Config(_))));
        assert!(build_mesh(Architecture::ErrorTolerant, 4, vec![0.5; 3]).is_err());
        assert!(build_mesh(Architecture::ClementsMzi, 0, 0.5).is_err());
        assert!(build_mesh(Architecture::ErrorTolerant, 4, 1.2).is_err());
    }

    #[test]
    fn overlapping_blocks_rejected() {
        let blocks = vec![
            CouplerBlock { column: 0, top_mode: 0, transmission: 0.5, phase_index: Some(0) },
            CouplerBlock { column: 0, top_mode: 1, transmission: 0.5, phase_index: Some(1) },
        ];
        assert!(MeshLayout::from_blocks(Architecture::ErrorTolerant, 3, blocks).is_err());
    }

    #[test]
    fn duplicate_phase_index_rejected() {
        let blocks = vec![
            CouplerBlock { column: 0, top_mode: 0, transmission: 0.5, phase_index: Some(0) },
            CouplerBlock { column: 1, top_mode: 0, transmission: 0.5, phase_index: Some(0) },
        ];
        assert!(MeshLayout::from_blocks(Architecture::ErrorTolerant, 2, blocks).is_err());
    }

    #[test]
    fn zero_transmission_mesh_is_diagonal() {
        let mesh = build_mesh(Architecture::ErrorTolerant, 5, 0.0).unwrap();
        let phases: Vec<f64> = (0..mesh.n_phases()).map(|i| 0.37 * i as f64).collect();
        let u = mesh.compose_unitary(&phases).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let m = u.get(i, j).norm();
                assert!((m - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        for k in 0..5 {
            let p = mesh.propagate(&phases, k).unwrap();
            let e = PowerDistribution::indicator(5, k).unwrap();
            assert!(p.as_slice().iter().zip(e.as_slice()).all(|(a, b)| (a - b).abs() < 1e-15));
        }
    }

    #[test]
    fn single_block_composition() {
        let blocks = vec![CouplerBlock { column: 0, top_mode: 0, transmission: 0.6, phase_index: Some(0) }];
        let mesh = MeshLayout::from_blocks(Architecture::ErrorTolerant, 2, blocks).unwrap();
        let u = mesh.compose_unitary(&[0.0]).unwrap();
        assert!(u.max_abs_diff(&dc_unitary(0.6).unwrap()) < 1e-15);
        let u = mesh.compose_unitary(&[1.1]).unwrap();
        let expect = &ps_unitary(1.1).unwrap() * &dc_unitary(0.6).unwrap();
        assert!(u.max_abs_diff(&expect) < 1e-15);
        let p = mesh.propagate(&[0.0], 0).unwrap();
        assert!((p.as_slice()[0] - 0.4).abs() < 1e-12);
        assert!((p.as_slice()[1] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn phase_length_and_port_checks() {
        let mesh = build_mesh(Architecture::ErrorTolerant, 4, 0.6).unwrap();
        assert!(matches!(mesh.compose_unitary(&[0.0; 3]), Err(Error::Contract(_))));
        let phases = vec![0.0; mesh.n_phases()];
        assert!(matches!(mesh.propagate(&phases, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn propagate_agrees_with_matrix_column() {
        let mesh = build_mesh(Architecture::ClementsMzi, 6, 0.63).unwrap();
        let phases: Vec<f64> = (0..mesh.n_phases()).map(|i| (i as f64 * 1.7).sin() * TAU).collect();
        let u = mesh.compose_unitary(&phases).unwrap();
        for port in 0..6 {
            let p = mesh.propagate(&phases, port).unwrap();
            for (j, pj) in p.as_slice().iter().enumerate() {
                assert!((u.get(j, port).norm_sqr() - pj).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mzi_block_pair_reproduces_mzi_powers() {
        // A two-mode Clements mesh is one MZI with the external phase on the
        // output side; powers from a single input match mzi_unitary.
        let mesh = build_mesh(Architecture::ClementsMzi, 2, 0.7).unwrap();
        for (theta, phi) in [(0.0, 0.0), (1.0, 2.0), (3.0, -0.5)] {
            let p = mesh.propagate(&[theta, phi], 0).unwrap();
            let u = mzi_unitary(0.7, theta, 0.0).unwrap();
            assert!((p.as_slice()[1] - u.get(1, 0).norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_transmissions_stay_in_band() {
        let ts = sample_transmissions(0.65, 0.15, 40, 11).unwrap();
        assert_eq!(ts.len(), 40);
        assert!(ts.iter().all(|t| (0.5..=0.8).contains(t)));
        assert_eq!(ts, sample_transmissions(0.65, 0.15, 40, 11).unwrap());
        assert_ne!(ts, sample_transmissions(0.65, 0.15, 40, 12).unwrap());
        assert_eq!(sample_transmissions(0.65, 0.0, 5, 3).unwrap(), vec![0.65; 5]);
        assert!(sample_transmissions(0.9, 0.15, 5, 3).is_err());
        assert!(sample_transmissions(0.5, -0.1, 5, 3).is_err());
    }

    #[test]
    fn layout_json_shape_and_round_trip() {
        let mesh = build_mesh(Architecture::ErrorTolerant, 4, 0.6).unwrap();
        let v = serde_json::to_value(&mesh).unwrap();
        assert_eq!(v["architecture"], "error_tolerant");
        assert_eq!(v["n_modes"], 4);
        assert_eq!(v["columns"][0]["top_modes"], serde_json::json!([0, 2]));
        assert_eq!(v["columns"][1]["phase_indices"], serde_json::json!([2]));
        let back: MeshLayout = serde_json::from_value(v).unwrap();
        assert_eq!(back, mesh);
    }
}

//! Campaign configuration document. Every section is optional; missing
//! fields take the defaults below and command-line flags override them.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mesh_anneal::experiments::{GeometrySpec, WavelengthTable};
use mesh_anneal::{AnnealConfig, Architecture};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Ideal,
    Hardware,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub architecture: Architecture,
    pub n_modes: usize,
    pub seed: u64,
    pub restarts: usize,
    pub threshold: f64,
    pub mode: ModeName,
    /// Heater model document; the chip default is used when absent.
    pub hardware_model: Option<PathBuf>,
    pub anneal: AnnealConfig,
    pub switch: SwitchSection,
    pub sweep: SweepSection,
    pub target: TargetSection,
    pub geometry: GeometrySpec,
    pub telemetry: TelemetrySection,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::ErrorTolerant,
            n_modes: 8,
            seed: 0,
            restarts: 3,
            threshold: 1e-3,
            mode: ModeName::Ideal,
            hardware_model: None,
            anneal: AnnealConfig::default(),
            switch: SwitchSection::default(),
            sweep: SweepSection::default(),
            target: TargetSection::default(),
            geometry: GeometrySpec::default(),
            telemetry: TelemetrySection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwitchSection {
    pub wavelengths: WavelengthTable,
    pub inputs: Vec<usize>,
}

impl Default for SwitchSection {
    fn default() -> Self {
        Self { wavelengths: WavelengthTable::default(), inputs: vec![0, 1, 2, 3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub architectures: Vec<Architecture>,
    pub t_grid: Vec<f64>,
    /// All ports when absent.
    pub inputs: Option<Vec<usize>>,
    pub jitter_scale: Option<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            architectures: vec![Architecture::ErrorTolerant, Architecture::ClementsMzi],
            // 0.45 to 0.85 in steps of 0.05
            t_grid: (9..=17).map(|k| k as f64 / 20.0).collect(),
            inputs: None,
            jitter_scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSection {
    /// Non-negative weights, normalized on use. Uniform when absent.
    pub distribution: Option<Vec<f64>>,
    pub input: usize,
    pub transmission: f64,
}

impl Default for TargetSection {
    fn default() -> Self {
        Self { distribution: None, input: 0, transmission: 0.65 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TelemetrySection {
    pub n_heaters: usize,
    pub wavelengths: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub iterations: usize,
}

impl Default for TelemetrySection {
    fn default() -> Self {
        Self { n_heaters: 56, wavelengths: 3, inputs: 4, outputs: 8, iterations: 500 }
    }
}

impl CampaignConfig {
    /// Reads a document; errors name the offending field path.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            anyhow::anyhow!("config {}: field `{field}`: {}", path.display(), e.inner())
        })
    }

    /// SHA-256 of the effective configuration, in hex.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// `# config_sha256=... seed=...`, without the `#`.
    pub fn provenance(&self) -> String {
        format!("config_sha256={} seed={}", self.hash(), self.seed)
    }

    /// Anneal settings with the campaign seed applied.
    pub fn anneal(&self) -> AnnealConfig {
        self.anneal.with_seed(self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_hash_are_stable() {
        let c = CampaignConfig::default();
        assert_eq!(c.sweep.t_grid.len(), 9);
        assert_eq!(c.sweep.t_grid[0], 0.45);
        assert_eq!(c.sweep.t_grid[8], 0.85);
        assert_eq!(c.hash(), CampaignConfig::default().hash());
        let other = CampaignConfig { seed: 1, ..c.clone() };
        assert_ne!(c.hash(), other.hash());
    }

    #[test]
    fn errors_name_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"anneal": {"iterations": "many"}}"#).unwrap();
        let e = CampaignConfig::load(&p).unwrap_err().to_string();
        assert!(e.contains("anneal.iterations"), "{e}");
        std::fs::write(&p, r#"{"sweep": {"tgrid": []}}"#).unwrap();
        let e = CampaignConfig::load(&p).unwrap_err().to_string();
        assert!(e.contains("tgrid"), "{e}");
    }
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use stringmass_core::{GridSpec, ModelParams};

use crate::CliError;

fn default_grid() -> GridSpec {
    GridSpec {
        n_grid: 1024,
        quadrature: Default::default(),
    }
}

fn default_n_modes() -> usize {
    64
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// `Q = Y_n`, `P = 0` for `n = mode_index`.
    #[default]
    Mode,
    /// Seeded random superposition of the lowest modes.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default = "EvolveConfig::default_t_end")]
    pub t_end: f64,
    #[serde(default = "EvolveConfig::default_dt")]
    pub dt: f64,
    #[serde(default = "EvolveConfig::default_snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default = "EvolveConfig::default_mode_index")]
    pub mode_index: i64,
    /// Also run the finite-difference integrator and report the gap.
    #[serde(default)]
    pub fd_check: bool,
}

impl EvolveConfig {
    fn default_t_end() -> f64 {
        1.0
    }
    fn default_dt() -> f64 {
        1e-3
    }
    fn default_snapshot_every() -> usize {
        100
    }
    fn default_mode_index() -> i64 {
        1
    }
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            t_end: Self::default_t_end(),
            dt: Self::default_dt(),
            snapshot_every: Self::default_snapshot_every(),
            initial: InitialData::default(),
            mode_index: Self::default_mode_index(),
            fd_check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockConfig {
    #[serde(default = "FockConfig::default_n_max")]
    pub n_max: usize,
}

impl FockConfig {
    fn default_n_max() -> usize {
        500
    }
}

impl Default for FockConfig {
    fn default() -> Self {
        FockConfig {
            n_max: Self::default_n_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Number of negative-family modes; defaults to `n_modes`.
    #[serde(default)]
    pub k_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ModelParams,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default = "default_n_modes")]
    pub n_modes: usize,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub fock: FockConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks every field against the preconditions of the commands.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.params
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.grid
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.n_modes == 0 {
            return bad("n_modes must be at least 1".into());
        }
        if self.spectrum.k_max == Some(0) {
            return bad("spectrum.k_max must be at least 1".into());
        }
        let ev = &self.evolve;
        if !(ev.t_end >= 0.0) || !ev.t_end.is_finite() {
            return bad(format!(
                "evolve.t_end must be finite and >= 0, got {}",
                ev.t_end
            ));
        }
        if !(ev.dt > 0.0) || !ev.dt.is_finite() {
            return bad(format!("evolve.dt must be positive, got {}", ev.dt));
        }
        if ev.snapshot_every == 0 {
            return bad("evolve.snapshot_every must be at least 1".into());
        }
        if self.fock.n_max == 0 {
            return bad("fock.n_max must be at least 1".into());
        }
        Ok(())
    }

    pub fn k_max(&self) -> usize {
        self.spectrum.k_max.unwrap_or(self.n_modes)
    }

    /// SHA-256 of the serialised configuration without `output_dir`, so runs
    /// that differ only in where they write share a hash.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serialises");
        if let Some(map) = value.as_object_mut() {
            map.remove("output_dir");
        }
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

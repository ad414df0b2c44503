use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gmc::{Normalization, Puncture, PunctureSet};
use crate::spectral::{Point, Smoothing, TorusGeometry, DEFAULT_MODE_CAP};

fn two_pi() -> f64 {
    2.0 * std::f64::consts::PI
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default = "two_pi")]
    pub side_length: f64,
    /// Spectral cutoff of the basis, in units of the eigenvalue square root.
    pub cutoff: f64,
    #[serde(default = "default_mode_cap")]
    pub mode_cap: usize,
}

fn default_mode_cap() -> usize {
    DEFAULT_MODE_CAP
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            side_length: two_pi(),
            cutoff: 48.0,
            mode_cap: DEFAULT_MODE_CAP,
        }
    }
}

impl GeometryConfig {
    pub fn torus(&self) -> Result<TorusGeometry> {
        TorusGeometry::new(self.side_length)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmcConfig {
    pub beta: f64,
    pub n: f64,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub smoothing: Smoothing,
    /// Grid resolution for `Θ`; defaults to the pseudo-spectral minimum.
    #[serde(default)]
    pub resolution: Option<usize>,
    /// Probe points for moment checks.
    #[serde(default)]
    pub probes: Vec<Point>,
}

impl Default for GmcConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            n: 8.0,
            normalization: Normalization::WickExact,
            smoothing: Smoothing::Heat,
            resolution: None,
            probes: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PunctureConfig {
    pub point: Point,
    pub charge: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqgConfig {
    #[serde(default = "one")]
    pub nu: f64,
    #[serde(default)]
    pub euler_char: i32,
    #[serde(default)]
    pub punctures: Vec<PunctureConfig>,
}

fn one() -> f64 {
    1.0
}

impl Default for LqgConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            euler_char: 0,
            punctures: Vec::new(),
        }
    }
}

impl LqgConfig {
    pub fn puncture_set(&self) -> Result<PunctureSet> {
        PunctureSet::new(
            self.punctures
                .iter()
                .map(|p| Puncture::new(p.point, p.charge))
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "one")]
    pub t_end: f64,
    #[serde(default)]
    pub x_bar: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Cutoff of the Galerkin space for the Langevin dynamics.
    #[serde(default = "default_galerkin_cutoff")]
    pub galerkin_cutoff: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_mala_dt")]
    pub mala_dt: f64,
    #[serde(default)]
    pub bias_replicas: usize,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_record_every() -> usize {
    100
}
fn default_galerkin_cutoff() -> f64 {
    8.0
}
fn default_burn_in() -> usize {
    200
}
fn default_mala_dt() -> f64 {
    0.05
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            t_end: 1.0,
            x_bar: 0.0,
            record_every: default_record_every(),
            galerkin_cutoff: default_galerkin_cutoff(),
            burn_in: default_burn_in(),
            mala_dt: default_mala_dt(),
            bias_replicas: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; the `LIOUVILLE_THREADS` environment variable wins.
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_replicas() -> usize {
    1000
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            replicas: default_replicas(),
            seed: 0,
            threads: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_true")]
    pub csv: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            csv: true,
        }
    }
}

/// All inputs of an experiment run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub gmc: GmcConfig,
    #[serde(default)]
    pub lqg: LqgConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Run even when the admissibility bounds fail.
    #[serde(default)]
    pub override_seiberg: bool,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical serialization, hex encoded. The output
    /// section does not enter the hash.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        let canon = c.to_toml()?;
        Ok(hex::encode(Sha256::digest(canon.as_bytes())))
    }
}

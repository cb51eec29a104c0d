//! Run configuration: a TOML document describing the particles, cutoff,
//! grids, tolerances and output location.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::cutoff::{CutoffProfile, ProfileKind};
use crate::error::{Error, Result};
use crate::fock::{DEFAULT_N_ANGULAR, DEFAULT_N_MAX, DEFAULT_N_RADIAL};
use crate::spin_algebra::Spin;
use crate::spin_operator::SpinSystem;

/// How particle positions are to be read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// Coordinates are used as written.
    #[default]
    Absolute,
    /// Coordinates are multiples of 1/Λ.
    InverseLambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    #[serde(default = "default_kind")]
    pub kind: ProfileKind,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_kind() -> ProfileKind {
    ProfileKind::Gaussian
}

fn default_lambda() -> f64 {
    1.0
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            lambda: default_lambda(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Particle {
    pub position: [f64; 3],
    pub moment: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_radial: usize,
    pub n_angular: usize,
    pub n_max: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_radial: DEFAULT_N_RADIAL,
            n_angular: DEFAULT_N_ANGULAR,
            n_max: DEFAULT_N_MAX,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Include eigenvectors and the operator matrix in `e2` output.
    pub eigenbasis: bool,
}

/// Tolerance names and their defaults.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("kernel_symmetry", 1e-15),
    ("kernel_oracle", 1e-6),
    ("degeneracy", 1e-7),
    ("nsd", 1e-10),
    ("scaling", 1e-12),
    ("closed_form", 1e-12),
    ("field_identity", 1e-6),
    ("decomposition", 1e-6),
    ("variational", 1e-10),
    ("eigensolver", 1e-10),
    ("fit_relative", 0.02),
    ("fit_slope_min", 2.7),
    ("photon_slope", 0.1),
    ("overlap_min", 0.99),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spin: Spin,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub cutoff: CutoffConfig,
    pub particles: Vec<Particle>,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Parses and validates a configuration, filling in defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    for (name, value) in &cfg.tolerances {
        if !DEFAULT_TOLERANCES.iter().any(|(n, _)| n == name) {
            return Err(Error::Config(format!("tolerances.{name}: unknown tolerance name")));
        }
        if !(*value > 0.0 && value.is_finite()) {
            return Err(Error::Config(format!("tolerances.{name}: must be positive, got {value}")));
        }
    }
    for (name, value) in DEFAULT_TOLERANCES {
        cfg.tolerances.entry(name.to_string()).or_insert(*value);
    }
    if cfg.particles.is_empty() {
        return Err(Error::Config("particles: at least one particle is required".into()));
    }
    cfg.profile()
        .map_err(|e| Error::Config(format!("cutoff: {}", strip(&e))))?;
    cfg.system()
        .map_err(|e| Error::Config(format!("particles: {}", strip(&e))))?;
    let g = cfg.grids;
    if g.n_radial < 2 {
        return Err(Error::Config("grids.n_radial: must be at least 2".into()));
    }
    if g.n_angular < 6 || !g.n_angular.is_multiple_of(2) {
        return Err(Error::Config("grids.n_angular: must be even and at least 6".into()));
    }
    if g.n_max < 1 {
        return Err(Error::Config("grids.n_max: must be at least 1".into()));
    }
    Ok(cfg)
}

fn strip(e: &Error) -> String {
    match e {
        Error::Domain(m) | Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

impl RunConfig {
    pub fn profile(&self) -> Result<CutoffProfile> {
        CutoffProfile::new(self.cutoff.kind, self.cutoff.lambda)
    }

    /// Particles as a spin system, positions converted to absolute units.
    pub fn system(&self) -> Result<SpinSystem> {
        let factor = match self.units {
            Units::Absolute => 1.0,
            Units::InverseLambda => 1.0 / self.cutoff.lambda,
        };
        SpinSystem::new(
            self.spin,
            self.particles
                .iter()
                .map(|p| p.position.map(|v| v * factor))
                .collect(),
            self.particles.iter().map(|p| p.moment).collect(),
        )
    }

    /// Converts a user-supplied point to absolute units.
    pub fn point(&self, x: [f64; 3]) -> [f64; 3] {
        match self.units {
            Units::Absolute => x,
            Units::InverseLambda => x.map(|v| v / self.cutoff.lambda),
        }
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .or_else(|| DEFAULT_TOLERANCES.iter().find(|(n, _)| *n == name).map(|(_, v)| *v))
            .unwrap_or_else(|| panic!("no tolerance named {name}"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

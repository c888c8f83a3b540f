//! Run configuration: defaults, overlaid by a JSON file, overlaid by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use warped_harmonic::quadrature::QuadratureConfig;
use warped_harmonic::strip::{BoundaryProfile, StripGrid, DEFAULT_HALF_WIDTH, DEFAULT_N_R, DEFAULT_N_S};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub n_r: usize,
    pub n_s: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_width: DEFAULT_HALF_WIDTH,
            n_r: DEFAULT_N_R,
            n_s: DEFAULT_N_S,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    /// Points per geometry invariant.
    pub geometry: usize,
    pub supersolution: usize,
    /// Points per path for the corner fit.
    pub psi: usize,
    pub f1: usize,
    /// Disk probes for residual checks.
    pub probes: usize,
    /// Lattice size for the pointwise bounds.
    pub bounds: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            geometry: 1000,
            supersolution: 1_000_000,
            psi: 200,
            f1: 100_000,
            probes: 1000,
            bounds: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KUnit {
    /// `k` values are multiples of the threshold `k*`.
    KStar,
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulationConfig {
    pub f0: f64,
    pub k: Vec<f64>,
    pub k_unit: KUnit,
    /// Probe times in units of `1/k*`.
    pub times: Vec<f64>,
}

impl Default for ModulationConfig {
    fn default() -> Self {
        Self {
            f0: 1.0,
            k: vec![1.0, 2.0, 4.0],
            k_unit: KUnit::KStar,
            times: vec![0.0, 0.5, 1.0, 2.0, 5.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub profile: BoundaryProfile,
    /// Further profiles whose fields enter the Gram matrix with `profile`.
    pub extra_profiles: Vec<BoundaryProfile>,
    pub samples: SampleConfig,
    pub quadrature: QuadratureConfig,
    pub deltas: Vec<f64>,
    pub modulation: ModulationConfig,
    pub nu: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub show_violations: bool,
    pub manufactured: bool,
    pub cells: bool,
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            profile: BoundaryProfile::default(),
            extra_profiles: vec![
                BoundaryProfile::shifted_gaussian(-2.0),
                BoundaryProfile::shifted_gaussian(2.0),
            ],
            samples: SampleConfig::default(),
            quadrature: QuadratureConfig::default(),
            deltas: vec![0.25, 0.5, 0.75, 0.9, 1.0, 1.5],
            modulation: ModulationConfig::default(),
            nu: 1.0,
            seed: 17,
            out: PathBuf::from("harmonic-lab-out"),
            show_violations: false,
            manufactured: false,
            cells: false,
            timings: false,
        }
    }
}

fn bad(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.into(),
        message: message.into(),
    }
}

/// Parses a `--profile` name.
pub fn named_profile(name: &str) -> Result<BoundaryProfile, CliError> {
    if let Some(c) = name.strip_prefix("shifted-gaussian:") {
        let center: f64 = c
            .parse()
            .map_err(|_| bad("profile", format!("bad center in {name:?}")))?;
        return Ok(BoundaryProfile::shifted_gaussian(center));
    }
    match name {
        "gaussian" => Ok(BoundaryProfile::default()),
        "exp-decay" => Ok(BoundaryProfile::ExpDecay {
            amplitude: 0.3,
            rate: 1.0,
            center: 0.0,
        }),
        "constant" => Ok(BoundaryProfile::Constant { value: 1.0 }),
        "zero" => Ok(BoundaryProfile::Constant { value: 0.0 }),
        _ => Err(bad(
            "profile",
            format!(
                "unknown profile {name:?}; expected gaussian, exp-decay, constant, zero or shifted-gaussian:<center>"
            ),
        )),
    }
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(field: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| bad(field, format!("{t:?} is not a number")))
        })
        .collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| bad("config", format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| bad("config", format!("{}: {e}", path.display())))
    }

    pub fn strip_grid(&self) -> Result<StripGrid, CliError> {
        StripGrid::new(self.grid.half_width, self.grid.n_r, self.grid.n_s).map_err(|e| bad("grid", e.to_string()))
    }

    /// Checks every field before anything is computed.
    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.grid;
        if !(g.half_width.is_finite() && g.half_width > 0.0) {
            return Err(bad("grid.half_width", format!("{} must be positive", g.half_width)));
        }
        if g.n_r < 8 {
            return Err(bad("grid.n_r", format!("{} must be at least 8", g.n_r)));
        }
        if g.n_s < 8 {
            return Err(bad("grid.n_s", format!("{} must be at least 8", g.n_s)));
        }
        self.strip_grid()?;
        self.profile.validate().map_err(|e| bad("profile", e.to_string()))?;
        for (i, p) in self.extra_profiles.iter().enumerate() {
            p.validate()
                .map_err(|e| bad(&format!("extra_profiles[{i}]"), e.to_string()))?;
        }
        let s = &self.samples;
        for (name, n, min) in [
            ("samples.geometry", s.geometry, 1),
            ("samples.supersolution", s.supersolution, 1000),
            ("samples.psi", s.psi, 8),
            ("samples.f1", s.f1, 1),
            ("samples.probes", s.probes, 1),
            ("samples.bounds", s.bounds, 1),
        ] {
            if n < min {
                return Err(bad(name, format!("{n} is below the minimum {min}")));
            }
        }
        self.quadrature
            .validate()
            .map_err(|e| bad("quadrature", e.to_string()))?;
        if self.deltas.is_empty() {
            return Err(bad("deltas", "list is empty"));
        }
        if let Some(d) = self.deltas.iter().find(|&&d| !(d > 0.0 && d <= 2.0)) {
            return Err(bad("deltas", format!("{d} is outside (0, 2]")));
        }
        let m = &self.modulation;
        if !(m.f0.is_finite() && m.f0 != 0.0) {
            return Err(bad("modulation.f0", format!("{} must be finite and nonzero", m.f0)));
        }
        if m.k.is_empty() {
            return Err(bad("modulation.k", "modulation list is empty"));
        }
        if let Some(k) = m.k.iter().find(|&&k| !(k.is_finite() && k >= 0.0)) {
            return Err(bad("modulation.k", format!("{k} must be finite and >= 0")));
        }
        if m.times.is_empty() {
            return Err(bad("modulation.times", "list is empty"));
        }
        if let Some(t) = m.times.iter().find(|&&t| !(t.is_finite() && t >= 0.0)) {
            return Err(bad("modulation.times", format!("{t} must be finite and >= 0")));
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(bad("nu", format!("{} must be finite and >= 0", self.nu)));
        }
        if self.out.as_os_str().is_empty() {
            return Err(bad("out", "output directory is empty"));
        }
        Ok(())
    }
}

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::checks::Fault;
use crate::config::{named_profile, parse_list, KUnit, RunConfig};
use crate::error::CliError;
use crate::runner::Command;

#[derive(Debug, Parser)]
#[command(
    name = "harmonic-lab",
    version,
    about = "Harmonic fields on a warped half-disk and the Navier-Stokes families they generate"
)]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Step,

    /// JSON configuration; flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Truncation half-width of the strip.
    #[arg(long = "grid-R", global = true)]
    pub grid_r: Option<f64>,
    #[arg(long = "grid-nr", global = true)]
    pub grid_nr: Option<usize>,
    #[arg(long = "grid-ns", global = true)]
    pub grid_ns: Option<usize>,
    /// gaussian, exp-decay, constant, zero or shifted-gaussian:<center>.
    #[arg(long, global = true, value_name = "NAME")]
    pub profile: Option<String>,
    /// Comma-separated decay rates for verify-psi.
    #[arg(long, global = true, value_name = "LIST")]
    pub delta: Option<String>,
    /// Comma-separated modulation rates, in units of k* unless --k-absolute.
    #[arg(long, global = true, value_name = "LIST")]
    pub k: Option<String>,
    #[arg(long, global = true)]
    pub k_absolute: bool,
    #[arg(long, global = true)]
    pub f0: Option<f64>,
    #[arg(long, global = true)]
    pub nu: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sample count for geometry checks and disk probes.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub no_theta_factor: bool,
    /// Keep rates below k* in the family and report their violations.
    #[arg(long, global = true)]
    pub show_violations: bool,
    /// Solve the manufactured problem instead of the boundary profile.
    #[arg(long, global = true)]
    pub manufactured: bool,
    /// Write per-cell quadrature contributions.
    #[arg(long, global = true)]
    pub cells: bool,
    /// Record wall-clock times in the manifest.
    #[arg(long, global = true)]
    pub timings: bool,
    #[arg(long, global = true, hide = true, value_name = "NAME")]
    pub inject_fault: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Step {
    GeometryCheck,
    Solve,
    VerifySupersolution,
    VerifyPsi,
    Norms,
    Nonuniqueness,
    All,
}

impl From<Step> for Command {
    fn from(s: Step) -> Self {
        match s {
            Step::GeometryCheck => Command::GeometryCheck,
            Step::Solve => Command::Solve,
            Step::VerifySupersolution => Command::VerifySupersolution,
            Step::VerifyPsi => Command::VerifyPsi,
            Step::Norms => Command::Norms,
            Step::Nonuniqueness => Command::Nonuniqueness,
            Step::All => Command::All,
        }
    }
}

impl Cli {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<(Command, RunConfig, Option<Fault>), CliError> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if let Some(v) = self.grid_r {
            c.grid.half_width = v;
        }
        if let Some(v) = self.grid_nr {
            c.grid.n_r = v;
        }
        if let Some(v) = self.grid_ns {
            c.grid.n_s = v;
        }
        if let Some(v) = &self.profile {
            c.profile = named_profile(v)?;
        }
        if let Some(v) = &self.delta {
            c.deltas = parse_list("deltas", v)?;
        }
        if let Some(v) = &self.k {
            c.modulation.k = parse_list("modulation.k", v)?;
        }
        if self.k_absolute {
            c.modulation.k_unit = KUnit::Absolute;
        }
        if let Some(v) = self.f0 {
            c.modulation.f0 = v;
        }
        if let Some(v) = self.nu {
            c.nu = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.samples {
            c.samples.geometry = v;
            c.samples.probes = v;
        }
        c.quadrature.theta_factor &= !self.no_theta_factor;
        c.show_violations |= self.show_violations;
        c.manufactured |= self.manufactured;
        c.cells |= self.cells;
        c.timings |= self.timings;
        let fault = match self.inject_fault.as_deref() {
            None => None,
            Some("christoffel") => Some(Fault::Christoffel),
            Some(other) => {
                return Err(CliError::Config {
                    field: "inject-fault".into(),
                    message: format!("unknown fault {other:?}"),
                })
            }
        };
        c.validate()?;
        Ok((self.command.into(), c, fault))
    }
}

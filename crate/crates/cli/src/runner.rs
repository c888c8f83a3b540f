//! Command execution with shared artifacts and the run manifest.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use warped_harmonic::harmonic::{HarmonicField, PointwiseBounds, ProbeRegion, AXIS_EXCLUSION};
use warped_harmonic::inequality::{
    verify_corner_decay, verify_f1_bound, verify_positivity_p, verify_supersolution, CornerDecayReport, MarginReport,
    PositivityReport, SupersolutionCertificate, SupersolutionPolynomial, Verdict,
};
use warped_harmonic::nonuniqueness::{
    energy_ledger, family_summary, separation_by_quadrature, write_family_csv, EnergyLedger, ExponentialModulation,
    FamilySummary,
};
use warped_harmonic::sobolev::{l2_gram, sobolev_report, write_cells_csv, GramReport, SobolevReport};
use warped_harmonic::strip::{
    fit_decay_constant, manufactured, solve_bvp, BoundaryProfile, DecayFit, FieldInterpolant, StripField,
};

use crate::checks::{geometry_checks, Fault, InvariantCheck};
use crate::config::{KUnit, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    GeometryCheck,
    Solve,
    VerifySupersolution,
    VerifyPsi,
    Norms,
    Nonuniqueness,
    All,
}

impl Command {
    pub const STEPS: [Command; 6] = [
        Command::GeometryCheck,
        Command::Solve,
        Command::VerifySupersolution,
        Command::VerifyPsi,
        Command::Norms,
        Command::Nonuniqueness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::GeometryCheck => "geometry-check",
            Command::Solve => "solve",
            Command::VerifySupersolution => "verify-supersolution",
            Command::VerifyPsi => "verify-psi",
            Command::Norms => "norms",
            Command::Nonuniqueness => "nonuniqueness",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepVerdict {
    Pass,
    Fail,
    NotRun,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub versions: BTreeMap<&'static str, &'static str>,
    pub verdicts: BTreeMap<&'static str, StepVerdict>,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<&'static str, f64>>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.verdicts.values().all(|v| *v != StepVerdict::Fail)
    }
}

/// A named numeric check with its limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub verdict: Verdict,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            verdict: Verdict::from_bool(value <= limit),
        }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            verdict: Verdict::from_bool(value >= limit),
        }
    }
}

#[derive(Serialize)]
struct GeometryOutput<'a> {
    checks: &'a [InvariantCheck],
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    grid: &'a warped_harmonic::strip::StripGrid,
    manufactured: bool,
    max_residual: f64,
    neumann_residual: f64,
    decay_fit: DecayFit,
    checks: &'a [Check],
    convergence: &'a [manufactured::ConvergenceRow],
}

#[derive(Serialize)]
struct SupersolutionOutput<'a> {
    certificate: &'a SupersolutionCertificate,
    positivity: &'a PositivityReport,
}

#[derive(Serialize)]
struct PsiOutput<'a> {
    deltas: &'a [CornerDecayReport],
    f1: &'a MarginReport,
}

#[derive(Serialize)]
struct NormsOutput<'a> {
    report: &'a SobolevReport,
    gram: &'a GramReport,
    pointwise: &'a PointwiseBounds,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadratureSeparation {
    pub k1: f64,
    pub k2: f64,
    pub t: f64,
    pub closed_form: f64,
    pub quadrature: f64,
    pub relative_difference: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub k: f64,
    pub worst_margin: f64,
    pub t: f64,
}

#[derive(Serialize)]
struct FamilyOutput<'a> {
    #[serde(flatten)]
    summary: &'a FamilySummary,
    quadrature_separations: &'a [QuadratureSeparation],
    /// Rates below `k*` dropped from the family.
    excluded: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    violations: Option<&'a [Violation]>,
}

/// Runs commands against one configuration, sharing solved artifacts.
pub struct Runner {
    pub config: RunConfig,
    pub fault: Option<Fault>,
    field: Option<StripField>,
    report: Option<SobolevReport>,
    verdicts: BTreeMap<&'static str, StepVerdict>,
    timings: BTreeMap<&'static str, f64>,
    failures: Vec<String>,
}

fn pretty<T: Serialize>(value: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

impl Runner {
    pub fn new(config: RunConfig, fault: Option<Fault>) -> Result<Self, CliError> {
        config.validate()?;
        Ok(Self {
            config,
            fault,
            field: None,
            report: None,
            verdicts: Command::STEPS.iter().map(|c| (c.name(), StepVerdict::NotRun)).collect(),
            timings: BTreeMap::new(),
            failures: Vec::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.config.out.join(name)
    }

    fn write(&self, name: &str, text: &str) -> Result<(), CliError> {
        fs::write(self.path(name), text)?;
        Ok(())
    }

    fn field(&mut self) -> Result<&StripField, CliError> {
        if self.field.is_none() {
            let grid = self.config.strip_grid()?;
            self.field = Some(solve_bvp(grid, &self.config.profile, None)?);
        }
        Ok(self.field.as_ref().expect("solved above"))
    }

    fn report(&mut self) -> Result<&SobolevReport, CliError> {
        if self.report.is_none() {
            let cfg = self.config.quadrature;
            let h = HarmonicField::from_field(self.field()?);
            let rep = sobolev_report(&h, &cfg)?;
            self.report = Some(rep);
        }
        Ok(self.report.as_ref().expect("computed above"))
    }

    /// Runs `command` (every step for [`Command::All`]) and writes the manifest.
    pub fn run(&mut self, command: Command) -> Result<RunManifest, CliError> {
        fs::create_dir_all(&self.config.out).map_err(|e| CliError::Config {
            field: "out".into(),
            message: format!("{}: {e}", self.config.out.display()),
        })?;
        let steps: Vec<Command> = if command == Command::All {
            Command::STEPS.to_vec()
        } else {
            vec![command]
        };
        for step in steps {
            let start = Instant::now();
            let ok = match step {
                Command::GeometryCheck => self.geometry_check()?,
                Command::Solve => self.solve()?,
                Command::VerifySupersolution => self.verify_supersolution()?,
                Command::VerifyPsi => self.verify_psi()?,
                Command::Norms => self.norms()?,
                Command::Nonuniqueness => self.nonuniqueness()?,
                Command::All => unreachable!("expanded above"),
            };
            self.timings.insert(step.name(), start.elapsed().as_secs_f64());
            self.verdicts
                .insert(step.name(), if ok { StepVerdict::Pass } else { StepVerdict::Fail });
        }
        self.write_manifest()
    }

    /// Names of failed checks collected so far.
    pub fn failures(&self) -> &[String] {
        &self.failures
    }

    fn fail_unless(&mut self, ok: bool, what: impl Into<String>) -> bool {
        if !ok {
            self.failures.push(what.into());
        }
        ok
    }

    fn write_manifest(&self) -> Result<RunManifest, CliError> {
        let mut files: Vec<String> = fs::read_dir(&self.config.out)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_file())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .collect();
        if !files.iter().any(|f| f == "manifest.json") {
            files.push("manifest.json".into());
        }
        files.sort();
        let manifest = RunManifest {
            config: self.config.clone(),
            versions: BTreeMap::from([
                ("harmonic-lab", env!("CARGO_PKG_VERSION")),
                ("warped-harmonic", warped_harmonic::VERSION),
            ]),
            verdicts: self.verdicts.clone(),
            files,
            timings: self.config.timings.then(|| self.timings.clone()),
        };
        self.write("manifest.json", &pretty(&manifest)?)?;
        Ok(manifest)
    }

    fn geometry_check(&mut self) -> Result<bool, CliError> {
        let checks = geometry_checks(self.config.samples.geometry, self.config.seed, self.fault)?;
        self.write("geometry.json", &pretty(&GeometryOutput { checks: &checks })?)?;
        let mut ok = true;
        for c in &checks {
            ok &= self.fail_unless(c.verdict.passed(), format!("geometry-check: {}", c.name));
        }
        Ok(ok)
    }

    fn solve(&mut self) -> Result<bool, CliError> {
        let grid = self.config.strip_grid()?;
        let manufactured_mode = self.config.manufactured;
        let field = if manufactured_mode {
            manufactured::solve(grid)?
        } else {
            self.field()?.clone()
        };
        field.write_csv(BufWriter::new(fs::File::create(self.path("field.csv"))?))?;

        let mut checks = vec![
            Check::at_most("max-residual", field.max_residual(), 1e-9),
            Check::at_most("neumann-residual", field.neumann_residual(), 1e-10),
        ];
        let g = field.grid;
        let interior = || (0..g.n_s - 1).flat_map(move |j| (1..g.n_r - 1).map(move |i| (i, j)));
        if manufactured_mode {
            checks.push(Check::at_most(
                "manufactured-max-error",
                manufactured::max_error(&field),
                1e-2,
            ));
        } else {
            let profile = &self.config.profile;
            if let BoundaryProfile::Constant { value } = profile {
                let err = field.values.iter().map(|v| (v - value).abs()).fold(0.0, f64::max);
                checks.push(Check::at_most("constant-exact", err, 1e-9));
            }
            let trace_min = field.top.iter().copied().fold(f64::INFINITY, f64::min);
            let trace_max = field.top.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if trace_min >= 0.0 {
                let vmin = field.values.iter().copied().fold(f64::INFINITY, f64::min);
                let vmax = field.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                checks.push(Check::at_least("maximum-principle-min", vmin, -1e-12));
                checks.push(Check::at_most("maximum-principle-max", vmax - trace_max, 1e-12));
            }
            if profile.comparison_ratio(g.half_width, 20_001) <= 1.0 {
                let p = SupersolutionPolynomial::standard();
                let worst = interior()
                    .map(|(i, j)| field.at(i, j) / ((-g.r(i).abs()).exp() * p.p(g.s(j))))
                    .fold(0.0, f64::max);
                let positive = interior().all(|(i, j)| field.at(i, j) > 0.0);
                checks.push(Check::at_most("comparison-ratio", worst, 1.05));
                checks.push(Check::at_least(
                    "interior-positive",
                    if positive { 1.0 } else { 0.0 },
                    1.0,
                ));
            }
        }
        let convergence = match grid.coarsened().and_then(|c| c.coarsened()) {
            Some(coarsest) => manufactured::convergence_study(coarsest, 3)?,
            None => Vec::new(),
        };
        for row in &convergence {
            if let Some(r) = row.ratio {
                let name = format!("convergence-ratio-{}x{}", row.n_r, row.n_s);
                checks.push(Check::at_least(&name, r, 3.2));
                checks.push(Check::at_most(&name, r, 4.8));
            }
        }
        let decay_fit = fit_decay_constant(&FieldInterpolant::new(&field), FRAC_PI_2 - 0.15);
        let out = SolveOutput {
            grid: &grid,
            manufactured: manufactured_mode,
            max_residual: field.max_residual(),
            neumann_residual: field.neumann_residual(),
            decay_fit,
            checks: &checks,
            convergence: &convergence,
        };
        self.write("solve.json", &pretty(&out)?)?;
        let mut ok = true;
        for c in &checks {
            ok &= self.fail_unless(c.verdict.passed(), format!("solve: {}", c.name));
        }
        Ok(ok)
    }

    fn verify_supersolution(&mut self) -> Result<bool, CliError> {
        let certificate = verify_supersolution(self.config.samples.supersolution)?;
        let positivity = verify_positivity_p();
        self.write(
            "supersolution.json",
            &pretty(&SupersolutionOutput {
                certificate: &certificate,
                positivity: &positivity,
            })?,
        )?;
        let a = self.fail_unless(certificate.passed(), "verify-supersolution: certificate");
        let b = self.fail_unless(positivity.passed(), "verify-supersolution: positivity");
        Ok(a && b)
    }

    fn verify_psi(&mut self) -> Result<bool, CliError> {
        let deltas = self
            .config
            .deltas
            .iter()
            .map(|&d| verify_corner_decay(d, self.config.samples.psi))
            .collect::<Result<Vec<_>, _>>()?;
        let f1 = verify_f1_bound(self.config.samples.f1, self.config.seed);
        self.write(
            "psi.json",
            &pretty(&PsiOutput {
                deltas: &deltas,
                f1: &f1,
            })?,
        )?;
        let mut ok = true;
        for r in &deltas {
            ok &= self.fail_unless(r.report.verdict.passed(), format!("verify-psi: delta {}", r.delta));
        }
        ok &= self.fail_unless(f1.verdict.passed(), "verify-psi: f1 bound");
        Ok(ok)
    }

    fn norms(&mut self) -> Result<bool, CliError> {
        let g = self.config.strip_grid()?;
        if self.config.profile.comparison_ratio(g.half_width, 20_001) == 0.0 {
            return Err(CliError::Config {
                field: "profile".into(),
                message: "boundary data vanish identically, so every norm is zero".into(),
            });
        }
        let cfg = self.config.quadrature;
        let report = self.report()?.clone();
        let field = self.field()?.clone();
        let main = HarmonicField::from_field(&field);
        let pointwise = main.verify_pointwise_bounds(self.config.samples.bounds, ProbeRegion::default())?;
        let mut fields = vec![field];
        for p in &self.config.extra_profiles {
            fields.push(solve_bvp(g, p, None)?);
        }
        let handles: Vec<HarmonicField> = fields.iter().map(HarmonicField::from_field).collect();
        let gram = l2_gram(&handles, &cfg)?;
        self.write(
            "norms.json",
            &pretty(&NormsOutput {
                report: &report,
                gram: &gram,
                pointwise: &pointwise,
            })?,
        )?;
        if self.config.cells {
            write_cells_csv(
                &main,
                &cfg,
                cfg.levels - 1,
                BufWriter::new(fs::File::create(self.path("cells.csv"))?),
            )?;
        }
        let mut ok = self.fail_unless(report.converged(), "norms: ladders not converged");
        ok &= self.fail_unless(!report.is_trivial(), "norms: trivial field");
        for b in &report.bound_checks {
            ok &= self.fail_unless(b.verdict.passed(), format!("norms: {}", b.check));
        }
        for b in [&pointwise.gradient, &pointwise.hessian, &pointwise.laplacian] {
            ok &= self.fail_unless(b.verdict.passed(), format!("norms: {}", b.check));
        }
        if handles.len() >= 2 {
            ok &= self.fail_unless(gram.converged, "norms: gram ladders not converged");
            ok &= self.fail_unless(gram.normalized_determinant > 1e-6, "norms: gram matrix is singular");
        }
        Ok(ok)
    }

    fn nonuniqueness(&mut self) -> Result<bool, CliError> {
        let ledger: EnergyLedger = energy_ledger(self.report()?)?;
        let m = self.config.modulation.clone();
        let nu = self.config.nu;
        let cfg = self.config.quadrature;
        let scale = match m.k_unit {
            KUnit::KStar => ledger.k_star,
            KUnit::Absolute => 1.0,
        };
        let mut members = Vec::new();
        let mut excluded = Vec::new();
        for &k in &m.k {
            let k = k * scale;
            if ledger.admissible(k) || self.config.show_violations {
                members.push(ExponentialModulation::new(m.f0, k, nu)?);
            } else {
                excluded.push(k);
            }
        }
        if members.is_empty() {
            return Err(CliError::Config {
                field: "modulation.k".into(),
                message: format!("no rate reaches the threshold k* = {}", ledger.k_star),
            });
        }
        let times: Vec<f64> = m.times.iter().map(|t| t / ledger.k_star).collect();
        let probes = ProbeRegion::default().sample(self.config.samples.probes, self.config.seed, AXIS_EXCLUSION);
        let field = self.field()?.clone();
        let h = HarmonicField::from_field(&field);
        let summary = family_summary(&h, &ledger, &members, &times, &probes)?;

        let mut quad = Vec::new();
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                let t = 1.0 / ledger.k_star;
                let q = separation_by_quadrature(&h, &cfg, a, b, t)?;
                let c = ledger.separation(m.f0, a.k, b.k, t);
                quad.push(QuadratureSeparation {
                    k1: a.k,
                    k2: b.k,
                    t,
                    closed_form: c,
                    quadrature: q.value,
                    relative_difference: (q.value - c).abs() / c,
                    converged: q.converged,
                });
            }
        }
        let violations: Vec<Violation> = summary
            .members
            .iter()
            .filter(|mem| !mem.admissible)
            .map(|mem| {
                let w = mem
                    .margins
                    .iter()
                    .min_by(|a, b| a.margin.total_cmp(&b.margin))
                    .expect("times are nonempty");
                Violation {
                    k: mem.k,
                    worst_margin: w.margin,
                    t: w.t,
                }
            })
            .collect();
        let out = FamilyOutput {
            summary: &summary,
            quadrature_separations: &quad,
            excluded: &excluded,
            violations: self.config.show_violations.then_some(violations.as_slice()),
        };
        self.write("family.json", &pretty(&out)?)?;
        write_family_csv(
            &ledger,
            &members,
            &times,
            BufWriter::new(fs::File::create(self.path("family.csv"))?),
        )?;

        let mut ok = self.fail_unless(
            summary.admissible_members_pass(),
            "nonuniqueness: margin of an admissible member",
        );
        let floor = 0.01 * m.f0.abs() * ledger.e0.sqrt();
        for s in &summary.separations {
            let admissible = ledger.admissible(s.k1) && ledger.admissible(s.k2);
            if admissible && s.k1 != s.k2 {
                ok &= self.fail_unless(
                    s.distance > floor,
                    format!("nonuniqueness: separation {} vs {}", s.k1, s.k2),
                );
            }
        }
        for q in &quad {
            ok &= self.fail_unless(
                q.converged && q.relative_difference <= 1e-2,
                format!("nonuniqueness: quadrature separation {} vs {}", q.k1, q.k2),
            );
        }
        for mem in &summary.members {
            ok &= self.fail_unless(
                mem.max_residual.is_finite(),
                format!("nonuniqueness: residual of k = {}", mem.k),
            );
        }
        Ok(ok)
    }
}

//! Time-modulated gradient fields `U(t) = f(t) (du)^♯` with
//! `f(t) = f₀ e^{-kt}`, their energy ledger and Navier-Stokes residual.
//!
//! One-forms are stored by their coordinate components `(ω_x, ω_y)`; the
//! `θ` component of every form here vanishes. Their metric size is
//! `(1 - |z|²) |(ω_x, ω_y)|`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{christoffel_symbols, DiskPoint, XX, XY, YY};
use crate::harmonic::{HarmonicField, OneFormJet, StripPotential};
use crate::output::fmt17;
use crate::quadrature::{integrate_ladders, QuadratureConfig, QuadratureLadder, Sample};
use crate::sobolev::SobolevReport;

/// `f(t) = f₀ e^{-kt}` with viscosity `ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialModulation {
    pub f0: f64,
    pub k: f64,
    pub nu: f64,
}

impl ExponentialModulation {
    pub fn new(f0: f64, k: f64, nu: f64) -> Result<Self> {
        if !(f0.is_finite() && f0 != 0.0) {
            return Err(Error::Config(format!(
                "modulation amplitude f0 = {f0} must be finite and nonzero"
            )));
        }
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::Config(format!(
                "modulation rate k = {k} must be finite and >= 0"
            )));
        }
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(Error::Config(format!("viscosity nu = {nu} must be finite and >= 0")));
        }
        Ok(Self { f0, k, nu })
    }

    pub fn f(&self, t: f64) -> f64 {
        self.f0 * (-self.k * t).exp()
    }

    pub fn f_prime(&self, t: f64) -> f64 {
        -self.k * self.f(t)
    }
}

/// Leray-Hopf quantities of `du`: `E₀ = ∫‖du‖²`, `D = ∫‖∇du‖²`, `k* = 2D/E₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "D")]
    pub dissipation: f64,
    pub k_star: f64,
}

/// Reads `E₀` and `D` from a converged report.
pub fn energy_ledger(report: &SobolevReport) -> Result<EnergyLedger> {
    if !report.l2_du.converged || !report.h1_du.converged {
        return Err(Error::Rejected(
            "energy ledger needs converged l2_du and h1_du ladders".into(),
        ));
    }
    EnergyLedger::new(report.l2_du.value, report.h1_du.value)
}

impl EnergyLedger {
    pub fn new(e0: f64, dissipation: f64) -> Result<Self> {
        if !(e0 > 0.0 && e0.is_finite()) {
            return Err(Error::Rejected(format!("initial energy E0 = {e0} must be positive")));
        }
        if !(dissipation > 0.0 && dissipation.is_finite()) {
            return Err(Error::Rejected(format!(
                "dissipation D = {dissipation} must be positive"
            )));
        }
        Ok(Self {
            e0,
            dissipation,
            k_star: 2.0 * dissipation / e0,
        })
    }

    /// `‖u₀‖² - ‖u(t)‖² - 4∫₀ᵗ‖Def u‖²` for `f₀ = 1`, i.e.
    /// `(1 - e^{-2kt})(E₀ - 2D/k)`, written as `(1 - e^{-2kt}) E₀ (k - k*)/k`
    /// so that its sign is exactly that of `k - k*`. At `k = 0` the limit
    /// `-4Dt` is returned.
    pub fn margin(&self, k: f64, t: f64) -> f64 {
        if k == 0.0 {
            return -4.0 * self.dissipation * t;
        }
        -(-2.0 * k * t).exp_m1() * self.e0 * ((k - self.k_star) / k)
    }

    /// [`Self::margin`] scaled by `f₀²`.
    pub fn margin_for(&self, m: &ExponentialModulation, t: f64) -> f64 {
        m.f0 * m.f0 * self.margin(m.k, t)
    }

    pub fn admissible(&self, k: f64) -> bool {
        k >= self.k_star
    }

    /// `‖U(t)‖_{L²} = |f(t)| √E₀`.
    pub fn norm_at(&self, m: &ExponentialModulation, t: f64) -> f64 {
        m.f(t).abs() * self.e0.sqrt()
    }

    /// `‖U₁(t) - U₂(t)‖ = |f₀| |e^{-k₁t} - e^{-k₂t}| √E₀`.
    pub fn separation(&self, f0: f64, k1: f64, k2: f64, t: f64) -> f64 {
        f0.abs() * ((-k1 * t).exp() - (-k2 * t).exp()).abs() * self.e0.sqrt()
    }
}

/// Convenience form of [`EnergyLedger::margin`].
pub fn energy_inequality_margin(ledger: &EnergyLedger, k: f64, t: f64) -> f64 {
    ledger.margin(k, t)
}

/// Convenience form of [`EnergyLedger::separation`].
pub fn family_separation(ledger: &EnergyLedger, f0: f64, k1: f64, k2: f64, t: f64) -> f64 {
    ledger.separation(f0, k1, k2, t)
}

/// `d(½‖du‖²_g)` from the jet: `½(1-|z|²)²|∇u|²` differentiated in closed form.
fn half_norm_gradient(jet: &OneFormJet) -> [f64; 2] {
    let z = jet.z;
    let d = z.defect();
    let g2 = jet.u_x * jet.u_x + jet.u_y * jet.u_y;
    [
        d * d * (jet.u_x * jet.u_xx + jet.u_y * jet.u_xy) - 2.0 * z.x * d * g2,
        d * d * (jet.u_x * jet.u_xy + jet.u_y * jet.u_yy) - 2.0 * z.y * d * g2,
    ]
}

/// `∇_{du♯} du` through the connection: `g^{jj} u_j (u_ji - Γ^k_ji u_k)`.
fn covariant_self_derivative(jet: &OneFormJet) -> [f64; 2] {
    let (gx, gy) = christoffel_symbols(jet.z);
    let t = |h: f64, k: usize| h - gx[k] * jet.u_x - gy[k] * jet.u_y;
    let (txx, txy, tyy) = (t(jet.u_xx, XX), t(jet.u_xy, XY), t(jet.u_yy, YY));
    let d2 = jet.z.defect().powi(2);
    [
        d2 * (jet.u_x * txx + jet.u_y * txy),
        d2 * (jet.u_x * txy + jet.u_y * tyy),
    ]
}

/// The terms of the momentum equation at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NsResidual {
    pub time: [f64; 2],
    pub convective: [f64; 2],
    pub viscous: [f64; 2],
    pub pressure: [f64; 2],
    pub total: [f64; 2],
    pub extrapolated: bool,
}

impl NsResidual {
    /// Metric size `(1 - |z|²)|ω|` of a coordinate 1-form at `z`.
    pub fn metric_norm(z: DiskPoint, w: [f64; 2]) -> f64 {
        z.defect() * w[0].hypot(w[1])
    }
}

/// `U(t) = f(t) (du)^♯` with pressure `p = -f'(t) u - ½ f(t)² ‖du‖²_g`.
pub struct ModulatedSolution<'a, P> {
    pub modulation: ExponentialModulation,
    pub field: &'a HarmonicField<P>,
}

impl<'a, P: StripPotential> ModulatedSolution<'a, P> {
    pub fn new(modulation: ExponentialModulation, field: &'a HarmonicField<P>) -> Self {
        Self { modulation, field }
    }

    /// Coordinate components of the 1-form `U(t)^♭ = f(t) du`.
    pub fn velocity(&self, t: f64, z: DiskPoint) -> Result<[f64; 2]> {
        let jet = self.field.pullback_jet(z)?;
        let f = self.modulation.f(t);
        Ok([f * jet.u_x, f * jet.u_y])
    }

    pub fn initial_data(&self, z: DiskPoint) -> Result<[f64; 2]> {
        self.velocity(0.0, z)
    }

    pub fn pressure(&self, t: f64, z: DiskPoint) -> Result<f64> {
        let jet = self.field.pullback_jet(z)?;
        let m = &self.modulation;
        Ok(-m.f_prime(t) * jet.u - 0.5 * m.f(t).powi(2) * jet.norm_du.powi(2))
    }

    /// `∂_t U + ∇_U U - ν f Δ du + ∇p`, with `Δ du = d(Δu - du(F))` the
    /// transported harmonic residual.
    pub fn ns_residual(&self, t: f64, z: DiskPoint) -> Result<NsResidual> {
        let jet = self.field.pullback_jet(z)?;
        let m = &self.modulation;
        let (f, fp) = (m.f(t), m.f_prime(t));
        let conv = covariant_self_derivative(&jet);
        let half = half_norm_gradient(&jet);
        let hodge = if m.nu == 0.0 || f == 0.0 {
            [0.0, 0.0]
        } else {
            self.field.hodge_residual(z)?
        };
        let time = [fp * jet.u_x, fp * jet.u_y];
        let convective = [f * f * conv[0], f * f * conv[1]];
        let viscous = [-m.nu * f * hodge[0], -m.nu * f * hodge[1]];
        let pressure = [-fp * jet.u_x - f * f * half[0], -fp * jet.u_y - f * f * half[1]];
        let total = [
            time[0] + convective[0] + viscous[0] + pressure[0],
            time[1] + convective[1] + viscous[1] + pressure[1],
        ];
        Ok(NsResidual {
            time,
            convective,
            viscous,
            pressure,
            total,
            extrapolated: jet.extrapolated,
        })
    }
}

/// Steady Euler residual for `f ≡ 1`, `p = -½‖du‖²_g`, relative to the
/// size of the convective term.
pub fn euler_residual_check<P: StripPotential>(field: &HarmonicField<P>, z: DiskPoint) -> Result<f64> {
    let jet = field.pullback_jet(z)?;
    let conv = covariant_self_derivative(&jet);
    let half = half_norm_gradient(&jet);
    let scale = conv[0].hypot(conv[1]);
    let diff = (conv[0] - half[0]).hypot(conv[1] - half[1]);
    Ok(if scale == 0.0 { diff } else { diff / scale })
}

/// `∇_{du♯} du` against central differences of `½‖du‖²_g` with step `h`,
/// relative to the size of the former.
pub fn convective_identity_fd<P: StripPotential>(field: &HarmonicField<P>, z: DiskPoint, h: f64) -> Result<f64> {
    let conv = covariant_self_derivative(&field.pullback_jet(z)?);
    let half = |dx: f64, dy: f64| -> Result<f64> {
        let p = DiskPoint::new(z.x + dx, z.y + dy)?;
        Ok(0.5 * field.pullback_jet(p)?.norm_du.powi(2))
    };
    let fd = [
        (half(h, 0.0)? - half(-h, 0.0)?) / (2.0 * h),
        (half(0.0, h)? - half(0.0, -h)?) / (2.0 * h),
    ];
    let scale = conv[0].hypot(conv[1]);
    Ok((conv[0] - fd[0]).hypot(conv[1] - fd[1]) / scale.max(f64::MIN_POSITIVE))
}

/// `‖U₁(t) - U₂(t)‖_{L²}` by quadrature of the pointwise difference.
pub fn separation_by_quadrature<P: StripPotential>(
    field: &HarmonicField<P>,
    cfg: &QuadratureConfig,
    m1: &ExponentialModulation,
    m2: &ExponentialModulation,
    t: f64,
) -> Result<QuadratureLadder> {
    let (f1, f2) = (m1.f(t), m2.f(t));
    let mut ladders = integrate_ladders(cfg, 1, &[false], |z| {
        let jet = field.jet_or_decay(z)?;
        let d = z.defect();
        let dx = (f1 * jet.u_x - f2 * jet.u_x) * d;
        let dy = (f1 * jet.u_y - f2 * jet.u_y) * d;
        let dens = crate::geometry::warp_f(z) / (d * d);
        Ok(Sample {
            values: vec![(dx * dx + dy * dy) * dens],
            band: vec![0.0],
        })
    })?;
    let mut l = ladders.remove(0);
    // report the norm, not its square
    for level in &mut l.levels {
        level.value = level.value.sqrt();
    }
    l.value = l.value.max(0.0).sqrt();
    Ok(l)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginSample {
    pub t: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyMember {
    pub k: f64,
    pub f0: f64,
    pub admissible: bool,
    pub margins: Vec<MarginSample>,
    /// Largest metric size of the momentum residual over probes and probe times.
    pub max_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Separation {
    pub k1: f64,
    pub k2: f64,
    pub t: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilySummary {
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "D")]
    pub dissipation: f64,
    pub k_star: f64,
    pub members: Vec<FamilyMember>,
    pub separations: Vec<Separation>,
}

impl FamilySummary {
    /// Every admissible member keeps a nonnegative margin.
    pub fn admissible_members_pass(&self) -> bool {
        self.members
            .iter()
            .filter(|m| m.admissible)
            .all(|m| m.margins.iter().all(|s| s.margin >= 0.0))
    }
}

/// Margins at `times`, residuals over `probes` at `times`, and pairwise
/// separations at `t = 1/k*`.
pub fn family_summary<P: StripPotential>(
    field: &HarmonicField<P>,
    ledger: &EnergyLedger,
    modulations: &[ExponentialModulation],
    times: &[f64],
    probes: &[DiskPoint],
) -> Result<FamilySummary> {
    if modulations.is_empty() {
        return Err(Error::Config("modulation list is empty".into()));
    }
    let members = modulations
        .iter()
        .map(|m| -> Result<FamilyMember> {
            let sol = ModulatedSolution::new(*m, field);
            let max_residual = probes
                .par_iter()
                .map(|&z| -> Result<f64> {
                    let mut worst: f64 = 0.0;
                    for &t in times {
                        let r = sol.ns_residual(t, z)?;
                        worst = worst.max(NsResidual::metric_norm(z, r.total));
                    }
                    Ok(worst)
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(FamilyMember {
                k: m.k,
                f0: m.f0,
                admissible: ledger.admissible(m.k),
                margins: times
                    .iter()
                    .map(|&t| MarginSample {
                        t,
                        margin: ledger.margin_for(m, t),
                    })
                    .collect(),
                max_residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let t_sep = 1.0 / ledger.k_star;
    let mut separations = Vec::new();
    for (i, a) in modulations.iter().enumerate() {
        for b in &modulations[i + 1..] {
            if a.f0 == b.f0 {
                separations.push(Separation {
                    k1: a.k,
                    k2: b.k,
                    t: t_sep,
                    distance: ledger.separation(a.f0, a.k, b.k, t_sep),
                });
            }
        }
    }
    Ok(FamilySummary {
        e0: ledger.e0,
        dissipation: ledger.dissipation,
        k_star: ledger.k_star,
        members,
        separations,
    })
}

/// CSV with header `k,t,norm_u,margin`, one row per member and time.
pub fn write_family_csv<W: Write>(
    ledger: &EnergyLedger,
    modulations: &[ExponentialModulation],
    times: &[f64],
    mut out: W,
) -> Result<()> {
    writeln!(out, "k,t,norm_u,margin")?;
    for m in modulations {
        for &t in times {
            writeln!(
                out,
                "{},{},{},{}",
                fmt17(m.k),
                fmt17(t),
                fmt17(ledger.norm_at(m, t)),
                fmt17(ledger.margin_for(m, t))
            )?;
        }
    }
    Ok(())
}

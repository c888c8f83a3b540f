//! Pullback of a strip solution to the half-disk: `u = v ∘ ψ`, its
//! differential, the covariant derivative `∇du` on the warped product, and
//! the pointwise residuals and bounds built from them.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    christoffel_symbols, phi, psi, psi_prime, psi_second, warp_f, DiskPoint, GeometryJet, C64, THETA_THETA, XX, XY, YY,
};
use crate::inequality::{MarginReport, Verdict};
use crate::output::fmt17;
use crate::strip::{FieldInterpolant, StripField, StripJet};

/// Smallest `x` accepted by the residual evaluations; `F = ∇ log f` is
/// singular on `L`.
pub const AXIS_EXCLUSION: f64 = 1e-3;

/// Below this `x` the ratio `(u_x f_x + u_y f_y) / f` is replaced by its limit on `L`.
const AXIS_LIMIT_X: f64 = 1e-7;

/// Something that answers strip jets `(v, v_r, ...)` at `(r, s)`.
pub trait StripPotential: Sync {
    /// `None` outside the region where the jet is trusted.
    fn strip_jet(&self, r: f64, s: f64) -> Option<StripJet>;

    /// Largest `|r|` answered by [`Self::strip_jet`].
    fn r_window(&self) -> f64 {
        f64::INFINITY
    }
}

impl StripPotential for FieldInterpolant {
    fn strip_jet(&self, r: f64, s: f64) -> Option<StripJet> {
        (r.abs() <= FieldInterpolant::r_window(self)).then(|| self.jet(r, s))
    }

    fn r_window(&self) -> f64 {
        FieldInterpolant::r_window(self)
    }
}

/// A potential given in closed form on the whole strip.
pub struct ClosedForm<F>(pub F);

impl<F: Fn(f64, f64) -> StripJet + Sync> StripPotential for ClosedForm<F> {
    fn strip_jet(&self, r: f64, s: f64) -> Option<StripJet> {
        Some((self.0)(r, s))
    }
}

/// `v ≡ c`.
pub fn constant_potential(c: f64) -> ClosedForm<impl Fn(f64, f64) -> StripJet + Sync> {
    ClosedForm(move |_, _| StripJet {
        v: c,
        ..StripJet::default()
    })
}

/// `v = r`, so `u = Re ψ`.
pub fn linear_r_potential() -> ClosedForm<impl Fn(f64, f64) -> StripJet + Sync> {
    ClosedForm(|r, _| StripJet {
        v: r,
        v_r: 1.0,
        ..StripJet::default()
    })
}

/// `v = cos r cos s`.
pub fn cosine_potential() -> ClosedForm<impl Fn(f64, f64) -> StripJet + Sync> {
    ClosedForm(|r: f64, s: f64| {
        let (cr, sr, cs, ss) = (r.cos(), r.sin(), s.cos(), s.sin());
        StripJet {
            v: cr * cs,
            v_r: -sr * cs,
            v_s: -cr * ss,
            v_rr: -cr * cs,
            v_rs: sr * ss,
            v_ss: -cr * cs,
        }
    })
}

/// `u` and its derivatives up to second order at a point of `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneFormJet {
    pub z: DiskPoint,
    pub u: f64,
    pub u_x: f64,
    pub u_y: f64,
    pub u_xx: f64,
    pub u_xy: f64,
    pub u_yy: f64,
    /// `(1 - |z|²)² (u_xx + u_yy)`.
    pub laplacian: f64,
    /// `‖du‖_g = (1 - |z|²) |∇u|`.
    pub norm_du: f64,
    pub norm_nabla_du_sq: f64,
    /// Set when `ψ(z)` fell outside the strip window and the decay model `v = 0` was used.
    pub extrapolated: bool,
}

impl OneFormJet {
    fn decayed(z: DiskPoint) -> Self {
        Self {
            z,
            u: 0.0,
            u_x: 0.0,
            u_y: 0.0,
            u_xx: 0.0,
            u_xy: 0.0,
            u_yy: 0.0,
            laplacian: 0.0,
            norm_du: 0.0,
            norm_nabla_du_sq: 0.0,
            extrapolated: true,
        }
    }

    pub fn gradient_abs_sum(&self) -> f64 {
        self.u_x.abs() + self.u_y.abs()
    }

    pub fn hessian_abs_sum(&self) -> f64 {
        self.u_xx.abs() + self.u_xy.abs() + self.u_yy.abs()
    }
}

/// `(u_x f_x + u_y f_y) / f`, with the limit `u_xx + 2y u_y / (1 - |z|²)` on `L`.
fn convective_ratio(z: DiskPoint, u_x: f64, u_y: f64, u_xx: f64) -> f64 {
    let d = z.defect();
    if z.x < AXIS_LIMIT_X {
        return u_xx + 2.0 * z.y * u_y / d;
    }
    let t = 2.0 * z.x / d;
    let a = 0.5 * t.asinh();
    // f_t / f with f = sinh a
    let ft_over_f = 0.5 / (a.tanh() * (1.0 + t * t).sqrt());
    let t_x = (2.0 * d + 4.0 * z.x * z.x) / (d * d);
    let t_y_over_t = 2.0 * z.y / d;
    ft_over_f * (t_x * u_x + t * t_y_over_t * u_y)
}

/// `∇du` in the coframe `{dx, dy, dθ}`; index 2 is `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NablaDu {
    pub components: [[f64; 3]; 3],
}

impl NablaDu {
    fn from_parts(hess: [f64; 3], u_x: f64, u_y: f64, gx: &[f64; 5], gy: &[f64; 5]) -> Self {
        let t = |h: f64, k: usize| h - gx[k] * u_x - gy[k] * u_y;
        let xx = t(hess[0], XX);
        let xy = t(hess[1], XY);
        let yy = t(hess[2], YY);
        let tt = t(0.0, THETA_THETA);
        Self {
            components: [[xx, xy, 0.0], [xy, yy, 0.0], [0.0, 0.0, tt]],
        }
    }

    /// `‖∇du‖²_g` with `‖dx‖ = ‖dy‖ = 1 - |z|²` and `‖dθ‖ = 1/f`.
    pub fn norm_sq(&self, z: DiskPoint) -> f64 {
        let d2 = z.defect() * z.defect();
        let f2 = warp_f(z).powi(2);
        let c = &self.components;
        d2 * d2 * (c[0][0].powi(2) + c[0][1].powi(2) + c[1][0].powi(2) + c[1][1].powi(2)) + c[2][2].powi(2) / (f2 * f2)
    }
}

fn same_point(jet: &OneFormJet, geo: &GeometryJet) -> Result<()> {
    if jet.z != geo.z {
        return Err(Error::Domain(format!(
            "jet at {:?} paired with geometry at {:?}",
            jet.z, geo.z
        )));
    }
    Ok(())
}

/// `∇du = u_ij dx^i ⊗ dx^j + u_x ∇dx + u_y ∇dy`.
pub fn covariant_derivative(jet: &OneFormJet, geo: &GeometryJet) -> Result<NablaDu> {
    same_point(jet, geo)?;
    Ok(NablaDu::from_parts(
        [jet.u_xx, jet.u_xy, jet.u_yy],
        jet.u_x,
        jet.u_y,
        &geo.christoffel_x,
        &geo.christoffel_y,
    ))
}

/// First-order part `u_x ∇dx + u_y ∇dy` alone.
pub fn lower_order_part(jet: &OneFormJet, geo: &GeometryJet) -> Result<NablaDu> {
    same_point(jet, geo)?;
    Ok(NablaDu::from_parts(
        [0.0; 3],
        jet.u_x,
        jet.u_y,
        &geo.christoffel_x,
        &geo.christoffel_y,
    ))
}

/// Closed form of `‖u_x ∇dx + u_y ∇dy‖²_g`:
/// `8|z|²(u_x² + u_y²)(1 - |z|²)² + (1 - |z|²)⁴ (u_x f_x + u_y f_y)² / f²`.
pub fn lower_order_norm_sq(geo: &GeometryJet, u_x: f64, u_y: f64) -> f64 {
    let d2 = geo.defect().powi(2);
    let r2 = geo.z.x * geo.z.x + geo.z.y * geo.z.y;
    let q = (u_x * geo.f_x + u_y * geo.f_y) / geo.f;
    8.0 * r2 * (u_x * u_x + u_y * u_y) * d2 + d2 * d2 * q * q
}

/// Region of the strip used for probes, away from the truncation edges and
/// from the Dirichlet edge where second derivatives of `v` lose regularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRegion {
    pub r_max: f64,
    pub s_min: f64,
    pub s_max: f64,
}

impl Default for ProbeRegion {
    fn default() -> Self {
        Self {
            r_max: 8.0,
            s_min: 0.0,
            s_max: FRAC_PI_2 - 0.15,
        }
    }
}

impl ProbeRegion {
    /// `n` points `φ(r + is)` with `(r, s)` uniform in the region; points
    /// closer to `L` than `min_x` are skipped and redrawn.
    pub fn sample(&self, n: usize, seed: u64, min_x: f64) -> Vec<DiskPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let r = rng.gen_range(-self.r_max..=self.r_max);
            let s = rng.gen_range(self.s_min..=self.s_max);
            if let Ok(p) = DiskPoint::from_complex(phi(C64::new(r, s))) {
                if p.x >= min_x && p.defect() > 0.0 {
                    out.push(p);
                }
            }
        }
        out
    }

    /// About `n` points `φ(r + is)` on a tensor lattice of the region that
    /// includes its edges, so suprema attained on an edge are hit exactly.
    pub fn lattice(&self, n: usize) -> Vec<DiskPoint> {
        let width = 2.0 * self.r_max;
        let height = self.s_max - self.s_min;
        let n_s = ((n as f64 * height / width).sqrt().round() as usize).max(2);
        let n_r = (n / n_s).max(2);
        let mut out = Vec::with_capacity(n_r * n_s);
        for j in 0..n_s {
            let s = self.s_min + height * j as f64 / (n_s - 1) as f64;
            for i in 0..n_r {
                let r = -self.r_max + width * i as f64 / (n_r - 1) as f64;
                if let Ok(p) = DiskPoint::from_complex(phi(C64::new(r, s))) {
                    out.push(p);
                }
            }
        }
        out
    }
}

fn check_off_axis(z: DiskPoint) -> Result<()> {
    if z.x < AXIS_EXCLUSION {
        return Err(Error::Domain(format!(
            "residual requested within {AXIS_EXCLUSION} of L (x = {})",
            z.x
        )));
    }
    Ok(())
}

/// `Δu - du(F)` for an arbitrary jet, harmonic or not, where
/// `Δ = -(1 - |z|²)²(∂_x² + ∂_y²)` is the nonnegative Laplacian and
/// `du(F) = (1 - |z|²)² (u_x f_x + u_y f_y) / f`.
pub fn residual_of_jet(jet: &OneFormJet) -> Result<f64> {
    check_off_axis(jet.z)?;
    let d2 = jet.z.defect().powi(2);
    Ok(-jet.laplacian - d2 * convective_ratio(jet.z, jet.u_x, jet.u_y, jet.u_xx))
}

/// Supremum reports of the pointwise derivative bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseBounds {
    /// `sup |u_x| + |u_y|`.
    pub gradient: MarginReport,
    /// `sup (|u_xx| + |u_xy| + |u_yy|) / |ψ'|`.
    pub hessian: MarginReport,
    /// `sup |Δu| / (1 - |z|²)`.
    pub laplacian: MarginReport,
}

/// The pulled-back potential `u = v ∘ ψ`.
pub struct HarmonicField<P = FieldInterpolant> {
    potential: P,
}

impl HarmonicField<FieldInterpolant> {
    pub fn from_field(field: &StripField) -> Self {
        Self {
            potential: FieldInterpolant::new(field),
        }
    }
}

impl<P: StripPotential> HarmonicField<P> {
    pub fn new(potential: P) -> Self {
        Self { potential }
    }

    pub fn potential(&self) -> &P {
        &self.potential
    }

    /// Chain rule `u = v ∘ ψ` with `ψ' = a + ib`, `ψ'' = c + id`; by
    /// Cauchy-Riemann `∂_x(r, s) = (a, b)` and `∂_y(r, s) = (-b, a)`.
    pub fn pullback_jet(&self, z: DiskPoint) -> Result<OneFormJet> {
        let w = psi(z)?;
        let v = self
            .potential
            .strip_jet(w.re, w.im)
            .ok_or(Error::OutOfWindow { r: w.re, s: w.im })?;
        let zc = z.z();
        let p1 = psi_prime(zc)?;
        let p2 = psi_second(zc)?;
        let (a, b, c, d) = (p1.re, p1.im, p2.re, p2.im);

        let u_x = v.v_r * a + v.v_s * b;
        let u_y = -v.v_r * b + v.v_s * a;
        let u_xx = v.v_rr * a * a + 2.0 * v.v_rs * a * b + v.v_ss * b * b + v.v_r * c + v.v_s * d;
        let u_xy = -v.v_rr * a * b + v.v_rs * (a * a - b * b) + v.v_ss * a * b - v.v_r * d + v.v_s * c;
        let u_yy = v.v_rr * b * b - 2.0 * v.v_rs * a * b + v.v_ss * a * a - v.v_r * c - v.v_s * d;

        let defect = z.defect();
        let d2 = defect * defect;
        let (gx, gy) = christoffel_symbols(z);
        let t = NablaDu::from_parts([u_xx, u_xy, u_yy], u_x, u_y, &gx, &gy).components;
        // θθ part written through the convective ratio so that it stays finite on L
        let q = convective_ratio(z, u_x, u_y, u_xx);
        let norm_nabla_du_sq = d2 * d2 * (t[0][0].powi(2) + 2.0 * t[0][1].powi(2) + t[1][1].powi(2) + q * q);

        Ok(OneFormJet {
            z,
            u: v.v,
            u_x,
            u_y,
            u_xx,
            u_xy,
            u_yy,
            laplacian: d2 * (u_xx + u_yy),
            norm_du: defect * u_x.hypot(u_y),
            norm_nabla_du_sq,
            extrapolated: false,
        })
    }

    /// [`Self::pullback_jet`], falling back to the flagged decay model
    /// outside the strip window.
    pub fn jet_or_decay(&self, z: DiskPoint) -> Result<OneFormJet> {
        match self.pullback_jet(z) {
            Err(Error::OutOfWindow { .. }) => Ok(OneFormJet::decayed(z)),
            other => other,
        }
    }

    pub fn jets(&self, points: &[DiskPoint]) -> Vec<Result<OneFormJet>> {
        points.par_iter().map(|&z| self.jet_or_decay(z)).collect()
    }

    /// [`residual_of_jet`] of the pulled-back jet.
    pub fn harmonic_residual(&self, z: DiskPoint) -> Result<f64> {
        check_off_axis(z)?;
        residual_of_jet(&self.pullback_jet(z)?)
    }

    /// Coordinate components of the 1-form residual `Δω - d(ω(F))` for
    /// `ω = du`, i.e. `d` of [`Self::harmonic_residual`], by central differences.
    pub fn hodge_residual(&self, z: DiskPoint) -> Result<[f64; 2]> {
        check_off_axis(z)?;
        let h = 1e-5 * z.defect().min(z.x);
        let at = |dx: f64, dy: f64| -> Result<f64> {
            residual_of_jet(&self.pullback_jet(DiskPoint::new(z.x + dx, z.y + dy)?)?)
        };
        Ok([
            (at(h, 0.0)? - at(-h, 0.0)?) / (2.0 * h),
            (at(0.0, h)? - at(0.0, -h)?) / (2.0 * h),
        ])
    }

    /// Suprema over about `n` lattice points of the gradient bound, the
    /// Hessian bound relative to `|ψ'|`, and `|Δu| / (1 - |z|²)`.
    pub fn verify_pointwise_bounds(&self, n: usize, region: ProbeRegion) -> Result<PointwiseBounds> {
        let points = region.lattice(n);
        let rows: Vec<(f64, f64, f64, DiskPoint)> = points
            .par_iter()
            .map(|&z| {
                let jet = self.pullback_jet(z)?;
                let dpsi = psi_prime(z.z())?.norm();
                Ok((
                    jet.gradient_abs_sum(),
                    jet.hessian_abs_sum() / dpsi,
                    jet.laplacian.abs() / z.defect(),
                    z,
                ))
            })
            .collect::<Result<_>>()?;
        let report = |check: &str, pick: fn(&(f64, f64, f64, DiskPoint)) -> f64| {
            let (value, at) = rows.iter().fold((0.0f64, None), |acc, row| {
                if pick(row) > acc.0 {
                    (pick(row), Some(row.3))
                } else {
                    acc
                }
            });
            MarginReport {
                check: check.into(),
                samples: rows.len(),
                worst_value: value,
                worst_location: at.map_or(vec![], |p| vec![p.x, p.y]),
                fitted_exponent: None,
                verdict: Verdict::from_bool(value.is_finite()),
            }
        };
        Ok(PointwiseBounds {
            gradient: report("gradient-bound", |r| r.0),
            hessian: report("hessian-bound", |r| r.1),
            laplacian: report("laplacian-bound", |r| r.2),
        })
    }
}

/// CSV with header
/// `x,y,u,u_x,u_y,u_xx,u_xy,u_yy,laplacian,norm_du,norm_nabla_du_sq,extrapolated`.
pub fn write_jets_csv<W: Write>(jets: &[OneFormJet], mut out: W) -> Result<()> {
    writeln!(
        out,
        "x,y,u,u_x,u_y,u_xx,u_xy,u_yy,laplacian,norm_du,norm_nabla_du_sq,extrapolated"
    )?;
    for j in jets {
        let cols = [
            j.z.x,
            j.z.y,
            j.u,
            j.u_x,
            j.u_y,
            j.u_xx,
            j.u_xy,
            j.u_yy,
            j.laplacian,
            j.norm_du,
            j.norm_nabla_du_sq,
        ];
        let line: Vec<String> = cols.iter().map(|&c| fmt17(c)).collect();
        writeln!(out, "{},{}", line.join(","), u8::from(j.extrapolated))?;
    }
    Ok(())
}

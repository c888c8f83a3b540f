//! The four Sobolev quantities of `du` on `M = H ×_f S¹`, integrated over
//! `H` with the volume element `f dx dy / (1 - |z|²)²`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{psi, warp_f, warp_f_strip, DiskPoint, C64};
use crate::harmonic::{HarmonicField, OneFormJet, StripPotential};
use crate::inequality::{MarginReport, Verdict};
use crate::output::fmt17;
use crate::quadrature::{
    gauss_legendre, integrate_ladders, integrate_level, QuadratureConfig, QuadratureLadder, Sample,
};
use crate::strip::{FieldInterpolant, StripField};

/// Ladders for `∫‖du‖²`, `∫‖du‖⁴`, `∫‖∇du‖²`, `∫‖∇du‖⁴` and `∫_H f dx dy`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolevReport {
    pub l2_du: QuadratureLadder,
    pub l4_du: QuadratureLadder,
    pub h1_du: QuadratureLadder,
    pub w14_du: QuadratureLadder,
    pub base_volume: QuadratureLadder,
    pub theta_factor: bool,
    /// Fitted constants of the integrand bounds, sampled over `H`.
    pub bound_checks: Vec<MarginReport>,
}

impl SobolevReport {
    pub fn ladders(&self) -> [(&'static str, &QuadratureLadder); 5] {
        [
            ("l2_du", &self.l2_du),
            ("l4_du", &self.l4_du),
            ("h1_du", &self.h1_du),
            ("w14_du", &self.w14_du),
            ("base_volume", &self.base_volume),
        ]
    }

    pub fn converged(&self) -> bool {
        self.ladders().iter().all(|(_, l)| l.converged)
    }

    pub fn is_trivial(&self) -> bool {
        self.l2_du.value == 0.0 && self.h1_du.value == 0.0
    }
}

/// Whether `z` lies in the last unit of `|Re ψ|` before the strip window.
fn in_band(z: DiskPoint, window: f64) -> Result<bool> {
    if !window.is_finite() {
        return Ok(false);
    }
    let r = psi(z)?.re.abs();
    Ok(r >= window - 1.0 && r <= window)
}

/// `f / (1 - |z|²)²`.
fn density(z: DiskPoint) -> f64 {
    warp_f(z) / z.defect().powi(2)
}

fn jet_sample<P: StripPotential>(field: &HarmonicField<P>, z: DiskPoint) -> Result<Sample> {
    let jet = field.jet_or_decay(z)?;
    let dens = density(z);
    let n2 = jet.norm_du * jet.norm_du;
    let m2 = jet.norm_nabla_du_sq;
    let values = vec![warp_f(z), n2 * dens, n2 * n2 * dens, m2 * dens, m2 * m2 * dens];
    let band = if !jet.extrapolated && in_band(z, field.potential().r_window())? {
        let mut b = values.clone();
        b[0] = 0.0;
        b
    } else {
        vec![0.0; 5]
    };
    Ok(Sample { values, band })
}

/// All five ladders in one pass per level, plus sampled bound checks.
pub fn sobolev_report<P: StripPotential>(field: &HarmonicField<P>, cfg: &QuadratureConfig) -> Result<SobolevReport> {
    let ladders = integrate_ladders(cfg, 5, &[false, true, true, true, true], |z| jet_sample(field, z))?;
    let mut it = ladders.into_iter();
    let mut next = || it.next().expect("five ladders");
    let base_volume = next();
    Ok(SobolevReport {
        l2_du: next(),
        l4_du: next(),
        h1_du: next(),
        w14_du: next(),
        base_volume,
        theta_factor: cfg.theta_factor,
        bound_checks: bound_checks(field, 10_000, 17)?,
    })
}

/// Points of `H` half uniform in `(ρ, α)`, half within `10^-8 .. 1` of the arc.
fn disk_samples(n: usize, seed: u64) -> Vec<DiskPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let alpha: f64 = rng.gen_range(-FRAC_PI_2..FRAC_PI_2);
        let rho = if out.len() % 2 == 0 {
            rng.gen_range(0.0..1.0)
        } else {
            1.0 - 10f64.powf(rng.gen_range(-8.0..0.0))
        };
        if let Ok(p) = DiskPoint::from_complex(C64::from_polar(rho, alpha)) {
            if p.defect() > 0.0 && p.x > 0.0 {
                out.push(p);
            }
        }
    }
    out
}

/// Sampled suprema of `‖du‖²/(1-|z|²)²`, `‖∇du‖²/(1-|z|²)²` and
/// `‖∇du‖⁴/(1-|z|²)⁴`: the integrands are then `≤ C f` and the fourth
/// power `≤ C (1-|z|²)⁴`.
pub fn bound_checks<P: StripPotential>(field: &HarmonicField<P>, n: usize, seed: u64) -> Result<Vec<MarginReport>> {
    let points = disk_samples(n, seed);
    let jets: Vec<OneFormJet> = points
        .par_iter()
        .map(|&z| field.jet_or_decay(z))
        .collect::<Result<_>>()?;
    let report = |check: &str, ratio: &dyn Fn(&OneFormJet) -> f64| {
        let (worst, at) = jets.iter().fold((0.0f64, None), |acc, j| {
            let v = ratio(j);
            if v > acc.0 || v.is_nan() {
                (v, Some(j.z))
            } else {
                acc
            }
        });
        MarginReport {
            check: check.into(),
            samples: jets.len(),
            worst_value: worst,
            worst_location: at.map_or(vec![], |p| vec![p.x, p.y]),
            fitted_exponent: None,
            verdict: Verdict::from_bool(worst.is_finite()),
        }
    };
    Ok(vec![
        report("du-density-bound", &|j| j.norm_du.powi(2) / j.z.defect().powi(2)),
        report("nabla-du-density-bound", &|j| j.norm_nabla_du_sq / j.z.defect().powi(2)),
        report("nabla-du-quartic-bound", &|j| {
            j.norm_nabla_du_sq.powi(2) / j.z.defect().powi(4)
        }),
    ])
}

/// `L²` Gram matrix `∫ g(du_i, du_j) dV` of several fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramReport {
    pub matrix: Vec<Vec<f64>>,
    pub determinant: f64,
    /// `det G / ∏ G_ii`, in `[0, 1]`; zero exactly for dependent fields.
    pub normalized_determinant: f64,
    pub converged: bool,
}

pub fn l2_gram<P: StripPotential>(fields: &[HarmonicField<P>], cfg: &QuadratureConfig) -> Result<GramReport> {
    let n = fields.len();
    if n == 0 {
        return Err(Error::Config("Gram matrix of no fields".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let width = pairs.len();
    let ladders = integrate_ladders(cfg, width, &vec![true; width], |z| {
        let jets: Vec<OneFormJet> = fields.iter().map(|f| f.jet_or_decay(z)).collect::<Result<_>>()?;
        let scale = z.defect().powi(2) * density(z);
        let values: Vec<f64> = pairs
            .iter()
            .map(|&(i, j)| scale * (jets[i].u_x * jets[j].u_x + jets[i].u_y * jets[j].u_y))
            .collect();
        let band = if jets.iter().any(|j| j.extrapolated) {
            vec![0.0; width]
        } else {
            let window = fields
                .iter()
                .map(|f| f.potential().r_window())
                .fold(f64::INFINITY, f64::min);
            if in_band(z, window)? {
                values.clone()
            } else {
                vec![0.0; width]
            }
        };
        Ok(Sample { values, band })
    })?;
    let mut matrix = vec![vec![0.0; n]; n];
    for (&(i, j), l) in pairs.iter().zip(&ladders) {
        matrix[i][j] = l.value;
        matrix[j][i] = l.value;
    }
    let determinant = determinant(&matrix);
    let diag: f64 = (0..n).map(|i| matrix[i][i]).product();
    Ok(GramReport {
        normalized_determinant: if diag > 0.0 { determinant / diag } else { 0.0 },
        determinant,
        matrix,
        converged: ladders.iter().all(|l| l.converged),
    })
}

/// Determinant by Gaussian elimination with partial pivoting.
fn determinant(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        let (top, rest) = a.split_at_mut(c + 1);
        let pivot = &top[c];
        for row in rest.iter_mut() {
            let factor = row[c] / pivot[c];
            for (x, y) in row[c..n].iter_mut().zip(&pivot[c..n]) {
                *x -= factor * y;
            }
        }
    }
    det
}

/// Contribution of the balls `|z ∓ i| < radius` to the four `du` integrals,
/// in the order of [`SobolevReport::ladders`] without `base_volume`.
pub fn corner_contribution<P: StripPotential>(
    field: &HarmonicField<P>,
    cfg: &QuadratureConfig,
    radius: f64,
) -> Result<Vec<QuadratureLadder>> {
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::Config(format!("corner radius {radius} must lie in (0, 1)")));
    }
    integrate_ladders(cfg, 4, &[false; 4], |z| {
        if z.corner_distance() >= radius {
            return Ok(Sample {
                values: vec![0.0; 4],
                band: vec![0.0; 4],
            });
        }
        let s = jet_sample(field, z)?;
        Ok(Sample {
            values: s.values[1..].to_vec(),
            band: vec![0.0; 4],
        })
    })
}

/// `∫‖du‖² dV` computed on the strip instead, where it equals
/// `∫∫ (v_r² + v_s²) f̃(s) dr ds` over the trusted `r` window.
///
/// Trapezoid nodes in `r`; Gauss in `s` per grid cell, with `s = π/2 - τ²`
/// on the last cell to absorb the `(π/2 - s)^{-1/2}` growth of `f̃`.
pub fn strip_l2(field: &StripField, theta_factor: bool) -> Result<f64> {
    let interp = FieldInterpolant::new(field);
    let g = field.grid;
    let window = interp.r_window();
    let (nodes, weights) = gauss_legendre(8);
    let columns: Vec<usize> = (0..g.n_r).filter(|&i| g.r(i).abs() <= window + 1e-12).collect();
    let (first, last) = (columns[0], *columns.last().unwrap());
    let total: f64 = columns
        .par_iter()
        .map(|&i| -> Result<f64> {
            let r = g.r(i);
            let wr = if i == first || i == last { 0.5 * g.h_r } else { g.h_r };
            let mut acc = 0.0;
            for j in 0..g.n_s - 1 {
                let (s0, s1) = (g.s(j), g.s(j + 1));
                for (x, w) in nodes.iter().zip(&weights) {
                    let (s, ws) = if j == g.n_s - 2 {
                        // σ = π/2 - s = τ², τ ∈ (0, √h_s)
                        let tmax = (FRAC_PI_2 - s0).sqrt();
                        let tau = 0.5 * tmax * (1.0 + x);
                        (FRAC_PI_2 - tau * tau, 0.5 * tmax * w * 2.0 * tau)
                    } else {
                        (0.5 * (s0 + s1) + 0.5 * (s1 - s0) * x, 0.5 * (s1 - s0) * w)
                    };
                    let jet = interp.jet(r, s);
                    acc += ws * (jet.v_r * jet.v_r + jet.v_s * jet.v_s) * warp_f_strip(s)?;
                }
            }
            Ok(wr * acc)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum();
    Ok(if theta_factor { 2.0 * PI * total } else { total })
}

/// Per-cell contributions of the five integrands on one mesh level, as CSV
/// with header `rho_lo,rho_hi,alpha_lo,alpha_hi,base_volume,l2_du,l4_du,h1_du,w14_du`.
pub fn write_cells_csv<P: StripPotential, W: Write>(
    field: &HarmonicField<P>,
    cfg: &QuadratureConfig,
    level: usize,
    mut out: W,
) -> Result<()> {
    let mesh = cfg.mesh(level);
    let res = integrate_level(cfg, &mesh, 5, &|z| jet_sample(field, z))?;
    writeln!(
        out,
        "rho_lo,rho_hi,alpha_lo,alpha_hi,base_volume,l2_du,l4_du,h1_du,w14_du"
    )?;
    let n_alpha = mesh.alpha.len() - 1;
    for (k, cell) in res.per_cell.iter().enumerate() {
        let (i, j) = (k / n_alpha, k % n_alpha);
        let mut cols = vec![mesh.rho[i], mesh.rho[i + 1], mesh.alpha[j], mesh.alpha[j + 1]];
        cols.extend_from_slice(cell);
        let line: Vec<String> = cols.into_iter().map(fmt17).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::constant_potential;

    #[test]
    fn determinant_small_cases() {
        assert_eq!(determinant(&[vec![2.0, 1.0], vec![1.0, 2.0]]), 3.0);
        assert_eq!(determinant(&[vec![1.0, 2.0], vec![2.0, 4.0]]), 0.0);
        let d = determinant(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 3.0]]);
        assert_eq!(d, -3.0);
    }

    #[test]
    fn zero_field_integrals_vanish() {
        let field = HarmonicField::new(constant_potential(0.0));
        let cfg = QuadratureConfig {
            levels: 3,
            ..Default::default()
        };
        let report = sobolev_report(&field, &cfg).unwrap();
        for (name, l) in report.ladders().into_iter().take(4) {
            assert_eq!(l.value, 0.0, "{name}");
            assert!(l.converged);
        }
        assert!(report.is_trivial());
        assert!(report.base_volume.value > 0.0);
    }

    #[test]
    fn base_volume_converges() {
        let field = HarmonicField::new(constant_potential(1.0));
        let cfg = QuadratureConfig {
            theta_factor: false,
            ..Default::default()
        };
        let report = sobolev_report(&field, &cfg).unwrap();
        let v = &report.base_volume;
        assert!(v.converged, "{v:?}");
        assert!(v.value.is_finite() && v.value > 0.0);
        // f = √((√(1+t²) - 1)/2) ≤ √(x/(1-|z|²)), whose integral over H is below 2.1
        assert!(v.value < 2.1, "{}", v.value);
    }

    #[test]
    fn cells_csv_covers_the_mesh() {
        let field = HarmonicField::new(constant_potential(1.0));
        let cfg = QuadratureConfig::default();
        let mut buf = Vec::new();
        write_cells_csv(&field, &cfg, 0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + cfg.mesh(0).cells());
    }
}

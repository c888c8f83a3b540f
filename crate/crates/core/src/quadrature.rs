//! Gauss-Legendre quadrature on a polar mesh of the half-disk, geometrically
//! graded towards the arc `ρ = 1` and towards `L` (`α = ±π/2`).

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DiskPoint;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_n'(x)
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Cell breakpoints `a = t_0 < ... < t_K = b` geometrically graded towards
/// `b` with ratio `ratio`, each cell split into `split` equal parts.
fn graded_breaks(a: f64, b: f64, depth: usize, ratio: f64, split: usize) -> Vec<f64> {
    let mut coarse: Vec<f64> = (0..depth).map(|k| b - (b - a) * ratio.powi(k as i32)).collect();
    coarse.push(b);
    let mut out = Vec::with_capacity(depth * split + 1);
    for w in coarse.windows(2) {
        for q in 0..split {
            out.push(w[0] + (w[1] - w[0]) * q as f64 / split as f64);
        }
    }
    out.push(b);
    out
}

/// Settings of a quadrature ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Number of refinement levels, at least 3.
    pub levels: usize,
    /// Gauss points per cell and direction.
    pub order: usize,
    /// Grading ratio towards the arc and towards `L`.
    pub ratio: f64,
    /// Number of graded cells on the coarsest level.
    pub base_depth: usize,
    /// Graded cells added per level.
    pub depth_step: usize,
    /// Relative change accepted between consecutive levels.
    pub rel_tol: f64,
    /// Tail budget accepted relative to the value.
    pub tail_tol: f64,
    /// Multiply by the `2π` of the circle fibre.
    pub theta_factor: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            levels: 4,
            order: 5,
            ratio: 0.7,
            base_depth: 16,
            depth_step: 8,
            rel_tol: 1e-2,
            tail_tol: 1e-2,
            theta_factor: true,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 3 {
            return Err(Error::Config(format!(
                "quadrature needs at least 3 levels, got {}",
                self.levels
            )));
        }
        if self.order == 0 || self.base_depth == 0 {
            return Err(Error::Config("quadrature order and depth must be positive".into()));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Config(format!("grading ratio {} outside (0, 1)", self.ratio)));
        }
        if !(self.rel_tol > 0.0 && self.tail_tol > 0.0) {
            return Err(Error::Config("quadrature tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn mesh(&self, level: usize) -> PolarMesh {
        let depth = self.base_depth + level * self.depth_step;
        let split = level + 1;
        let rho = graded_breaks(0.0, 1.0, depth, self.ratio, split);
        // symmetric in α: graded towards both ends of (-π/2, π/2)
        let upper = graded_breaks(0.0, FRAC_PI_2, depth, self.ratio, split);
        let mut alpha: Vec<f64> = upper.iter().rev().map(|a| -a).collect();
        alpha.extend_from_slice(&upper[1..]);
        PolarMesh {
            rho,
            alpha,
            order: self.order,
        }
    }

    fn fibre(&self) -> f64 {
        if self.theta_factor {
            2.0 * PI
        } else {
            1.0
        }
    }
}

/// Tensor-product polar mesh of `H = {ρ e^{iα} : 0 < ρ < 1, |α| < π/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarMesh {
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    pub order: usize,
}

impl PolarMesh {
    pub fn cells(&self) -> usize {
        (self.rho.len() - 1) * (self.alpha.len() - 1)
    }
}

/// An integrand value at one point and the part of it that falls in the
/// tail band used to estimate truncation error.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub values: Vec<f64>,
    pub band: Vec<f64>,
}

/// Per-cell totals of one level, in `(ρ, α)` row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub cells: usize,
    pub totals: Vec<f64>,
    pub band: Vec<f64>,
    pub per_cell: Vec<Vec<f64>>,
}

/// Integrates `integrand(z) ρ dρ dα` over the mesh. The integrand must
/// already include the volume density; the fibre factor is applied here.
pub fn integrate_level<F>(cfg: &QuadratureConfig, mesh: &PolarMesh, width: usize, integrand: &F) -> Result<LevelResult>
where
    F: Fn(DiskPoint) -> Result<Sample> + Sync,
{
    let mut res = integrate_per_angle(mesh, width, integrand)?;
    let fibre = cfg.fibre();
    for v in res
        .totals
        .iter_mut()
        .chain(res.band.iter_mut())
        .chain(res.per_cell.iter_mut().flatten())
    {
        *v *= fibre;
    }
    Ok(res)
}

/// [`integrate_level`] without the fibre factor.
fn integrate_per_angle<F>(mesh: &PolarMesh, width: usize, integrand: &F) -> Result<LevelResult>
where
    F: Fn(DiskPoint) -> Result<Sample> + Sync,
{
    let (nodes, weights) = gauss_legendre(mesh.order);
    let n_alpha = mesh.alpha.len() - 1;
    let rows: Vec<(Vec<Vec<f64>>, Vec<f64>)> = mesh
        .rho
        .par_windows(2)
        .map(|rw| -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
            let (r0, r1) = (rw[0], rw[1]);
            let mut cells = Vec::with_capacity(n_alpha);
            let mut band = vec![0.0; width];
            for aw in mesh.alpha.windows(2) {
                let (a0, a1) = (aw[0], aw[1]);
                let jac = 0.25 * (r1 - r0) * (a1 - a0);
                let mut acc = vec![0.0; width];
                for (xi, wi) in nodes.iter().zip(&weights) {
                    let rho = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * xi;
                    for (xj, wj) in nodes.iter().zip(&weights) {
                        let alpha = 0.5 * (a0 + a1) + 0.5 * (a1 - a0) * xj;
                        let z = DiskPoint::new(rho * alpha.cos().max(0.0), rho * alpha.sin())?;
                        let sample = integrand(z)?;
                        let w = wi * wj * jac * rho;
                        for k in 0..width {
                            acc[k] += w * sample.values[k];
                            band[k] += w * sample.band[k];
                        }
                    }
                }
                cells.push(acc);
            }
            Ok((cells, band))
        })
        .collect::<Result<_>>()?;

    // fixed-order reduction
    let mut totals = vec![0.0; width];
    let mut band = vec![0.0; width];
    let mut per_cell = Vec::with_capacity(mesh.cells());
    for (cells, b) in rows {
        for c in cells {
            for k in 0..width {
                totals[k] += c[k];
            }
            per_cell.push(c);
        }
        for k in 0..width {
            band[k] += b[k];
        }
    }
    Ok(LevelResult {
        cells: mesh.cells(),
        totals,
        band,
        per_cell,
    })
}

/// One rung of a ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderLevel {
    pub cells: usize,
    pub value: f64,
}

/// Values of one integral on successively refined meshes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureLadder {
    pub levels: Vec<LadderLevel>,
    /// Aitken extrapolation of the last three levels when it is stable,
    /// otherwise the finest value.
    pub value: f64,
    pub converged: bool,
    pub tail_budget: f64,
}

/// Decay factor of the tail beyond the band: a quantity decaying at least
/// like `e^{-2|r|}` has tail `≤ band / (e² - 1)`.
pub fn tail_factor() -> f64 {
    1.0 / (std::f64::consts::E.powi(2) - 1.0)
}

impl QuadratureLadder {
    pub fn new(values: &[(usize, f64)], tail_budget: f64, rel_tol: f64, tail_tol: f64) -> Self {
        let levels: Vec<LadderLevel> = values
            .iter()
            .map(|&(cells, value)| LadderLevel { cells, value })
            .collect();
        let v: Vec<f64> = levels.iter().map(|l| l.value).collect();
        let n = v.len();
        let last = v[n - 1];
        let value = if n >= 3 {
            let (d1, d2) = (v[n - 2] - v[n - 3], v[n - 1] - v[n - 2]);
            let denom = d2 - d1;
            if denom != 0.0 && d1 != 0.0 && (d2 / d1).abs() < 1.0 {
                last - d2 * d2 / denom
            } else {
                last
            }
        } else {
            last
        };
        let all_zero = v.iter().all(|&x| x == 0.0) && tail_budget == 0.0;
        let rel_ok = n >= 3
            && (n - 2..n).all(|i| {
                let scale = v[i].abs();
                scale > 0.0 && (v[i] - v[i - 1]).abs() <= rel_tol * scale
            });
        let tail_ok = tail_budget <= tail_tol * last.abs();
        Self {
            levels,
            value,
            converged: all_zero || (rel_ok && tail_ok),
            tail_budget,
        }
    }

    pub fn last_relative_change(&self) -> f64 {
        let n = self.levels.len();
        if n < 2 {
            return f64::NAN;
        }
        let (a, b) = (self.levels[n - 2].value, self.levels[n - 1].value);
        if b == 0.0 {
            if a == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (b - a).abs() / b.abs()
        }
    }

    pub fn finest(&self) -> f64 {
        self.levels.last().map_or(f64::NAN, |l| l.value)
    }

    /// Multiplies every value and the budget by `factor`; convergence is unchanged.
    pub fn scaled(mut self, factor: f64) -> Self {
        for l in &mut self.levels {
            l.value *= factor;
        }
        self.value *= factor;
        self.tail_budget *= factor;
        self
    }
}

/// Runs `width` integrals through all levels of `cfg` and assembles one
/// ladder per integral. `tail` selects which integrals carry a truncation
/// budget from their band part.
pub fn integrate_ladders<F>(
    cfg: &QuadratureConfig,
    width: usize,
    tail: &[bool],
    integrand: F,
) -> Result<Vec<QuadratureLadder>>
where
    F: Fn(DiskPoint) -> Result<Sample> + Sync,
{
    cfg.validate()?;
    let mut per_level = Vec::with_capacity(cfg.levels);
    let mut band = vec![0.0; width];
    for level in 0..cfg.levels {
        let res = integrate_per_angle(&cfg.mesh(level), width, &integrand)?;
        band = res.band;
        per_level.push((res.cells, res.totals));
    }
    Ok((0..width)
        .map(|k| {
            let values: Vec<(usize, f64)> = per_level.iter().map(|(c, t)| (*c, t[k])).collect();
            let budget = if tail[k] { band[k].abs() * tail_factor() } else { 0.0 };
            QuadratureLadder::new(&values, budget, cfg.rel_tol, cfg.tail_tol).scaled(cfg.fibre())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rules_integrate_polynomials_exactly() {
        for n in 1..=8 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg + 1) as f64 };
                assert!((q - exact).abs() < 1e-14, "n = {n}, degree {deg}");
            }
        }
    }

    #[test]
    fn five_point_nodes() {
        let (x, _) = gauss_legendre(5);
        assert_eq!(x[2], 0.0);
        assert!((x[4] - 0.906_179_845_938_664).abs() < 1e-15);
    }

    #[test]
    fn graded_breaks_are_increasing_and_hit_ends() {
        let b = graded_breaks(0.0, 1.0, 10, 0.7, 3);
        assert_eq!(b.len(), 31);
        assert_eq!(b[0], 0.0);
        assert_eq!(*b.last().unwrap(), 1.0);
        assert!(b.windows(2).all(|w| w[1] > w[0]));
        assert!((1.0 - b[29] - 0.7f64.powi(9) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn area_and_singular_radial_integral() {
        let cfg = QuadratureConfig {
            theta_factor: false,
            ..Default::default()
        };
        // area of H is π/2; ∫ 1/√(1 - ρ²) ρ dρ dα = π
        let ladders = integrate_ladders(&cfg, 2, &[false, false], |z| {
            let rho2 = z.x * z.x + z.y * z.y;
            Ok(Sample {
                values: vec![1.0, 1.0 / (1.0 - rho2).sqrt()],
                band: vec![0.0, 0.0],
            })
        })
        .unwrap();
        assert!((ladders[0].finest() - FRAC_PI_2).abs() < 1e-12);
        assert!((ladders[1].value - PI).abs() < 1e-4 * PI, "{:?}", ladders[1]);
        assert!(ladders.iter().all(|l| l.converged));
    }

    #[test]
    fn fibre_factor_is_exactly_two_pi() {
        let with = QuadratureConfig::default();
        let without = QuadratureConfig {
            theta_factor: false,
            ..with
        };
        let f = |z: DiskPoint| {
            Ok(Sample {
                values: vec![z.x],
                band: vec![0.0],
            })
        };
        let a = integrate_level(&with, &with.mesh(0), 1, &f).unwrap().totals[0];
        let b = integrate_level(&without, &without.mesh(0), 1, &f).unwrap().totals[0];
        assert!((a / b - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn zero_integrand_converges_to_zero() {
        let l = QuadratureLadder::new(&[(1, 0.0), (2, 0.0), (3, 0.0)], 0.0, 1e-2, 1e-2);
        assert!(l.converged);
        assert_eq!(l.value, 0.0);
    }

    #[test]
    fn ladder_flags_stalls() {
        let l = QuadratureLadder::new(&[(1, 1.0), (2, 1.2), (3, 1.3)], 0.0, 1e-2, 1e-2);
        assert!(!l.converged);
        let l = QuadratureLadder::new(&[(1, 1.0), (2, 1.001), (3, 1.0011)], 0.5, 1e-2, 1e-2);
        assert!(!l.converged, "tail budget too large");
    }

    #[test]
    fn aitken_recovers_geometric_limit() {
        let l = QuadratureLadder::new(&[(1, 2.0 - 0.5), (2, 2.0 - 0.25), (3, 2.0 - 0.125)], 0.0, 1.0, 1.0);
        assert!((l.value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn invalid_configs() {
        assert!(QuadratureConfig {
            levels: 2,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(QuadratureConfig {
            ratio: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}

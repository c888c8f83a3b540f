//! Finite-difference discretisation of
//!
//! ```text
//! L_Ω v = v_rr + v_ss + G(s) v_s = F,   v_s(r, 0) = 0,   v(r, π/2) = v₀(r)
//! ```
//!
//! with Dirichlet truncation at `r = ±R`. Interior rows use the 5-point
//! stencil with a central difference for `v_s`. On the axis `G v_s → v_ss`,
//! so the row there is `v_rr + 2 v_ss` with the ghost value `v(r, -h) = v(r, h)`.
//!
//! The coefficients depend on `s` only, so the system separates: a discrete
//! sine transform diagonalises the `r` part and leaves one tridiagonal
//! system in `s` per sine mode.

use rayon::prelude::*;

use super::field::StripField;
use super::grid::StripGrid;
use super::profile::BoundaryProfile;
use crate::error::{Error, Result};
use crate::geometry::coefficient_g;

/// Target normwise relative residual of the linear solve.
pub const SOLVE_TOL: f64 = 1e-10;
const MAX_REFINEMENTS: usize = 4;

/// Per-row coefficients `G(s_j)`; entries at `j = 0` and `j = n_s - 1` are unused.
#[derive(Debug, Clone)]
pub struct StripCoefficients {
    pub g: Vec<f64>,
}

impl StripCoefficients {
    pub fn new(grid: &StripGrid) -> Self {
        let g = (0..grid.n_s)
            .map(|j| {
                if j == 0 || j == grid.n_s - 1 {
                    0.0
                } else {
                    coefficient_g(grid.s(j)).expect("interior rows lie strictly inside (0, π/2)")
                }
            })
            .collect();
        Self { g }
    }
}

/// `L_Ω v` at node `(i, j)` for `1 ≤ i ≤ n_r - 2`, `0 ≤ j ≤ n_s - 2`.
#[inline]
pub(crate) fn operator_row(grid: &StripGrid, coeffs: &StripCoefficients, v: &[f64], i: usize, j: usize) -> f64 {
    let k = grid.index(i, j);
    let c = v[k];
    let v_rr = (v[k + 1] - 2.0 * c + v[k - 1]) / (grid.h_r * grid.h_r);
    let up = v[k + grid.n_r];
    if j == 0 {
        v_rr + 4.0 * (up - c) / (grid.h_s * grid.h_s)
    } else {
        let down = v[k - grid.n_r];
        v_rr + (up - 2.0 * c + down) / (grid.h_s * grid.h_s) + coeffs.g[j] * (up - down) / (2.0 * grid.h_s)
    }
}

/// Discrete `L_Ω(v) - forcing` on every equation row; Dirichlet nodes carry 0.
pub fn apply_operator(field: &StripField) -> Vec<f64> {
    let grid = &field.grid;
    let coeffs = StripCoefficients::new(grid);
    let mut out = vec![0.0; grid.len()];
    out.par_chunks_mut(grid.n_r)
        .enumerate()
        .take(grid.n_s - 1)
        .for_each(|(j, row)| {
            for (i, slot) in row.iter_mut().enumerate().take(grid.n_r - 1).skip(1) {
                let f = field.forcing.as_ref().map_or(0.0, |f| f[grid.index(i, j)]);
                *slot = operator_row(grid, &coeffs, &field.values, i, j) - f;
            }
        });
    out
}

/// Row-sum norm of the discrete operator.
fn operator_norm(grid: &StripGrid) -> f64 {
    4.0 / (grid.h_r * grid.h_r) + 8.0 / (grid.h_s * grid.h_s)
}

/// Dirichlet data on the three non-axis edges.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    /// `v(r_i, π/2)`, length `n_r`.
    pub top: Vec<f64>,
    /// `v(-R, s_j)`, length `n_s`.
    pub left: Vec<f64>,
    /// `v(R, s_j)`, length `n_s`.
    pub right: Vec<f64>,
}

impl BoundaryData {
    /// `v₀` on the top edge and the constants `v₀(±R)` on the sides.
    pub fn from_profile(grid: &StripGrid, profile: &BoundaryProfile) -> Self {
        let top: Vec<f64> = (0..grid.n_r).map(|i| profile.eval(grid.r(i))).collect();
        let left = vec![top[0]; grid.n_s];
        let right = vec![top[grid.n_r - 1]; grid.n_s];
        Self { top, left, right }
    }

    /// Samples an exact solution on all three edges.
    pub fn from_exact(grid: &StripGrid, v: impl Fn(f64, f64) -> f64) -> Self {
        let top_s = grid.s(grid.n_s - 1);
        Self {
            top: (0..grid.n_r).map(|i| v(grid.r(i), top_s)).collect(),
            left: (0..grid.n_s).map(|j| v(grid.r(0), grid.s(j))).collect(),
            right: (0..grid.n_s).map(|j| v(grid.r(grid.n_r - 1), grid.s(j))).collect(),
        }
    }
}

/// Solver statistics attached to each solve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolveStats {
    pub relative_residual: f64,
    pub max_residual: f64,
    pub refinements: usize,
}

/// Direct solver for the interior unknowns `1 ≤ i ≤ n_r - 2`, `0 ≤ j ≤ n_s - 2`.
struct SeparableSolver {
    m: usize,
    n: usize,
    /// `sin(π a b / (m + 1))` for `a, b = 1..=m`, row-major.
    sines: Vec<f64>,
    /// Eigenvalues of the `r` second-difference matrix.
    eigen: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl SeparableSolver {
    fn new(grid: &StripGrid, coeffs: &StripCoefficients) -> Self {
        let m = grid.n_r - 2;
        let n = grid.n_s - 1;
        let period = 2 * (m + 1);
        let table: Vec<f64> = (0..period)
            .map(|q| (std::f64::consts::PI * q as f64 / (m + 1) as f64).sin())
            .collect();
        let mut sines = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                sines[a * m + b] = table[((a + 1) * (b + 1)) % period];
            }
        }
        let hr2 = grid.h_r * grid.h_r;
        let eigen = (1..=m)
            .map(|k| {
                let q = (std::f64::consts::PI * k as f64 / (2 * (m + 1)) as f64).sin();
                -4.0 * q * q / hr2
            })
            .collect();
        let hs2 = grid.h_s * grid.h_s;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        diag[0] = -4.0 / hs2;
        upper[0] = 4.0 / hs2;
        for j in 1..n {
            let adv = coeffs.g[j] / (2.0 * grid.h_s);
            lower[j] = 1.0 / hs2 - adv;
            diag[j] = -2.0 / hs2;
            upper[j] = 1.0 / hs2 + adv;
        }
        Self {
            m,
            n,
            sines,
            eigen,
            lower,
            diag,
            upper,
        }
    }

    /// Applies the (symmetric) sine matrix to each row of `rows` (`n` rows of length `m`).
    fn transform(&self, rows: &mut [f64], scale: f64) {
        let m = self.m;
        rows.par_chunks_mut(m).for_each(|row| {
            let input = row.to_vec();
            for (k, out) in row.iter_mut().enumerate() {
                let s = &self.sines[k * m..(k + 1) * m];
                *out = scale * s.iter().zip(&input).map(|(a, b)| a * b).sum::<f64>();
            }
        });
    }

    /// Solves `A x = b` in place; `b` is laid out as `n` rows of length `m`.
    fn solve(&self, b: &mut [f64]) {
        let (m, n) = (self.m, self.n);
        self.transform(b, 1.0);
        // transpose to mode-major so each tridiagonal solve is contiguous
        let mut modes = vec![0.0; m * n];
        for j in 0..n {
            for k in 0..m {
                modes[k * n + j] = b[j * m + k];
            }
        }
        modes.par_chunks_mut(n).enumerate().for_each(|(k, col)| {
            let shift = self.eigen[k];
            let mut c = vec![0.0; n];
            let mut beta = self.diag[0] + shift;
            c[0] = self.upper[0] / beta;
            col[0] /= beta;
            for j in 1..n {
                beta = self.diag[j] + shift - self.lower[j] * c[j - 1];
                c[j] = self.upper[j] / beta;
                col[j] = (col[j] - self.lower[j] * col[j - 1]) / beta;
            }
            for j in (0..n - 1).rev() {
                col[j] -= c[j] * col[j + 1];
            }
        });
        for j in 0..n {
            for k in 0..m {
                b[j * m + k] = modes[k * n + j];
            }
        }
        self.transform(b, 2.0 / (m + 1) as f64);
    }
}

/// Solves the Dirichlet/Neumann problem with the given edge data and
/// optional node forcing.
pub fn solve_dirichlet(
    grid: StripGrid,
    data: &BoundaryData,
    forcing: Option<Vec<f64>>,
) -> Result<(StripField, SolveStats)> {
    if data.top.len() != grid.n_r || data.left.len() != grid.n_s || data.right.len() != grid.n_s {
        return Err(Error::Config("boundary data does not match the grid".into()));
    }
    if let Some(f) = &forcing {
        if f.len() != grid.len() || f.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("forcing must be finite with one value per node".into()));
        }
    }
    let (n_r, n_s) = (grid.n_r, grid.n_s);
    let mut values = vec![0.0; grid.len()];
    for j in 0..n_s {
        values[grid.index(0, j)] = data.left[j];
        values[grid.index(n_r - 1, j)] = data.right[j];
    }
    values[grid.index(0, n_s - 1)..].copy_from_slice(&data.top);

    let mut field = StripField {
        grid,
        values,
        top: data.top.clone(),
        forcing,
    };
    let coeffs = StripCoefficients::new(&grid);
    let solver = SeparableSolver::new(&grid, &coeffs);
    let (m, n) = (solver.m, solver.n);
    let norm_a = operator_norm(&grid);
    let rhs_norm = {
        // residual of the zero interior guess measures the data size
        let r = apply_operator(&field);
        r.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    };

    let mut refinements = 0;
    loop {
        let residual = apply_operator(&field);
        let max_res = residual.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let v_norm = field.values.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let scale = norm_a * v_norm + rhs_norm;
        let relative = if scale == 0.0 { 0.0 } else { max_res / scale };
        if relative <= SOLVE_TOL && refinements > 0 {
            return Ok((
                field,
                SolveStats {
                    relative_residual: relative,
                    max_residual: max_res,
                    refinements,
                },
            ));
        }
        if refinements > MAX_REFINEMENTS {
            return Err(Error::Solver(format!(
                "relative residual {relative:.3e} after {refinements} passes exceeds {SOLVE_TOL:.0e}"
            )));
        }
        // correction δ solves A δ = -(L v - F) with homogeneous edge data
        let mut b = vec![0.0; m * n];
        for j in 0..n {
            for i in 0..m {
                b[j * m + i] = -residual[grid.index(i + 1, j)];
            }
        }
        solver.solve(&mut b);
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::Solver("non-finite correction".into()));
        }
        for j in 0..n {
            for i in 0..m {
                field.values[grid.index(i + 1, j)] += b[j * m + i];
            }
        }
        refinements += 1;
    }
}

/// Solves `L_Ω v = forcing` with `v = v₀` on `s = π/2` and the truncation
/// condition `v(±R, s) = v₀(±R)`.
pub fn solve_bvp(grid: StripGrid, profile: &BoundaryProfile, forcing: Option<Vec<f64>>) -> Result<StripField> {
    profile.validate()?;
    let data = BoundaryData::from_profile(&grid, profile);
    solve_dirichlet(grid, &data, forcing).map(|(f, _)| f)
}

/// [`solve_bvp`] that first requires `|v₀(r)| ≤ p(π/2) e^{-|r|}` so the
/// supersolution comparison applies.
pub fn solve_bvp_with_comparison(grid: StripGrid, profile: &BoundaryProfile) -> Result<StripField> {
    profile.validate()?;
    profile.check_comparison(grid.half_width)?;
    solve_bvp(grid, profile, None)
}

use std::io::Write;

use serde::Serialize;

use super::grid::StripGrid;
use super::solver::{apply_operator, operator_row, StripCoefficients};
use crate::error::{Error, Result};
use crate::output::fmt17;

/// Largest axis-row residual accepted by [`StripField::reflect_extend`].
pub const NEUMANN_REFLECT_TOL: f64 = 1e-6;

/// Node values of a solution of the strip problem together with its
/// boundary trace and optional forcing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StripField {
    pub grid: StripGrid,
    /// Row-major in `s` then `r`, see [`StripGrid::index`].
    pub values: Vec<f64>,
    /// Trace `v₀(r_i)` on `s = π/2`.
    pub top: Vec<f64>,
    pub forcing: Option<Vec<f64>>,
}

impl StripField {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Builds a field by sampling `v(r, s)` at every node; the trace is the
    /// sampled top row.
    pub fn from_fn(grid: StripGrid, v: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; grid.len()];
        for j in 0..grid.n_s {
            for i in 0..grid.n_r {
                values[grid.index(i, j)] = v(grid.r(i), grid.s(j));
            }
        }
        let top = (0..grid.n_r).map(|i| values[grid.index(i, grid.n_s - 1)]).collect();
        Self {
            grid,
            values,
            top,
            forcing: None,
        }
    }

    /// Discrete `L_Ω v - forcing`, zero on Dirichlet nodes.
    pub fn residual(&self) -> Vec<f64> {
        apply_operator(self)
    }

    pub fn max_residual(&self) -> f64 {
        self.residual().iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Largest residual of the axis rows `s = 0`, where the ghost node
    /// encodes `∂v/∂s = 0`.
    pub fn neumann_residual(&self) -> f64 {
        let coeffs = StripCoefficients::new(&self.grid);
        (1..self.grid.n_r - 1)
            .map(|i| {
                let f = self.forcing.as_ref().map_or(0.0, |f| f[self.grid.index(i, 0)]);
                (operator_row(&self.grid, &coeffs, &self.values, i, 0) - f).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Even extension `v(r, -s) = v(r, s)` to `s ∈ [-π/2, π/2]`.
    pub fn reflect_extend(&self) -> Result<ExtendedField> {
        let res = self.neumann_residual();
        if res > NEUMANN_REFLECT_TOL {
            return Err(Error::Rejected(format!(
                "axis residual {res:.3e} exceeds {NEUMANN_REFLECT_TOL:.0e}; field does not satisfy the Neumann condition"
            )));
        }
        let (n_r, n_s) = (self.grid.n_r, self.grid.n_s);
        let rows = 2 * n_s - 1;
        let mut values = Vec::with_capacity(rows * n_r);
        for row in 0..rows {
            let j = (row as isize - (n_s as isize - 1)).unsigned_abs();
            values.extend_from_slice(&self.values[j * n_r..(j + 1) * n_r]);
        }
        Ok(ExtendedField {
            grid: self.grid,
            values,
            forcing: self.forcing.clone(),
        })
    }

    /// CSV with header `r,s,v,residual`, one row per node in storage order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let residual = self.residual();
        writeln!(out, "r,s,v,residual")?;
        for j in 0..self.grid.n_s {
            for i in 0..self.grid.n_r {
                let k = self.grid.index(i, j);
                writeln!(
                    out,
                    "{},{},{},{}",
                    fmt17(self.grid.r(i)),
                    fmt17(self.grid.s(j)),
                    fmt17(self.values[k]),
                    fmt17(residual[k])
                )?;
            }
        }
        Ok(())
    }
}

/// A strip field reflected evenly across the axis, on `2 n_s - 1` rows
/// running from `s = -π/2` to `s = π/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedField {
    pub grid: StripGrid,
    pub values: Vec<f64>,
    forcing: Option<Vec<f64>>,
}

impl ExtendedField {
    pub fn rows(&self) -> usize {
        2 * self.grid.n_s - 1
    }

    /// Signed row offset `j ∈ [-(n_s - 1), n_s - 1]`.
    pub fn at(&self, i: usize, j: isize) -> f64 {
        let row = (j + self.grid.n_s as isize - 1) as usize;
        self.values[row * self.grid.n_r + i]
    }

    pub fn s(&self, j: isize) -> f64 {
        let s = self.grid.s(j.unsigned_abs());
        if j < 0 {
            -s
        } else {
            s
        }
    }

    /// Residual of `v_rr + v_ss + G(s) v_s - forcing` on every non-Dirichlet
    /// row, with `G` extended oddly (`G(-s) = -G(s)`) and the regularised
    /// `v_rr + 2 v_ss` on the axis. Indexed like [`Self::at`].
    pub fn residual(&self) -> Vec<(isize, usize, f64)> {
        let g = &self.grid;
        let coeffs = StripCoefficients::new(g);
        let top = g.n_s as isize - 1;
        let mut out = Vec::new();
        for j in (1 - top)..top {
            let ja = j.unsigned_abs();
            let gj = if j < 0 { -coeffs.g[ja] } else { coeffs.g[ja] };
            for i in 1..g.n_r - 1 {
                let c = self.at(i, j);
                let v_rr = (self.at(i + 1, j) - 2.0 * c + self.at(i - 1, j)) / (g.h_r * g.h_r);
                let up = self.at(i, j + 1);
                let down = self.at(i, j - 1);
                let v_ss = (up - 2.0 * c + down) / (g.h_s * g.h_s);
                let lhs = if j == 0 {
                    v_rr + 2.0 * v_ss
                } else {
                    v_rr + v_ss + gj * (up - down) / (2.0 * g.h_s)
                };
                let f = self.forcing.as_ref().map_or(0.0, |f| f[g.index(i, ja)]);
                out.push((j, i, lhs - f));
            }
        }
        out
    }
}

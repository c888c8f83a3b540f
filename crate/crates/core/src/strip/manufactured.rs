//! Manufactured solution `w = cos(r) cos(s)` for grid-convergence checks.
//!
//! `L_Ω w = -2 cos r cos s - G(s) sin(s) cos r`, and `w_s(r, 0) = 0`, so `w`
//! solves the strip problem with that forcing and its own edge values.

use serde::Serialize;

use super::field::StripField;
use super::grid::StripGrid;
use super::solver::{solve_dirichlet, BoundaryData};
use crate::error::Result;
use crate::geometry::g_times_sin;

pub fn exact(r: f64, s: f64) -> f64 {
    r.cos() * s.cos()
}

/// Node forcing; the top row is Dirichlet and carries 0.
pub fn forcing(grid: &StripGrid) -> Vec<f64> {
    let mut f = vec![0.0; grid.len()];
    for j in 0..grid.n_s - 1 {
        let s = grid.s(j);
        let gs = g_times_sin(s).expect("rows below π/2");
        for i in 0..grid.n_r {
            let r = grid.r(i);
            f[grid.index(i, j)] = -2.0 * r.cos() * s.cos() - gs * r.cos();
        }
    }
    f
}

pub fn solve(grid: StripGrid) -> Result<StripField> {
    let data = BoundaryData::from_exact(&grid, exact);
    solve_dirichlet(grid, &data, Some(forcing(&grid))).map(|(f, _)| f)
}

pub fn max_error(field: &StripField) -> f64 {
    let g = &field.grid;
    let mut err: f64 = 0.0;
    for j in 0..g.n_s {
        for i in 0..g.n_r {
            err = err.max((field.at(i, j) - exact(g.r(i), g.s(j))).abs());
        }
    }
    err
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n_r: usize,
    pub n_s: usize,
    pub h: f64,
    pub max_error: f64,
    /// `E(2h) / E(h)`; absent on the coarsest grid.
    pub ratio: Option<f64>,
    pub observed_order: Option<f64>,
}

/// Max-norm errors on `levels` grids, each halving the spacings of the
/// previous one, starting from `coarsest`.
pub fn convergence_study(coarsest: StripGrid, levels: usize) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    let mut grid = coarsest;
    for level in 0..levels {
        if level > 0 {
            grid = grid.refined();
        }
        let err = max_error(&solve(grid)?);
        let ratio = rows.last().map(|p| p.max_error / err);
        rows.push(ConvergenceRow {
            n_r: grid.n_r,
            n_s: grid.n_s,
            h: grid.h(),
            max_error: err,
            ratio,
            observed_order: ratio.map(f64::log2),
        });
    }
    Ok(rows)
}

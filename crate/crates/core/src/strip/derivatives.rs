//! Derivatives of a strip field: fourth-order finite differences at the
//! nodes, then tensor-product cubic interpolation of each nodal array.
//!
//! The axis `s = 0` is a symmetry line, not an edge: stencils that cross it
//! use the even reflection of `v` (odd for `s`-derivatives of odd order).
//! Near `r = ±R` and `s = π/2` the five-point stencils are shifted inward.

use serde::Serialize;

use super::field::StripField;
use super::grid::StripGrid;
use crate::error::{Error, Result};
use crate::geometry::StripPoint;

/// Values of `v` and its derivatives up to second order at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StripJet {
    pub v: f64,
    pub v_r: f64,
    pub v_s: f64,
    pub v_rr: f64,
    pub v_rs: f64,
    pub v_ss: f64,
}

impl StripJet {
    pub fn abs_sum(&self) -> f64 {
        self.v.abs() + self.v_r.abs() + self.v_s.abs() + self.v_rr.abs() + self.v_rs.abs() + self.v_ss.abs()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            v: a * self.v,
            v_r: a * self.v_r,
            v_s: a * self.v_s,
            v_rr: a * self.v_rr,
            v_rs: a * self.v_rs,
            v_ss: a * self.v_ss,
        }
    }
}

/// Finite-difference weights for the derivative of order `order` at 0 from
/// samples at `offsets` (Fornberg's recursion).
pub fn fd_weights(offsets: &[f64], order: usize) -> Vec<f64> {
    let n = offsets.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = offsets[0];
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// Node value with signed row index; rows below the axis are reflections.
#[inline]
fn reflected(grid: &StripGrid, arr: &[f64], parity: Parity, i: usize, j: isize) -> f64 {
    if j < 0 {
        parity.sign() * arr[grid.index(i, (-j) as usize)]
    } else {
        arr[grid.index(i, j as usize)]
    }
}

/// Five-point stencils for every possible start offset relative to the node.
struct Stencils {
    /// Indexed by `shift = start - node + 4`, `shift ∈ 0..=4`.
    weights: Vec<Vec<f64>>,
}

impl Stencils {
    fn new(order: usize) -> Self {
        let weights = (0..=4)
            .map(|shift| {
                let start = shift as f64 - 4.0;
                let offsets: Vec<f64> = (0..5).map(|k| start + k as f64).collect();
                fd_weights(&offsets, order)
            })
            .collect();
        Self { weights }
    }
}

fn diff_r(grid: &StripGrid, arr: &[f64], order: usize) -> Vec<f64> {
    let st = Stencils::new(order);
    let scale = grid.h_r.powi(order as i32);
    let n = grid.n_r;
    let mut out = vec![0.0; grid.len()];
    for j in 0..grid.n_s {
        for i in 0..n {
            let start = i.saturating_sub(2).min(n - 5);
            let w = &st.weights[start + 4 - i];
            let base = grid.index(start, j);
            out[grid.index(i, j)] = (0..5).map(|k| w[k] * arr[base + k]).sum::<f64>() / scale;
        }
    }
    out
}

fn diff_s(grid: &StripGrid, arr: &[f64], parity: Parity, order: usize) -> Vec<f64> {
    let st = Stencils::new(order);
    let scale = grid.h_s.powi(order as i32);
    let n = grid.n_s as isize;
    let mut out = vec![0.0; grid.len()];
    for j in 0..n {
        let start = (j - 2).min(n - 5);
        let w = &st.weights[(start + 4 - j) as usize];
        for i in 0..grid.n_r {
            out[grid.index(i, j as usize)] = (0..5)
                .map(|k| w[k as usize] * reflected(grid, arr, parity, i, start + k))
                .sum::<f64>()
                / scale;
        }
    }
    out
}

/// Cubic Lagrange weights for nodes `0, 1, 2, 3` at position `x`.
#[inline]
fn cubic_weights(x: f64) -> [f64; 4] {
    let (a, b, c, d) = (x, x - 1.0, x - 2.0, x - 3.0);
    [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0]
}

/// Nodal derivative arrays of a strip field with off-node interpolation.
#[derive(Debug, Clone)]
pub struct FieldInterpolant {
    pub grid: StripGrid,
    v: Vec<f64>,
    v_r: Vec<f64>,
    v_s: Vec<f64>,
    v_rr: Vec<f64>,
    v_rs: Vec<f64>,
    v_ss: Vec<f64>,
}

impl FieldInterpolant {
    pub fn new(field: &StripField) -> Self {
        let grid = field.grid;
        let v = field.values.clone();
        let v_r = diff_r(&grid, &v, 1);
        let v_s = diff_s(&grid, &v, Parity::Even, 1);
        let v_rr = diff_r(&grid, &v, 2);
        let v_ss = diff_s(&grid, &v, Parity::Even, 2);
        let v_rs = diff_s(&grid, &v_r, Parity::Even, 1);
        Self {
            grid,
            v,
            v_r,
            v_s,
            v_rr,
            v_rs,
            v_ss,
        }
    }

    /// Nodal jet, no interpolation.
    pub fn node_jet(&self, i: usize, j: usize) -> StripJet {
        let k = self.grid.index(i, j);
        StripJet {
            v: self.v[k],
            v_r: self.v_r[k],
            v_s: self.v_s[k],
            v_rr: self.v_rr[k],
            v_rs: self.v_rs[k],
            v_ss: self.v_ss[k],
        }
    }

    /// Largest `|r|` at which [`Self::strip_derivatives`] answers.
    pub fn r_window(&self) -> f64 {
        self.grid.half_width - 2.0 * self.grid.h_r
    }

    /// Largest `s` at which [`Self::strip_derivatives`] answers.
    pub fn s_window(&self) -> f64 {
        std::f64::consts::FRAC_PI_2 - 2.0 * self.grid.h_s
    }

    /// Jet at a point at least two nodes away from the truncation edges and
    /// from `s = π/2`.
    pub fn strip_derivatives(&self, p: StripPoint) -> Result<StripJet> {
        if p.r.abs() > self.r_window() || p.s > self.s_window() {
            return Err(Error::OutOfWindow { r: p.r, s: p.s });
        }
        Ok(self.jet(p.r, p.s))
    }

    /// Interpolated jet anywhere in the closed truncated strip; near the
    /// edges the shifted stencils lose their centring.
    pub fn jet(&self, r: f64, s: f64) -> StripJet {
        let g = &self.grid;
        let tr = ((r + g.half_width) / g.h_r).clamp(0.0, (g.n_r - 1) as f64);
        let i0 = (tr.floor() as usize).min(g.n_r - 2);
        let i_start = i0.saturating_sub(1).min(g.n_r - 4);
        let wr = cubic_weights(tr - i_start as f64);

        let ts = (s / g.h_s).clamp(0.0, (g.n_s - 1) as f64);
        let j0 = (ts.floor() as isize).min(g.n_s as isize - 2);
        let j_start = (j0 - 1).min(g.n_s as isize - 4);
        let ws = cubic_weights(ts - j_start as f64);

        let interp = |arr: &[f64], parity: Parity| -> f64 {
            let mut acc = 0.0;
            for (b, wsb) in ws.iter().enumerate() {
                let j = j_start + b as isize;
                let mut row = 0.0;
                for (a, wra) in wr.iter().enumerate() {
                    row += wra * reflected(g, arr, parity, i_start + a, j);
                }
                acc += wsb * row;
            }
            acc
        };
        StripJet {
            v: interp(&self.v, Parity::Even),
            v_r: interp(&self.v_r, Parity::Even),
            v_s: interp(&self.v_s, Parity::Odd),
            v_rr: interp(&self.v_rr, Parity::Even),
            v_rs: interp(&self.v_rs, Parity::Odd),
            v_ss: interp(&self.v_ss, Parity::Even),
        }
    }
}

/// Fitted constant `C` in `|v| + |v_r| + |v_s| + |v_rr| + |v_rs| + |v_ss| ≤ C e^{-|r|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub constant: f64,
    pub worst_r: f64,
    pub worst_s: f64,
    pub nodes: usize,
}

/// Scans every node with `|r| ≤ R - 2h_r` and `s ≤ s_max`.
pub fn fit_decay_constant(interp: &FieldInterpolant, s_max: f64) -> DecayFit {
    let g = &interp.grid;
    let mut fit = DecayFit {
        constant: 0.0,
        worst_r: 0.0,
        worst_s: 0.0,
        nodes: 0,
    };
    for j in 0..g.n_s {
        let s = g.s(j);
        if s > s_max {
            break;
        }
        for i in 0..g.n_r {
            let r = g.r(i);
            if r.abs() > interp.r_window() {
                continue;
            }
            fit.nodes += 1;
            let c = interp.node_jet(i, j).abs_sum() * r.abs().exp();
            if c > fit.constant {
                fit.constant = c;
                fit.worst_r = r;
                fit.worst_s = s;
            }
        }
    }
    fit
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_reproduces_classical_stencils() {
        let w = fd_weights(&[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expect = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        let w = fd_weights(&[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let expect = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-13);
        }
        // one-sided weights differentiate quartics exactly
        let offs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let w = fd_weights(&offs, 2);
        let d2: f64 = offs.iter().zip(&w).map(|(x, c)| c * x.powi(4)).sum();
        assert!(d2.abs() < 1e-10);
    }

    #[test]
    fn cubic_weights_partition_unity_and_interpolate() {
        for x in [0.0, 0.3, 1.0, 1.7, 2.5, 3.0] {
            let w = cubic_weights(x);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let cube: f64 = w.iter().enumerate().map(|(k, c)| c * (k as f64).powi(3)).sum();
            assert!((cube - x.powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let grid = StripGrid::new(6.0, 49, 17).unwrap();
        let interp = FieldInterpolant::new(&StripField::from_fn(grid, |_, _| 1.0));
        let jet = interp.strip_derivatives(StripPoint::new(0.37, 0.81).unwrap()).unwrap();
        assert!((jet.v - 1.0).abs() < 1e-14);
        for d in [jet.v_r, jet.v_s, jet.v_rr, jet.v_rs, jet.v_ss] {
            assert!(d.abs() < 1e-10);
        }
    }

    #[test]
    fn window_is_enforced() {
        let grid = StripGrid::new(6.0, 49, 17).unwrap();
        let interp = FieldInterpolant::new(&StripField::from_fn(grid, |_, _| 1.0));
        assert!(interp.strip_derivatives(StripPoint::new(5.9, 0.5).unwrap()).is_err());
        assert!(interp.strip_derivatives(StripPoint::new(0.0, 1.56).unwrap()).is_err());
        assert!(interp.strip_derivatives(StripPoint::new(0.0, 0.0).unwrap()).is_ok());
    }
}

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform node grid on the truncated strip `[-R, R] × [0, π/2]`.
///
/// Nodes are stored row-major in `s` then `r`: index `j * n_r + i` holds
/// `(r_i, s_j)`. Both the axis `s = 0` and the Dirichlet edge `s = π/2`
/// are grid lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripGrid {
    pub half_width: f64,
    pub n_r: usize,
    pub n_s: usize,
    pub h_r: f64,
    pub h_s: f64,
}

pub const DEFAULT_HALF_WIDTH: f64 = 12.0;
pub const DEFAULT_N_R: usize = 769;
pub const DEFAULT_N_S: usize = 129;

impl StripGrid {
    pub fn new(half_width: f64, n_r: usize, n_s: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Config(format!(
                "grid half-width R = {half_width} must be positive"
            )));
        }
        if n_r < 8 || n_s < 8 {
            return Err(Error::Config(format!(
                "grid needs at least 8 nodes per direction, got {n_r} x {n_s}"
            )));
        }
        Ok(Self {
            half_width,
            n_r,
            n_s,
            h_r: 2.0 * half_width / (n_r - 1) as f64,
            h_s: FRAC_PI_2 / (n_s - 1) as f64,
        })
    }

    pub fn default_grid() -> Self {
        Self::new(DEFAULT_HALF_WIDTH, DEFAULT_N_R, DEFAULT_N_S).expect("default grid is valid")
    }

    /// Same extent with both spacings halved.
    pub fn refined(&self) -> Self {
        Self::new(self.half_width, 2 * self.n_r - 1, 2 * self.n_s - 1).expect("refinement of a valid grid")
    }

    /// Same extent with both spacings doubled; `None` when node counts are
    /// not of the form `2m + 1` or the result would be too small.
    pub fn coarsened(&self) -> Option<Self> {
        if self.n_r.is_multiple_of(2) || self.n_s.is_multiple_of(2) {
            return None;
        }
        Self::new(self.half_width, self.n_r.div_ceil(2), self.n_s.div_ceil(2)).ok()
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_s
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_r + i
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        if i == self.n_r - 1 {
            self.half_width
        } else {
            -self.half_width + i as f64 * self.h_r
        }
    }

    #[inline]
    pub fn s(&self, j: usize) -> f64 {
        if j == self.n_s - 1 {
            FRAC_PI_2
        } else {
            j as f64 * self.h_s
        }
    }

    /// Largest spacing, the `h` of convergence statements.
    pub fn h(&self) -> f64 {
        self.h_r.max(self.h_s)
    }
}

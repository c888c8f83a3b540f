//! Closed-form geometry of the warped product `H ×_f S¹` with curvature
//! `-4` on the half-disk factor.
//!
//! Coordinates: `z = x + iy` on the half-disk `H = {|z| < 1, x > 0}`,
//! `w = r + is` on the strip `Ω = {0 < s < π/2}`. The metric is
//!
//! ```text
//! ds² = (dx² + dy²) / (1 - |z|²)² + f² dθ²
//! ```
//!
//! where `f` is `sinh` of half the hyperbolic arcsinh-distance to the
//! segment `L = {x = 0}`. All curvature-dependent constants are specialised
//! to curvature `-4`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Jets closer than this to the corners `±i` are refused.
pub const CORNER_EXCLUSION: f64 = 1e-3;

const I: C64 = C64::new(0.0, 1.0);

/// A point of the closed half-disk `H ∪ L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    pub x: f64,
    pub y: f64,
}

impl DiskPoint {
    /// Accepts `x ≥ 0`, `x² + y² < 1`. Points with `x = 0` lie on `L` and
    /// are flagged by [`DiskPoint::on_axis`].
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Domain(format!("non-finite disk point ({x}, {y})")));
        }
        if x < 0.0 {
            return Err(Error::Domain(format!("x = {x} < 0 is outside the half-disk")));
        }
        if x * x + y * y >= 1.0 {
            return Err(Error::Domain(format!("|z| >= 1 at ({x}, {y})")));
        }
        Ok(Self { x, y })
    }

    pub fn from_complex(z: C64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn z(&self) -> C64 {
        C64::new(self.x, self.y)
    }

    pub fn on_axis(&self) -> bool {
        self.x == 0.0
    }

    /// `1 - |z|²`, the inverse of the conformal factor.
    pub fn defect(&self) -> f64 {
        1.0 - (self.x * self.x + self.y * self.y)
    }

    /// Distance to the nearer of the two corners `±i`.
    pub fn corner_distance(&self) -> f64 {
        let dy = 1.0 - self.y.abs();
        (self.x * self.x + dy * dy).sqrt()
    }
}

/// A point of the closed strip `0 ≤ s ≤ π/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripPoint {
    pub r: f64,
    pub s: f64,
}

impl StripPoint {
    pub fn new(r: f64, s: f64) -> Result<Self> {
        if !r.is_finite() || !s.is_finite() {
            return Err(Error::Domain(format!("non-finite strip point ({r}, {s})")));
        }
        if !(0.0..=FRAC_PI_2).contains(&s) {
            return Err(Error::Domain(format!("s = {s} outside [0, π/2]")));
        }
        Ok(Self { r, s })
    }

    pub fn w(&self) -> C64 {
        C64::new(self.r, self.s)
    }
}

/// Strip to disk: `φ(w) = i (e^{-w} - 1) / (e^{-w} + 1)`.
///
/// Evaluated with whichever of `e^{-w}` or `e^{w}` is bounded so that
/// `|Re w|` of several hundred does not overflow.
pub fn phi(w: C64) -> C64 {
    if w.re >= 0.0 {
        let e = (-w).exp();
        I * (e - 1.0) / (e + 1.0)
    } else {
        let e = w.exp();
        I * (1.0 - e) / (1.0 + e)
    }
}

/// Disk to strip: `ψ(z) = log((i - z) / (i + z))`, in real form
///
/// ```text
/// Re ψ = ½ log((x² + (1-y)²) / (x² + (1+y)²)),   Im ψ = atan2(2x, 1 - |z|²)
/// ```
pub fn psi(z: DiskPoint) -> Result<C64> {
    let (x, y) = (z.x, z.y);
    let num = x * x + (1.0 - y) * (1.0 - y);
    let den = x * x + (1.0 + y) * (1.0 + y);
    if num == 0.0 || den == 0.0 {
        return Err(Error::Domain(format!("ψ is singular at ({x}, {y})")));
    }
    let re = 0.5 * (num / den).ln();
    let im = (2.0 * x).atan2(z.defect()).clamp(0.0, FRAC_PI_2);
    Ok(C64::new(re, im))
}

/// `ψ` on the whole plane minus `±i` via the principal complex logarithm.
pub fn psi_complex(z: C64) -> Result<C64> {
    let den = I + z;
    let num = I - z;
    if den.norm() == 0.0 || num.norm() == 0.0 {
        return Err(Error::Domain(format!("ψ is singular at {z}")));
    }
    Ok((num / den).ln())
}

/// `ψ'(z) = 2i / (1 + z²)`.
pub fn psi_prime(z: C64) -> Result<C64> {
    let q = 1.0 + z * z;
    if q.norm() == 0.0 {
        return Err(Error::Domain(format!("ψ' is singular at {z}")));
    }
    Ok(2.0 * I / q)
}

/// `ψ''(z) = -4iz / (1 + z²)²`.
pub fn psi_second(z: C64) -> Result<C64> {
    let q = 1.0 + z * z;
    if q.norm() == 0.0 {
        return Err(Error::Domain(format!("ψ'' is singular at {z}")));
    }
    Ok(-4.0 * I * z / (q * q))
}

/// `2x / (1 - |z|²)`; equals `tan(Im ψ(z))`.
fn distance_argument(z: DiskPoint) -> f64 {
    2.0 * z.x / z.defect()
}

/// Warping function `f(z) = sinh(½ arcsinh(2x / (1 - |z|²)))`.
pub fn warp_f(z: DiskPoint) -> f64 {
    (0.5 * distance_argument(z).asinh()).sinh()
}

/// `(∂f/∂x, ∂f/∂y)`.
pub fn warp_f_gradient(z: DiskPoint) -> (f64, f64) {
    let d = z.defect();
    let t = distance_argument(z);
    let df_dt = 0.5 * (0.5 * t.asinh()).cosh() / (1.0 + t * t).sqrt();
    let t_x = (2.0 * d + 4.0 * z.x * z.x) / (d * d);
    let t_y = 4.0 * z.x * z.y / (d * d);
    (df_dt * t_x, df_dt * t_y)
}

/// Warping function on the strip, `f̃(s) = sin(s/2) / √cos(s)`.
///
/// Algebraically equal to `½ (√(1 + sin s) − √(1 − sin s)) / √cos s`; the
/// half-angle form avoids the cancellation near `s = 0`.
pub fn warp_f_strip(s: f64) -> Result<f64> {
    if !(0.0..FRAC_PI_2).contains(&s) {
        return Err(Error::Range(format!("f̃ evaluated at s = {s}, outside [0, π/2)")));
    }
    Ok((0.5 * s).sin() / s.cos().sqrt())
}

/// Logarithmic derivative `G(s) = f̃'(s) / f̃(s) = ½ (cot(s/2) + tan s)`.
pub fn coefficient_g(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < FRAC_PI_2) {
        return Err(Error::Range(format!("G evaluated at s = {s}, outside (0, π/2)")));
    }
    Ok(0.5 * (1.0 / (0.5 * s).tan() + s.tan()))
}

/// `G'(s) = ½ (-½ csc²(s/2) + sec² s)`.
pub fn coefficient_g_derivative(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < FRAC_PI_2) {
        return Err(Error::Range(format!("G' evaluated at s = {s}, outside (0, π/2)")));
    }
    let h = (0.5 * s).sin();
    let c = s.cos();
    Ok(0.5 * (-0.5 / (h * h) + 1.0 / (c * c)))
}

/// `G(s) sin(s) = cos²(s/2) + ½ sin(s) tan(s)`, continuous at `s = 0` with value 1.
pub fn g_times_sin(s: f64) -> Result<f64> {
    if !(0.0..FRAC_PI_2).contains(&s) {
        return Err(Error::Range(format!("G·sin evaluated at s = {s}")));
    }
    let c = (0.5 * s).cos();
    Ok(c * c + 0.5 * s.sin() * s.tan())
}

/// Index order of the five stored connection coefficients.
pub const XX: usize = 0;
pub const XY: usize = 1;
pub const YX: usize = 2;
pub const YY: usize = 3;
pub const THETA_THETA: usize = 4;

/// Pointwise geometric data at an interior point of `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryJet {
    pub z: DiskPoint,
    /// `g_xx = g_yy = 1 / (1 - |z|²)²`.
    pub lambda: f64,
    pub f: f64,
    pub f_x: f64,
    pub f_y: f64,
    pub psi: C64,
    pub psi_prime: C64,
    pub psi_second: C64,
    /// Contravariant components `(F^x, F^y)` of `F = ∇ log f`.
    pub log_f_grad: [f64; 2],
    /// `Γ^x_ij` for `ij ∈ {xx, xy, yx, yy, θθ}`.
    pub christoffel_x: [f64; 5],
    /// `Γ^y_ij` for `ij ∈ {xx, xy, yx, yy, θθ}`.
    pub christoffel_y: [f64; 5],
}

impl GeometryJet {
    pub fn defect(&self) -> f64 {
        self.z.defect()
    }

    /// `‖dx‖_g = ‖dy‖_g = 1 - |z|²`.
    pub fn dx_norm(&self) -> f64 {
        self.defect()
    }

    /// `‖dθ‖_g = 1 / f`.
    pub fn dtheta_norm(&self) -> f64 {
        1.0 / self.f
    }

    /// Coefficients of `∇dx = -Γ^x_ij dx^i ⊗ dx^j`.
    pub fn nabla_dx(&self) -> [f64; 5] {
        self.christoffel_x.map(|c| -c)
    }

    /// Coefficients of `∇dy = -Γ^y_ij dx^i ⊗ dx^j`.
    pub fn nabla_dy(&self) -> [f64; 5] {
        self.christoffel_y.map(|c| -c)
    }
}

/// `(Γ^x_ij, Γ^y_ij)` for `ij ∈ {xx, xy, yx, yy, θθ}`. Defined on `L` as
/// well, where the `θθ` entries vanish with `f`.
pub fn christoffel_symbols(z: DiskPoint) -> ([f64; 5], [f64; 5]) {
    let (x, y) = (z.x, z.y);
    let d = z.defect();
    let f = warp_f(z);
    let (f_x, f_y) = warp_f_gradient(z);
    let d2 = d * d;
    (
        [2.0 * x / d, 2.0 * y / d, 2.0 * y / d, -2.0 * x / d, -d2 * f * f_x],
        [-2.0 * y / d, 2.0 * x / d, 2.0 * x / d, 2.0 * y / d, -d2 * f * f_y],
    )
}

/// Closed-form geometric data at `z`. Refuses points on `L` (where `F` and
/// `‖dθ‖_g` blow up) and points within [`CORNER_EXCLUSION`] of `±i`.
pub fn geometry_jet(z: DiskPoint) -> Result<GeometryJet> {
    if z.on_axis() {
        return Err(Error::Domain(format!("geometry jet requested on L at y = {}", z.y)));
    }
    if z.corner_distance() < CORNER_EXCLUSION {
        return Err(Error::Domain(format!(
            "({}, {}) is within {CORNER_EXCLUSION} of a corner",
            z.x, z.y
        )));
    }
    let zc = z.z();
    let d = z.defect();
    let f = warp_f(z);
    let (f_x, f_y) = warp_f_gradient(z);
    let (christoffel_x, christoffel_y) = christoffel_symbols(z);
    let d2 = d * d;
    Ok(GeometryJet {
        z,
        lambda: 1.0 / d2,
        f,
        f_x,
        f_y,
        psi: psi(z)?,
        psi_prime: psi_prime(zc)?,
        psi_second: psi_second(zc)?,
        log_f_grad: [d2 * f_x / f, d2 * f_y / f],
        christoffel_x,
        christoffel_y,
    })
}

/// Metric components `(g_xx, g_yy, g_θθ)` of the warped product.
pub fn metric_components(x: f64, y: f64) -> Result<[f64; 3]> {
    let z = DiskPoint::new(x, y)?;
    let d = z.defect();
    let f = warp_f(z);
    Ok([1.0 / (d * d), 1.0 / (d * d), f * f])
}

/// Christoffel symbols of the diagonal metric from finite differences of
/// `g`, `Γ^k_ij = ½ g^{kk} (∂_j g_ik + ∂_i g_jk − ∂_k g_ij)`.
pub fn christoffel_by_differences(z: DiskPoint, h: f64) -> Result<([f64; 5], [f64; 5])> {
    let (x, y) = (z.x, z.y);
    let m = |x: f64, y: f64| metric_components(x, y);
    let g = m(x, y)?;
    let (gxp, gxm, gyp, gym) = (m(x + h, y)?, m(x - h, y)?, m(x, y + h)?, m(x, y - h)?);
    let dx = |k: usize| (gxp[k] - gxm[k]) / (2.0 * h);
    let dy = |k: usize| (gyp[k] - gym[k]) / (2.0 * h);
    // indices 0 = x, 1 = y; θ derivatives vanish
    let dg = |k: usize, l: usize| if l == 0 { dx(k) } else { dy(k) };
    let gamma = |k: usize, i: usize, j: usize| -> f64 {
        // diagonal metric: g_ij nonzero only for i == j
        let diag = |a: usize, b: usize, l: usize| if a == b { dg(a, l) } else { 0.0 };
        0.5 / g[k] * (diag(i, k, j) + diag(j, k, i) - diag(i, j, k))
    };
    let tt = |k: usize| -0.5 / g[k] * dg(2, k);
    Ok((
        [gamma(0, 0, 0), gamma(0, 0, 1), gamma(0, 1, 0), gamma(0, 1, 1), tt(0)],
        [gamma(1, 0, 0), gamma(1, 0, 1), gamma(1, 1, 0), gamma(1, 1, 1), tt(1)],
    ))
}

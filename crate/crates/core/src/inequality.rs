//! Numerical certificates for the supersolution `v⁺ = e^{-δ|r|} p(s)` with
//! `p(s) = 8s⁴ - 50s² + 75`, and for the decay dichotomy of
//! `f₁ = (1 - |z|²)|ψ'|`, `f₂ = e^{-δ|ψ₁|}|ψ'|` near the corners of `H`.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{coefficient_g, phi, psi, psi_prime, DiskPoint, C64};

/// Width of the neighbourhoods of `s = 0` and `s = π/2` certified by
/// analytic bounds instead of sampling.
pub const ENDPOINT_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Result of a sampled inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub check: String,
    pub samples: usize,
    /// Largest value of the certified expression.
    pub worst_value: f64,
    /// Coordinates of the worst sample (`[s]` on the strip, `[x, y]` on the disk).
    pub worst_location: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fitted_exponent: Option<f64>,
    pub verdict: Verdict,
}

/// `p(s) = 8s⁴ - 50s² + 75` with decay rate `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionPolynomial {
    /// Coefficients of `s⁴`, `s²`, `1`.
    pub coefficients: [f64; 3],
    pub delta: f64,
}

impl SupersolutionPolynomial {
    pub fn standard() -> Self {
        Self::with_delta(1.0)
    }

    pub fn with_delta(delta: f64) -> Self {
        Self {
            coefficients: [8.0, -50.0, 75.0],
            delta,
        }
    }

    /// `p` as a polynomial in `q = s²`; exact at rational `q`.
    pub fn p_of_square(&self, q: f64) -> f64 {
        let [a, b, c] = self.coefficients;
        (a * q + b) * q + c
    }

    pub fn p(&self, s: f64) -> f64 {
        self.p_of_square(s * s)
    }

    pub fn p_prime(&self, s: f64) -> f64 {
        let [a, b, _] = self.coefficients;
        4.0 * a * s * s * s + 2.0 * b * s
    }

    pub fn p_second(&self, s: f64) -> f64 {
        let [a, b, _] = self.coefficients;
        12.0 * a * s * s + 2.0 * b
    }

    pub fn p_third(&self, s: f64) -> f64 {
        24.0 * self.coefficients[0] * s
    }

    /// `p'' + δ² p`, which for `δ = 1` is `8s⁴ + 46s² - 25`.
    pub fn zeroth_order_part(&self, s: f64) -> f64 {
        self.p_second(s) + self.delta * self.delta * self.p(s)
    }

    /// `p'' + G p' + δ² p`; nonpositive on `(0, π/2)` exactly when `v⁺` is a
    /// supersolution.
    pub fn lhs(&self, s: f64) -> Result<f64> {
        Ok(self.zeroth_order_part(s) + coefficient_g(s)? * self.p_prime(s))
    }

    /// Upper bound on `|d/ds lhs|` over `[a, b] ⊂ (0, π/2)` from monotone
    /// bounds on each factor.
    fn lhs_lipschitz(&self, a: f64, b: f64) -> f64 {
        let d2 = self.delta * self.delta;
        // |p'| ≤ 100 s on [0, π/2] since 32 s³ ≤ 100 s there
        let p1 = 100.0 * b;
        let p2 = self.p_second(a).abs().max(self.p_second(b).abs());
        let p3 = self.p_third(b).abs();
        let g_max = 0.5 * (1.0 / (0.5 * a).tan() + b.tan());
        let sa = (0.5 * a).sin();
        let cb = b.cos();
        let dg_max = 0.5 * (0.5 / (sa * sa) + 1.0 / (cb * cb));
        p3 + dg_max * p1 + g_max * p2 + d2 * p1
    }

    /// Analytic upper bound of `lhs` on `(0, ε]`, using `p'' ↑`, `p ≤ 75`,
    /// `p' = -s(100 - 32s²)` and `s G(s) ≥ cos(s/2)`.
    pub fn left_endpoint_bound(&self, eps: f64) -> f64 {
        self.p_second(eps) + self.delta * self.delta * self.p(0.0).max(0.0)
            - (0.5 * eps).cos() * (100.0 - 32.0 * eps * eps)
    }

    /// Analytic upper bound of `lhs` on `[π/2 - ε, π/2)`, using
    /// `G ≥ ½ tan s ≥ ½ cot ε`, `p ↓`, and `|p'|` decreasing past `s ≈ 1.02`.
    pub fn right_endpoint_bound(&self, eps: f64) -> f64 {
        let a = FRAC_PI_2 - eps;
        self.p_second(FRAC_PI_2) + self.delta * self.delta * self.p(a) - 0.5 / eps.tan() * self.p_prime(FRAC_PI_2).abs()
    }
}

/// Outcome of [`verify_supersolution`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupersolutionCertificate {
    pub report: MarginReport,
    /// Upper bound of `lhs` between samples from the Lipschitz estimate.
    pub certified_max: f64,
    pub left_endpoint_bound: f64,
    pub right_endpoint_bound: f64,
    /// `lhs(1e-4)`, close to the limit `-125`.
    pub lhs_near_zero: f64,
    /// `lhs(π/2 - 1e-3)`, large and negative.
    pub lhs_near_edge: f64,
    /// Sample-wise checks of the two-case argument.
    pub decomposition: Vec<MarginReport>,
}

impl SupersolutionCertificate {
    pub fn passed(&self) -> bool {
        self.report.verdict.passed()
            && self.certified_max < 0.0
            && self.left_endpoint_bound < 0.0
            && self.right_endpoint_bound < 0.0
            && self.decomposition.iter().all(|r| r.verdict.passed())
    }
}

/// Chebyshev-Lobatto points on `[a, b]`, endpoints included, increasing.
pub fn chebyshev_lobatto(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (0..n)
        .map(|k| {
            if k == 0 {
                a
            } else if k == n - 1 {
                b
            } else {
                mid - half * (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()
            }
        })
        .collect()
}

fn worst_of(values: &[f64], locations: &[f64]) -> (f64, f64) {
    values.iter().zip(locations).fold(
        (f64::NEG_INFINITY, f64::NAN),
        |acc, (&v, &s)| if v > acc.0 { (v, s) } else { acc },
    )
}

/// Certifies `p'' + G p' + δ² p ≤ 0` on `(0, π/2)` for `δ = 1`
/// from `n` Chebyshev samples of `[ε, π/2 - ε]`, a Lipschitz bound between
/// samples, and analytic bounds on the two end neighbourhoods.
pub fn verify_supersolution(n: usize) -> Result<SupersolutionCertificate> {
    verify_supersolution_with(SupersolutionPolynomial::standard(), n)
}

pub fn verify_supersolution_with(poly: SupersolutionPolynomial, n: usize) -> Result<SupersolutionCertificate> {
    if n < 1000 {
        return Err(Error::Config(format!(
            "supersolution check needs at least 1000 samples, got {n}"
        )));
    }
    let samples = chebyshev_lobatto(ENDPOINT_EPS, FRAC_PI_2 - ENDPOINT_EPS, n);
    let values: Vec<f64> = samples
        .par_iter()
        .map(|&s| poly.lhs(s).expect("samples lie inside (0, π/2)"))
        .collect();
    let (worst, at) = worst_of(&values, &samples);
    let certified_max = (0..n - 1)
        .into_par_iter()
        .map(|k| {
            let (a, b) = (samples[k], samples[k + 1]);
            0.5 * (values[k] + values[k + 1]) + 0.5 * poly.lhs_lipschitz(a, b) * (b - a)
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(SupersolutionCertificate {
        report: MarginReport {
            check: "supersolution".into(),
            samples: n,
            worst_value: worst,
            worst_location: vec![at],
            fitted_exponent: None,
            verdict: Verdict::from_bool(worst < 0.0),
        },
        certified_max,
        left_endpoint_bound: poly.left_endpoint_bound(ENDPOINT_EPS),
        right_endpoint_bound: poly.right_endpoint_bound(ENDPOINT_EPS),
        lhs_near_zero: poly.lhs(1e-4)?,
        lhs_near_edge: poly.lhs(FRAC_PI_2 - 1e-3)?,
        decomposition: decomposition_checks(&poly, &samples),
    })
}

/// The two cases of the analytic argument: `p'' + p ≤ 0` for `s ≤ √2/2`;
/// for `s > √2/2` the lower bound `G ≥ ½(1 + 1/(2 cos s))` and the
/// resulting majorant `p'' + p + p'/2 + p'/(4 cos s) ≤ 0`.
fn decomposition_checks(poly: &SupersolutionPolynomial, samples: &[f64]) -> Vec<MarginReport> {
    let split = SQRT_2 / 2.0;
    let (low, high): (Vec<f64>, Vec<f64>) = samples.iter().partition(|&&s| s <= split);

    let low_vals: Vec<f64> = low.iter().map(|&s| poly.zeroth_order_part(s)).collect();
    let (lw, la) = worst_of(&low_vals, &low);

    let g_gap: Vec<f64> = high
        .iter()
        .map(|&s| 0.5 * (1.0 + 0.5 / s.cos()) - coefficient_g(s).expect("interior"))
        .collect();
    let (gw, ga) = worst_of(&g_gap, &high);

    let majorant: Vec<f64> = high
        .iter()
        .map(|&s| {
            let p1 = poly.p_prime(s);
            poly.zeroth_order_part(s) + 0.5 * p1 + p1 / (4.0 * s.cos())
        })
        .collect();
    let (mw, ma) = worst_of(&majorant, &high);

    vec![
        MarginReport {
            check: "supersolution-small-s".into(),
            samples: low.len(),
            worst_value: lw,
            worst_location: vec![la],
            fitted_exponent: None,
            verdict: Verdict::from_bool(lw <= 0.0),
        },
        MarginReport {
            check: "supersolution-g-lower-bound".into(),
            samples: high.len(),
            worst_value: gw,
            worst_location: vec![ga],
            fitted_exponent: None,
            verdict: Verdict::from_bool(gw <= 0.0),
        },
        MarginReport {
            check: "supersolution-majorant".into(),
            samples: high.len(),
            worst_value: mw,
            worst_location: vec![ma],
            fitted_exponent: None,
            verdict: Verdict::from_bool(mw <= 0.0),
        },
    ]
}

/// Positivity of `p` on `[0, π/2]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityReport {
    /// Worst (largest) sampled `p'`; negative when `p` is decreasing.
    pub report: MarginReport,
    pub p_at_zero: f64,
    pub p_at_edge: f64,
    /// `p` at the roots `s² = 5/2` and `s² = 15/4`, evaluated exactly.
    pub p_at_roots: [f64; 2],
    pub min_p: f64,
}

impl PositivityReport {
    pub fn passed(&self) -> bool {
        self.report.verdict.passed() && self.min_p > 0.0 && self.p_at_roots == [0.0, 0.0]
    }
}

pub fn verify_positivity_p() -> PositivityReport {
    let poly = SupersolutionPolynomial::standard();
    let n = 1000;
    let samples: Vec<f64> = (0..n).map(|k| FRAC_PI_2 * (k as f64 + 0.5) / n as f64).collect();
    let slopes: Vec<f64> = samples.iter().map(|&s| poly.p_prime(s)).collect();
    let (worst, at) = worst_of(&slopes, &samples);
    let p_edge = poly.p(FRAC_PI_2);
    PositivityReport {
        report: MarginReport {
            check: "supersolution-positivity".into(),
            samples: n,
            worst_value: worst,
            worst_location: vec![at],
            fitted_exponent: None,
            verdict: Verdict::from_bool(worst < 0.0 && p_edge > 0.0),
        },
        p_at_zero: poly.p(0.0),
        p_at_edge: p_edge,
        p_at_roots: [poly.p_of_square(2.5), poly.p_of_square(3.75)],
        // p decreasing on (0, π/2) puts the minimum at the edge
        min_p: p_edge,
    }
}

/// Tolerance on the fitted exponent for the "bounded" verdict.
pub const BOUNDED_EXPONENT_TOL: f64 = 0.05;

/// Growth of `f₂²` along a path into the corner `z = i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerDecayReport {
    pub report: MarginReport,
    pub delta: f64,
    /// Least-squares slope of `log f₂²` against `log 1/(1 - |z|)`.
    pub fitted_exponent: f64,
    /// `max(fitted_exponent, 0)`: growth rate of `f₂²`, zero when it decays.
    pub growth_exponent: f64,
    /// `2 - 2δ`.
    pub predicted_exponent: f64,
    pub bounded: bool,
}

/// Samples `f₂(z) = e^{-δ|ψ₁(z)|}|ψ'(z)|` along `z = φ(-r + i s₀)` for
/// `r ∈ [4, 16]`, which runs into `z = i` with `|ψ₁| = r` increasing.
pub fn verify_corner_decay(delta: f64, n: usize) -> Result<CornerDecayReport> {
    if !(delta > 0.0 && delta <= 2.0) {
        return Err(Error::Config(format!("δ = {delta} outside (0, 2]")));
    }
    let s0 = std::f64::consts::FRAC_PI_4;
    let (r_lo, r_hi) = (4.0, 16.0);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut worst = (f64::NEG_INFINITY, vec![f64::NAN, f64::NAN]);
    for k in 0..n {
        let r = r_lo + (r_hi - r_lo) * k as f64 / (n.max(2) - 1) as f64;
        let z = phi(C64::new(-r, s0));
        let Ok(p) = DiskPoint::from_complex(z) else { continue };
        let (Ok(w), Ok(dpsi)) = (psi(p), psi_prime(z)) else {
            continue;
        };
        let gap = 1.0 - z.norm();
        let f2 = (-delta * w.re.abs()).exp() * dpsi.norm();
        if !(gap > 0.0 && f2.is_finite() && f2 > 0.0) {
            continue;
        }
        if f2 > worst.0 {
            worst = (f2, vec![p.x, p.y]);
        }
        xs.push((1.0 / gap).ln());
        ys.push(2.0 * f2.ln());
    }
    if xs.len() < 8 {
        return Err(Error::Fit(format!(
            "only {} usable samples along the corner path",
            xs.len()
        )));
    }
    let slope = least_squares_slope(&xs, &ys);
    let bounded = slope <= BOUNDED_EXPONENT_TOL;
    Ok(CornerDecayReport {
        report: MarginReport {
            check: "corner-decay".into(),
            samples: xs.len(),
            worst_value: worst.0,
            worst_location: worst.1,
            fitted_exponent: Some(slope),
            // the dichotomy: bounded exactly when δ ≥ 1
            verdict: Verdict::from_bool(bounded == (delta >= 1.0)),
        },
        delta,
        fitted_exponent: slope,
        growth_exponent: slope.max(0.0),
        predicted_exponent: 2.0 - 2.0 * delta,
        bounded,
    })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `max f₁` over `n` random points of `H`, half of them concentrated
/// towards the boundary arc and the corners.
pub fn verify_f1_bound(n: usize, seed: u64) -> MarginReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (f64::NEG_INFINITY, vec![f64::NAN, f64::NAN]);
    let mut count = 0;
    while count < n {
        let z = if count % 2 == 0 {
            C64::new(rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0))
        } else {
            // radius within 1e-8 .. 1 of the arc, any angle
            let gap = 10f64.powf(rng.gen_range(-8.0..0.0));
            let angle: f64 = rng.gen_range(-FRAC_PI_2..FRAC_PI_2);
            C64::from_polar(1.0 - gap, angle)
        };
        let Ok(p) = DiskPoint::from_complex(z) else { continue };
        let Ok(dpsi) = psi_prime(z) else { continue };
        count += 1;
        let f1 = p.defect() * dpsi.norm();
        if f1 > worst.0 {
            worst = (f1, vec![p.x, p.y]);
        }
    }
    MarginReport {
        check: "conformal-factor-bound".into(),
        samples: n,
        worst_value: worst.0,
        worst_location: worst.1,
        fitted_exponent: None,
        verdict: Verdict::from_bool(worst.0 <= 2.0 + 1e-6),
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inequality::SupersolutionPolynomial;

/// Dirichlet data `v₀(r)` on the edge `s = π/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryProfile {
    /// `amplitude · exp(-((r - center) / width)²)`
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `amplitude · sech(rate · (r - center))`, a smooth profile with
    /// `e^{-rate |r|}` tails.
    ExpDecay {
        amplitude: f64,
        rate: f64,
        center: f64,
    },
    Constant {
        value: f64,
    },
    /// Catmull-Rom interpolation of samples, clamped outside the sampled range.
    Samples {
        r: Vec<f64>,
        v: Vec<f64>,
    },
}

impl Default for BoundaryProfile {
    /// `0.25 · e^{-r²}`, which lies below the supersolution trace
    /// `p(π/2) e^{-|r|}` since `0.25 e^{1/4} ≈ 0.321 < 0.3345`.
    fn default() -> Self {
        BoundaryProfile::Gaussian {
            amplitude: 0.25,
            center: 0.0,
            width: 1.0,
        }
    }
}

impl BoundaryProfile {
    pub fn shifted_gaussian(center: f64) -> Self {
        BoundaryProfile::Gaussian {
            amplitude: 0.25,
            center,
            width: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BoundaryProfile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                if !(amplitude.is_finite() && center.is_finite() && width.is_finite() && *width > 0.0) {
                    return Err(Error::Config(
                        "gaussian profile needs finite amplitude/center and width > 0".into(),
                    ));
                }
            }
            BoundaryProfile::ExpDecay {
                amplitude,
                rate,
                center,
            } => {
                if !(amplitude.is_finite() && center.is_finite() && rate.is_finite() && *rate > 0.0) {
                    return Err(Error::Config(
                        "exp-decay profile needs finite amplitude/center and rate > 0".into(),
                    ));
                }
            }
            BoundaryProfile::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::Config("constant profile value must be finite".into()));
                }
            }
            BoundaryProfile::Samples { r, v } => {
                if r.len() < 2 || r.len() != v.len() {
                    return Err(Error::Config("sample profile needs >= 2 matching (r, v) pairs".into()));
                }
                if r.windows(2).any(|w| w[1] <= w[0]) || r.iter().chain(v).any(|x| !x.is_finite()) {
                    return Err(Error::Config(
                        "sample profile r must be finite and strictly increasing".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            BoundaryProfile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let q = (r - center) / width;
                amplitude * (-q * q).exp()
            }
            BoundaryProfile::ExpDecay {
                amplitude,
                rate,
                center,
            } => amplitude / (rate * (r - center)).cosh(),
            BoundaryProfile::Constant { value } => *value,
            BoundaryProfile::Samples { r: rs, v } => catmull_rom(rs, v, r),
        }
    }

    /// The same profile multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        match self.clone() {
            BoundaryProfile::Gaussian {
                amplitude,
                center,
                width,
            } => BoundaryProfile::Gaussian {
                amplitude: alpha * amplitude,
                center,
                width,
            },
            BoundaryProfile::ExpDecay {
                amplitude,
                rate,
                center,
            } => BoundaryProfile::ExpDecay {
                amplitude: alpha * amplitude,
                rate,
                center,
            },
            BoundaryProfile::Constant { value } => BoundaryProfile::Constant { value: alpha * value },
            BoundaryProfile::Samples { r, v } => BoundaryProfile::Samples {
                r,
                v: v.into_iter().map(|x| alpha * x).collect(),
            },
        }
    }

    /// Largest value of `|v₀(r)| e^{|r|} / p(π/2)` over `n` samples of
    /// `[-half_width, half_width]`; the comparison bound holds when this is ≤ 1.
    pub fn comparison_ratio(&self, half_width: f64, n: usize) -> f64 {
        let trace = SupersolutionPolynomial::standard().p(std::f64::consts::FRAC_PI_2);
        (0..n)
            .map(|k| {
                let r = -half_width + 2.0 * half_width * k as f64 / (n - 1).max(1) as f64;
                self.eval(r).abs() * r.abs().exp() / trace
            })
            .fold(0.0, f64::max)
    }

    pub fn check_comparison(&self, half_width: f64) -> Result<()> {
        let ratio = self.comparison_ratio(half_width, 20_001);
        if ratio > 1.0 {
            return Err(Error::Config(format!(
                "boundary profile exceeds the supersolution trace p(π/2)e^(-|r|) by a factor {ratio:.4}"
            )));
        }
        Ok(())
    }
}

fn catmull_rom(rs: &[f64], vs: &[f64], r: f64) -> f64 {
    let n = rs.len();
    if r <= rs[0] {
        return vs[0];
    }
    if r >= rs[n - 1] {
        return vs[n - 1];
    }
    let k = rs.partition_point(|&x| x <= r) - 1;
    let slope = |i: usize| -> f64 {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(n - 1);
        (vs[hi] - vs[lo]) / (rs[hi] - rs[lo])
    };
    let h = rs[k + 1] - rs[k];
    let t = (r - rs[k]) / h;
    let (t2, t3) = (t * t, t * t * t);
    (2.0 * t3 - 3.0 * t2 + 1.0) * vs[k]
        + (t3 - 2.0 * t2 + t) * h * slope(k)
        + (-2.0 * t3 + 3.0 * t2) * vs[k + 1]
        + (t3 - t2) * h * slope(k + 1)
}

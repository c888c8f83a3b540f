//! The geometry invariants behind `geometry-check`.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use warped_harmonic::geometry::{
    christoffel_by_differences, coefficient_g, geometry_jet, phi, psi, psi_complex, psi_prime, psi_second, warp_f,
    warp_f_strip, DiskPoint, C64,
};
use warped_harmonic::inequality::Verdict;
use warped_harmonic::Result;

/// Deliberate corruption of one closed form, for testing the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    Christoffel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub samples: usize,
    pub worst_error: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

fn check(name: &str, errors: impl Iterator<Item = f64>, tolerance: f64) -> InvariantCheck {
    let (mut samples, mut worst) = (0, 0.0f64);
    for e in errors {
        samples += 1;
        // NaN must not hide behind max
        worst = if e.is_nan() {
            f64::NAN
        } else if worst.is_nan() {
            worst
        } else {
            worst.max(e)
        };
    }
    InvariantCheck {
        name: name.into(),
        samples,
        worst_error: worst,
        tolerance,
        verdict: Verdict::from_bool(worst <= tolerance),
    }
}

fn interior_points(n: usize, rng: &mut ChaCha8Rng, margin: f64) -> Vec<DiskPoint> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: f64 = rng.gen_range(0.0..1.0);
        let y: f64 = rng.gen_range(-1.0..1.0);
        if let Ok(z) = DiskPoint::new(x, y) {
            if z.x >= margin && z.defect() >= margin && z.corner_distance() >= 1e-3 {
                out.push(z);
            }
        }
    }
    out
}

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

/// Runs every invariant on `n` samples (ten times as many for the cheap
/// `ψ''` bound).
pub fn geometry_checks(n: usize, seed: u64, fault: Option<Fault>) -> Result<Vec<InvariantCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = interior_points(n, &mut rng, 1e-3);
    let mut out = Vec::new();

    let inv: Vec<f64> = pts
        .iter()
        .map(|z| psi(*z).map(|w| (phi(w) - z.z()).norm()))
        .collect::<Result<_>>()?;
    out.push(check("inverse-pair", inv.into_iter(), 1e-12));

    let mut fd = Vec::with_capacity(n);
    for z in &pts {
        let h = 1e-3 * z.corner_distance();
        let zc = z.z();
        let at = |k: f64| psi_complex(zc + C64::new(k * h, 0.0));
        let d = (at(-2.0)? - at(2.0)? + (at(1.0)? - at(-1.0)?) * 8.0) / (12.0 * h);
        let exact = psi_prime(zc)?;
        fd.push((d - exact).norm() / exact.norm());
    }
    out.push(check("psi-prime-closed-form", fd.into_iter(), 1e-8));

    let many = interior_points(10 * n, &mut rng, 0.0);
    let mut ratios = Vec::with_capacity(many.len());
    for z in &many {
        let (p1, p2) = (psi_prime(z.z())?, psi_second(z.z())?);
        ratios.push((p2.norm() / p1.norm_sqr() - 1.0).max(0.0));
    }
    out.push(check("psi-second-bound", ratios.into_iter(), 1e-12));

    let mut pull = Vec::with_capacity(n);
    for _ in 0..n {
        let r: f64 = rng.gen_range(-5.0..5.0);
        let s: f64 = rng.gen_range(0.0..FRAC_PI_2 - 1e-3);
        let expect = warp_f_strip(s)?;
        let z = DiskPoint::from_complex(phi(C64::new(r, s)))?;
        pull.push(rel(warp_f(z), expect, 1.0));
    }
    out.push(check("warp-pullback", pull.into_iter(), 1e-10));

    // sixth-order central difference of log f̃
    let w6 = [
        -1.0 / 60.0,
        3.0 / 20.0,
        -3.0 / 4.0,
        0.0,
        3.0 / 4.0,
        -3.0 / 20.0,
        1.0 / 60.0,
    ];
    let h = 1e-4;
    let mut glog = Vec::with_capacity(n);
    for k in 0..n {
        let s = 0.05 + (FRAC_PI_2 - 0.1) * (k as f64 + 0.5) / n as f64;
        let mut d = 0.0;
        for (m, w) in w6.iter().enumerate() {
            d += w * warp_f_strip(s + (m as f64 - 3.0) * h)?.ln();
        }
        glog.push((coefficient_g(s)? - d / h).abs());
    }
    out.push(check("g-log-derivative", glog.into_iter(), 1e-7));

    let mut lower = Vec::with_capacity(n);
    for k in 0..n {
        let s = SQRT_2 / 2.0 + (FRAC_PI_2 - SQRT_2 / 2.0) * (k as f64 + 0.5) / n as f64;
        // shortfall of G below its lower bound
        lower.push((0.5 * (1.0 + 0.5 / s.cos()) - coefficient_g(s)?).max(0.0));
    }
    out.push(check("g-lower-bound", lower.into_iter(), 0.0));

    let scale = if fault == Some(Fault::Christoffel) {
        1.0 + 1e-3
    } else {
        1.0
    };
    let wide = interior_points(n, &mut rng, 1e-2);
    let mut chr = Vec::with_capacity(10 * n);
    for z in &wide {
        let jet = geometry_jet(*z)?;
        let (gx, gy) = christoffel_by_differences(*z, 1e-4 * z.x.min(z.defect()))?;
        for (closed, fd) in jet
            .christoffel_x
            .iter()
            .chain(&jet.christoffel_y)
            .zip(gx.iter().chain(&gy))
        {
            chr.push(rel(scale * closed, *fd, 1e-3));
        }
    }
    out.push(check("christoffel-closed-form", chr.into_iter(), 1e-6));

    let mut frame = Vec::with_capacity(n);
    for z in &pts {
        let jet = geometry_jet(*z)?;
        frame.push(rel(jet.dx_norm(), 1.0 - (z.x * z.x + z.y * z.y), 1e-300).max(rel(
            jet.dtheta_norm(),
            1.0 / warp_f(*z),
            1e-300,
        )));
    }
    out.push(check("coframe-norms", frame.into_iter(), 1e-15));

    Ok(out)
}

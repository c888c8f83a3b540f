//! One line per acceptance criterion; exits nonzero if any fails.

use std::f64::consts::FRAC_PI_2;
use std::process::{Command, Stdio};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use warped_harmonic::geometry::{geometry_jet, DiskPoint};
use warped_harmonic::harmonic::{
    constant_potential, lower_order_norm_sq, lower_order_part, HarmonicField, ProbeRegion, AXIS_EXCLUSION,
};
use warped_harmonic::inequality::{
    verify_corner_decay, verify_f1_bound, verify_positivity_p, verify_supersolution, SupersolutionPolynomial,
};
use warped_harmonic::nonuniqueness::{
    energy_ledger, family_separation, separation_by_quadrature, EnergyLedger, ExponentialModulation, ModulatedSolution,
    NsResidual,
};
use warped_harmonic::quadrature::QuadratureConfig;
use warped_harmonic::sobolev::{sobolev_report, SobolevReport};
use warped_harmonic::strip::{manufactured, solve_bvp, BoundaryProfile, StripField, StripGrid};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn solved(n_r: usize, n_s: usize) -> StripField {
    solve_bvp(
        StripGrid::new(12.0, n_r, n_s).unwrap(),
        &BoundaryProfile::default(),
        None,
    )
    .unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let c = verify_supersolution(1_000_000).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let near_zero = ((c.lhs_near_zero + 125.0) / 125.0).abs();
    ensure(
        c.passed()
            && c.report.samples == 1_000_000
            && c.report.worst_value < 0.0
            && near_zero <= 1e-2
            && c.lhs_near_edge < -1e3
            && secs < 10.0,
        format!(
            "max lhs {:.4e}, lhs(1e-4) {:.4}, lhs(pi/2-1e-3) {:.4e}, {secs:.2} s",
            c.report.worst_value, c.lhs_near_zero, c.lhs_near_edge
        ),
    )
}

fn criterion_2() -> Outcome {
    let p = SupersolutionPolynomial::standard();
    let edge = p.p(FRAC_PI_2);
    let root = p.p_of_square(15.0 / 4.0);
    let pos = verify_positivity_p();
    ensure(
        (edge - 0.33449).abs() <= 1e-4
            && root == 0.0
            && pos.passed()
            && pos.report.samples >= 1000
            && pos.report.worst_value < 0.0,
        format!(
            "p(pi/2) {edge:.6}, p(sqrt15/2) {root}, max p' {:.4e} over {}",
            pos.report.worst_value, pos.report.samples
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for delta in [0.25, 0.5, 0.75, 0.9] {
        let r = verify_corner_decay(delta, 200).map_err(|e| e.to_string())?;
        let predicted = 2.0 - 2.0 * delta;
        ok &= (r.fitted_exponent - predicted).abs() <= 0.1 * predicted;
        parts.push(format!("{delta}:{:.3}", r.fitted_exponent));
    }
    for delta in [1.0, 1.5] {
        let r = verify_corner_decay(delta, 200).map_err(|e| e.to_string())?;
        ok &= r.growth_exponent.abs() <= 0.05;
        parts.push(format!("{delta}:{:.3}", r.growth_exponent));
    }
    let f1 = verify_f1_bound(100_000, 5);
    ok &= f1.samples == 100_000 && f1.worst_value <= 2.0 + 1e-6;
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    ensure(
        ok,
        format!(
            "exponents {}, max f1 {:.6}, {secs:.2} s",
            parts.join(" "),
            f1.worst_value
        ),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let grid = StripGrid::default_grid();
    let rows = manufactured::convergence_study(grid.coarsened().unwrap().coarsened().unwrap(), 3)
        .map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let constant = solve_bvp(grid, &BoundaryProfile::Constant { value: 1.0 }, None).map_err(|e| e.to_string())?;
    let err = constant.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let default = solve_bvp(grid, &BoundaryProfile::default(), None).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        ratios.len() == 2
            && ratios.iter().all(|r| (3.2..=4.8).contains(r))
            && err <= 1e-9
            && default.max_residual() <= 1e-9
            && secs < 120.0,
        format!("ratios {ratios:.4?}, constant error {err:.2e}, {secs:.2} s"),
    )
}

fn criterion_5(field: &StripField) -> Outcome {
    let g = field.grid;
    let p = SupersolutionPolynomial::standard();
    let (mut worst, mut min) = (0.0f64, f64::INFINITY);
    for j in 0..g.n_s - 1 {
        for i in 1..g.n_r - 1 {
            let v = field.at(i, j);
            min = min.min(v);
            worst = worst.max(v / ((-g.r(i).abs()).exp() * p.p(g.s(j))));
        }
    }
    ensure(
        min > 0.0 && worst <= 1.05,
        format!("min v {min:.3e}, max v/bound {worst:.4}"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let zero = HarmonicField::new(constant_potential(0.0));
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 1000 {
        let z = match DiskPoint::new(rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0)) {
            Ok(z) if z.x > 1e-3 && z.defect() > 1e-3 && z.corner_distance() > 1e-3 => z,
            _ => continue,
        };
        let geo = geometry_jet(z).map_err(|e| e.to_string())?;
        let mut jet = zero.pullback_jet(z).map_err(|e| e.to_string())?;
        jet.u_x = rng.gen_range(-3.0..3.0);
        jet.u_y = rng.gen_range(-3.0..3.0);
        let lhs = lower_order_part(&jet, &geo).map_err(|e| e.to_string())?.norm_sq(z);
        let rhs = lower_order_norm_sq(&geo, jet.u_x, jet.u_y);
        worst = worst.max((lhs - rhs).abs() / rhs);
        n += 1;
    }
    ensure(
        worst <= 1e-12,
        format!("max relative error {worst:.3e} over {n} inputs"),
    )
}

fn criterion_7(fields: &[StripField; 2]) -> Outcome {
    let pts = ProbeRegion::default().sample(1000, 7, AXIS_EXCLUSION);
    let mut res = Vec::new();
    for f in fields {
        let h = HarmonicField::from_field(f);
        let mut w = 0.0f64;
        for &p in &pts {
            w = w.max(h.harmonic_residual(p).map_err(|e| e.to_string())?.abs());
        }
        res.push(w);
    }
    let ratio = res[0] / res[1];
    ensure(
        ratio >= 3.0,
        format!("residuals {:.3e} -> {:.3e}, ratio {ratio:.3}", res[0], res[1]),
    )
}

fn criterion_8(field: &StripField) -> Result<(String, SobolevReport), String> {
    let start = Instant::now();
    let cfg = QuadratureConfig::default();
    let base = sobolev_report(&HarmonicField::from_field(field), &cfg).map_err(|e| e.to_string())?;
    let double = solve_bvp(field.grid, &BoundaryProfile::default().scaled(2.0), None).map_err(|e| e.to_string())?;
    let twice = sobolev_report(&HarmonicField::from_field(&double), &cfg).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut worst_change = 0.0f64;
    let mut worst_tail = 0.0f64;
    for (_, l) in base.ladders().into_iter().take(4) {
        ok &= l.converged;
        worst_change = worst_change.max(l.last_relative_change());
        worst_tail = worst_tail.max(l.tail_budget / l.value.abs());
    }
    let hom = |a: f64, b: f64, factor: f64| (b / a / factor - 1.0).abs();
    let homogeneity = [
        hom(base.l2_du.value, twice.l2_du.value, 4.0),
        hom(base.h1_du.value, twice.h1_du.value, 4.0),
        hom(base.l4_du.value, twice.l4_du.value, 16.0),
        hom(base.w14_du.value, twice.w14_du.value, 16.0),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    ok &= worst_change <= 1e-2 && worst_tail <= 1e-2 && homogeneity <= 1e-10 && secs < 300.0;
    let detail =
        format!("last change {worst_change:.2e}, tail {worst_tail:.2e}, homogeneity {homogeneity:.2e}, {secs:.2} s");
    if ok {
        Ok((detail, base))
    } else {
        Err(detail)
    }
}

fn criterion_9(ledger: &EnergyLedger, field: &StripField) -> Outcome {
    let mut mismatches = 0;
    for i in 0..40 {
        let k = ledger.k_star * i as f64 / 10.0;
        for j in 1..=25 {
            let t = 10.0 / ledger.k_star * (j as f64 / 25.0).powi(2);
            let m = ledger.margin(k, t);
            let sign = |x: f64| {
                if x > 0.0 {
                    1
                } else if x < 0.0 {
                    -1
                } else {
                    0
                }
            };
            let expect = if k > ledger.k_star {
                1
            } else if k < ledger.k_star {
                -1
            } else {
                0
            };
            mismatches += (sign(m) != expect) as usize;
        }
    }
    let h = HarmonicField::from_field(field);
    let t = 1.0 / ledger.k_star;
    let mut worst = 0.0f64;
    for (a, b) in [(1.0, 2.0), (1.0, 4.0), (2.0, 4.0)] {
        let m1 = ExponentialModulation::new(1.0, a * ledger.k_star, 1.0).map_err(|e| e.to_string())?;
        let m2 = ExponentialModulation::new(1.0, b * ledger.k_star, 1.0).map_err(|e| e.to_string())?;
        let q = separation_by_quadrature(&h, &QuadratureConfig::default(), &m1, &m2, t).map_err(|e| e.to_string())?;
        let c = family_separation(ledger, 1.0, m1.k, m2.k, t);
        if !q.converged {
            return Err(format!("separation ladder {a}k*/{b}k* did not converge"));
        }
        worst = worst.max((q.value - c).abs() / c);
    }
    ensure(
        mismatches == 0 && worst <= 1e-2,
        format!("sign mismatches {mismatches}/1000, separation relative gap {worst:.2e}"),
    )
}

fn criterion_10(ledger: &EnergyLedger, fields: &[StripField; 3]) -> Outcome {
    let f0 = 1.0;
    let ks = ledger.k_star;
    let pts = ProbeRegion::default().sample(1000, 11, AXIS_EXCLUSION);
    let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5 / ks).collect();
    let mods: Vec<ExponentialModulation> = [1.0, 2.0, 4.0]
        .iter()
        .map(|c| ExponentialModulation::new(f0, c * ks, 1.0).unwrap())
        .collect();

    let finest = HarmonicField::from_field(&fields[2]);
    let sols: Vec<ModulatedSolution<_>> = mods.iter().map(|&m| ModulatedSolution::new(m, &finest)).collect();
    let mut shared = true;
    for &p in &pts {
        let u0 = sols[0].initial_data(p).map_err(|e| e.to_string())?;
        for s in &sols[1..] {
            let v = s.initial_data(p).map_err(|e| e.to_string())?;
            shared &= u0[0].to_bits() == v[0].to_bits() && u0[1].to_bits() == v[1].to_bits();
        }
    }
    let energy_ok = mods
        .iter()
        .all(|m| times.iter().all(|&t| ledger.margin_for(m, t) >= 0.0));

    // worst NS residual per grid, over all members and probe times
    let mut scaled = Vec::new();
    for f in fields {
        let h = HarmonicField::from_field(f);
        let mut w = 0.0f64;
        for &m in &mods {
            let s = ModulatedSolution::new(m, &h);
            for &t in &times {
                for &p in &pts {
                    w = w.max(NsResidual::metric_norm(
                        p,
                        s.ns_residual(t, p).map_err(|e| e.to_string())?.total,
                    ));
                }
            }
        }
        scaled.push((f.grid.h(), w));
    }
    // C from the coarsest grid must bound the finer ones
    let c = scaled[0].1 / scaled[0].0;
    let residual_ok = scaled[1..].iter().all(|&(h, w)| w <= c * h);

    let floor = 0.01 * f0.abs() * ledger.e0.sqrt();
    let t = 1.0 / ks;
    let mut min_sep = f64::INFINITY;
    for (i, a) in mods.iter().enumerate() {
        for b in &mods[i + 1..] {
            min_sep = min_sep.min(ledger.separation(f0, a.k, b.k, t));
        }
    }
    ensure(
        shared && energy_ok && residual_ok && min_sep > floor,
        format!(
            "shared u0 {shared}, energy {energy_ok}, residual/h {:?} with C {c:.3e}, min separation {min_sep:.4} > {floor:.4}",
            scaled.iter().map(|(h, w)| format!("{w:.2e}@{h}")).collect::<Vec<_>>()
        ),
    )
}

fn snapshot(dir: &std::path::Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        files.push((
            path.file_name().unwrap().to_string_lossy().into_owned(),
            std::fs::read(&path).map_err(|e| e.to_string())?,
        ));
    }
    files.sort();
    Ok(files)
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = || -> Result<Vec<(String, Vec<u8>)>, String> {
        let status = Command::new(env!("CARGO_BIN_EXE_harmonic-lab"))
            .args([
                "all",
                "--grid-nr",
                "193",
                "--grid-ns",
                "33",
                "--samples",
                "200",
                "--cells",
                "--seed",
                "11",
            ])
            .arg("--out")
            .arg(dir.path())
            .stdout(Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("run exited with {status}"));
        }
        snapshot(dir.path())
    };
    let (first, second) = (run()?, run()?);
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    let differing: Vec<&str> = first
        .iter()
        .filter(|f| !second.contains(f))
        .map(|(n, _)| n.as_str())
        .collect();
    ensure(
        differing.is_empty() && first.len() == second.len(),
        format!("{} files compared {names:?}, differing: {differing:?}", names.len()),
    )
}

fn main() {
    // cargo passes harness flags such as --nocapture; a filter runs nothing here
    if std::env::args().skip(1).any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut failed = 0;
    let mut report = |n: usize, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {n:>2} {tag}  {detail}");
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    report(4, criterion_4());
    let fields = [solved(193, 33), solved(385, 65), solved(769, 129)];
    report(5, criterion_5(&fields[2]));
    report(6, criterion_6());
    report(7, criterion_7(&[fields[1].clone(), fields[2].clone()]));
    let ledger = match criterion_8(&fields[2]) {
        Ok((detail, rep)) => {
            report(8, Ok(detail));
            energy_ledger(&rep).ok()
        }
        Err(d) => {
            report(8, Err(d));
            None
        }
    };
    match ledger {
        Some(l) => {
            report(9, criterion_9(&l, &fields[2]));
            report(10, criterion_10(&l, &fields));
        }
        None => {
            report(9, Err("no energy ledger: Sobolev ladders failed".into()));
            report(10, Err("no energy ledger: Sobolev ladders failed".into()));
        }
    }
    report(11, criterion_11());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 11 criteria pass");
}

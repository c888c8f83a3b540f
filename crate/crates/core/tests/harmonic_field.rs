use std::sync::OnceLock;

use warped_harmonic::geometry::{geometry_jet, phi, psi, DiskPoint, C64};
use warped_harmonic::harmonic::{
    constant_potential, cosine_potential, lower_order_norm_sq, HarmonicField, ProbeRegion, AXIS_EXCLUSION,
};
use warped_harmonic::inequality::verify_corner_decay;
use warped_harmonic::strip::{solve_bvp, BoundaryProfile, StripField, StripGrid};
use warped_harmonic::Error;

fn solved(n_r: usize, n_s: usize) -> StripField {
    solve_bvp(
        StripGrid::new(12.0, n_r, n_s).unwrap(),
        &BoundaryProfile::default(),
        None,
    )
    .unwrap()
}

fn ladder() -> &'static [StripField; 2] {
    static FIELDS: OnceLock<[StripField; 2]> = OnceLock::new();
    FIELDS.get_or_init(|| [solved(385, 65), solved(769, 129)])
}

fn probes() -> Vec<DiskPoint> {
    ProbeRegion::default().sample(1000, 7, AXIS_EXCLUSION)
}

fn sup(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |m, v| m.max(v.abs()))
}

#[test]
fn harmonic_residual_is_second_order() {
    let pts = probes();
    let res: Vec<f64> = ladder()
        .iter()
        .map(|f| {
            let h = HarmonicField::from_field(f);
            sup(pts.iter().map(|&p| h.harmonic_residual(p).unwrap()))
        })
        .collect();
    assert!(res[1] < 1e-3, "{res:?}");
    assert!(res[0] / res[1] >= 3.0, "{res:?}");
}

#[test]
fn hodge_residual_vanishes_with_the_grid() {
    let pts = probes();
    let res: Vec<f64> = ladder()
        .iter()
        .map(|f| {
            let h = HarmonicField::from_field(f);
            sup(pts.iter().map(|&p| {
                let r = h.hodge_residual(p).unwrap();
                // component size measured in the metric
                p.defect() * r[0].hypot(r[1])
            }))
        })
        .collect();
    assert!(res[0] / res[1] >= 1.8, "{res:?}");
}

#[test]
fn lower_order_norm_equals_laplacian_form_for_harmonic_fields() {
    let pts = probes();
    let gaps: Vec<f64> = ladder()
        .iter()
        .map(|f| {
            let h = HarmonicField::from_field(f);
            sup(pts.iter().map(|&p| {
                let jet = h.pullback_jet(p).unwrap();
                let geo = geometry_jet(p).unwrap();
                let d2 = p.defect().powi(2);
                let r2 = p.x * p.x + p.y * p.y;
                let alt = 8.0 * r2 * (jet.u_x.powi(2) + jet.u_y.powi(2)) * d2 + jet.laplacian.powi(2);
                lower_order_norm_sq(&geo, jet.u_x, jet.u_y) - alt
            }))
        })
        .collect();
    assert!(gaps[0] / gaps[1] >= 3.0, "{gaps:?}");
}

#[test]
fn pointwise_bounds_are_stable_under_refinement() {
    let h = HarmonicField::from_field(&ladder()[0]);
    let coarse = h.verify_pointwise_bounds(1_000, ProbeRegion::default()).unwrap();
    let fine = h.verify_pointwise_bounds(10_000, ProbeRegion::default()).unwrap();
    for (a, b) in [
        (&coarse.gradient, &fine.gradient),
        (&coarse.hessian, &fine.hessian),
        (&coarse.laplacian, &fine.laplacian),
    ] {
        assert!(a.worst_value.is_finite() && a.worst_value > 0.0);
        assert!(
            (b.worst_value - a.worst_value).abs() <= 0.05 * b.worst_value,
            "{a:?} vs {b:?}"
        );
        assert!(a.verdict.passed());
    }
}

#[test]
fn gradient_is_uniformly_bounded() {
    let h = HarmonicField::from_field(&ladder()[0]);
    let pts = ProbeRegion::default().sample(10_000, 9, 0.0);
    let g = sup(pts.iter().map(|&p| h.pullback_jet(p).unwrap().gradient_abs_sum()));
    assert!(g.is_finite() && g < 1.0, "{g}");
    // the decay factor that controls it
    assert!(verify_corner_decay(1.0, 40).unwrap().bounded);
}

#[test]
fn constant_field_has_zero_bounds() {
    let h = HarmonicField::new(constant_potential(1.0));
    let b = h.verify_pointwise_bounds(1_000, ProbeRegion::default()).unwrap();
    assert_eq!(b.gradient.worst_value, 0.0);
    assert_eq!(b.hessian.worst_value, 0.0);
}

#[test]
fn scaling_is_equivariant() {
    let grid = StripGrid::new(12.0, 193, 33).unwrap();
    let base = solve_bvp(grid, &BoundaryProfile::default(), None).unwrap();
    let double = solve_bvp(grid, &BoundaryProfile::default().scaled(2.0), None).unwrap();
    let (hb, hd) = (HarmonicField::from_field(&base), HarmonicField::from_field(&double));
    for p in probes().into_iter().take(200) {
        let (a, b) = (hb.pullback_jet(p).unwrap(), hd.pullback_jet(p).unwrap());
        assert_eq!(2.0 * a.u, b.u);
        assert_eq!(2.0 * a.u_x, b.u_x);
        assert_eq!(2.0 * a.u_yy, b.u_yy);
        assert_eq!(4.0 * a.norm_nabla_du_sq, b.norm_nabla_du_sq);
    }
}

#[test]
fn out_of_window_points_are_flagged() {
    let h = HarmonicField::from_field(&ladder()[0]);
    let p = DiskPoint::from_complex(phi(C64::new(-12.5, 0.7))).unwrap();
    assert!(psi(p).unwrap().re < -12.0);
    assert!(matches!(h.pullback_jet(p), Err(Error::OutOfWindow { .. })));
    let jet = h.jet_or_decay(p).unwrap();
    assert!(jet.extrapolated && jet.u == 0.0);
}

#[test]
fn differential_is_closed() {
    let h = HarmonicField::new(cosine_potential());
    let w = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
    for p in probes().into_iter().take(100) {
        // step relative to the distance to the nearest singular feature
        let step = 1e-3 * p.corner_distance().min(p.defect()).min(p.x);
        let at = |dx: f64, dy: f64| h.pullback_jet(DiskPoint::new(p.x + dx, p.y + dy).unwrap()).unwrap();
        let mut d_y_ux = 0.0;
        let mut d_x_uy = 0.0;
        for (k, wk) in w.iter().enumerate() {
            let o = (k as f64 - 2.0) * step;
            d_y_ux += wk * at(0.0, o).u_x / step;
            d_x_uy += wk * at(o, 0.0).u_y / step;
        }
        let scale = at(0.0, 0.0).hessian_abs_sum().max(1.0);
        assert!((d_y_ux - d_x_uy).abs() <= 1e-10 * scale, "{p:?}: {d_y_ux} vs {d_x_uy}");
    }
}

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use warped_harmonic::inequality::{
    verify_corner_decay, verify_f1_bound, verify_positivity_p, verify_supersolution, SupersolutionPolynomial,
};
use warped_harmonic::strip::{solve_bvp, BoundaryProfile, StripGrid};

#[test]
fn supersolution_certificate_at_full_resolution() {
    let start = Instant::now();
    let c = verify_supersolution(1_000_000).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(c.passed(), "{c:?}");
    assert_eq!(c.report.samples, 1_000_000);
    assert!(c.report.worst_value < 0.0);
    assert!(((c.lhs_near_zero + 125.0) / 125.0).abs() <= 1e-2, "{}", c.lhs_near_zero);
    assert!(c.lhs_near_edge < -1e3, "{}", c.lhs_near_edge);
    assert!(c.decomposition.len() >= 2);
    assert!(elapsed < 10.0, "{elapsed} s");
}

#[test]
fn polynomial_roots_and_split_point() {
    let p = SupersolutionPolynomial::standard();
    assert_eq!(p.p(0.0), 75.0);
    assert_eq!(p.p_of_square(15.0 / 4.0), 0.0);
    assert_eq!(p.p_of_square(5.0 / 2.0), 0.0);
    // p₂(√2/2) = 8/4 + 46/2 - 25
    assert_eq!(8.0 * 0.25 + 46.0 * 0.5 - 25.0, 0.0);
    assert!((p.p(FRAC_PI_2) - 0.33449).abs() <= 1e-4);
}

#[test]
fn positivity_report() {
    let r = verify_positivity_p();
    assert!(r.passed());
    assert!(r.report.samples >= 1000);
    assert!(r.report.worst_value < 0.0);
    assert_eq!(r.min_p, r.p_at_edge);
    assert!((r.p_at_edge - 0.33449).abs() <= 1e-4);
}

#[test]
fn decay_dichotomy() {
    let start = Instant::now();
    for delta in [0.25, 0.5, 0.75, 0.9] {
        let r = verify_corner_decay(delta, 200).unwrap();
        let predicted = 2.0 - 2.0 * delta;
        assert!(
            (r.fitted_exponent - predicted).abs() <= 0.1 * predicted,
            "{delta}: {}",
            r.fitted_exponent
        );
        assert!(!r.bounded && r.report.verdict.passed());
    }
    for delta in [1.0, 1.5] {
        let r = verify_corner_decay(delta, 200).unwrap();
        assert!(r.growth_exponent.abs() <= 0.05, "{delta}: {}", r.growth_exponent);
        assert!(r.bounded && r.report.verdict.passed());
    }
    let f1 = verify_f1_bound(100_000, 5);
    assert!(f1.verdict.passed() && f1.worst_value <= 2.0 + 1e-6, "{f1:?}");
    assert!(start.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn bad_delta_and_sample_counts_are_rejected() {
    assert!(verify_corner_decay(0.0, 100).is_err());
    assert!(verify_corner_decay(2.5, 100).is_err());
    assert!(verify_corner_decay(1.0, 4).is_err());
    assert!(verify_supersolution(999).is_err());
}

#[test]
fn margin_report_json_shape() {
    let r = verify_corner_decay(0.5, 64).unwrap();
    let v = serde_json::to_value(&r.report).unwrap();
    for key in [
        "check",
        "samples",
        "worst_value",
        "worst_location",
        "fitted_exponent",
        "verdict",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let c = verify_supersolution(1000).unwrap();
    let v = serde_json::to_value(&c.report).unwrap();
    assert!(v.get("fitted_exponent").is_none());
    assert_eq!(v["verdict"], "pass");
}

#[test]
fn inequalities_imply_the_discrete_comparison() {
    assert!(verify_supersolution(10_000).unwrap().passed() && verify_positivity_p().passed());
    let grid = StripGrid::new(12.0, 193, 33).unwrap();
    let field = solve_bvp(grid, &BoundaryProfile::default(), None).unwrap();
    let p = SupersolutionPolynomial::standard();
    for j in 0..grid.n_s - 1 {
        for i in 1..grid.n_r - 1 {
            let v = field.at(i, j);
            let bound = 1.05 * (-grid.r(i).abs()).exp() * p.p(grid.s(j));
            assert!(v > 0.0 && v <= bound, "({i}, {j}): {v} vs {bound}");
        }
    }
}

//! Error-scan invariants across nu.

use student_refine::survival::{
    extremal_constant, fit_loglog_slope, max_error_scan, max_error_scan_with, ScanOptions,
};
use student_refine::{ApproxOrder, DegreesOfFreedom, Error};

fn dof(nu: f64) -> DegreesOfFreedom {
    DegreesOfFreedom::new(nu).unwrap()
}

#[test]
fn rate_hierarchy() {
    for nu in [32.0, 64.0, 128.0] {
        let errs: Vec<f64> = ApproxOrder::ALL
            .iter()
            .map(|&o| max_error_scan(dof(nu), o, 2001, 10.0).unwrap().max_error)
            .collect();
        assert!(errs.windows(2).all(|w| w[0] > w[1]), "nu={nu}: {errs:?}");
    }
}

#[test]
fn first_correction_removes_first_order_term() {
    let fit = fit_loglog_slope(ApproxOrder::One, &[64.0, 128.0, 256.0, 512.0, 1024.0], 2001).unwrap();
    assert!((fit.slope + 2.0).abs() < 0.15, "{}", fit.slope);
}

#[test]
fn order_zero_intercept_is_leading_constant() {
    // below nu = 64 the second-order term still bends the line
    let fit = fit_loglog_slope(ApproxOrder::Zero, &[64.0, 128.0, 256.0, 512.0, 1024.0], 2001).unwrap();
    let m0 = extremal_constant(0).unwrap();
    assert!((fit.intercept - m0.ln()).abs() < 0.1, "{} vs {}", fit.intercept, m0.ln());
    assert_eq!(fit.nu_values.len(), fit.errors.len());
    assert!(fit.errors.iter().all(|&e| e > 0.0));
}

#[test]
fn noise_floor_points_are_excluded() {
    // order 3 errors at very large nu sit at the oracle's rounding level
    let nus = [1e5, 2e5, 4e5, 8e5];
    match fit_loglog_slope(ApproxOrder::Three, &nus, 201) {
        Err(Error::InsufficientData { excluded, .. }) => assert!(!excluded.is_empty()),
        other => panic!("expected insufficient data, got {other:?}"),
    }
}

#[test]
fn full_window_is_dominated_by_tail_divergence() {
    // without clipping, the polynomial shift diverges far from the bulk
    let nu = dof(16.0);
    let clipped = max_error_scan(nu, ApproxOrder::Three, 2001, 10.0).unwrap();
    let opts = ScanOptions { bulk_eta: None, ..ScanOptions::default() };
    let full = max_error_scan_with(nu, ApproxOrder::Three, &opts).unwrap();
    assert!(full.max_error > 100.0 * clipped.max_error);
    assert_eq!(full.window_delta, 10.0);
    assert!(clipped.window_delta < 10.0);
}

#[test]
fn argmax_inside_window() {
    for order in ApproxOrder::ALL {
        let nu = dof(100.0);
        let rep = max_error_scan(nu, order, 501, 10.0).unwrap();
        assert!(rep.argmax_a.abs() <= rep.window_delta * nu.std_dev() * (1.0 + 1e-12));
        assert!(rep.max_error >= 0.0);
    }
}

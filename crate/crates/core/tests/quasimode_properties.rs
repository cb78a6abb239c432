use npthin::planar::PlanarGrid;
use npthin::quasimode::{build_phi_rho, h_half_norm, loglog_slope, residual_oblate, QuasiOptions};
use npthin::{Family, QuasiModeSpec};

#[test]
fn sheet_densities_follow_sign_of_lambda() {
    let grid = PlanarGrid::covering(80.0, 128);
    for (lam, sign) in [(0.3, 1.0), (-0.3, -1.0)] {
        let spec = QuasiModeSpec::new(Family::Flat, lam, 0.5).unwrap();
        let (p, m) = build_phi_rho(&spec, 100.0, grid).unwrap();
        assert!(p.max_abs() > 0.0);
        for (a, b) in p.data.iter().zip(&m.data) {
            assert_eq!(*b, a * sign);
        }
    }
}

#[test]
fn h_half_norm_order_one_across_rho() {
    let spec = QuasiModeSpec::new(Family::Flat, -0.3, 0.3).unwrap();
    let norms: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&r| {
            let rho = spec.rho(r);
            let grid = PlanarGrid::covering(4.0 * rho, 512);
            let (f, _) = build_phi_rho(&spec, r, grid).unwrap();
            h_half_norm(&f).unwrap()
        })
        .collect();
    for n in &norms {
        assert!(*n > 0.5 && *n < 2.0, "{norms:?}");
    }
    assert!(norms[0] / norms[2] < 1.01);
}

#[test]
fn oblate_components_decay() {
    let opts = QuasiOptions::default();
    let spec = QuasiModeSpec::new(Family::Oblate, 0.3, 0.3).unwrap();
    let res: Vec<_> = [1e2, 1e3].iter().map(|&r| residual_oblate(&spec, r, &opts).unwrap()).collect();
    assert!(res[1].same_sheet < res[0].same_sheet);
    assert!(res[1].cross_sheet < res[0].cross_sheet);
    assert!(res[1].residual < 0.02);
    let slope = loglog_slope(&[(1e2, res[0].residual), (1e3, res[1].residual)]).unwrap();
    assert!(slope < -0.3, "slope {slope}");
    // the reduction only sees |lambda|
    let neg = QuasiModeSpec::new(Family::Oblate, -0.3, 0.3).unwrap();
    let r = residual_oblate(&neg, 1e2, &opts).unwrap();
    assert!((r.residual - res[0].residual).abs() < 1e-12);
    // endpoint: no oscillation, still small
    let half = QuasiModeSpec::new(Family::Oblate, 0.5, 0.5).unwrap();
    let a = residual_oblate(&half, 1e2, &opts).unwrap();
    let b = residual_oblate(&half, 1e3, &opts).unwrap();
    assert!(b.residual < a.residual, "{a:?} {b:?}");
}

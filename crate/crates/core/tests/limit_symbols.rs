use std::f64::consts::PI;

use npthin::limit::{l0_hat, l0_hat_direct, solve_xi0_prolate, two_sheet_symbol};
use npthin::quasimode::loglog_slope;
use npthin::specfun::{khat, khat_quadrature};
use npthin::Parity;

#[test]
fn symbol_routes_agree() {
    for &xi in &[0.25, 0.5, 1.0, 2.0, 4.0, 7.0, 10.0] {
        let a = l0_hat(xi);
        let b = l0_hat_direct(xi).unwrap();
        assert!((a - b).abs() < 1e-6, "xi={xi}: {a} vs {b}");
    }
}

#[test]
fn symbol_decay_rate() {
    // the bound allows |xi|^{-(1 - delta)}, delta = 0.1; the actual rate is 1/(8 pi xi)
    let pts: Vec<(f64, f64)> = [1e2, 1e3, 1e4].iter().map(|&x| (x, l0_hat(x))).collect();
    let slope = loglog_slope(&pts).unwrap();
    assert!(slope > -1.0 - 1e-3 && slope < -1.0 + 0.1 + 0.1, "slope {slope}");
    for (x, v) in pts {
        assert!((8.0 * PI * x * v - 1.0).abs() < 1e-5);
    }
}

#[test]
fn khat_facts() {
    assert!((khat_quadrature(0.5).unwrap() - khat(0.5)).abs() < 1e-8);
    assert!(khat(5.0) / khat(1.0) < 1e-9);
    let v: Vec<f64> = (0..100).map(|k| khat(0.05 * k as f64)).collect();
    assert!(v.windows(2).all(|w| w[1] < w[0]));
    assert!(v.iter().all(|&x| x > 0.0 && x <= 2.0));
}

#[test]
fn frequency_matching() {
    for &lam in &[0.45, 0.3, 0.1, 0.01] {
        let x = solve_xi0_prolate(lam).unwrap();
        assert!(!x.capped);
        assert!((l0_hat(x.xi0) - lam).abs() < 1e-10);
    }
}

#[test]
fn two_sheet_symbol_range() {
    for k in 0..200 {
        let xi = [0.01 * k as f64, -0.003 * k as f64];
        let e = two_sheet_symbol(xi, Parity::Even);
        let o = two_sheet_symbol(xi, Parity::Odd);
        assert!(e > 0.0 && e <= 0.5 && o < 0.0 && o >= -0.5);
        assert_eq!(e, -o);
    }
}

use npthin::spectra::{density_scan, discretize_oblate, discretize_prolate, eigenvalues, ScanOptions};
use npthin::{Family, Parity, Scheme};

fn top(values: Vec<f64>, k: usize) -> Vec<f64> {
    values.into_iter().take(k).collect()
}

#[test]
fn prolate_scan_covers_positive_grid() {
    let grid: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
    let rep = density_scan(Family::Prolate, &[2.0, 5.0, 10.0, 20.0, 50.0], &grid, 0.02, &ScanOptions::default())
        .unwrap();
    assert!(rep.all_covered(), "uncovered {:?}", rep.uncovered());
    // nothing negative on a prolate spheroid
    let neg = density_scan(Family::Prolate, &[2.0, 5.0], &[-0.3], 0.02, &ScanOptions::default()).unwrap();
    assert!(!neg.all_covered());
    for s in &rep.spectra {
        assert!(s.confinement_violations().is_empty());
        assert!(s.max_imag_residual() < 1e-6);
    }
}

#[test]
fn prolate_doubling() {
    let a = top(eigenvalues(&discretize_prolate(5.0, 128, Scheme::Product).unwrap()).unwrap().values(), 10);
    let b = top(eigenvalues(&discretize_prolate(5.0, 256, Scheme::Product).unwrap()).unwrap().values(), 10);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-5, "{x} vs {y}");
    }
}

#[test]
fn oblate_doubling_and_realness() {
    // compare the outer eigenvalues; the ones near 0 accumulate and are resolved last
    let outer = |mut v: Vec<f64>| {
        v.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        top(v, 10)
    };
    for (m, parity) in [(0, Parity::Even), (1, Parity::Odd), (3, Parity::Even)] {
        let a = eigenvalues(&discretize_oblate(10.0, 1.0, m, parity, 256, Scheme::Product).unwrap()).unwrap();
        let b = eigenvalues(&discretize_oblate(10.0, 1.0, m, parity, 512, Scheme::Product).unwrap()).unwrap();
        assert!(a.max_imag_residual() < 1e-6 && b.max_imag_residual() < 1e-6);
        for (x, y) in outer(a.values()).iter().zip(&outer(b.values())) {
            assert!((x - y).abs() < 1e-8, "m={m} {parity}: {x} vs {y}");
        }
    }
}

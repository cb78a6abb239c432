use npthin::prolate::{eigenvalue, enumerate_spectrum, half_property_defect, l_to_r, r_to_l, tune_l};
use npthin::specfun::{legendre_p, legendre_q};
use npthin::{Error, ModeIndex};
use proptest::prelude::*;

fn mode(n: u32, m: i32) -> ModeIndex {
    ModeIndex::new(n, m).unwrap()
}

#[test]
fn near_sphere_spectrum_is_degenerate() {
    let s = enumerate_spectrum(1e4, 3).unwrap();
    let mut counts = [0u32; 3];
    for e in &s.eigenvalues {
        let n = e.label.mode.unwrap().n;
        let exact = 0.5 / f64::from(2 * n + 1);
        assert!((e.re - exact).abs() < 1e-6, "{e:?}");
        counts[n as usize - 1] += e.label.multiplicity;
    }
    assert_eq!(counts, [3, 5, 7]);
    for n in 1..=5 {
        for m in 0..=n as i32 {
            let v = eigenvalue(mode(n, m), 1e4).unwrap();
            assert!((v - 0.5 / f64::from(2 * n + 1)).abs() < 1e-6);
        }
    }
}

#[test]
fn degree_one_sums_to_half() {
    let s = enumerate_spectrum(2.0, 1).unwrap();
    let total: f64 = s.eigenvalues.iter().map(|e| e.re * f64::from(e.label.multiplicity)).sum();
    assert_eq!(s.eigenvalues.iter().map(|e| e.label.multiplicity).sum::<u32>(), 3);
    assert!(s.eigenvalues.iter().all(|e| e.re > 0.0));
    assert!((total - 0.5).abs() < 1e-12);
}

#[test]
fn union_over_shapes_fills_interval() {
    let ng = 80;
    let mut vals = Vec::new();
    for i in 0..ng {
        let l = 1.0 + 1e-3 * (1e4f64 * 0.9).powf(i as f64 / (ng - 1) as f64);
        vals.extend(enumerate_spectrum(l, 10).unwrap().values());
    }
    assert!(vals.iter().all(|&v| v > 0.0 && v <= 0.5));
    vals.retain(|v| *v > 0.02 && *v < 0.48);
    vals.extend([0.02, 0.48]);
    vals.sort_by(f64::total_cmp);
    let gap = vals.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    assert!(gap < 0.01, "largest gap {gap}");
}

#[test]
fn half_property_on_grid() {
    for &l in &[1.01, 1.5, 2.0, 10.0] {
        for n in 1..=10 {
            assert!(half_property_defect(n, l).unwrap().abs() < 1e-10);
        }
    }
}

#[test]
fn branches_continuous_in_l() {
    let ls: Vec<f64> = (0..200).map(|i| 1.0 + 10f64.powf(-3.0 + 5.0 * i as f64 / 199.0)).collect();
    for n in 1..=4 {
        for m in 0..=n as i32 {
            let v: Vec<f64> = ls.iter().map(|&l| eigenvalue(mode(n, m), l).unwrap()).collect();
            assert!(v.iter().all(|&x| x > 0.0));
            let d: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            for i in 1..d.len() - 1 {
                let local = d[i - 1].max(d[i + 1]);
                assert!(d[i] <= 10.0 * local + 1e-14, "jump in ({n},{m}) at L = {}", ls[i]);
            }
        }
    }
}

#[test]
fn tuner_examples() {
    let near_sphere = tune_l(mode(1, 0), 1.0 / 6.0 + 1e-4).unwrap();
    assert!(near_sphere.l > 5.0 && near_sphere.residual < 1e-10);
    let t = tune_l(mode(1, 0), 0.3).unwrap();
    assert!((eigenvalue(mode(1, 0), t.l).unwrap() - 0.3).abs() < 1e-10);
    assert!(matches!(tune_l(mode(1, 1), 0.4), Err(Error::Range { .. })));
    assert!(matches!(tune_l(mode(1, 0), 1.0 / 6.0 - 1e-4), Err(Error::Range { .. })));
}

#[test]
fn shape_conversions() {
    let l = 2.0 / 3f64.sqrt();
    assert!((l_to_r(l).unwrap() - 2.0).abs() < 1e-14);
    assert!((l_to_r(1e8).unwrap() - 1.0).abs() < 1e-14);
    assert!(r_to_l(1.0).is_err() && l_to_r(0.5).is_err());
}

proptest! {
    // Both kinds obey (n - m + 1) X_{n+1} = (2n + 1) z X_n - (n + m) X_{n-1}.
    #[test]
    fn legendre_three_term_recurrence(z in 1.01f64..8.0, m in 0u32..5, k in 1u32..15) {
        let n = m + k;
        for f in [legendre_p, legendre_q] {
            let lo = f(n - 1, m, z).unwrap_or(0.0);
            let mid = f(n, m, z).unwrap();
            let hi = f(n + 1, m, z).unwrap();
            let lhs = f64::from(n - m + 1) * hi;
            let rhs = f64::from(2 * n + 1) * z * mid - f64::from(n + m) * lo;
            let scale = lhs.abs().max((f64::from(2 * n + 1) * z * mid).abs());
            prop_assert!((lhs - rhs).abs() <= 1e-11 * scale, "n={n} m={m} z={z}: {lhs} vs {rhs}");
        }
    }

    // R - 1 ~ 1/(2 L^2), so recovering L costs a factor ~L^3 in rounding.
    #[test]
    fn conversions_are_involutive(x in 1.0001f64..1e4) {
        let back = r_to_l(l_to_r(x).unwrap()).unwrap();
        prop_assert!((back - x).abs() <= 1e-14 * x + 1e-15 * x.powi(3));
        let r = l_to_r(r_to_l(x).unwrap()).unwrap();
        prop_assert!((r - x).abs() <= 1e-14 * x + 1e-15 * x.powi(3));
    }
}

//! Exact NP eigenvalues of prolate spheroids from Legendre functions of
//! the spheroidal coordinate `L`, with the aspect ratio `R = L / sqrt(L^2 - 1)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::specfun::{LegendreTable, ModeIndex, NEAR_SINGULAR};
use crate::types::{EigenLabel, Eigenvalue, SpectrumResult, SpheroidGeometry};

/// Largest degree accepted by `enumerate_spectrum`.
pub const N_MAX: u32 = 50;

/// Aspect ratio `R` from the spheroidal coordinate `L`.
pub fn l_to_r(l: f64) -> Result<f64> {
    if !(l > 1.0) {
        return Err(domain("l_to_r", format!("need L > 1, got {l}")));
    }
    Ok(l / ((l - 1.0) * (l + 1.0)).sqrt())
}

/// Spheroidal coordinate `L` from the aspect ratio `R`; the same map as `l_to_r`.
pub fn r_to_l(r: f64) -> Result<f64> {
    if !(r > 1.0) {
        return Err(domain("r_to_l", format!("need R > 1, got {r}")));
    }
    Ok(r / ((r - 1.0) * (r + 1.0)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProlateShape {
    l: f64,
    r: f64,
}

impl ProlateShape {
    pub fn from_l(l: f64) -> Result<Self> {
        Ok(ProlateShape { l, r: l_to_r(l)? })
    }

    pub fn from_r(r: f64) -> Result<Self> {
        Ok(ProlateShape { l: r_to_l(r)?, r })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn geometry(&self) -> SpheroidGeometry {
        SpheroidGeometry::prolate(self.r, self.l)
    }
}

/// Eigenvalue of degree `n` for every table entry, given the shared order.
fn eigenvalue_from_table(t: &LegendreTable, n: u32) -> f64 {
    let m = t.order();
    let mut ratio = 1.0;
    for k in (n - m + 1)..=(n + m) {
        ratio /= f64::from(k);
    }
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    -0.5 * sign * ratio * t.pq_derivative_scaled(n)
}

/// `lambda_{m,n}(L)`; negative orders share the value of `|m|`.
pub fn eigenvalue(mode: ModeIndex, l: f64) -> Result<f64> {
    let mode = ModeIndex::new(mode.n, mode.m)?;
    if !(l > 1.0) {
        return Err(domain("eigenvalue", format!("need L > 1, got {l}")));
    }
    if l - 1.0 < NEAR_SINGULAR {
        log::warn!("eigenvalue at L - 1 = {:e}: near-degenerate spheroid", l - 1.0);
    }
    let t = LegendreTable::new(mode.order(), mode.n, l)?;
    Ok(eigenvalue_from_table(&t, mode.n))
}

/// `sum_{m=-n}^{n} lambda_{m,n}(L) - 1/2`.
pub fn half_property_defect(n: u32, l: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("half_property_defect", "degree must be >= 1"));
    }
    if !(l > 1.0) {
        return Err(domain("half_property_defect", format!("need L > 1, got {l}")));
    }
    let mut sum = 0.0;
    for m in 0..=n {
        let t = LegendreTable::new(m, n, l)?;
        let w = if m == 0 { 1.0 } else { 2.0 };
        sum += w * eigenvalue_from_table(&t, n);
    }
    Ok(sum - 0.5)
}

/// Open interval of values `lambda_{m,n}` takes as `L` runs over `(1, inf)`,
/// from the limits at the two ends (`1/2` or `0` at `L -> 1`, the sphere
/// value `1/(2(2n+1))` at `L -> inf`).
pub fn attainable_range(mode: ModeIndex) -> (f64, f64) {
    let sphere = 0.5 / f64::from(2 * mode.n + 1);
    if mode.m == 0 {
        (sphere, 0.5)
    } else {
        (0.0, sphere)
    }
}

const TUNE_LO: f64 = 1e-6;
const TUNE_HI: f64 = 1e5;
const TUNE_PROBES: usize = 220;

/// Outcome of `tune_l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub l: f64,
    pub r: f64,
    pub achieved: f64,
    pub residual: f64,
}

/// Find `L` with `lambda_{m,n}(L) = target` by scanning `L - 1` on a log grid
/// over `[1e-6, 1e5]` for a sign change and bisecting. Continuity is all
/// that is used, so the root found need not be unique.
pub fn tune_l(mode: ModeIndex, target: f64) -> Result<TuneResult> {
    let mode = ModeIndex::new(mode.n, mode.m)?;
    let (lo, hi) = attainable_range(mode);
    if !(target > lo && target < hi) {
        return Err(Error::Range {
            op: "tune_l",
            target,
            lo,
            hi,
        });
    }
    let f = |s: f64| eigenvalue(mode, 1.0 + s.exp()).map(|v| v - target);
    let (a0, b0) = (TUNE_LO.ln(), TUNE_HI.ln());
    let mut prev = (a0, f(a0)?);
    let mut bracket = None;
    for k in 1..=TUNE_PROBES {
        let s = a0 + (b0 - a0) * k as f64 / TUNE_PROBES as f64;
        let v = f(s)?;
        if v == 0.0 {
            bracket = Some((s, s, v, v));
            break;
        }
        if v.signum() != prev.1.signum() {
            bracket = Some((prev.0, s, prev.1, v));
            break;
        }
        prev = (s, v);
    }
    let (mut a, mut b, mut fa, _) = bracket.ok_or_else(|| Error::Convergence {
        op: "tune_l",
        detail: format!(
            "no sign change of lambda{mode} - {target} for L - 1 in [{TUNE_LO:e}, {TUNE_HI:e}]"
        ),
    })?;
    let mut best = (a, fa);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if fm.abs() < best.1.abs() {
            best = (mid, fm);
        }
        if fm.abs() < 1e-13 || b - a < 1e-15 {
            break;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let l = 1.0 + best.0.exp();
    let achieved = eigenvalue(mode, l)?;
    Ok(TuneResult {
        l,
        r: l_to_r(l)?,
        achieved,
        residual: (achieved - target).abs(),
    })
}

/// All `lambda_{m,n}(L)`, `1 <= n <= n_max`, `0 <= m <= n`, sorted descending.
/// Entries with `m > 0` carry multiplicity 2 (orders `+-m`).
pub fn enumerate_spectrum(l: f64, n_max: u32) -> Result<SpectrumResult> {
    if n_max == 0 || n_max > N_MAX {
        return Err(domain(
            "enumerate_spectrum",
            format!("need 1 <= n_max <= {N_MAX}, got {n_max}"),
        ));
    }
    let shape = ProlateShape::from_l(l)?;
    let per_order: Vec<Vec<Eigenvalue>> = (0..=n_max)
        .into_par_iter()
        .map(|m| {
            let t = LegendreTable::new(m, n_max, l)?;
            Ok((m.max(1)..=n_max)
                .map(|n| Eigenvalue {
                    re: eigenvalue_from_table(&t, n),
                    im: 0.0,
                    label: EigenLabel {
                        mode: Some(ModeIndex { n, m: m as i32 }),
                        m: Some(m),
                        parity: None,
                        multiplicity: if m == 0 { 1 } else { 2 },
                    },
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut res = SpectrumResult {
        geometry: shape.geometry(),
        grid_size: 0,
        scheme: "analytic-legendre".into(),
        eigenvalues: per_order.into_iter().flatten().collect(),
    };
    res.sort_descending();
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mode(n: u32, m: i32) -> ModeIndex {
        ModeIndex::new(n, m).unwrap()
    }

    #[test]
    fn reference_eigenvalues() {
        // 40-digit evaluation of -(1/2)(-1)^m (n-m)!/(n+m)! (L^2-1)(P Q)'(L).
        assert_relative_eq!(
            eigenvalue(mode(1, 0), 2.0).unwrap(),
            0.204_163_133_995_670_925_8,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            eigenvalue(mode(3, 2), 1.2).unwrap(),
            0.054_251_519_820_589_453_07,
            max_relative = 1e-12
        );
        assert_eq!(
            eigenvalue(mode(3, -2), 1.2).unwrap(),
            eigenvalue(mode(3, 2), 1.2).unwrap()
        );
    }

    #[test]
    fn shape_conversions() {
        let l = 2.0 / 3f64.sqrt();
        assert_relative_eq!(l_to_r(l).unwrap(), 2.0, max_relative = 1e-14);
        assert!(l_to_r(1e8).unwrap() - 1.0 < 1e-15);
        assert!(r_to_l(1.0).is_err());
    }

    #[test]
    fn sphere_limit() {
        let l = 1e4;
        for n in 1..=5 {
            for m in 0..=n as i32 {
                let v = eigenvalue(mode(n, m), l).unwrap();
                assert!((v - 0.5 / f64::from(2 * n + 1)).abs() < 1e-6, "({n},{m}): {v}");
            }
        }
        assert!(half_property_defect(1, 1e4).unwrap().abs() < 1e-12);
    }

    #[test]
    fn half_property_grid() {
        for &l in &[1.01, 1.5, 2.0, 10.0] {
            for n in 1..=10 {
                let d = half_property_defect(n, l).unwrap();
                assert!(d.abs() < 1e-10, "n={n}, L={l}: {d:e}");
            }
        }
    }

    #[test]
    fn tuner_round_trip_and_range() {
        let t = tune_l(mode(1, 0), 0.3).unwrap();
        assert!(t.residual < 1e-10);
        let err = tune_l(mode(1, 1), 0.4).unwrap_err();
        assert!(matches!(err, Error::Range { lo, hi, .. } if lo == 0.0 && (hi - 1.0 / 6.0).abs() < 1e-15));
        let far = tune_l(mode(1, 0), 1.0 / 6.0 + 1e-6).unwrap();
        assert!(far.l > 100.0 && far.residual < 1e-10);
    }

    #[test]
    fn enumerate_sphere_like() {
        let s = enumerate_spectrum(1e4, 3).unwrap();
        let expanded: Vec<f64> = s
            .eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.re, e.label.multiplicity as usize))
            .collect();
        assert_eq!(expanded.len(), 3 + 5 + 7);
        for (k, v) in expanded.iter().enumerate() {
            let n = if k < 3 { 1 } else if k < 8 { 2 } else { 3 };
            assert!((v - 0.5 / f64::from(2 * n + 1)).abs() < 1e-6);
        }
        let s = enumerate_spectrum(2.0, 1).unwrap();
        let total: f64 = s.eigenvalues.iter().map(|e| e.re * f64::from(e.label.multiplicity)).sum();
        assert!((total - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn eigenvalues_positive_and_bounded(n in 1u32..=12, mfrac in 0.0f64..=1.0, ls in -6.0f64..4.0) {
            let m = (mfrac * f64::from(n)).round() as i32;
            let l = 1.0 + 10f64.powf(ls);
            let v = eigenvalue(mode(n, m), l).unwrap();
            prop_assert!(v > 0.0 && v <= 0.5 + 1e-12, "lambda{:?} at L={} = {}", (n, m), l, v);
        }

        #[test]
        fn conversion_is_involutive(x in 1.2f64..6.0) {
            let y = r_to_l(l_to_r(x).unwrap()).unwrap();
            prop_assert!((y - x).abs() <= 1e-14 * x, "{} -> {}", x, y);
        }

        // Away from moderate x the round trip is limited by conditioning:
        // the relative condition number of the map is 1/(x^2 - 1).
        #[test]
        fn conversion_error_tracks_conditioning(x in 1.0f64 + 1e-9..1e6) {
            let y = r_to_l(l_to_r(x).unwrap()).unwrap();
            let cond = (x * x - 1.0).max(1.0 / (x * x - 1.0)).max(1.0);
            prop_assert!((y - x).abs() <= 1e-14 * x * cond, "{} -> {}", x, y);
        }
    }
}

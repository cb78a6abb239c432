//! Pointwise NP kernels: the prolate reduced kernel `H_R`, the oblate
//! same-sheet and cross-sheet kernels, their azimuthal mode reductions,
//! surface weights, and the flat two-sheet Poisson coupling.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::limit::{theta_integral, THETA_TOL};
use crate::planar::PlanarField;
use crate::quadrature::{gauss_legendre, geometric_breaks, integrate_breaks, Tolerance};
use crate::specfun::elliptic_ke;

/// Needle profile `eta(t) = sqrt(1 - t^2/R^2)` on `(-R, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProlateProfile {
    pub r: f64,
}

impl ProlateProfile {
    pub fn new(r: f64) -> Result<Self> {
        if !(r >= 1.0) {
            return Err(domain("ProlateProfile", format!("need R >= 1, got {r}")));
        }
        Ok(ProlateProfile { r })
    }

    pub fn eta(&self, t: f64) -> f64 {
        let s = t / self.r;
        ((1.0 - s) * (1.0 + s)).max(0.0).sqrt()
    }
}

fn check_prolate(op: &'static str, r: f64, x3: f64, y3: f64) -> Result<()> {
    if !(r >= 1.0) {
        return Err(domain(op, format!("need R >= 1, got {r}")));
    }
    if !(x3.abs() < r && y3.abs() < r) {
        return Err(domain(op, format!("arguments ({x3}, {y3}) outside (-R, R)")));
    }
    if x3 == y3 {
        return Err(Error::Singular {
            op,
            detail: format!("diagonal x3 = y3 = {x3} (logarithmic divergence)"),
        });
    }
    Ok(())
}

/// `eta(x) - eta(y)` without cancellation.
fn eta_diff(r: f64, x: f64, y: f64, ex: f64, ey: f64) -> f64 {
    if ex + ey == 0.0 {
        return 0.0;
    }
    (y - x) * (y + x) / (r * r * (ex + ey))
}

/// The reduced prolate kernel
/// `H_R(x3, y3) = (1/2pi) int_0^pi [1 - x3 y3/R^2 - eta_x eta_y cos th]
///   / [eta_x^2 + eta_y^2 - 2 eta_x eta_y cos th + (x3 - y3)^2]^{3/2} dth`
/// by adaptive quadrature. It already carries the surface measure, so it
/// acts on functions of `y3` against plain `dy3`.
pub fn h_kernel(r: f64, x3: f64, y3: f64) -> Result<f64> {
    check_prolate("h_kernel", r, x3, y3)?;
    let p = ProlateProfile { r };
    let (ex, ey) = (p.eta(x3), p.eta(y3));
    let de = eta_diff(r, x3, y3, ex, ey);
    let d = x3 - y3;
    // 1 - x y / R^2 - ex ey = ((ex - ey)^2 + (x - y)^2 / R^2) / 2
    let base = 0.5 * (de * de + d * d / (r * r));
    let gap = de * de + d * d;
    let exy = ex * ey;
    let width = if exy > 0.0 { (gap / exy).sqrt() } else { 1.0 };
    let v = theta_integral(
        |_, h| {
            let h2 = h * h;
            (base + 2.0 * exy * h2) / (gap + 4.0 * exy * h2).powf(1.5)
        },
        width,
        THETA_TOL,
    )?;
    Ok(v / (2.0 * PI))
}

/// `H_R` in closed form:
/// `[K(k) - (1 - R^-2)(x - y)^2 E(k) / (C - D)] / (2 pi sqrt(C + D))`
/// with `C -+ D = (eta_x -+ eta_y)^2 + (x - y)^2` and `k^2 = 2D / (C + D)`.
pub fn h_kernel_closed(r: f64, x3: f64, y3: f64) -> Result<f64> {
    check_prolate("h_kernel_closed", r, x3, y3)?;
    let p = ProlateProfile { r };
    let (ex, ey) = (p.eta(x3), p.eta(y3));
    let de = eta_diff(r, x3, y3, ex, ey);
    let d2 = (x3 - y3) * (x3 - y3);
    Ok(h_closed_parts(r, de * de + d2, (ex + ey) * (ex + ey) + d2, d2))
}

fn h_closed_parts(r: f64, cmd: f64, cpd: f64, d2: f64) -> f64 {
    let (k, e) = elliptic_ke(cmd / cpd).expect("0 < k'^2 <= 1");
    let s = (1.0 - 1.0 / (r * r)) * d2 / cmd;
    (k - s * e) / (2.0 * PI * cpd.sqrt())
}

/// Kernel of the axisymmetric prolate operator in the meridian angle:
/// with `x3 = R cos u`, returns `H_R(R cos u, R cos v) R sin v`, the
/// kernel against `dv`.
pub fn prolate_meridian_kernel(r: f64, u: f64, v: f64) -> f64 {
    let sd = (0.5 * (u - v)).sin();
    let (ss, cs) = (0.5 * (u + v)).sin_cos();
    // x - y = -2 R sin((u+v)/2) sin((u-v)/2), eta_x - eta_y = 2 cos((u+v)/2) sin((u-v)/2)
    let d2 = 4.0 * r * r * ss * ss * sd * sd;
    let cmd = 4.0 * sd * sd * (cs * cs + r * r * ss * ss);
    let es = u.sin() + v.sin();
    let cpd = es * es + d2;
    h_closed_parts(r, cmd, cpd, d2) * r * v.sin()
}

/// Surface density `dS = prolate_measure(R, t) dphi dt`.
pub fn prolate_measure(r: f64, t: f64) -> Result<f64> {
    if !(t.abs() < r) {
        return Err(domain("prolate_measure", format!("need |t| < R, got t = {t}, R = {r}")));
    }
    let q = t * t / (r * r);
    Ok((1.0 - q + q / (r * r)).sqrt())
}

/// Oblate spheroid with semi-axes `(a R, a R, 1)`, written as two sheets
/// `x3 = +-gamma(x)` over the disk of radius `a R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OblateSpheroid {
    pub a: f64,
    pub r: f64,
}

impl OblateSpheroid {
    pub fn new(r: f64, a: f64) -> Result<Self> {
        if !(r > 0.0 && a > 0.0) {
            return Err(domain("OblateSpheroid", format!("need R, a > 0, got R = {r}, a = {a}")));
        }
        Ok(OblateSpheroid { a, r })
    }

    /// Radius `a R` of the projected disk.
    pub fn rim(&self) -> f64 {
        self.a * self.r
    }

    pub fn gamma(&self, x: [f64; 2]) -> f64 {
        let ar = self.rim();
        let q = (x[0] * x[0] + x[1] * x[1]) / (ar * ar);
        (1.0 - q).max(0.0).sqrt()
    }
}

fn oblate_pair(op: &'static str, o: &OblateSpheroid, x: [f64; 2], y: [f64; 2]) -> Result<(f64, f64)> {
    let (gx, gy) = (o.gamma(x), o.gamma(y));
    let ar = o.rim();
    if x[0].hypot(x[1]) > ar {
        return Err(domain(op, format!("x = {x:?} outside the disk of radius {ar}")));
    }
    if !(gy > 0.0) {
        return Err(Error::Singular {
            op,
            detail: format!("gamma(y) = 0 at y = {y:?}: the planar weight is singular on the rim"),
        });
    }
    Ok((gx, gy))
}

/// Same-sheet kernel `K_R^1(x, y)` against `dy`.
pub fn oblate_k1(r: f64, a: f64, x: [f64; 2], y: [f64; 2]) -> Result<f64> {
    let o = OblateSpheroid::new(r, a)?;
    let (gx, gy) = oblate_pair("oblate_k1", &o, x, y)?;
    if x == y {
        return Err(Error::Singular {
            op: "oblate_k1",
            detail: "diagonal x = y".into(),
        });
    }
    let dx = [x[0] - y[0], x[1] - y[1]];
    let tilt = (dx[0] * y[0] + dx[1] * y[1]) / (r * r * a * a * gy);
    let dg = gx - gy;
    let den = (dx[0] * dx[0] + dx[1] * dx[1] + dg * dg).powf(1.5);
    Ok(-(tilt + dg) / (4.0 * PI * den))
}

/// Cross-sheet kernel `K_R^2(x, y)` against `dy`.
pub fn oblate_k2(r: f64, a: f64, x: [f64; 2], y: [f64; 2]) -> Result<f64> {
    let o = OblateSpheroid::new(r, a)?;
    let (gx, gy) = oblate_pair("oblate_k2", &o, x, y)?;
    let dx = [x[0] - y[0], x[1] - y[1]];
    let tilt = (dx[0] * y[0] + dx[1] * y[1]) / (r * r * a * a * gy);
    let sg = gx + gy;
    let den = (dx[0] * dx[0] + dx[1] * dx[1] + sg * sg).powf(1.5);
    Ok(-(tilt - sg) / (4.0 * PI * den))
}

/// Surface weight `dS = omega_R(x) dx` of either sheet.
pub fn omega_weight(r: f64, a: f64, x: [f64; 2]) -> Result<f64> {
    let o = OblateSpheroid::new(r, a)?;
    let g = o.gamma(x);
    if !(g > 0.0) {
        return Err(Error::Singular {
            op: "omega_weight",
            detail: format!("x = {x:?} on or outside the rim: infinite weight"),
        });
    }
    let ar4 = o.rim().powi(4);
    Ok((x[0] * x[0] / ar4 + x[1] * x[1] / ar4 + g * g).sqrt() / g)
}

/// Which sheet the source sits on relative to the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sheet {
    Same,
    Opposite,
}

/// `s int_0^{2pi} K_R^j((r, 0), (s cos al, s sin al)) cos(m al) dal`, the
/// kernel (against `ds`) of the disk operator on densities `f(s) e^{i m phi}`.
pub fn oblate_radial_kernel(rr: f64, a: f64, m: u32, sheet: Sheet, r: f64, s: f64) -> Result<f64> {
    let o = OblateSpheroid::new(rr, a)?;
    let ar = o.rim();
    if !(r >= 0.0 && r < ar && s >= 0.0 && s < ar) {
        return Err(domain(
            "oblate_radial_kernel",
            format!("radii ({r}, {s}) outside [0, {ar})"),
        ));
    }
    if sheet == Sheet::Same && r == s {
        return Err(Error::Singular {
            op: "oblate_radial_kernel",
            detail: format!("same-sheet diagonal r = s = {r}; use product integration"),
        });
    }
    let (gr, gs) = (o.gamma([r, 0.0]), o.gamma([s, 0.0]));
    let dg = match sheet {
        Sheet::Same => gr - gs,
        Sheet::Opposite => gr + gs,
    };
    let sign = match sheet {
        Sheet::Same => 1.0,
        Sheet::Opposite => -1.0,
    };
    let c = 1.0 / (rr * rr * a * a * gs);
    let gap = (r - s) * (r - s) + dg * dg;
    let width = if r * s > 0.0 { (gap / (r * s)).sqrt() } else { 1.0 };
    let mf = f64::from(m);
    let f = |al: f64| {
        let h = (0.5 * al).sin();
        let h2 = h * h;
        // (x - y).y = r s cos(al) - s^2
        let tilt = c * (r * s * (1.0 - 2.0 * h2) - s * s);
        let den = (gap + 4.0 * r * s * h2).powf(1.5);
        -(tilt + sign * dg) / (4.0 * PI * den) * (mf * al).cos()
    };
    let cap = if m > 0 { (4.0 / mf).min(PI) } else { PI };
    let mut breaks = geometric_breaks(0.0, cap, width.min(cap));
    let mut x = cap;
    while x < PI {
        x = (x + cap).min(PI);
        breaks.push(x);
    }
    let v = integrate_breaks(f, &breaks, Tolerance { abs: 1e-12, rel: 1e-12 })?;
    Ok(2.0 * s * v)
}

const ALPHA_ORDER: usize = 16;

/// Azimuthal mode kernels of the oblate spheroid in the meridian angle.
///
/// The surface is `(aR sin u cos phi, aR sin u sin phi, cos u)` with
/// `u in (0, pi)`; `u < pi/2` is the upper sheet. For target `u` and
/// source `v`, `k_m(u, v)` is the kernel against `dv` of the NP operator
/// restricted to densities `f(v) e^{i m phi}`.
#[derive(Debug, Clone, Copy)]
pub struct OblateMeridian {
    pub ar: f64,
}

impl OblateMeridian {
    pub fn new(o: &OblateSpheroid) -> Self {
        OblateMeridian { ar: o.rim() }
    }

    /// Writes `k_m(u, v)` for `m = 0..out.len()` into `out`.
    pub fn mode_kernels(&self, u: f64, v: f64, out: &mut [f64]) {
        let ar = self.ar;
        let su = u.sin();
        let sv = v.sin();
        let (r, s) = (ar * su, ar * sv);
        // cos u - cos v and sin u - sin v via half angles
        let sd = (0.5 * (u - v)).sin();
        let (sh, ch) = (0.5 * (u + v)).sin_cos();
        let dz = -2.0 * sh * sd;
        let dr = ar * 2.0 * ch * sd;
        let gap = dr * dr + dz * dz;
        let rs = r * s;
        // numerator: sin v [ s (s - r cos al) + (aR)^2 cos v (cos v - cos u) ]
        //          = sin v [ s (s - r) + 2 r s h^2 - (aR)^2 cv dz ],
        // and s (r - s) + (aR)^2 cv dz collapses to -2 (aR sd)^2.
        let n0 = 2.0 * sv * (ar * sd) * (ar * sd);
        let n1 = sv * 2.0 * rs;
        let m_max = out.len().saturating_sub(1);
        out.iter_mut().for_each(|o| *o = 0.0);
        let cap = if m_max > 0 { (8.0 / m_max as f64).min(0.5 * PI) } else { 0.5 * PI };
        let w = if rs > 0.0 { (gap / rs).sqrt() } else { cap };
        let rule = gauss_legendre(ALPHA_ORDER);
        let piece = |a: f64, b: f64, out: &mut [f64]| {
            for (al, wt) in rule.mapped(a, b) {
                let h = (0.5 * al).sin();
                let h2 = h * h;
                let den = gap + 4.0 * rs * h2;
                let val = wt * (n0 + n1 * h2) / (den * den.sqrt());
                let c1 = al.cos();
                let (mut cm1, mut c) = (c1, 1.0);
                for o in out.iter_mut() {
                    *o += val * c;
                    let next = 2.0 * c1 * c - cm1;
                    cm1 = c;
                    c = next;
                }
            }
        };
        let mut lo = 0.0;
        if w < cap {
            let mut hi = w;
            while hi < cap {
                piece(lo, hi, out);
                lo = hi;
                hi *= 2.0;
            }
        }
        while lo < PI {
            let hi = (lo + cap).min(PI);
            piece(lo, hi, out);
            lo = hi;
        }
        // 2 int_0^pi (1/4pi) ... cos(m al) dal
        out.iter_mut().for_each(|o| *o /= 2.0 * PI);
    }

    /// `ds/dv` on the meridian: converts planar densities against `ds`
    /// (upper sheet) to meridian densities against `dv`.
    pub fn radial_jacobian(&self, v: f64) -> f64 {
        self.ar * v.cos()
    }
}

/// Flat domain: two unit-spaced sheets `x3 = +-1` over the disk of radius
/// `R`, joined by a cylindrical side wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatDomain {
    pub r: f64,
}

/// `((1/2) P_2 * phi^-, (1/2) P_2 * phi^+)`: the sheet-to-sheet part of the
/// flat NP operator evaluated on the upper and lower sheet. Each sheet sees
/// the density of the opposite one; the same-sheet part vanishes for flat
/// sheets. Convolutions are done by FFT with multiplier `exp(-4 pi |xi|)`.
pub fn flat_sheet_apply(
    phi_plus: &PlanarField,
    phi_minus: &PlanarField,
) -> Result<(PlanarField, PlanarField)> {
    if phi_plus.grid != phi_minus.grid {
        return Err(domain("flat_sheet_apply", "sheet densities on different grids"));
    }
    for f in [phi_plus, phi_minus] {
        f.check_support("flat_sheet_apply")?;
    }
    let mult = |k: f64| 0.5 * (-4.0 * PI * k).exp();
    let upper = phi_minus.apply_radial_multiplier(mult);
    let lower = phi_plus.apply_radial_multiplier(mult);
    Ok((upper, lower))
}

/// Evaluate a planar field (e.g. a sheet density) at a point by summation
/// against a kernel; used for side-wall terms.
pub(crate) fn planar_sum(f: &PlanarField, mut k: impl FnMut([f64; 2]) -> f64) -> Complex64 {
    let n = f.grid.n;
    let h2 = f.grid.h * f.grid.h;
    let mut acc = Complex64::new(0.0, 0.0);
    for iy in 0..n {
        let y = f.grid.coord(iy);
        for ix in 0..n {
            let v = f.data[iy * n + ix];
            if v.re == 0.0 && v.im == 0.0 {
                continue;
            }
            acc += v * k([f.grid.coord(ix), y]);
        }
    }
    acc * h2
}

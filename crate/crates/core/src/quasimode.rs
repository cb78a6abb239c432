//! Approximate eigenfunctions concentrated at a single frequency and the
//! norms of their NP residuals on long prolate, flat oblate and thin flat
//! domains.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels::{h_kernel_closed, planar_sum, prolate_measure, OblateMeridian, OblateSpheroid};
use crate::limit::{l0_hat, solve_xi0_flat, solve_xi0_prolate};
use crate::planar::{PlanarField, PlanarGrid};
use crate::quadrature::{gauss_legendre, graded_breakpoints, integrate, PanelGrid, Tolerance};
use crate::spectra::{product_weights, PANEL_ORDER};
use crate::specfun::bessel_j0;
use crate::types::Family;

/// `exp(-1/(1 - q^2))` on `|q| < 1`, zero outside.
fn bump(q: f64) -> f64 {
    let t = (1.0 - q) * (1.0 + q);
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// Cutoff equal to 1 on `|x| <= 1/2` and 0 on `|x| >= 1`.
pub fn chi(r: f64) -> f64 {
    1.0 - smooth_step(2.0 * r.abs() - 1.0)
}

const CHEB_N: usize = 64;
const PROFILE_TOL: Tolerance = Tolerance {
    abs: 1e-17,
    rel: 1e-15,
};

/// The pair `(chi, zeta)` in dimension 1 or 2. `zeta` is radial with
/// Fourier transform `c exp(-1/(1 - |xi|^2))` of unit mass; it is entire
/// and stored as a Chebyshev series on `[-1, 1]`, which covers the support
/// of `chi`.
#[derive(Debug, Clone)]
pub struct ProfilePair {
    pub dim: usize,
    /// Normalization `c` of the bump.
    pub norm: f64,
    cheb: Vec<f64>,
}

impl ProfilePair {
    fn compute(dim: usize) -> Result<Self> {
        let mass = match dim {
            1 => 2.0 * integrate(bump, 0.0, 1.0, PROFILE_TOL)?,
            _ => 2.0 * PI * integrate(|q| bump(q) * q, 0.0, 1.0, PROFILE_TOL)?,
        };
        let norm = 1.0 / mass;
        let zeta = |x: f64| -> Result<f64> {
            Ok(match dim {
                1 => 2.0 * norm * integrate(|q| bump(q) * (2.0 * PI * x * q).cos(), 0.0, 1.0, PROFILE_TOL)?,
                _ => {
                    2.0 * PI
                        * norm
                        * integrate(|q| bump(q) * bessel_j0(2.0 * PI * x * q) * q, 0.0, 1.0, PROFILE_TOL)?
                }
            })
        };
        let n = CHEB_N;
        let vals: Vec<f64> = (0..n)
            .map(|k| zeta((PI * (k as f64 + 0.5) / n as f64).cos()))
            .collect::<Result<_>>()?;
        let cheb = (0..n)
            .map(|j| {
                2.0 / n as f64
                    * vals
                        .iter()
                        .enumerate()
                        .map(|(k, v)| v * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                        .sum::<f64>()
            })
            .collect();
        Ok(ProfilePair { dim, norm, cheb })
    }

    /// `zeta^(q)` for `q = |xi|`.
    pub fn zeta_hat(&self, q: f64) -> f64 {
        self.norm * bump(q)
    }

    /// `zeta(r)` for `r = |x| <= 1`.
    pub fn zeta(&self, r: f64) -> f64 {
        let x = r.abs().min(1.0);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.cheb.iter().skip(1).rev() {
            let b = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b;
        }
        x * b1 - b2 + 0.5 * self.cheb[0]
    }

    pub fn chi(&self, r: f64) -> f64 {
        chi(r)
    }

    /// `(chi zeta)(r)`, zero for `r >= 1`.
    pub fn chi_zeta(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= 1.0 {
            0.0
        } else {
            chi(r) * self.zeta(r)
        }
    }

    /// One-dimensional transform of `chi zeta` (requires `dim == 1`).
    pub fn chi_zeta_hat(&self, eta: f64) -> f64 {
        debug_assert_eq!(self.dim, 1);
        let rule = gauss_legendre(PANEL_ORDER);
        let panels = 64;
        let mut s = 0.0;
        for p in 0..panels {
            let a = p as f64 / panels as f64;
            let b = (p + 1) as f64 / panels as f64;
            s += rule.integrate(a, b, |x| self.chi_zeta(x) * (2.0 * PI * eta * x).cos());
        }
        2.0 * s
    }
}

/// Profiles in dimension 1 (needles) or 2 (sheets), computed once.
pub fn build_profiles(dim: usize) -> Result<&'static ProfilePair> {
    static LINE: OnceLock<ProfilePair> = OnceLock::new();
    static PLANE: OnceLock<ProfilePair> = OnceLock::new();
    let cell = match dim {
        1 => &LINE,
        2 => &PLANE,
        _ => return Err(domain("build_profiles", format!("dimension must be 1 or 2, got {dim}"))),
    };
    if let Some(p) = cell.get() {
        return Ok(p);
    }
    let p = ProfilePair::compute(dim)?;
    Ok(cell.get_or_init(|| p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiModeSpec {
    pub family: Family,
    pub lambda: f64,
    /// Frequency, along the first axis for planar families.
    pub xi0: f64,
    pub sigma: f64,
}

impl QuasiModeSpec {
    pub fn new(family: Family, lambda: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(domain("QuasiModeSpec", format!("need sigma in (0, 1), got {sigma}")));
        }
        let xi0 = match family {
            Family::Prolate => {
                if !(lambda > 0.0 && lambda <= 0.5) {
                    return Err(domain(
                        "QuasiModeSpec",
                        format!("prolate targets need lambda in (0, 1/2], got {lambda}"),
                    ));
                }
                let x = solve_xi0_prolate(lambda)?;
                if x.capped {
                    return Err(Error::Range {
                        op: "QuasiModeSpec",
                        target: lambda,
                        lo: l0_hat(x.xi0),
                        hi: 0.5,
                    });
                }
                x.xi0
            }
            Family::Oblate | Family::Flat => {
                if !(lambda != 0.0 && lambda.abs() <= 0.5) {
                    return Err(domain(
                        "QuasiModeSpec",
                        format!("need lambda in [-1/2, 0) or (0, 1/2], got {lambda}"),
                    ));
                }
                solve_xi0_flat(lambda.abs())?
            }
        };
        Ok(QuasiModeSpec {
            family,
            lambda,
            xi0,
            sigma,
        })
    }

    /// Envelope width `rho = R^{1 - sigma}`.
    pub fn rho(&self, r: f64) -> f64 {
        r.powf(1.0 - self.sigma)
    }

    /// Sign relating the lower-sheet density to the upper one.
    pub fn sheet_sign(&self) -> f64 {
        if self.lambda > 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiOptions {
    /// Upper bound on panel length in physical units.
    pub panel_len: f64,
    pub max_nodes: usize,
    /// Limit on `kernel evaluations x modes` for the oblate residual.
    pub pair_budget: f64,
    /// Oblate in-plane stretch.
    pub a: f64,
    /// FFT grid size for flat residuals; chosen from `rho` and `xi0` when absent.
    pub flat_grid: Option<usize>,
    pub wall_z: usize,
    pub wall_psi: usize,
}

impl Default for QuasiOptions {
    fn default() -> Self {
        QuasiOptions {
            panel_len: 0.5,
            max_nodes: 200_000,
            pair_budget: 2e8,
            a: 1.0,
            flat_grid: None,
            wall_z: 8,
            wall_psi: 256,
        }
    }
}

/// Complex samples on a composite Gauss grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFunction {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl LineFunction {
    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v.norm_sqr() * w)
            .sum::<f64>()
            .sqrt()
    }
}

fn uniform_breaks(a: f64, b: f64, h: f64, out: &mut Vec<f64>) {
    let n = ((b - a) / h).ceil().max(1.0) as usize;
    if out.last() != Some(&a) {
        out.push(a);
    }
    for k in 1..=n {
        out.push(if k == n { b } else { a + (b - a) * k as f64 / n as f64 });
    }
}

fn line_panel_len(spec: &QuasiModeSpec, opts: &QuasiOptions) -> f64 {
    // at least 20 nodes per period
    if spec.xi0 > 0.0 {
        opts.panel_len.min(0.8 / spec.xi0)
    } else {
        opts.panel_len
    }
}

fn g_value(p: &ProfilePair, spec: &QuasiModeSpec, rho: f64, x: f64) -> Complex64 {
    Complex64::from_polar(p.chi_zeta(x / rho) / rho.sqrt(), 2.0 * PI * spec.xi0 * x)
}

/// `g_rho(x) = rho^{-1/2} e^{2 pi i xi0 x} (chi zeta)(x / rho)` on `(-rho, rho)`.
pub fn build_g_rho(spec: &QuasiModeSpec, r: f64, opts: &QuasiOptions) -> Result<LineFunction> {
    let p = build_profiles(1)?;
    let rho = spec.rho(r);
    let mut breaks = Vec::new();
    uniform_breaks(-rho, rho, line_panel_len(spec, opts), &mut breaks);
    let n = (breaks.len() - 1) * PANEL_ORDER;
    if n > opts.max_nodes {
        return Err(Error::Resolution {
            op: "build_g_rho",
            detail: format!("{n} nodes needed, budget {}", opts.max_nodes),
        });
    }
    let grid = PanelGrid::new(&breaks, n);
    let values = grid.nodes.iter().map(|&x| g_value(p, spec, rho, x)).collect();
    Ok(LineFunction {
        nodes: grid.nodes,
        weights: grid.weights,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProlateResidual {
    pub r: f64,
    pub rho: f64,
    /// `||lambda g - H_R g|| / ||g||` with surface weight on `(-2 rho, 2 rho)`.
    pub residual: f64,
    /// `||lambda g - L_0 * g|| / ||g||`, from the symbol.
    pub limit_residual: f64,
    pub nodes: usize,
}

/// NP residual of the axisymmetric quasi-mode `g_rho` on the needle of
/// aspect ratio `R`.
pub fn residual_prolate(spec: &QuasiModeSpec, r: f64, opts: &QuasiOptions) -> Result<ProlateResidual> {
    if spec.family != Family::Prolate {
        return Err(domain("residual_prolate", "spec is not for the prolate family"));
    }
    let rho = spec.rho(r);
    if !(2.0 * rho < r) {
        return Err(domain("residual_prolate", format!("need 2 rho < R, got rho = {rho}, R = {r}")));
    }
    let p = build_profiles(1)?;
    let h = line_panel_len(spec, opts);
    let mut breaks = Vec::new();
    uniform_breaks(-2.0 * rho, -rho, h, &mut breaks);
    uniform_breaks(-rho, rho, h, &mut breaks);
    uniform_breaks(rho, 2.0 * rho, h, &mut breaks);
    let n = (breaks.len() - 1) * PANEL_ORDER;
    if n > opts.max_nodes {
        return Err(Error::Resolution {
            op: "residual_prolate",
            detail: format!("{n} nodes needed, budget {}", opts.max_nodes),
        });
    }
    let grid = PanelGrid::new(&breaks, n);
    let g: Vec<Complex64> = grid.nodes.iter().map(|&x| g_value(p, spec, rho, x)).collect();
    let src: Vec<usize> = (0..grid.panels.len())
        .filter(|&k| grid.panels[k].a >= -rho * (1.0 + 1e-12) && grid.panels[k].b <= rho * (1.0 + 1e-12))
        .collect();
    let kernel = |x: f64, y: f64, out: &mut [f64]| {
        out[0] = h_kernel_closed(r, x, y).expect("distinct interior points");
    };
    let hg: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = grid.nodes[i];
            let mut acc = Complex64::new(0.0, 0.0);
            let mut pw = vec![vec![0.0; PANEL_ORDER]];
            for &k in &src {
                let panel = &grid.panels[k];
                if panel.distance_to(x) < panel.len() {
                    pw[0].resize(panel.order, 0.0);
                    product_weights(&grid, k, x, &[x], &kernel, &mut pw);
                    for (j, w) in panel.range().zip(&pw[0]) {
                        acc += g[j] * *w;
                    }
                } else {
                    for j in panel.range() {
                        acc += g[j] * (h_kernel_closed(r, x, grid.nodes[j]).expect("distinct") * grid.weights[j]);
                    }
                }
            }
            acc
        })
        .collect();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let w = grid.weights[i] * prolate_measure(r, grid.nodes[i])?;
        num += w * (g[i] * spec.lambda - hg[i]).norm_sqr();
        den += w * g[i].norm_sqr();
    }
    Ok(ProlateResidual {
        r,
        rho,
        residual: (num / den).sqrt(),
        limit_residual: limit_residual_prolate(spec, rho)?,
        nodes: n,
    })
}

/// Half-width of the frequency window (in units of `1/rho`) used for
/// transforms of `chi zeta`; the transform is below 1e-9 of its peak beyond.
const ETA_MAX: f64 = 24.0;

/// `||lambda g_rho - L_0 * g_rho||_2 / ||g_rho||_2`, evaluated on the
/// Fourier side where convolution by `L_0` is multiplication by `l0_hat`.
pub fn limit_residual_prolate(spec: &QuasiModeSpec, rho: f64) -> Result<f64> {
    let p = build_profiles(1)?;
    let rule = gauss_legendre(PANEL_ORDER);
    let panels = (4.0 * ETA_MAX) as usize;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..panels {
        let a = -ETA_MAX + 2.0 * ETA_MAX * k as f64 / panels as f64;
        let b = a + 2.0 * ETA_MAX / panels as f64;
        for (eta, w) in rule.mapped(a, b) {
            let t = p.chi_zeta_hat(eta);
            let t2 = t * t * w;
            let d = spec.lambda - l0_hat(spec.xi0 + eta / rho);
            num += d * d * t2;
            den += t2;
        }
    }
    Ok((num / den).sqrt())
}

/// Fraction of `|g_rho^|^2` within `|xi - xi0| <= c / rho`.
pub fn fourier_concentration(c: f64) -> Result<f64> {
    let p = build_profiles(1)?;
    let rule = gauss_legendre(PANEL_ORDER);
    let mass = |lo: f64, hi: f64, panels: usize| {
        (0..panels)
            .map(|k| {
                let a = lo + (hi - lo) * k as f64 / panels as f64;
                let b = lo + (hi - lo) * (k + 1) as f64 / panels as f64;
                rule.integrate(a, b, |e| p.chi_zeta_hat(e).powi(2))
            })
            .sum::<f64>()
    };
    let total = 2.0 * mass(0.0, ETA_MAX, 2 * ETA_MAX as usize);
    Ok(2.0 * mass(0.0, c, (2.0 * c).ceil() as usize + 1) / total)
}

/// `f_rho(x) = rho^{-1} e^{2 pi i xi0 x_1} (chi zeta)(x / rho)` on a planar grid.
pub fn build_f_rho(spec: &QuasiModeSpec, r: f64, grid: PlanarGrid) -> Result<PlanarField> {
    let p = build_profiles(2)?;
    let rho = spec.rho(r);
    let reach = 0.5 * grid.side() - 2.0 * grid.h;
    if rho > reach {
        return Err(domain(
            "build_f_rho",
            format!("support radius {rho} does not fit in the grid (reach {reach})"),
        ));
    }
    Ok(PlanarField::from_fn(grid, |x| {
        let env = p.chi_zeta(x[0].hypot(x[1]) / rho) / rho;
        Complex64::from_polar(env, 2.0 * PI * spec.xi0 * x[0])
    }))
}

/// `(phi^+, phi^-) = (f_rho, +-f_rho)`, the sign following the sign of lambda.
pub fn build_phi_rho(spec: &QuasiModeSpec, r: f64, grid: PlanarGrid) -> Result<(PlanarField, PlanarField)> {
    let f = build_f_rho(spec, r, grid)?;
    let g = f.scaled(spec.sheet_sign());
    Ok((f, g))
}

/// `||(1 + |xi|^2)^{1/4} f^||_2`.
pub fn h_half_norm(f: &PlanarField) -> Result<f64> {
    f.check_support("h_half_norm")?;
    Ok(f.multiplier_norm(|k| (1.0 + k * k).powf(0.25)))
}

/// `||f||^2 + 8 pi^2 int |xi| |f^|^2`: the Gagliardo form written on the
/// Fourier side.
pub fn gagliardo_fourier_norm_sq(f: &PlanarField) -> f64 {
    f.multiplier_norm(|k| (1.0 + 8.0 * PI * PI * k).sqrt()).powi(2)
}

/// `||f||^2 + int int |f(x) - f(y)|^2 / |x - y|^3 dx dy` by direct
/// summation over grid pairs, with the missing diagonal cells and the
/// exterior of the grid box added analytically. Quadratic cost; meant for
/// small grids.
pub fn gagliardo_norm_sq(f: &PlanarField) -> f64 {
    let g = f.grid;
    let n = g.n;
    let h = g.h;
    let pts: Vec<([f64; 2], Complex64)> = (0..n * n)
        .map(|k| ([g.coord(k % n), g.coord(k / n)], f.data[k]))
        .collect();
    let mut pair = 0.0;
    for (i, (x, fx)) in pts.iter().enumerate() {
        for (y, fy) in &pts[i + 1..] {
            let d = (x[0] - y[0]).hypot(x[1] - y[1]);
            pair += 2.0 * (fx - fy).norm_sqr() / (d * d * d);
        }
    }
    pair *= h.powi(4);
    // self cells: |grad f|^2 / 2 * int_cell 1/|d| dd
    let cell = 2.0 * h * (1.0 + 2f64.sqrt()).ln();
    let at = |ix: usize, iy: usize| f.data[iy * n + ix];
    let mut selfc = 0.0;
    for iy in 1..n - 1 {
        for ix in 1..n - 1 {
            let dx = (at(ix + 1, iy) - at(ix - 1, iy)) / (2.0 * h);
            let dy = (at(ix, iy + 1) - at(ix, iy - 1)) / (2.0 * h);
            selfc += (dx.norm_sqr() + dy.norm_sqr()) * cell;
        }
    }
    selfc *= h * h;
    // pairs with one point outside the box
    let lo = g.coord(0) - 0.5 * h;
    let hi = g.coord(n - 1) + 0.5 * h;
    let nt = 2048;
    let mut ext = 0.0;
    for (x, fx) in &pts {
        let v = fx.norm_sqr();
        if v == 0.0 {
            continue;
        }
        let mut s = 0.0;
        for k in 0..nt {
            let (sn, cs) = (2.0 * PI * (k as f64 + 0.5) / nt as f64).sin_cos();
            let tx = if cs > 0.0 { (hi - x[0]) / cs } else { (lo - x[0]) / cs };
            let ty = if sn > 0.0 { (hi - x[1]) / sn } else { (lo - x[1]) / sn };
            s += 1.0 / tx.min(ty);
        }
        ext += 2.0 * v * s * 2.0 * PI / nt as f64;
    }
    ext *= h * h;
    f.l2_norm().powi(2) + pair + selfc + ext
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(domain("loglog_slope", "need at least two points with positive coordinates"));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatResidual {
    pub r: f64,
    pub rho: f64,
    /// `||lambda phi - (1/2) P_2 * phi||_{H^1/2} / ||phi||_{H^1/2}` on the sheets.
    pub sheet: f64,
    /// `||K phi||_{L^2(side wall)} / ||phi||_{H^1/2}`.
    pub sidewall: f64,
    pub f_h_half: f64,
    pub grid: usize,
}

/// Smallest power of two at least `x`.
fn pow2_at_least(x: f64) -> usize {
    (x.max(2.0).ceil() as usize).next_power_of_two()
}

/// Residual of `phi_rho` on the flat domain with sheets `x3 = +-1` over the
/// disk of radius `R` and a cylindrical side wall.
pub fn residual_flat(spec: &QuasiModeSpec, r: f64, opts: &QuasiOptions) -> Result<FlatResidual> {
    if spec.family != Family::Flat {
        return Err(domain("residual_flat", "spec is not for the flat family"));
    }
    let rho = spec.rho(r);
    if !(2.0 * rho < r) {
        return Err(domain("residual_flat", format!("need 2 rho < R, got rho = {rho}, R = {r}")));
    }
    let side = 4.0 * rho;
    let need = spec.xi0 + 6.0 / rho;
    let n = opts
        .flat_grid
        .unwrap_or_else(|| pow2_at_least(4.0 * side * need).max(256));
    let grid = PlanarGrid::covering(side, n);
    if grid.nyquist() < need {
        return Err(Error::Aliasing {
            op: "residual_flat",
            detail: format!("Nyquist {:.4} below xi0 + 6/rho = {need:.4}; use a finer grid", grid.nyquist()),
        });
    }
    let (plus, minus) = build_phi_rho(spec, r, grid)?;
    let (upper, _) = crate::kernels::flat_sheet_apply(&plus, &minus)?;
    let res = PlanarField {
        grid,
        data: plus.data.iter().zip(&upper.data).map(|(f, k)| f * spec.lambda - k).collect(),
    };
    let fh = h_half_norm(&plus)?;
    let sheet = res.multiplier_norm(|k| (1.0 + k * k).powf(0.25)) / fh;

    // side wall x = R e_psi, z in [-1, 1]
    let zr = gauss_legendre(opts.wall_z);
    let sg = spec.sheet_sign();
    let npsi = opts.wall_psi;
    let wall: f64 = (0..npsi)
        .into_par_iter()
        .map(|b| {
            let (sp, cp) = (2.0 * PI * b as f64 / npsi as f64).sin_cos();
            let xw = [r * cp, r * sp];
            let mut acc = 0.0;
            for (&z, &wz) in zr.nodes.iter().zip(&zr.weights) {
                let v = planar_sum(&plus, |y| {
                    let d2 = (xw[0] - y[0]).powi(2) + (xw[1] - y[1]).powi(2);
                    let up = (d2 + (z - 1.0) * (z - 1.0)).powf(1.5);
                    let dn = (d2 + (z + 1.0) * (z + 1.0)).powf(1.5);
                    ((1.0 - z) / up + sg * (1.0 + z) / dn) / (4.0 * PI)
                });
                acc += wz * v.norm_sqr();
            }
            acc * r * 2.0 * PI / npsi as f64
        })
        .sum();
    Ok(FlatResidual {
        r,
        rho,
        sheet,
        sidewall: wall.sqrt() / (2f64.sqrt() * fh),
        f_h_half: fh,
        grid: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OblateResidual {
    pub r: f64,
    pub rho: f64,
    /// `||K^1 f||_omega / ||f||_omega`.
    pub same_sheet: f64,
    /// `|| |lambda| f - K^2 f||_omega / ||f||_omega`.
    pub cross_sheet: f64,
    /// `same_sheet + cross_sheet`, bounding the full relative residual.
    pub residual: f64,
    pub modes: usize,
    pub pairs: f64,
}

/// Meridian panels for the oblate residual: uniform in `s` up to `2 rho`,
/// then geometric, then graded toward the rim.
fn oblate_residual_breaks(ar: f64, rho: f64, ds: f64) -> (Vec<f64>, usize) {
    let mut s_breaks = Vec::new();
    uniform_breaks(0.0, rho, ds, &mut s_breaks);
    let n_src = s_breaks.len() - 1;
    uniform_breaks(rho, 2.0 * rho, ds, &mut s_breaks);
    let mut s = 2.0 * rho;
    let mut step = ds;
    while s + 1.5 * step < 0.9 * ar {
        step *= 1.5;
        s += step;
        s_breaks.push(s);
    }
    let mut u: Vec<f64> = s_breaks.iter().map(|&s| (s / ar).asin()).collect();
    let tail = graded_breakpoints(*u.last().unwrap(), 0.5 * PI, 6, 1.0 / ar, (false, true));
    u.extend(tail.into_iter().skip(1));
    (u, n_src)
}

/// Bound on the relative NP residual of `(f_rho, +-f_rho)` on the oblate
/// spheroid `(aR, aR, 1)`, by azimuthal modes.
pub fn residual_oblate(spec: &QuasiModeSpec, r: f64, opts: &QuasiOptions) -> Result<OblateResidual> {
    if spec.family != Family::Oblate {
        return Err(domain("residual_oblate", "spec is not for the oblate family"));
    }
    let shape = OblateSpheroid::new(r, opts.a)?;
    let ar = shape.rim();
    let rho = spec.rho(r);
    if !(2.0 * rho < ar) {
        return Err(domain("residual_oblate", format!("need 2 rho < aR, got rho = {rho}, aR = {ar}")));
    }
    let p = build_profiles(2)?;
    let ds = if spec.xi0 > 0.0 { (0.5 / spec.xi0).min(4.0) } else { 4.0 };
    let (breaks, n_src_panels) = oblate_residual_breaks(ar, rho, ds);
    let np = breaks.len() - 1;
    let grid = PanelGrid::new(&breaks, np * PANEL_ORDER);
    let n = grid.len();
    let n_src = n_src_panels * PANEL_ORDER;

    // azimuthal coefficients of f on each source ring
    let k_ang = pow2_at_least(4.0 * (2.0 * PI * spec.xi0 * rho) + 64.0);
    let fft = FftPlanner::new().plan_fft_forward(k_ang);
    let coeffs: Vec<Vec<Complex64>> = grid.nodes[..n_src]
        .iter()
        .map(|&u| {
            let s = ar * u.sin();
            let env = p.chi_zeta(s / rho) / rho;
            let mut ring: Vec<Complex64> = (0..k_ang)
                .map(|k| {
                    let phi = 2.0 * PI * k as f64 / k_ang as f64;
                    Complex64::from_polar(env, 2.0 * PI * spec.xi0 * s * phi.cos())
                })
                .collect();
            fft.process(&mut ring);
            ring.iter_mut().for_each(|c| *c /= k_ang as f64);
            ring
        })
        .collect();
    let peak = coeffs.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
    let idx = |m: i64| m.rem_euclid(k_ang as i64) as usize;
    let mut m_max = 0usize;
    for m in 1..(k_ang / 2) as i64 {
        let big = coeffs
            .iter()
            .any(|c| c[idx(m)].norm().max(c[idx(-m)].norm()) > 1e-13 * peak);
        if big {
            m_max = m as usize;
        }
    }
    let ncomp = m_max + 1;
    let near_pts = 3.0 * 2.0 * 22.0 * 12.0;
    let pairs = n as f64 * (2.0 * n_src as f64 + near_pts) * ncomp as f64;
    if pairs > opts.pair_budget {
        return Err(Error::Budget {
            op: "residual_oblate",
            pairs: pairs as usize,
            limit: opts.pair_budget as usize,
        });
    }

    let mer = OblateMeridian::new(&shape);
    let kernel = |u: f64, v: f64, out: &mut [f64]| mer.mode_kernels(u, v, out);
    let src_panels: Vec<usize> = (0..n_src_panels).collect();
    // rows[i] = (W1, W2): ncomp x n_src weight rows for target i
    let modes: Vec<i64> = (-(m_max as i64)..=m_max as i64).collect();
    let per_target: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let u = grid.nodes[i];
            let specials = [u, -u];
            let mut w1 = vec![vec![0.0; n_src]; ncomp];
            let mut w2 = vec![vec![0.0; n_src]; ncomp];
            let mut kv = vec![0.0; ncomp];
            let mut pw: Vec<Vec<f64>> = vec![Vec::new(); ncomp];
            for &k in &src_panels {
                let panel = &grid.panels[k];
                let near = specials.iter().any(|&c| panel.distance_to(c) < panel.len());
                if near {
                    pw.iter_mut().for_each(|v| v.resize(panel.order, 0.0));
                    product_weights(&grid, k, u, &specials, &kernel, &mut pw);
                    for c in 0..ncomp {
                        w1[c][panel.range()].copy_from_slice(&pw[c]);
                    }
                } else {
                    for j in panel.range() {
                        mer.mode_kernels(u, grid.nodes[j], &mut kv);
                        for c in 0..ncomp {
                            w1[c][j] = kv[c] * grid.weights[j];
                        }
                    }
                }
                for j in panel.range() {
                    mer.mode_kernels(u, PI - grid.nodes[j], &mut kv);
                    for c in 0..ncomp {
                        w2[c][j] = kv[c] * grid.weights[j];
                    }
                }
            }
            let (sn, cs) = u.sin_cos();
            let ds_w = ar * sn * (ar * ar * cs * cs + sn * sn).sqrt() * grid.weights[i];
            let (mut a1, mut a2, mut a0) = (0.0, 0.0, 0.0);
            for &m in &modes {
                let c = m.unsigned_abs() as usize;
                let (mut k1, mut k2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                for j in 0..n_src {
                    let fj = coeffs[j][idx(m)];
                    k1 += fj * w1[c][j];
                    k2 += fj * w2[c][j];
                }
                let fi = if i < n_src { coeffs[i][idx(m)] } else { Complex64::new(0.0, 0.0) };
                a1 += k1.norm_sqr();
                a2 += (fi * spec.lambda.abs() - k2).norm_sqr();
                a0 += fi.norm_sqr();
            }
            (a1 * ds_w, a2 * ds_w, a0 * ds_w)
        })
        .collect();
    let (s1, s2, s0) = per_target
        .iter()
        .fold((0.0, 0.0, 0.0), |acc, t| (acc.0 + t.0, acc.1 + t.1, acc.2 + t.2));
    let same_sheet = (s1 / s0).sqrt();
    let cross_sheet = (s2 / s0).sqrt();
    Ok(OblateResidual {
        r,
        rho,
        same_sheet,
        cross_sheet,
        residual: same_sheet + cross_sheet,
        modes: ncomp,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn profile_constants() {
        // 30-digit quadrature of the bump normalization and transform.
        let p1 = build_profiles(1).unwrap();
        let p2 = build_profiles(2).unwrap();
        assert_relative_eq!(p1.norm, 2.252_283_621_043_581_010, max_relative = 1e-12);
        assert_relative_eq!(p2.norm, 2.143_565_775_792_236_601, max_relative = 1e-12);
        assert_relative_eq!(p1.zeta(0.3), 0.745_583_454_730_098_841, max_relative = 1e-12);
        assert_relative_eq!(p2.zeta(0.3), 0.787_132_110_748_936_933, max_relative = 1e-12);
        // unit mass of zeta^ means zeta(0) = 1
        assert!((p1.zeta(0.0) - 1.0).abs() < 1e-12);
        assert!((p2.zeta(0.0) - 1.0).abs() < 1e-12);
        assert!(build_profiles(3).is_err());
    }

    #[test]
    fn cutoff_shape() {
        for &r in &[0.0, 0.2, 0.5, -0.5] {
            assert_eq!(chi(r), 1.0);
        }
        for &r in &[1.0, 1.5, -2.0] {
            assert_eq!(chi(r), 0.0);
        }
        assert!((chi(0.75) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 0..=100 {
            let v = chi(0.5 + 0.005 * k as f64);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn spec_validation() {
        assert!(QuasiModeSpec::new(Family::Prolate, -0.3, 0.5).is_err());
        assert!(QuasiModeSpec::new(Family::Flat, 0.0, 0.5).is_err());
        assert!(QuasiModeSpec::new(Family::Flat, 0.3, 1.0).is_err());
        let s = QuasiModeSpec::new(Family::Prolate, 0.5, 0.5).unwrap();
        assert_eq!(s.xi0, 0.0);
        let s = QuasiModeSpec::new(Family::Oblate, -0.3, 0.3).unwrap();
        assert_eq!(s.sheet_sign(), -1.0);
        assert_relative_eq!(s.rho(1e3), 1e3f64.powf(0.7), max_relative = 1e-15);
    }

    #[test]
    fn loglog_fit() {
        let pts: Vec<(f64, f64)> = [1e2, 1e3, 1e4].iter().map(|&x: &f64| (x, 3.0 * x.powf(-1.3))).collect();
        assert_relative_eq!(loglog_slope(&pts).unwrap(), -1.3, max_relative = 1e-12);
        assert!(loglog_slope(&pts[..1]).is_err());
    }

    #[test]
    fn h_half_basics() {
        let g = PlanarGrid::covering(12.0, 48);
        let zero = PlanarField::zeros(g);
        assert_eq!(h_half_norm(&zero).unwrap(), 0.0);
        let f = PlanarField::from_fn(g, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0));
        assert!(h_half_norm(&f).unwrap() >= f.l2_norm());
        let wide = PlanarField::from_fn(g, |_| Complex64::new(1.0, 0.0));
        assert!(matches!(h_half_norm(&wide), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn gagliardo_oracle_on_small_grid() {
        let g = PlanarGrid::covering(8.0, 32);
        for f in [
            PlanarField::from_fn(g, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0)),
            PlanarField::from_fn(g, |x| {
                Complex64::from_polar((-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp(), 1.5 * x[0])
            }),
        ] {
            let direct = gagliardo_norm_sq(&f);
            let fourier = gagliardo_fourier_norm_sq(&f);
            assert!((direct / fourier - 1.0).abs() < 0.1, "{direct} vs {fourier}");
        }
    }

    #[test]
    fn g_norm_stable_in_rho() {
        let s = QuasiModeSpec::new(Family::Prolate, 0.3, 0.5).unwrap();
        let o = QuasiOptions::default();
        let norms: Vec<f64> = [1e2, 1e4, 1e6]
            .iter()
            .map(|&r| build_g_rho(&s, r, &o).unwrap().l2_norm())
            .collect();
        for n in &norms[1..] {
            assert!((n - norms[0]).abs() < 1e-8, "{norms:?}");
        }
        let tight = QuasiOptions { max_nodes: 100, ..o };
        assert!(matches!(build_g_rho(&s, 1e6, &tight), Err(Error::Resolution { .. })));
    }

    #[test]
    fn spectrum_concentrated_near_xi0() {
        assert!(fourier_concentration(2.0).unwrap() > 0.95);
        assert!(fourier_concentration(0.5).unwrap() < fourier_concentration(1.0).unwrap());
    }

    #[test]
    fn prolate_residual_tracks_limit_operator() {
        let s = QuasiModeSpec::new(Family::Prolate, 0.3, 0.5).unwrap();
        let res = residual_prolate(&s, 100.0, &QuasiOptions::default()).unwrap();
        assert!(res.residual < 0.1);
        assert!((res.residual - res.limit_residual).abs() < 0.1 * res.limit_residual);
        assert!(residual_prolate(&s, 3.0, &QuasiOptions::default()).is_err());
        let flat = QuasiModeSpec::new(Family::Flat, 0.3, 0.5).unwrap();
        assert!(residual_prolate(&flat, 100.0, &QuasiOptions::default()).is_err());
    }

    #[test]
    fn flat_residual_small_and_wall_negligible() {
        let s = QuasiModeSpec::new(Family::Flat, -0.3, 0.3).unwrap();
        let res = residual_flat(&s, 100.0, &QuasiOptions::default()).unwrap();
        assert!(res.sheet < 0.1, "{res:?}");
        assert!(res.sidewall < 1e-3, "{res:?}");
        let coarse = QuasiOptions {
            flat_grid: Some(16),
            ..QuasiOptions::default()
        };
        assert!(matches!(residual_flat(&s, 100.0, &coarse), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn oblate_residual_and_budget() {
        let s = QuasiModeSpec::new(Family::Oblate, 0.3, 0.5).unwrap();
        let res = residual_oblate(&s, 100.0, &QuasiOptions::default()).unwrap();
        assert!(res.residual < 0.2, "{res:?}");
        assert!(res.same_sheet < res.cross_sheet);
        let tight = QuasiOptions {
            pair_budget: 1e3,
            ..QuasiOptions::default()
        };
        assert!(matches!(residual_oblate(&s, 100.0, &tight), Err(Error::Budget { .. })));
    }
}

//! Nyström discretization of the axisymmetric prolate operator and the
//! azimuthal-mode oblate operators, dense eigensolves, and density scans.
//!
//! Both families are discretized in the meridian angle `u in (0, pi)` on a
//! composite Gauss–Legendre grid. Panels near the target (or near its mirror
//! images `-u`, `2pi - u` across the poles) are integrated against the
//! panel's Lagrange basis with a rule graded into the singularity; all other
//! panels use the plain Gauss weights.

use std::f64::consts::PI;

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels::{prolate_meridian_kernel, prolate_measure, OblateMeridian, OblateSpheroid};
use crate::prolate::r_to_l;
use crate::quadrature::{graded_breakpoints, graded_rule, PanelGrid};
use crate::types::{EigenLabel, Eigenvalue, Family, Parity, SpectrumResult, SpheroidGeometry};

/// Target Gauss order per panel.
pub const PANEL_ORDER: usize = 16;
pub const MIN_NODES: usize = 16;
/// Mode truncation used by oblate density scans.
pub const SCAN_M_MAX: u32 = 8;
pub const SCAN_N: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Lagrange product integration on near panels.
    #[default]
    Product,
    /// Plain Gauss weights everywhere, diagonal dropped. Converges like
    /// `h log h`; kept for comparison.
    Punctured,
}

impl Scheme {
    pub fn id(self) -> &'static str {
        match self {
            Scheme::Product => "gl16-panel-product-v1",
            Scheme::Punctured => "gl16-panel-punctured-v1",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(Scheme::Product),
            "punctured" => Ok(Scheme::Punctured),
            _ => Err(domain("Scheme", format!("unknown scheme '{s}'"))),
        }
    }
}

/// Quadrature nodes of a reduced operator.
///
/// `params` are meridian angles. `nodes` are the physical coordinates the
/// density lives on: `x3` for the prolate profile, the radius `s` on the
/// upper sheet for the oblate one. `weights` integrate against surface
/// measure (azimuth included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NystromGrid {
    pub params: Vec<f64>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NystromGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub geometry: SpheroidGeometry,
    pub grid: NystromGrid,
    pub matrix: DMatrix<f64>,
    pub m: Option<u32>,
    pub parity: Option<Parity>,
    pub scheme: Scheme,
}

impl DiscreteOperator {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }
}

fn check_size(op: &'static str, n: usize, scale: f64) -> Result<()> {
    if n < MIN_NODES {
        return Err(Error::Resolution {
            op,
            detail: format!("N = {n} below the minimum {MIN_NODES}"),
        });
    }
    // The kernel width is ~1 in physical units, i.e. ~1/scale in u.
    if (n as f64) < 2.0 * scale {
        return Err(Error::Resolution {
            op,
            detail: format!("N = {n} cannot resolve length scale {scale:.3}; need N >= {}", (2.0 * scale).ceil()),
        });
    }
    Ok(())
}

fn panel_count(n: usize) -> usize {
    n.div_ceil(PANEL_ORDER)
}

fn prolate_panels(r: f64, n: usize) -> PanelGrid {
    let np = panel_count(n);
    let breaks = graded_breakpoints(0.0, PI, np, (1.0 / r).min(PI / np as f64), (true, true));
    PanelGrid::new(&breaks, n)
}

/// Grid on `[0, pi]` symmetric about `pi/2`, graded toward the rim.
fn oblate_panels(ar: f64, n: usize) -> PanelGrid {
    let half = n / 2;
    let np = panel_count(half);
    let h = (1.0 / ar).min(0.5 * PI / np as f64);
    let left = graded_breakpoints(0.0, 0.5 * PI, np, h, (false, true));
    let base = half / np;
    let extra = half % np;
    let left_orders: Vec<usize> = (0..np).map(|k| base + usize::from(k < extra)).collect();
    let mut breaks = left.clone();
    breaks.extend(left.iter().rev().skip(1).map(|&x| PI - x));
    let mut orders = left_orders.clone();
    orders.extend(left_orders.iter().rev());
    PanelGrid::with_orders(&breaks, &orders)
}

/// Product-integration weights of panel `p` for target `u`: writes
/// `int_panel k_c(u, v) l_j(v) dv` into `out[c][j]`.
pub(crate) fn product_weights(
    grid: &PanelGrid,
    p: usize,
    u: f64,
    specials: &[f64],
    kernel: &impl Fn(f64, f64, &mut [f64]),
    out: &mut [Vec<f64>],
) {
    let panel = &grid.panels[p];
    let (a, b) = (panel.a, panel.b);
    let mut cuts = vec![a];
    let mut inner: Vec<f64> = specials.iter().copied().filter(|&c| c > a && c < b).collect();
    inner.sort_by(f64::total_cmp);
    cuts.extend(inner);
    cuts.push(b);
    let mut pts = Vec::new();
    for w in cuts.windows(2) {
        let (c, d) = (w[0], w[1]);
        let sing = specials
            .iter()
            .copied()
            .min_by(|x, y| dist_to(c, d, *x).total_cmp(&dist_to(c, d, *y)))
            .unwrap_or(u);
        graded_rule(c, d, sing, &mut pts);
    }
    let ncomp = out.len();
    let mut ell = vec![0.0; panel.order];
    let mut kv = vec![0.0; ncomp];
    for row in out.iter_mut() {
        row.iter_mut().for_each(|v| *v = 0.0);
    }
    // Nodes within a few ulps of the target carry O(eps log eps) weight.
    let guard = 8.0 * f64::EPSILON * u.abs().max(1.0);
    for &(x, w) in &pts {
        if (x - u).abs() <= guard {
            continue;
        }
        grid.lagrange(p, x, &mut ell);
        kernel(u, x, &mut kv);
        for (c, row) in out.iter_mut().enumerate() {
            let kw = kv[c] * w;
            for (r, &l) in row.iter_mut().zip(&ell) {
                *r += kw * l;
            }
        }
    }
}

fn dist_to(a: f64, b: f64, x: f64) -> f64 {
    if x < a {
        a - x
    } else if x > b {
        x - b
    } else {
        0.0
    }
}

/// Dense matrices `A_c[i, j]` of the kernels `k_c` (against `dv`) on `grid`.
fn assemble(
    grid: &PanelGrid,
    ncomp: usize,
    scheme: Scheme,
    kernel: impl Fn(f64, f64, &mut [f64]) + Sync,
) -> Vec<DMatrix<f64>> {
    let n = grid.len();
    let rows: Vec<Vec<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let u = grid.nodes[i];
            let specials = [u, -u, 2.0 * PI - u];
            let mut row = vec![vec![0.0; n]; ncomp];
            let mut kv = vec![0.0; ncomp];
            let mut pw: Vec<Vec<f64>> = Vec::new();
            for (p, panel) in grid.panels.iter().enumerate() {
                let near = specials.iter().any(|&c| panel.distance_to(c) < panel.len());
                if near && scheme == Scheme::Product {
                    pw.resize_with(ncomp, Vec::new);
                    pw.iter_mut().for_each(|v| v.resize(panel.order, 0.0));
                    product_weights(grid, p, u, &specials, &kernel, &mut pw);
                    for c in 0..ncomp {
                        row[c][panel.range()].copy_from_slice(&pw[c]);
                    }
                } else {
                    for j in panel.range() {
                        if j == i {
                            continue;
                        }
                        kernel(u, grid.nodes[j], &mut kv);
                        for c in 0..ncomp {
                            row[c][j] = kv[c] * grid.weights[j];
                        }
                    }
                }
            }
            row
        })
        .collect();
    (0..ncomp)
        .map(|c| DMatrix::from_fn(n, n, |i, j| rows[i][c][j]))
        .collect()
}

/// Nyström matrix of the prolate operator on axisymmetric densities, in
/// the variable `x3 = R cos u`.
pub fn discretize_prolate(r: f64, n: usize, scheme: Scheme) -> Result<DiscreteOperator> {
    if !(r >= 1.0) {
        return Err(domain("discretize_prolate", format!("need R >= 1, got {r}")));
    }
    check_size("discretize_prolate", n, r)?;
    let grid = prolate_panels(r, n);
    let matrix = assemble(&grid, 1, scheme, |u, v, out: &mut [f64]| {
        out[0] = prolate_meridian_kernel(r, u, v);
    })
    .pop()
    .expect("one component");
    let nodes: Vec<f64> = grid.nodes.iter().map(|&u| r * u.cos()).collect();
    let weights = grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .zip(&nodes)
        .map(|((&u, &w), &t)| {
            2.0 * PI * prolate_measure(r, t).expect("interior node") * r * u.sin() * w
        })
        .collect();
    check_finite("discretize_prolate", &matrix)?;
    Ok(DiscreteOperator {
        geometry: SpheroidGeometry {
            l: if r > 1.0 { Some(r_to_l(r)?) } else { None },
            ..SpheroidGeometry::prolate(r, f64::INFINITY)
        },
        grid: NystromGrid {
            params: grid.nodes.clone(),
            nodes,
            weights,
        },
        matrix,
        m: Some(0),
        parity: None,
        scheme,
    })
}

fn check_finite(op: &'static str, m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Convergence {
            op,
            detail: "non-finite matrix entry".into(),
        })
    }
}

/// Full-meridian oblate matrices for azimuthal orders `0..=m_max`, split by
/// reflection parity on demand.
#[derive(Debug, Clone)]
pub struct OblateAssembly {
    pub shape: OblateSpheroid,
    pub scheme: Scheme,
    grid: PanelGrid,
    /// `full[m]`: the `N x N` matrix on both sheets.
    full: Vec<DMatrix<f64>>,
}

impl OblateAssembly {
    pub fn new(r: f64, a: f64, m_max: u32, n: usize, scheme: Scheme) -> Result<Self> {
        let shape = OblateSpheroid::new(r, a)?;
        if n % 2 != 0 {
            return Err(domain("discretize_oblate", format!("N must be even, got {n}")));
        }
        check_size("discretize_oblate", n, shape.rim().max(1.0))?;
        let grid = oblate_panels(shape.rim(), n);
        let mer = OblateMeridian::new(&shape);
        let ncomp = m_max as usize + 1;
        let full = assemble(&grid, ncomp, scheme, |u, v, out: &mut [f64]| {
            mer.mode_kernels(u, v, out)
        });
        for m in &full {
            check_finite("discretize_oblate", m)?;
        }
        Ok(OblateAssembly {
            shape,
            scheme,
            grid,
            full,
        })
    }

    pub fn m_max(&self) -> u32 {
        self.full.len() as u32 - 1
    }

    /// The two-sheet matrix of order `m`, nodes ordered by `u`.
    pub fn full_matrix(&self, m: u32) -> Result<&DMatrix<f64>> {
        self.full
            .get(m as usize)
            .ok_or_else(|| domain("OblateAssembly", format!("m = {m} above assembled m_max = {}", self.m_max())))
    }

    /// Operator on the upper sheet for densities with `f(pi - v) = +-f(v)`.
    pub fn operator(&self, m: u32, parity: Parity) -> Result<DiscreteOperator> {
        let a = self.full_matrix(m)?;
        let n = a.nrows();
        let h = n / 2;
        let sg = parity.sign();
        let matrix = DMatrix::from_fn(h, h, |i, j| a[(i, j)] + sg * a[(i, n - 1 - j)]);
        let ar = self.shape.rim();
        let params: Vec<f64> = self.grid.nodes[..h].to_vec();
        let nodes = params.iter().map(|&u| ar * u.sin()).collect();
        let weights = params
            .iter()
            .zip(&self.grid.weights[..h])
            .map(|(&u, &w)| {
                let (s, c) = u.sin_cos();
                2.0 * PI * ar * s * (ar * ar * c * c + s * s).sqrt() * w
            })
            .collect();
        Ok(DiscreteOperator {
            geometry: SpheroidGeometry::oblate(self.shape.r, self.shape.a),
            grid: NystromGrid {
                params,
                nodes,
                weights,
            },
            matrix,
            m: Some(m),
            parity: Some(parity),
            scheme: self.scheme,
        })
    }
}

/// Radial Nyström operator of order `m` and given parity on the oblate
/// spheroid with semi-axes `(aR, aR, 1)`.
pub fn discretize_oblate(
    r: f64,
    a: f64,
    m: u32,
    parity: Parity,
    n: usize,
    scheme: Scheme,
) -> Result<DiscreteOperator> {
    OblateAssembly::new(r, a, m, n, scheme)?.operator(m, parity)
}

/// All eigenvalues of a dense real matrix, unsorted.
pub fn eigenvalues_of(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 200 * n).ok_or_else(|| {
        let norm = m.norm();
        let diag_min = m.diagonal().iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        Error::Convergence {
            op: "eigenvalues",
            detail: format!(
                "Schur iteration stalled on {n}x{n} matrix (Frobenius norm {norm:.3e}, min |diag| {diag_min:.3e})"
            ),
        }
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Dense eigensolve, sorted by real part descending, imaginary parts kept.
pub fn eigenvalues(op: &DiscreteOperator) -> Result<SpectrumResult> {
    let ev = eigenvalues_of(&op.matrix)?;
    let label = EigenLabel {
        mode: None,
        m: op.m,
        parity: op.parity,
        multiplicity: if op.m.unwrap_or(0) > 0 { 2 } else { 1 },
    };
    let mut res = SpectrumResult {
        geometry: op.geometry,
        grid_size: op.size(),
        scheme: op.scheme.id().to_string(),
        eigenvalues: ev
            .into_iter()
            .map(|z| Eigenvalue {
                re: z.re,
                im: z.im,
                label,
            })
            .collect(),
    };
    res.sort_descending();
    Ok(res)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub n: usize,
    pub m_max: u32,
    /// Oblate in-plane stretch `a`.
    pub a: f64,
    pub scheme: Scheme,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            n: SCAN_N,
            m_max: SCAN_M_MAX,
            a: 1.0,
            scheme: Scheme::Product,
        }
    }
}

/// Where the nearest eigenvalue to a grid point came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub r: f64,
    pub m: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parity: Option<Parity>,
    pub eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageEntry {
    pub lambda: f64,
    pub distance: f64,
    pub covered: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nearest: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub family: Family,
    pub eps: f64,
    pub r_list: Vec<f64>,
    pub entries: Vec<CoverageEntry>,
    /// Every spectrum computed along the way.
    pub spectra: Vec<SpectrumResult>,
}

impl CoverageReport {
    pub fn all_covered(&self) -> bool {
        self.entries.iter().all(|e| e.covered)
    }

    pub fn uncovered(&self) -> Vec<f64> {
        self.entries.iter().filter(|e| !e.covered).map(|e| e.lambda).collect()
    }
}

/// Spectra behind a density scan: prolate axisymmetric spectra, or oblate
/// spectra for `m <= m_max` and both parities.
pub fn scan_spectra(family: Family, r_list: &[f64], opts: &ScanOptions) -> Result<Vec<SpectrumResult>> {
    match family {
        Family::Prolate => r_list
            .par_iter()
            .map(|&r| eigenvalues(&discretize_prolate(r, opts.n, opts.scheme)?))
            .collect(),
        Family::Oblate => {
            let per_r: Vec<Vec<SpectrumResult>> = r_list
                .par_iter()
                .map(|&r| {
                    let asm = OblateAssembly::new(r, opts.a, opts.m_max, opts.n, opts.scheme)?;
                    let mut out = Vec::new();
                    for m in 0..=opts.m_max {
                        for parity in [Parity::Even, Parity::Odd] {
                            out.push(eigenvalues(&asm.operator(m, parity)?)?);
                        }
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?;
            Ok(per_r.into_iter().flatten().collect())
        }
        Family::Flat => Err(domain("density_scan", "no Nyström operator for the flat family")),
    }
}

/// For each `lambda` in the grid, the nearest computed eigenvalue over all
/// `R`, modes and parities, and whether it lies within `eps`.
pub fn density_scan(
    family: Family,
    r_list: &[f64],
    lambda_grid: &[f64],
    eps: f64,
    opts: &ScanOptions,
) -> Result<CoverageReport> {
    if !(eps > 0.0) {
        return Err(domain("density_scan", format!("need eps > 0, got {eps}")));
    }
    let spectra = scan_spectra(family, r_list, opts)?;
    Ok(coverage(family, r_list, lambda_grid, eps, spectra))
}

/// Coverage of `lambda_grid` by already computed spectra.
pub fn coverage(
    family: Family,
    r_list: &[f64],
    lambda_grid: &[f64],
    eps: f64,
    spectra: Vec<SpectrumResult>,
) -> CoverageReport {
    let entries = lambda_grid
        .iter()
        .map(|&lambda| {
            let mut best: Option<(f64, Witness)> = None;
            for s in &spectra {
                for e in &s.eigenvalues {
                    let d = (e.re - lambda).abs();
                    if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                        best = Some((
                            d,
                            Witness {
                                r: s.geometry.r,
                                m: e.label.m.unwrap_or(0),
                                parity: e.label.parity,
                                eigenvalue: e.re,
                            },
                        ));
                    }
                }
            }
            let distance = best.map_or(f64::INFINITY, |b| b.0);
            CoverageEntry {
                lambda,
                distance,
                covered: distance <= eps,
                nearest: best.map(|b| b.1),
            }
        })
        .collect();
    CoverageReport {
        family,
        eps,
        r_list: r_list.to_vec(),
        entries,
        spectra,
    }
}

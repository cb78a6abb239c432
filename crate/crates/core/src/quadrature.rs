//! Quadrature building blocks.
//!
//! Gauss–Legendre rules (cached per order), an adaptive Gauss–Kronrod
//! integrator with initial breakpoints, geometrically graded rules for
//! integrands with an endpoint or interior logarithmic singularity, and
//! the panel grids used by the Nyström solvers.

use std::collections::BinaryHeap;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    fn compute(n: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("order >= 1"));
        let mut pairs = rule.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        GaussRule { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

const MAX_CACHED: usize = 128;

/// Cached Gauss–Legendre rule of order `n`.
pub fn gauss_legendre(n: usize) -> &'static GaussRule {
    static CACHE: [OnceLock<GaussRule>; MAX_CACHED + 1] = [const { OnceLock::new() }; MAX_CACHED + 1];
    assert!((1..=MAX_CACHED).contains(&n), "Gauss order {n} not supported");
    CACHE[n].get_or_init(|| GaussRule::compute(n))
}

// Kronrod 15 / Gauss 7 (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

/// Absolute/relative tolerance pair for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn abs(abs: f64) -> Self {
        Tolerance { abs, rel: 0.0 }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-11,
            rel: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

const MAX_SEGMENTS: usize = 4000;

/// Adaptive Gauss–Kronrod integration of `f` over the consecutive intervals
/// defined by `points` (at least two, increasing).
pub fn integrate_breaks(
    mut f: impl FnMut(f64) -> f64,
    points: &[f64],
    tol: Tolerance,
) -> Result<f64> {
    assert!(points.len() >= 2);
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk15(&mut f, w[0], w[1]);
        total += v;
        err += e;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    while err > tol.abs.max(tol.rel * total.abs()) {
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::Convergence {
                op: "adaptive quadrature",
                detail: format!("error estimate {err:.3e} after {MAX_SEGMENTS} segments"),
            });
        }
        let s = heap.pop().expect("nonempty");
        let m = 0.5 * (s.a + s.b);
        if m <= s.a || m >= s.b {
            // Interval exhausted at machine precision; accept it.
            err -= s.error;
            heap.push(Segment { error: 0.0, ..s });
            continue;
        }
        let (v1, e1) = gk15(&mut f, s.a, m);
        let (v2, e2) = gk15(&mut f, m, s.b);
        total += v1 + v2 - s.value;
        err += e1 + e2 - s.error;
        heap.push(Segment {
            a: s.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: m,
            b: s.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed accumulated rounding from the running updates.
    Ok(heap.into_iter().map(|s| s.value).sum())
}

/// Adaptive Gauss–Kronrod integration over `[a, b]`.
pub fn integrate(f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    integrate_breaks(f, &[a, b], tol)
}

/// `int_0^inf cos(omega t) f(t) dt` for `f` with algebraic decay: adaptive
/// quadrature on `[0, t_max]` with a break every half period (plus geometric
/// breaks toward 0 down to `scale`), then the integration-by-parts tail
/// `-sin(w T) f(T) / w - cos(w T) f'(T) / w^2` from `tail = (f(T), f'(T))`.
pub fn cosine_transform(
    mut f: impl FnMut(f64) -> f64,
    omega: f64,
    t_max: f64,
    tail: (f64, f64),
    scale: f64,
    tol: Tolerance,
) -> Result<f64> {
    if !(omega > 0.0 && t_max > 0.0) {
        return Err(Error::Domain {
            op: "cosine_transform",
            detail: format!("need omega, t_max > 0, got {omega}, {t_max}"),
        });
    }
    let half = std::f64::consts::PI / omega;
    let first = half.min(t_max);
    let mut pts = geometric_breaks(0.0, first, scale);
    let mut t = first;
    while t < t_max {
        t = (t + half).min(t_max);
        pts.push(t);
    }
    // chunks keep each adaptive run within its segment budget
    const CHUNK: usize = 256;
    let per = Tolerance {
        abs: tol.abs / pts.len().div_ceil(CHUNK) as f64,
        rel: tol.rel,
    };
    let mut sum = 0.0;
    let mut lo = 0;
    while lo + 1 < pts.len() {
        let hi = (lo + CHUNK).min(pts.len() - 1);
        sum += integrate_breaks(|t| f(t) * (omega * t).cos(), &pts[lo..=hi], per)?;
        lo = hi;
    }
    let (s, co) = (omega * t_max).sin_cos();
    Ok(sum - s * tail.0 / omega - co * tail.1 / (omega * omega))
}

/// Breakpoints on `[a, b]` refining geometrically (ratio 1/2) toward `a`
/// down to `scale`. Useful when an integrand has structure of width `scale`
/// at the left endpoint.
pub fn geometric_breaks(a: f64, b: f64, scale: f64) -> Vec<f64> {
    let mut pts = vec![a];
    let len = b - a;
    if scale > 0.0 && scale < len {
        let mut h = scale;
        while h < len {
            pts.push(a + h);
            h *= 2.0;
        }
    }
    pts.push(b);
    pts
}

const GRADE_RATIO: f64 = 0.25;
const GRADE_MAX_LEVELS: usize = 22;
const GRADE_ORDER: usize = 12;

/// Quadrature rule on `[a, b]` graded geometrically toward a (possibly
/// exterior) singular point `c`. Interior points split the interval; the
/// pieces shrink by a factor 4 per level toward the singularity. Exterior
/// points grade toward the nearest endpoint down to their distance.
pub fn graded_rule(a: f64, b: f64, c: f64, out: &mut Vec<(f64, f64)>) {
    if c > a && c < b {
        graded_one_sided(c, a, 0.0, out);
        graded_one_sided(c, b, 0.0, out);
    } else if c <= a {
        graded_one_sided(a, b, a - c, out);
    } else {
        graded_one_sided(b, a, c - b, out);
    }
}

/// Graded rule between `e` (the end carrying the singularity at distance
/// `dist` beyond it) and `f`.
fn graded_one_sided(e: f64, f: f64, dist: f64, out: &mut Vec<(f64, f64)>) {
    let rule = gauss_legendre(GRADE_ORDER);
    let len = (f - e).abs();
    if len == 0.0 {
        return;
    }
    let levels = if dist <= 0.0 {
        GRADE_MAX_LEVELS
    } else {
        let l = (len / dist).ln() / (1.0 / GRADE_RATIO).ln();
        (l.ceil().max(0.0) as usize + 1).min(GRADE_MAX_LEVELS)
    };
    let dir = (f - e).signum();
    let mut outer = len;
    for _ in 0..levels {
        let inner = outer * GRADE_RATIO;
        let (p, q) = (e + dir * inner, e + dir * outer);
        out.extend(rule.mapped(p.min(q), p.max(q)));
        outer = inner;
    }
    let (p, q) = (e, e + dir * outer);
    out.extend(rule.mapped(p.min(q), p.max(q)));
}

/// One panel of a composite Gauss–Legendre grid.
#[derive(Debug, Clone)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    /// Index of the first node of this panel in the grid.
    pub start: usize,
    pub order: usize,
    /// Barycentric weights of the panel's Gauss nodes.
    bary: Vec<f64>,
}

impl Panel {
    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_empty(&self) -> bool {
        self.order == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.order
    }

    pub fn distance_to(&self, x: f64) -> f64 {
        if x < self.a {
            self.a - x
        } else if x > self.b {
            x - self.b
        } else {
            0.0
        }
    }
}

/// Composite Gauss–Legendre grid on a union of panels.
#[derive(Debug, Clone)]
pub struct PanelGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub panels: Vec<Panel>,
}

impl PanelGrid {
    /// Grid with `breakpoints.len() - 1` panels holding `total` nodes, split
    /// as evenly as possible.
    pub fn new(breakpoints: &[f64], total: usize) -> Self {
        let np = breakpoints.len() - 1;
        assert!(np >= 1 && total >= np);
        let base = total / np;
        let extra = total % np;
        let orders: Vec<usize> = (0..np).map(|k| base + usize::from(k < extra)).collect();
        Self::with_orders(breakpoints, &orders)
    }

    pub fn with_orders(breakpoints: &[f64], orders: &[usize]) -> Self {
        assert_eq!(breakpoints.len(), orders.len() + 1);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut panels = Vec::with_capacity(orders.len());
        for (k, &p) in orders.iter().enumerate() {
            let (a, b) = (breakpoints[k], breakpoints[k + 1]);
            let rule = gauss_legendre(p);
            let start = nodes.len();
            for (x, w) in rule.mapped(a, b) {
                nodes.push(x);
                weights.push(w);
            }
            let xs = &nodes[start..];
            let bary = (0..p)
                .map(|j| {
                    let prod: f64 = (0..p)
                        .filter(|&k| k != j)
                        .map(|k| (xs[j] - xs[k]) / (b - a))
                        .product();
                    1.0 / prod
                })
                .collect();
            panels.push(Panel {
                a,
                b,
                start,
                order: p,
                bary,
            });
        }
        PanelGrid {
            nodes,
            weights,
            panels,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Lagrange basis values of panel `p` at `x`, written into `out`.
    pub fn lagrange(&self, p: usize, x: f64, out: &mut [f64]) {
        let panel = &self.panels[p];
        let xs = &self.nodes[panel.range()];
        let scale = panel.len();
        for (j, &xj) in xs.iter().enumerate() {
            if x == xj {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[j] = 1.0;
                return;
            }
        }
        let mut denom = 0.0;
        for (j, &xj) in xs.iter().enumerate() {
            let t = panel.bary[j] / ((x - xj) / scale);
            out[j] = t;
            denom += t;
        }
        out.iter_mut().for_each(|v| *v /= denom);
    }
}

/// Breakpoints for `panels` panels on `[a, b]`, refined geometrically
/// (ratio 2) toward each end flagged in `(grade_a, grade_b)` so that the
/// end panel has length close to `h_min`.
pub fn graded_breakpoints(
    a: f64,
    b: f64,
    panels: usize,
    h_min: f64,
    grade: (bool, bool),
) -> Vec<f64> {
    let len = b - a;
    let ends = usize::from(grade.0) + usize::from(grade.1);
    // Largest number of doubling levels per graded end that still leaves
    // panels no smaller than the graded ones in the uniform middle.
    let mut levels = 0usize;
    if ends > 0 && h_min > 0.0 {
        loop {
            let next = levels + 1;
            let used = ends * next;
            if used >= panels {
                break;
            }
            let graded_len = ends as f64 * h_min * ((1u64 << next) - 1) as f64;
            if graded_len >= len {
                break;
            }
            let mid = (len - graded_len) / (panels - used) as f64;
            if mid < h_min * (1u64 << (next - 1)) as f64 {
                break;
            }
            levels = next;
        }
    }
    let graded_len = ends as f64 * h_min * ((1u64 << levels) - 1) as f64;
    let n_mid = panels - ends * levels;
    let mid = (len - graded_len) / n_mid as f64;
    let mut pts = vec![a];
    let mut x = a;
    if grade.0 {
        for k in 0..levels {
            x += h_min * (1u64 << k) as f64;
            pts.push(x);
        }
    }
    for _ in 0..n_mid {
        x += mid;
        pts.push(x);
    }
    if grade.1 {
        for k in (0..levels).rev() {
            x += h_min * (1u64 << k) as f64;
            pts.push(x);
        }
    }
    let last = pts.len() - 1;
    pts[last] = b;
    pts
}

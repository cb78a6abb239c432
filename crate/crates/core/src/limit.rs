//! Limit operators of thin domains: the needle kernel `L_0` and its
//! symbol, the Poisson kernel and the two-sheet symbol, and the
//! frequency `xi_0` matching a target eigenvalue.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{geometric_breaks, integrate_breaks, Tolerance};
use crate::specfun::{elliptic_ke, khat};
use crate::types::Parity;

pub(crate) const THETA_TOL: Tolerance = Tolerance {
    abs: 1e-11,
    rel: 1e-13,
};

/// `int_0^pi g(theta, sin(theta/2)) dtheta` for integrands with a peak of
/// width `width` at `theta = 0`. The first half uses `u = 2 sin(theta/2)`
/// with breakpoints refining toward `u = 0`; the second half is smooth.
/// Integrands should form `1 - cos(theta)` as `2 sin^2(theta/2)`.
pub(crate) fn theta_integral(
    mut g: impl FnMut(f64, f64) -> f64,
    width: f64,
    tol: Tolerance,
) -> Result<f64> {
    let u_max = 2f64.sqrt();
    let breaks = geometric_breaks(0.0, u_max, width.max(1e-14));
    let near = integrate_breaks(
        |u| {
            let theta = 2.0 * (0.5 * u).asin();
            g(theta, 0.5 * u) / (1.0 - 0.25 * u * u).sqrt()
        },
        &breaks,
        tol,
    )?;
    let far = integrate_breaks(|th| g(th, (0.5 * th).sin()), &[0.5 * PI, PI], tol)?;
    Ok(near + far)
}

/// The needle kernel
/// `L_0(t) = (1/2pi) int_0^pi (1 - cos th) / (2 - 2 cos th + t^2)^{3/2} dth`,
/// by adaptive quadrature.
pub fn l0_kernel(t: f64) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::Singular {
            op: "l0_kernel",
            detail: "logarithmic singularity at t = 0".into(),
        });
    }
    let t2 = t * t;
    let v = theta_integral(
        |_, h| {
            let c = 2.0 * h * h;
            c / (2.0 * c + t2).powf(1.5)
        },
        t.abs(),
        THETA_TOL,
    )?;
    Ok(v / (2.0 * PI))
}

/// `L_0(t)` from complete elliptic integrals:
/// `(K(k) - E(k)) / (2 pi sqrt(4 + t^2))` with `k^2 = 4 / (4 + t^2)`.
pub fn l0_kernel_closed(t: f64) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::Singular {
            op: "l0_kernel_closed",
            detail: "logarithmic singularity at t = 0".into(),
        });
    }
    let s = 4.0 + t * t;
    let (k, e) = elliptic_ke(t * t / s)?;
    Ok((k - e) / (2.0 * PI * s.sqrt()))
}

/// Symbol of convolution by `L_0`:
/// `(1/4pi) int_0^pi khat(2 sin(th/2) xi) dth`. Even, decreasing on
/// `xi >= 0`, with maximum 1/2 at 0.
pub fn l0_hat(xi: f64) -> f64 {
    let x = xi.abs();
    if x == 0.0 {
        return 0.5;
    }
    // Beyond theta ~ 10/x the integrand is below e^{-60}.
    let width = (1.0 / x).min(1.0);
    let v = theta_integral(|_, h| khat(2.0 * h * x), width, THETA_TOL)
        .expect("smooth bounded integrand");
    v / (4.0 * PI)
}

/// `l0_hat` as the direct transform `2 int_0^inf cos(2 pi xi t) L_0(t) dt`,
/// using `L_0(t) ~ 1/(2 t^3)` for the tail. Slow; a check of the
/// theta-quadrature route.
pub fn l0_hat_direct(xi: f64) -> Result<f64> {
    let x = xi.abs();
    if x == 0.0 {
        return Err(domain("l0_hat_direct", "xi = 0 is not oscillatory; use l0_hat"));
    }
    let t = 2000.0f64;
    let v = crate::quadrature::cosine_transform(
        |s| if s == 0.0 { 0.0 } else { l0_kernel_closed(s).expect("s > 0") },
        2.0 * PI * x,
        t,
        (l0_kernel_closed(t)?, -1.5 / t.powi(4)),
        1e-12,
        Tolerance::abs(1e-12),
    )?;
    Ok(2.0 * v)
}

/// Largest frequency returned by the `xi_0` solver; targets needing more
/// are flagged as unreachable.
pub const XI0_CAP: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Xi0 {
    pub xi0: f64,
    /// True when the target lies below `l0_hat(XI0_CAP)`; `xi0` is then the cap.
    pub capped: bool,
}

/// Solve `l0_hat(xi_0) = lambda` on `xi_0 >= 0` by bisection.
pub fn solve_xi0_prolate(lambda: f64) -> Result<Xi0> {
    if !(lambda > 0.0 && lambda <= 0.5) {
        return Err(domain(
            "solve_xi0_prolate",
            format!("need lambda in (0, 1/2], got {lambda}"),
        ));
    }
    if lambda == 0.5 {
        return Ok(Xi0 {
            xi0: 0.0,
            capped: false,
        });
    }
    let mut hi = 1.0;
    while l0_hat(hi) > lambda {
        hi *= 2.0;
        if hi >= XI0_CAP {
            if l0_hat(XI0_CAP) > lambda {
                log::warn!("lambda = {lambda} needs xi_0 beyond {XI0_CAP:e}");
                return Ok(Xi0 {
                    xi0: XI0_CAP,
                    capped: true,
                });
            }
            hi = XI0_CAP;
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = l0_hat(mid) - lambda;
        if f.abs() < 1e-13 || hi - lo < 1e-15 * hi {
            return Ok(Xi0 {
                xi0: mid,
                capped: false,
            });
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Xi0 {
        xi0: 0.5 * (lo + hi),
        capped: false,
    })
}

/// Poisson kernel of the half-space, `P_t(x) = t / (2 pi (|x|^2 + t^2)^{3/2})`.
pub fn poisson_kernel(t: f64, x: [f64; 2]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain("poisson_kernel", format!("need t > 0, got {t}")));
    }
    let r2 = x[0] * x[0] + x[1] * x[1];
    Ok(t / (2.0 * PI * (r2 + t * t).powf(1.5)))
}

/// `exp(-2 pi t |xi|)`.
pub fn poisson_hat(t: f64, xi: [f64; 2]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain("poisson_hat", format!("need t > 0, got {t}")));
    }
    Ok((-2.0 * PI * t * xi[0].hypot(xi[1])).exp())
}

/// `|xi_0| = -log(2 lambda) / (4 pi)`, the frequency where the even
/// two-sheet symbol equals `lambda`.
pub fn solve_xi0_flat(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 0.5) {
        return Err(domain(
            "solve_xi0_flat",
            format!("need lambda in (0, 1/2], got {lambda}"),
        ));
    }
    Ok(-(2.0 * lambda).ln() / (4.0 * PI))
}

/// `+-(1/2) exp(-4 pi |xi|)`: the two-sheet limit operator on even/odd densities.
pub fn two_sheet_symbol(xi: [f64; 2], parity: Parity) -> f64 {
    parity.sign() * 0.5 * (-4.0 * PI * xi[0].hypot(xi[1])).exp()
}

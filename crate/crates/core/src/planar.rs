//! Sampled complex fields on a square planar grid with FFT-based Fourier
//! multipliers.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// `n x n` grid with spacing `h`, nodes `(k - n/2) h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarGrid {
    pub n: usize,
    pub h: f64,
}

impl PlanarGrid {
    pub fn new(n: usize, h: f64) -> Self {
        assert!(n >= 2 && n % 2 == 0 && h > 0.0);
        PlanarGrid { n, h }
    }

    /// Grid of `n` points covering the box `[-side/2, side/2)`.
    pub fn covering(side: f64, n: usize) -> Self {
        Self::new(n, side / n as f64)
    }

    pub fn coord(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.h
    }

    /// Frequency of FFT bin `k` in cycles per unit length.
    pub fn freq(&self, k: usize) -> f64 {
        let n = self.n as i64;
        let k = k as i64;
        let kk = if k < n / 2 { k } else { k - n };
        kk as f64 / (self.n as f64 * self.h)
    }

    pub fn nyquist(&self) -> f64 {
        0.5 / self.h
    }

    pub fn side(&self) -> f64 {
        self.n as f64 * self.h
    }

    /// Flat index of the node nearest to `(x, y)`.
    pub fn index(&self, x: f64, y: f64) -> usize {
        let c = |t: f64| {
            ((t / self.h).round() as i64 + (self.n / 2) as i64).clamp(0, self.n as i64 - 1) as usize
        };
        c(y) * self.n + c(x)
    }
}

/// Row-major samples `data[iy * n + ix]` of a complex field.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarField {
    pub grid: PlanarGrid,
    pub data: Vec<Complex64>,
}

/// Width (in nodes) of the boundary band that must be empty for a field
/// to count as compactly supported inside the grid.
const SUPPORT_BAND: usize = 2;

impl PlanarField {
    pub fn zeros(grid: PlanarGrid) -> Self {
        PlanarField {
            grid,
            data: vec![Complex64::new(0.0, 0.0); grid.n * grid.n],
        }
    }

    pub fn from_fn(grid: PlanarGrid, mut f: impl FnMut([f64; 2]) -> Complex64) -> Self {
        let n = grid.n;
        let mut data = Vec::with_capacity(n * n);
        for iy in 0..n {
            let y = grid.coord(iy);
            for ix in 0..n {
                data.push(f([grid.coord(ix), y]));
            }
        }
        PlanarField { grid, data }
    }

    pub fn scaled(&self, c: f64) -> Self {
        PlanarField {
            grid: self.grid,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// `||f||_2` with the grid's area element.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.data.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.h * self.grid.h).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Aliasing error when the field does not vanish near the grid edge.
    pub fn check_support(&self, op: &'static str) -> Result<()> {
        let n = self.grid.n;
        let peak = self.max_abs();
        if peak == 0.0 {
            return Ok(());
        }
        let mut edge: f64 = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                let near = ix < SUPPORT_BAND
                    || iy < SUPPORT_BAND
                    || ix >= n - SUPPORT_BAND
                    || iy >= n - SUPPORT_BAND;
                if near {
                    edge = edge.max(self.data[iy * n + ix].norm());
                }
            }
        }
        if edge > 1e-12 * peak {
            return Err(Error::Aliasing {
                op,
                detail: format!(
                    "density reaches the grid edge ({edge:.3e} vs peak {peak:.3e}); enlarge the box"
                ),
            });
        }
        Ok(())
    }

    /// Unnormalized 2-D DFT of the samples.
    pub fn fft(&self) -> Vec<Complex64> {
        let mut d = self.data.clone();
        fft2(&mut d, self.grid.n, false);
        d
    }

    /// Inverse of `fft`, including the `1/n^2` factor.
    pub fn from_spectrum(grid: PlanarGrid, mut spec: Vec<Complex64>) -> Self {
        fft2(&mut spec, grid.n, true);
        let s = 1.0 / (grid.n * grid.n) as f64;
        spec.iter_mut().for_each(|v| *v *= s);
        PlanarField { grid, data: spec }
    }

    /// Apply the Fourier multiplier `m(|xi|)`.
    pub fn apply_radial_multiplier(&self, m: impl Fn(f64) -> f64) -> Self {
        let g = self.grid;
        let mut spec = self.fft();
        for iy in 0..g.n {
            let fy = g.freq(iy);
            for ix in 0..g.n {
                spec[iy * g.n + ix] *= m(g.freq(ix).hypot(fy));
            }
        }
        Self::from_spectrum(g, spec)
    }

    /// `(int |m(|xi|)|^2 |f^(xi)|^2 dxi)^{1/2}` by Parseval.
    pub fn multiplier_norm(&self, m: impl Fn(f64) -> f64) -> f64 {
        let g = self.grid;
        let spec = self.fft();
        let mut s = 0.0;
        for iy in 0..g.n {
            let fy = g.freq(iy);
            for ix in 0..g.n {
                let w = m(g.freq(ix).hypot(fy));
                s += w * w * spec[iy * g.n + ix].norm_sqr();
            }
        }
        let h2 = g.h * g.h;
        (s * h2 / (g.n * g.n) as f64).sqrt()
    }
}

/// In-place 2-D FFT of an `n x n` row-major array.
pub fn fft2(data: &mut [Complex64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    for row in data.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for ix in 0..n {
        for iy in 0..n {
            col[iy] = data[iy * n + ix];
        }
        fft.process(&mut col);
        for iy in 0..n {
            data[iy * n + ix] = col[iy];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parseval_and_identity_multiplier() {
        let g = PlanarGrid::new(64, 0.25);
        let f = PlanarField::from_fn(g, |x| Complex64::new((-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp(), 0.0));
        assert_relative_eq!(f.multiplier_norm(|_| 1.0), f.l2_norm(), max_relative = 1e-12);
        let same = f.apply_radial_multiplier(|_| 1.0);
        for (a, b) in same.data.iter().zip(&f.data) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn grid_geometry() {
        let g = PlanarGrid::covering(8.0, 16);
        assert_eq!(g.coord(8), 0.0);
        assert_eq!(g.coord(0), -4.0);
        assert_eq!(g.freq(1), 1.0 / 8.0);
        assert_eq!(g.freq(15), -1.0 / 8.0);
        assert_eq!(g.nyquist(), 1.0);
        assert_eq!(g.index(0.0, 0.0), 8 * 16 + 8);
    }
}

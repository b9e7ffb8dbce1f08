//! Fourier-multiplier realization of (−Δ)^s on a periodic box [−L, L)^d.

use crate::error::{Error, Result};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform periodic grid x_j = −L + 2Lj/N along each of d ∈ {1, 2} axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    pub dim: usize,
    pub half_length: f64,
    pub points: usize,
}

impl PeriodicGrid {
    pub fn new(dim: usize, half_length: f64, points: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Domain("periodic grids support d = 1 or 2".into()));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::Domain("points per axis must be a power of two >= 16".into()));
        }
        if !(half_length > 0.0) {
            return Err(Error::Domain("half-length must be positive".into()));
        }
        Ok(PeriodicGrid { dim, half_length, points })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.points as f64
    }

    /// Coordinates along one axis.
    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points).map(|j| -self.half_length + h * j as f64).collect()
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Samples f at every grid point (row-major, last axis fastest).
    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        let ax = self.axis();
        match self.dim {
            1 => ax.iter().map(|&x| f(&[x])).collect(),
            _ => {
                let mut v = Vec::with_capacity(self.len());
                for &x in &ax {
                    for &y in &ax {
                        v.push(f(&[x, y]));
                    }
                }
                v
            }
        }
    }

    fn wavenumber(&self, m: usize) -> f64 {
        let n = self.points;
        let k = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
        PI * k / self.half_length
    }
}

/// Output of [`fraclap_spectral`].
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub values: Vec<f64>,
    /// Largest |imaginary part| discarded after the inverse transform.
    pub max_imag: f64,
    /// Set when the data do not vanish at the box boundary (≤ 1e−8·max|u|).
    pub boundary_warning: bool,
}

/// Applies the multiplier |ξ|^{2s} (zero mode ↦ 0) to periodic samples.
pub fn fraclap_spectral(grid: &PeriodicGrid, u: &[f64], s: f64) -> Result<SpectralResult> {
    if u.len() != grid.len() {
        return Err(Error::Domain("sample count does not match the periodic grid".into()));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParams(format!("s must lie in (0,1), got {s}")));
    }
    let n = grid.points;
    let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let boundary = boundary_magnitude(grid, u);
    let boundary_warning = boundary > 1e-8 * umax;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut data: Vec<Complex<f64>> = u.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let symbol = |k2: f64| if k2 == 0.0 { 0.0 } else { k2.powf(s) };
    match grid.dim {
        1 => {
            fwd.process(&mut data);
            for (m, z) in data.iter_mut().enumerate() {
                let k = grid.wavenumber(m);
                *z *= symbol(k * k);
            }
            inv.process(&mut data);
        }
        _ => {
            transform_2d(&mut data, n, &*fwd);
            for i in 0..n {
                let ki = grid.wavenumber(i);
                for j in 0..n {
                    let kj = grid.wavenumber(j);
                    data[i * n + j] *= symbol(ki * ki + kj * kj);
                }
            }
            transform_2d(&mut data, n, &*inv);
        }
    }
    let norm = 1.0 / grid.len() as f64;
    let max_imag = data.iter().fold(0.0f64, |m, z| m.max((z.im * norm).abs()));
    let scale = data.iter().fold(0.0f64, |m, z| m.max((z.re * norm).abs())).max(1e-300);
    assert!(max_imag <= 1e-10 * scale.max(umax), "spectral output not real: {max_imag:e}");
    Ok(SpectralResult { values: data.iter().map(|z| z.re * norm).collect(), max_imag, boundary_warning })
}

fn transform_2d(data: &mut [Complex<f64>], n: usize, fft: &dyn rustfft::Fft<f64>) {
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = data[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            data[i * n + j] = col[i];
        }
    }
}

fn boundary_magnitude(grid: &PeriodicGrid, u: &[f64]) -> f64 {
    let n = grid.points;
    match grid.dim {
        1 => u[0].abs().max(u[n - 1].abs()),
        _ => {
            let mut m = 0.0f64;
            for k in 0..n {
                m = m
                    .max(u[k].abs())
                    .max(u[(n - 1) * n + k].abs())
                    .max(u[k * n].abs())
                    .max(u[k * n + n - 1].abs());
            }
            m
        }
    }
}

/// Linear interpolation of periodic 1-D samples at x.
pub fn interpolate_1d(grid: &PeriodicGrid, values: &[f64], x: f64) -> f64 {
    let h = grid.spacing();
    let t = (x + grid.half_length) / h;
    let j = t.floor() as isize;
    let w = t - j as f64;
    let n = grid.points as isize;
    let at = |k: isize| values[k.rem_euclid(n) as usize];
    (1.0 - w) * at(j) + w * at(j + 1)
}

/// Image sum that separates the periodic operator from the whole-line one
/// in d = 1: for data of mass m = ∫u concentrated well inside the box,
///
/// ```text
/// periodic (−Δ)^s u(x) − (−Δ)^s u(x) ≈ −C_{1,s} m Σ_{k≠0} |x + 2Lk|^{−1−2s},
/// ```
///
/// the far-field asymptotics of each periodic copy. Subtract the returned
/// value from the spectral result to compare with whole-line operators.
pub fn periodic_image_sum(grid: &PeriodicGrid, mass: f64, s: f64, x: f64) -> Result<f64> {
    if grid.dim != 1 {
        return Err(Error::Domain("image correction is implemented for d = 1".into()));
    }
    let c = crate::constants::singular_integral_constant(1, s)?;
    let period = 2.0 * grid.half_length;
    let a = 1.0 + 2.0 * s;
    const TERMS: usize = 2000;
    let mut sum = 0.0;
    for k in 1..=TERMS {
        let kl = period * k as f64;
        sum += (kl + x).abs().powf(-a) + (kl - x).abs().powf(-a);
    }
    // Euler–Maclaurin remainder of Σ_{k>K} 2(Lk)^{−a}.
    let kk = TERMS as f64;
    sum += 2.0 * period.powf(-a) * (kk.powf(1.0 - a) / (a - 1.0) - 0.5 * kk.powf(-a));
    Ok(-c * mass * sum)
}

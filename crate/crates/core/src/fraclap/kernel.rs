//! Radialized interaction kernel of the Gagliardo form.
//!
//! For radial u, C∬(u(x)−u(y))²|x−y|^{−n−2s} dx dy = ∫∫ k(r,ρ)(u(r)−u(ρ))² dr dρ
//! with k(r,ρ) = C r^{n−1}ρ^{n−1} K₀(r,ρ) and
//!
//! ```text
//! K₀(r,ρ) = |S^{n−1}||S^{n−2}| ∫_0^π (r²+ρ²−2rρ cos γ)^{−(n+2s)/2} sin^{n−2}γ dγ.
//! ```
//!
//! n = 1 and n = 3 have closed forms; other dimensions use a table of the
//! regularized angular integral H(τ) = (1−τ)^{1+2s}·I(τ), τ = min/max, on
//! dyadic panels accumulating at τ = 1 with Chebyshev interpolation.

use crate::constants::{gagliardo_constant, sphere_area};
use crate::error::Result;
use crate::quad::{gauss_legendre, Rule};
use std::f64::consts::PI;

const CHEB: usize = 16;
const PANELS: usize = 42;

#[derive(Debug, Clone)]
enum Angular {
    One,
    Three,
    Table(Vec<[f64; CHEB]>),
}

/// Kernel k(r, ρ) for fixed (n, s).
#[derive(Debug, Clone)]
pub struct RadialKernel {
    pub n: usize,
    pub s: f64,
    c: f64,
    s_outer: f64,
    ang: Angular,
}

fn cheb_nodes() -> [f64; CHEB] {
    let mut x = [0.0; CHEB];
    for (j, v) in x.iter_mut().enumerate() {
        *v = (PI * j as f64 / (CHEB - 1) as f64).cos();
    }
    x
}

fn panel_bounds(k: usize) -> (f64, f64) {
    if k == 0 {
        (0.0, 0.5)
    } else {
        (1.0 - 0.5f64.powi(k as i32), 1.0 - 0.5f64.powi(k as i32 + 1))
    }
}

impl RadialKernel {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        Self::build(n, s, false)
    }

    /// Forces the tabulated angular integral even where a closed form exists
    /// (used to validate the table).
    pub fn tabulated(n: usize, s: f64) -> Result<Self> {
        Self::build(n, s, true)
    }

    fn build(n: usize, s: f64, force_table: bool) -> Result<Self> {
        let c = gagliardo_constant(n, s)?;
        let ang = match (n, force_table) {
            (1, _) => Angular::One,
            (3, false) => Angular::Three,
            _ => {
                let xs = cheb_nodes();
                let table = (0..PANELS)
                    .map(|k| {
                        let (lo, hi) = panel_bounds(k);
                        let mut vals = [0.0; CHEB];
                        for (j, v) in vals.iter_mut().enumerate() {
                            let tau = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xs[j];
                            *v = angular_integral(n, s, tau) * (1.0 - tau).powf(1.0 + 2.0 * s);
                        }
                        vals
                    })
                    .collect();
                Angular::Table(table)
            }
        };
        let s_outer = if n == 1 { 2.0 } else { sphere_area(n) * sphere_area(n - 1) };
        Ok(RadialKernel { n, s, c, s_outer, ang })
    }

    /// K₀(r, ρ) (without the C r^{n−1}ρ^{n−1} factor).
    pub fn k0(&self, r: f64, rho: f64) -> f64 {
        let m = 1.0 + 2.0 * self.s;
        let (lo, hi) = if r < rho { (r, rho) } else { (rho, r) };
        let tau = lo / hi;
        match &self.ang {
            Angular::One => {
                // 2(|r−ρ|^{−m} + (r+ρ)^{−m})
                2.0 * ((hi - lo).powf(-m) + (hi + lo).powf(-m))
            }
            Angular::Three => {
                // 8π²(|r−ρ|^{−m} − (r+ρ)^{−m})/(m rρ), written without cancellation:
                // (1−τ)^{−m} − (1+τ)^{−m} = (1+τ)^{−m}·expm1(2m·atanh τ)
                let diff = (1.0 + tau).powf(-m) * (2.0 * m * tau.atanh()).exp_m1();
                8.0 * PI * PI * hi.powf(-m) * diff / (m * r * rho)
            }
            Angular::Table(t) => {
                let h = table_eval(t, tau);
                self.s_outer * hi.powf(-(self.n as f64) - 2.0 * self.s) * h * (1.0 - tau).powf(-m)
            }
        }
    }

    /// k(r, ρ) = C r^{n−1} ρ^{n−1} K₀(r, ρ).
    #[inline]
    pub fn k(&self, r: f64, rho: f64) -> f64 {
        let p = (self.n - 1) as i32;
        self.c * (r * rho).powi(p) * self.k0(r, rho)
    }

    /// Leading far-field behaviour: k(r, ρ) ≈ C r^{n−1}|S^{n−1}|²ρ^{−1−2s} for ρ ≫ r.
    pub fn far_coefficient(&self, r: f64) -> f64 {
        let area = sphere_area(self.n);
        self.c * r.powi(self.n as i32 - 1) * area * area
    }
}

fn table_eval(t: &[[f64; CHEB]], tau: f64) -> f64 {
    let k = if tau <= 0.5 {
        0
    } else {
        let d = 1.0 - tau;
        if d <= 0.0 {
            PANELS - 1
        } else {
            ((-d.log2()).floor() as usize).clamp(1, PANELS - 1)
        }
    };
    let (lo, hi) = panel_bounds(k);
    let x = ((2.0 * tau - lo - hi) / (hi - lo)).clamp(-1.0, 1.0);
    let xs = cheb_nodes();
    let vals = &t[k];
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..CHEB {
        let dx = x - xs[j];
        if dx == 0.0 {
            return vals[j];
        }
        let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == CHEB - 1 {
            w *= 0.5;
        }
        num += w / dx * vals[j];
        den += w / dx;
    }
    num / den
}

/// I(τ) = ∫_0^π (1+τ²−2τ cos γ)^{−(n+2s)/2} sin^{n−2}γ dγ for 0 ≤ τ < 1.
pub fn angular_integral(n: usize, s: f64, tau: f64) -> f64 {
    let e = -(n as f64 + 2.0 * s) / 2.0;
    let pw = (n - 2) as i32;
    if tau <= 0.5 {
        let gl = gauss_legendre(48).mapped(0.0, PI);
        return gl.integrate(|g| (1.0 + tau * tau - 2.0 * tau * g.cos()).powf(e) * g.sin().powi(pw));
    }
    // [π/2, π]: smooth.
    let back = Rule::composite(&[0.5 * PI, 0.75 * PI, PI], &gauss_legendre(24));
    let mut total = back.integrate(|g| (1.0 + tau * tau - 2.0 * tau * g.cos()).powf(e) * g.sin().powi(pw));
    // [0, π/2]: y = sin(γ/2) = δ sinh v, base = (1−τ)² cosh² v.
    let delta = (1.0 - tau) / (2.0 * tau.sqrt());
    let vmax = ((0.25 * PI).sin() / delta).asinh();
    let panels = vmax.ceil().max(1.0) as usize;
    let br: Vec<f64> = (0..=panels).map(|i| vmax * i as f64 / panels as f64).collect();
    let rule = Rule::composite(&br, &gauss_legendre(16));
    total += rule.integrate(|v| {
        let y = delta * v.sinh();
        let c = (1.0 - y * y).max(0.0).sqrt();
        let base = ((1.0 - tau) * v.cosh()).powf(2.0 * e);
        base * (2.0 * y * c).powi(pw) * 2.0 * delta * v.cosh() / c
    });
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_reproduces_closed_form_in_three_dimensions() {
        for &s in &[0.2, 0.5, 0.85] {
            let exact = RadialKernel::new(3, s).unwrap();
            let tab = RadialKernel::tabulated(3, s).unwrap();
            for &(r, rho) in &[(1.0, 0.1), (1.0, 0.7), (1.0, 0.99), (1.0, 0.999999), (3.0, 2.9), (1.0, 1e-6)] {
                let a = exact.k(r, rho);
                let b = tab.k(r, rho);
                assert!((a - b).abs() < 1e-9 * a, "s={s} r={r} rho={rho}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn angular_integral_at_zero_is_beta_function() {
        // I(0) = ∫ sin^{n−2} = √π Γ((n−1)/2)/Γ(n/2)
        let g = crate::constants::gamma;
        for n in 2..6 {
            let exact = PI.sqrt() * g((n as f64 - 1.0) / 2.0).unwrap() / g(n as f64 / 2.0).unwrap();
            assert!((angular_integral(n, 0.4, 0.0) - exact).abs() < 1e-13);
        }
    }
}

//! Pointwise (−Δ)^s of radial functions by singular-integral quadrature.
//!
//! In polar coordinates around x (|x| = r),
//!
//! ```text
//! (−Δ)^s u(x) = c ∫_0^∞ ρ^{−1−2s} [ |S^{n−1}| u(r) − A(r,ρ) ] dρ,
//! A(r,ρ) = ∫_{S^{n−1}} u(|x+ρω|) dω,
//! ```
//!
//! with c = 2C_{n,s}. On [0, a] the bracket is replaced by its Taylor model
//! −|S^{n−1}| Δu(r) ρ²/(2n) and integrated exactly; [a, R+r] is integrated
//! adaptively with breakpoints where the sphere crosses the origin, the
//! model switches and the truncation radius R; beyond R+r only the local
//! term survives and is integrated analytically. The contribution of the
//! tail model beyond R is computed separately and reported as `tail`.

use crate::constants::{singular_integral_constant, sphere_area};
use crate::error::{Error, Result};
use crate::grid::{Part, RadialFunction, RadialProfile};
use crate::quad;
use serde::{Deserialize, Serialize};

/// Options for [`fraclap_profile`].
#[derive(Debug, Clone, Copy)]
pub struct FracLapOptions {
    /// Relative tolerance of the adaptive radial quadrature.
    pub rel_tol: f64,
    /// Radius of the Taylor-subtracted ball as a fraction of r.
    pub taylor_fraction: f64,
    /// Accept non-decaying data with a zero tail model.
    pub allow_truncation: bool,
    pub max_panels: usize,
}

impl Default for FracLapOptions {
    fn default() -> Self {
        FracLapOptions { rel_tol: 1e-10, taylor_fraction: 2e-3, allow_truncation: false, max_panels: 4000 }
    }
}

/// Value of (−Δ)^s u at a point, with the tail-model contribution kept apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracLapValue {
    /// Operator applied to u restricted to |y| ≤ r_max (inner model included).
    pub value: f64,
    /// Operator applied to the tail model on |y| > r_max.
    pub tail: f64,
    /// Summed quadrature error estimate.
    pub error: f64,
}

impl FracLapValue {
    pub fn total(&self) -> f64 {
        self.value + self.tail
    }
}

/// (−Δ)^s u(r) for a sampled radial function; `at` must lie in (r_1, r_M).
pub fn fraclap_radial(u: &RadialFunction, n: usize, s: f64, at: f64) -> Result<FracLapValue> {
    fraclap_radial_with(u, n, s, at, FracLapOptions::default())
}

pub fn fraclap_radial_with(u: &RadialFunction, n: usize, s: f64, at: f64, opts: FracLapOptions) -> Result<FracLapValue> {
    let g = u.grid();
    if !(at > g.r_min() && at < g.r_max()) {
        return Err(Error::Domain(format!(
            "evaluation radius {at} outside the interior ({}, {})",
            g.r_min(),
            g.r_max()
        )));
    }
    if u.tail_model() == crate::grid::TailModel::Zero && !opts.allow_truncation && !u.decays(1e-6) {
        return Err(Error::Truncation(format!(
            "|u(r_max)| = {:e} exceeds 1e-6·max|u| with a zero tail model",
            u.values().last().unwrap().abs()
        )));
    }
    fraclap_profile(u, n, s, at, opts)
}

/// (−Δ)^s of any [`RadialProfile`] at radius r > 0.
pub fn fraclap_profile<P: RadialProfile + ?Sized>(
    u: &P,
    n: usize,
    s: f64,
    r: f64,
    opts: FracLapOptions,
) -> Result<FracLapValue> {
    if !(r > 0.0) {
        return Err(Error::Domain("evaluation radius must be positive".into()));
    }
    let c = singular_integral_constant(n, s)?;
    let area = sphere_area(n);
    let big_r = u.body_radius();
    let kinks = u.kinks();
    let fr = u.value(r);

    let mut a = opts.taylor_fraction * r;
    for &k in kinks.iter().chain(std::iter::once(&big_r)) {
        let d = (r - k).abs();
        if d > 0.0 && d < 4.0 * a {
            a = a.min(0.25 * d);
        }
    }
    let lap = u.laplacian(n, r);
    let part0 = -area * lap * a.powf(2.0 - 2.0 * s) / ((2.0 - 2.0 * s) * 2.0 * n as f64);

    let integrand = |rho: f64| rho.powf(-1.0 - 2.0 * s) * (area * fr - u.sphere_integral(n, r, rho, Part::Body));
    let mut pts = Vec::new();
    for &k in kinks.iter().chain([0.0, big_r].iter()) {
        pts.push((r - k).abs());
        pts.push(r + k);
    }
    let mut error = 0.0;
    let (part1, part2) = if big_r.is_finite() {
        let brk = quad::breakpoints(a, big_r + r, &pts);
        let res = quad::adaptive(integrand, &brk, 1e-300, opts.rel_tol, opts.max_panels);
        error += res.error;
        (res.value, area * fr * (big_r + r).powf(-2.0 * s) / (2.0 * s))
    } else {
        let kmax = kinks.iter().fold(0.0f64, |m, &k| m.max(k));
        let b = (4.0 * r).max(2.0 * (kmax + r));
        let brk = quad::breakpoints(a, b, &pts);
        let res = quad::adaptive(&integrand, &brk, 1e-300, opts.rel_tol, opts.max_panels);
        error += res.error;
        let far = far_field(|rho| area * fr - u.sphere_integral(n, r, rho, Part::Body), b, s, opts);
        error += far.error;
        (res.value, far.value)
    };
    let value = c * (part0 + part1 + part2);

    let tail = if big_r.is_finite() {
        let lo = (big_r - r).max(0.0);
        let brk = quad::breakpoints(lo, big_r + r, &pts);
        let near = quad::adaptive(
            |rho| rho.powf(-1.0 - 2.0 * s) * u.sphere_integral(n, r, rho, Part::Tail),
            &brk,
            1e-300,
            opts.rel_tol,
            opts.max_panels,
        );
        let far = far_field(|rho| u.sphere_integral(n, r, rho, Part::Tail), big_r + r, s, opts);
        error += near.error + far.error;
        -c * (near.value + far.value)
    } else {
        0.0
    };
    Ok(FracLapValue { value, tail, error: c * error })
}

/// ∫_B^∞ ρ^{−1−2s} g(ρ) dρ via ρ = B w^{−1/(2s)}, which turns the measure into
/// (B^{−2s}/(2s)) dw on (0, 1].
pub(crate) fn far_field<G: Fn(f64) -> f64>(g: G, b: f64, s: f64, opts: FracLapOptions) -> quad::Integral {
    let scale = b.powf(-2.0 * s) / (2.0 * s);
    let res = quad::adaptive(
        |w: f64| if w <= 0.0 { 0.0 } else { g(b * w.powf(-1.0 / (2.0 * s))) },
        &[0.0, 1e-6, 1e-3, 0.1, 1.0],
        1e-300,
        opts.rel_tol,
        opts.max_panels,
    );
    quad::Integral { value: scale * res.value, error: scale * res.error, converged: res.converged }
}

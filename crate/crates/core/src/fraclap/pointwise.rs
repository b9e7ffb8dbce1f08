//! Pointwise (−Δ)^s of general (non-radial) functions on R^n, n ≤ 3.
//!
//! The same polar representation as the radial quadrature,
//!
//! ```text
//! (−Δ)^s f(x) = c ∫_0^∞ ρ^{−1−2s} [ |S^{n−1}| f(x) − A(ρ) ] dρ,
//! A(ρ) = ∫_{S^{n−1}} f(x+ρω) dω,
//! ```
//!
//! but with the spherical means computed by direct quadrature on S^{n−1}.
//! For n = 3 the pole of the spherical coordinates points at the first
//! special point so that the main feature sits on the axis.

use super::radial::{far_field, FracLapOptions, FracLapValue};
use crate::constants::{singular_integral_constant, sphere_area};
use crate::error::{Error, Result};
use crate::quad;
use std::f64::consts::PI;

/// Number of azimuthal trapezoid nodes on S² (periodic, spectrally accurate).
const AZIMUTH_NODES: usize = 64;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Orthonormal frame (e, e1, e2) of R³ with e along `axis`.
fn frame(axis: &[f64]) -> [[f64; 3]; 3] {
    let l = norm(axis);
    let e = if l > 0.0 { [axis[0] / l, axis[1] / l, axis[2] / l] } else { [0.0, 0.0, 1.0] };
    let helper = if e[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = helper[0] * e[0] + helper[1] * e[1] + helper[2] * e[2];
    let mut e1 = [helper[0] - d * e[0], helper[1] - d * e[1], helper[2] - d * e[2]];
    let l1 = norm(&e1);
    e1.iter_mut().for_each(|v| *v /= l1);
    let e2 = [e[1] * e1[2] - e[2] * e1[1], e[2] * e1[0] - e[0] * e1[2], e[0] * e1[1] - e[1] * e1[0]];
    [e, e1, e2]
}

/// ∫_{S^{n−1}} f(x + ρω) dω.
fn spherical_mean<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], rho: f64, axis: &[f64], rel_tol: f64) -> f64 {
    let n = x.len();
    match n {
        1 => f(&[x[0] + rho]) + f(&[x[0] - rho]),
        2 => {
            let th0 = axis[1].atan2(axis[0]);
            let res = quad::adaptive(
                |th: f64| f(&[x[0] + rho * (th0 + th).cos(), x[1] + rho * (th0 + th).sin()]),
                &[-PI, -0.5 * PI, 0.0, 0.5 * PI, PI],
                1e-300,
                rel_tol,
                400,
            );
            res.value
        }
        _ => {
            let [e, e1, e2] = frame(axis);
            let dphi = 2.0 * PI / AZIMUTH_NODES as f64;
            let ring = |c: f64| {
                let sn = (1.0 - c * c).max(0.0).sqrt();
                let mut acc = 0.0;
                for k in 0..AZIMUTH_NODES {
                    let ph = dphi * k as f64;
                    let (a, b) = (sn * ph.cos(), sn * ph.sin());
                    let p = [
                        x[0] + rho * (c * e[0] + a * e1[0] + b * e2[0]),
                        x[1] + rho * (c * e[1] + a * e1[1] + b * e2[1]),
                        x[2] + rho * (c * e[2] + a * e1[2] + b * e2[2]),
                    ];
                    acc += f(&p);
                }
                acc * dphi
            };
            quad::adaptive(ring, &[-1.0, -0.5, 0.0, 0.5, 0.9, 1.0], 1e-300, rel_tol, 400).value
        }
    }
}

/// Δf(x) by second-order central differences with step h.
fn fd_laplacian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> f64 {
    let f0 = f(x);
    let mut y = x.to_vec();
    let mut acc = 0.0;
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let fp = f(&y);
        y[i] = x[i] - h;
        let fm = f(&y);
        y[i] = x[i];
        acc += (fp - 2.0 * f0 + fm) / (h * h);
    }
    acc
}

/// (−Δ)^s f(x) for a function f on R^n (n = x.len() ≤ 3) decaying at
/// infinity. `special` lists points near which f is not smooth (or has
/// its main features); they set the Taylor radius and the ρ-breakpoints.
pub fn fraclap_point<F: Fn(&[f64]) -> f64>(
    f: F,
    s: f64,
    x: &[f64],
    special: &[Vec<f64>],
    opts: FracLapOptions,
) -> Result<FracLapValue> {
    let n = x.len();
    if !(1..=3).contains(&n) {
        return Err(Error::Domain(format!("pointwise quadrature supports n <= 3, got {n}")));
    }
    if special.iter().any(|p| p.len() != n) {
        return Err(Error::Domain("special points must have the dimension of x".into()));
    }
    let c = singular_integral_constant(n, s)?;
    let area = sphere_area(n);
    let mut scale = norm(x).max(1e-300);
    let mut dists = vec![norm(x)];
    for p in special {
        let d = dist(x, p);
        if d == 0.0 {
            return Err(Error::Domain("evaluation point coincides with a special point".into()));
        }
        scale = scale.min(d);
        dists.push(d);
    }
    if norm(x) == 0.0 {
        scale = special.iter().map(|p| dist(x, p)).fold(1.0, f64::min);
    }
    let axis: Vec<f64> = match special.first() {
        Some(p) => p.iter().zip(x).map(|(a, b)| a - b).collect(),
        None => {
            let mut v = vec![0.0; n];
            v[n - 1] = 1.0;
            v
        }
    };
    let inner_tol = 1e-3 * opts.rel_tol.max(1e-13);
    let fx = f(x);
    let a = opts.taylor_fraction * scale;
    let lap = fd_laplacian(&f, x, 1e-2 * a.max(1e-3 * scale));
    let part0 = -area * lap * a.powf(2.0 - 2.0 * s) / ((2.0 - 2.0 * s) * 2.0 * n as f64);
    let bracket = |rho: f64| area * fx - spherical_mean(&f, x, rho, &axis, inner_tol);
    let far_start = 4.0 * dists.iter().fold(scale, |m, &d| m.max(d));
    let mut pts = dists.clone();
    pts.extend(dists.iter().map(|d| 0.5 * d));
    let brk = quad::breakpoints(a, far_start, &pts);
    let near = quad::adaptive(|rho: f64| rho.powf(-1.0 - 2.0 * s) * bracket(rho), &brk, 1e-300, opts.rel_tol, opts.max_panels);
    let far = far_field(bracket, far_start, s, opts);
    Ok(FracLapValue { value: c * (part0 + near.value + far.value), tail: 0.0, error: c * (near.error + far.error) })
}

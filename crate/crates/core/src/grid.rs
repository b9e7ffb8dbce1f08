//! Radial discretization: graded grids, sampled radial functions and the
//! spherical-integral primitive shared by the operator, extension and
//! verification code.
//!
//! A [`RadialFunction`] is a not-a-knot cubic spline through its samples on
//! [r_1, r_M], completed by an explicit model on [0, r_1] ([`InnerModel`]) and
//! a tail model beyond r_M ([`TailModel`]). Anything implementing
//! [`RadialProfile`] (sampled or analytic) can be fed to the quadratures.

use crate::constants::sphere_area;
use crate::error::{Error, Result};
use crate::quad;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

// ═══════════════════════════════════════════════════════════════════
// RadialGrid
// ═══════════════════════════════════════════════════════════════════

/// Largest admissible ratio r_{i+1}/r_i: at least three nodes per octave.
pub const MAX_NODE_RATIO: f64 = 1.259_921_049_894_873_2; // 2^{1/3}

/// Strictly increasing radii r_1 < … < r_M = r_max with r_1 > 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    /// Warp exponent used by [`RadialGrid::graded`] (1 = log-uniform).
    pub grading: f64,
}

impl RadialGrid {
    /// Validates an explicit node list.
    pub fn new(nodes: Vec<f64>, grading: f64) -> Result<Self> {
        if nodes.len() < 4 {
            return Err(Error::Domain("a radial grid needs at least 4 nodes".into()));
        }
        if !(nodes[0] > 0.0) {
            return Err(Error::Domain("first radius must be positive".into()));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::Domain("radii must be strictly increasing and finite".into()));
            }
            if w[1] / w[0] > MAX_NODE_RATIO * (1.0 + 1e-12) {
                return Err(Error::Resolution(format!(
                    "fewer than 3 nodes per octave between {} and {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(RadialGrid { nodes, grading })
    }

    /// Log-uniform grid with `m` nodes from r_min to r_max.
    pub fn log_uniform(r_min: f64, r_max: f64, m: usize) -> Result<Self> {
        Self::graded(r_min, r_max, m, 1.0)
    }

    /// Warped logarithmic grid r_i = r_min (r_max/r_min)^{x_i^g}, x_i = i/(m−1).
    /// g > 1 clusters nodes toward the origin.
    pub fn graded(r_min: f64, r_max: f64, m: usize, grading: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min) || m < 4 || !(grading > 0.0) {
            return Err(Error::Domain("graded grid needs 0 < r_min < r_max, m >= 4, grading > 0".into()));
        }
        let span = (r_max / r_min).ln();
        let mut nodes: Vec<f64> = (0..m)
            .map(|i| {
                let x = i as f64 / (m - 1) as f64;
                r_min * (span * x.powf(grading)).exp()
            })
            .collect();
        nodes[0] = r_min;
        nodes[m - 1] = r_max;
        Self::new(nodes, grading)
    }

    /// Log-uniform grid with (at least) the requested density per decade.
    pub fn per_decade(r_min: f64, r_max: f64, per_decade: usize) -> Result<Self> {
        let decades = (r_max / r_min).log10();
        let m = ((decades * per_decade as f64).ceil() as usize + 1).max(4);
        Self::log_uniform(r_min, r_max, m)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Grid with every radius multiplied by c.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.nodes.iter().map(|r| r * c).collect(), self.grading)
    }

    /// Stable 64-bit FNV-1a hash of the node bit patterns.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for r in &self.nodes {
            for b in r.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

// ═══════════════════════════════════════════════════════════════════
// Profiles
// ═══════════════════════════════════════════════════════════════════

/// Which part of a profile a spherical integral should see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    /// |y| ≤ body radius (sampled region plus inner model).
    Body,
    /// |y| > body radius (tail model only).
    Tail,
}

/// A radial function f(|x|) on R^n that the quadratures can evaluate.
pub trait RadialProfile: Sync {
    /// f(r) (for r beyond the body radius this is the tail model).
    fn value(&self, r: f64) -> f64;

    /// Radius beyond which the profile is given by its tail model.
    fn body_radius(&self) -> f64 {
        f64::INFINITY
    }

    /// Radii at which the profile loses smoothness (used as breakpoints).
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Radial Laplacian f'' + (n−1)f'/r at r > 0.
    fn laplacian(&self, n: usize, r: f64) -> f64 {
        let h = 1e-4 * r;
        let fp = self.value(r + h);
        let fm = self.value(r - h);
        let f0 = self.value(r);
        (fp - 2.0 * f0 + fm) / (h * h) + (n as f64 - 1.0) * (fp - fm) / (2.0 * h * r)
    }

    /// ∫_{S^{n−1}} f(|x + ρω|)·1_{part} dω for |x| = r.
    fn sphere_integral(&self, n: usize, r: f64, rho: f64, part: Part) -> f64 {
        default_sphere_integral(self, n, r, rho, part)
    }
}

fn in_part(w: f64, big_r: f64, part: Part) -> bool {
    match part {
        Part::Body => w <= big_r,
        Part::Tail => w > big_r,
    }
}

/// Quadrature-based spherical integral used by analytic profiles.
pub fn default_sphere_integral<P: RadialProfile + ?Sized>(
    f: &P,
    n: usize,
    r: f64,
    rho: f64,
    part: Part,
) -> f64 {
    sphere_integral_with_knots(f, n, r, rho, part, &f.kinks(), false)
}

/// Points of the fixed panel rule used for piecewise-smooth profiles.
const PANEL_POINTS: usize = 8;
/// Widest γ-panel integrated by a single fixed rule.
const PANEL_WIDTH: f64 = 0.2;

fn panel_rule() -> &'static quad::Rule {
    static RULE: std::sync::OnceLock<quad::Rule> = std::sync::OnceLock::new();
    RULE.get_or_init(|| quad::gauss_legendre(PANEL_POINTS))
}

/// As [`default_sphere_integral`] with explicit breakpoints in |y|; every
/// knot inside (|r−ρ|, r+ρ) becomes a panel boundary of the quadrature.
/// With `fixed`, the profile must be smooth between the knots and each
/// panel (split to width ≤ PANEL_WIDTH) gets one Gauss–Legendre rule
/// instead of adaptive refinement.
fn sphere_integral_with_knots<P: RadialProfile + ?Sized>(
    f: &P,
    n: usize,
    r: f64,
    rho: f64,
    part: Part,
    kinks: &[f64],
    fixed: bool,
) -> f64 {
    let big_r = f.body_radius();
    let g = |w: f64| if in_part(w, big_r, part) { f.value(w) } else { 0.0 };
    if n == 1 {
        // w = 0 has measure zero in the outer integral; skip it so singular
        // inner models are never evaluated at the origin.
        let lo = (r - rho).abs();
        return g(r + rho) + if lo > 0.0 { g(lo) } else { 0.0 };
    }
    if r == 0.0 || rho == 0.0 {
        let w = r + rho;
        return sphere_area(n) * g(w);
    }
    let lo = (r - rho).abs();
    let hi = r + rho;
    let mut knots = kinks.to_vec();
    knots.push(big_r);
    if n == 3 {
        // ∫_{S²} = 2π/(rρ) ∫_{|r−ρ|}^{r+ρ} f(w) w dw
        let (a, b) = match part {
            Part::Body => (lo, hi.min(big_r)),
            Part::Tail => (lo.max(big_r), hi),
        };
        if !(b > a) {
            return 0.0;
        }
        let brk = quad::breakpoints(a, b, &knots);
        let res = quad::adaptive(|w| f.value(w) * w, &brk, 1e-300, 1e-12, 400);
        return 2.0 * PI / (r * rho) * res.value;
    }
    // γ-form: |S^{n−2}| ∫_0^π f(√(r²+ρ²+2rρ cos γ)) sin^{n−2}γ dγ
    let mut gbrk = vec![0.0, PI];
    for k in knots {
        if k > lo && k < hi {
            let c = ((k * k - r * r - rho * rho) / (2.0 * r * rho)).clamp(-1.0, 1.0);
            gbrk.push(c.acos());
        }
    }
    // When the sphere nearly passes through the origin the integrand is
    // sharply peaked at γ = π; grade the panels geometrically towards it.
    let delta_min = (lo / (r * rho).sqrt()).max(1e-10);
    let mut d = 0.5;
    while d > delta_min {
        gbrk.push(PI - d);
        d *= 0.25;
    }
    let brk = quad::breakpoints(0.0, PI, &gbrk);
    let integrand = |gam: f64| {
        // w² = (r−ρ)² + 4rρ cos²(γ/2), free of cancellation near γ = π
        let c = (0.5 * gam).cos();
        let w = (lo * lo + 4.0 * r * rho * c * c).sqrt();
        if w == 0.0 {
            return 0.0;
        }
        g(w) * gam.sin().powi(n as i32 - 2)
    };
    let value = if fixed {
        let rule = panel_rule();
        let mut acc = 0.0;
        for w in brk.windows(2) {
            let pieces = ((w[1] - w[0]) / PANEL_WIDTH).ceil().max(1.0) as usize;
            let h = (w[1] - w[0]) / pieces as f64;
            for k in 0..pieces {
                let c = w[0] + h * (k as f64 + 0.5);
                for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
                    acc += 0.5 * h * wt * integrand(c + 0.5 * h * x);
                }
            }
        }
        acc
    } else {
        quad::adaptive(integrand, &brk, 1e-300, 1e-12, 400).value
    };
    sphere_area(n - 1) * value
}

/// Analytic radial profile given by a closure.
#[derive(Clone)]
pub struct FnProfile {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    kinks: Vec<f64>,
}

impl FnProfile {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        FnProfile { f: Arc::new(f), kinks: Vec::new() }
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }
}

impl RadialProfile for FnProfile {
    fn value(&self, r: f64) -> f64 {
        (self.f)(r)
    }
    fn kinks(&self) -> Vec<f64> {
        self.kinks.clone()
    }
}

// ═══════════════════════════════════════════════════════════════════
// Spline
// ═══════════════════════════════════════════════════════════════════

#[derive(Debug, Clone)]
struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
    /// cum1[i] = ∫_{x_0}^{x_i} f(v) v dv
    cum1: Vec<f64>,
}

impl CubicSpline {
    /// Not-a-knot cubic spline.
    fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        // Unknowns M_1..M_{n−2}; M_0, M_{n−1} eliminated by not-a-knot.
        let k = n - 2;
        let mut a = vec![0.0; k];
        let mut b = vec![0.0; k];
        let mut c = vec![0.0; k];
        let mut d = vec![0.0; k];
        for j in 0..k {
            let i = j + 1;
            a[j] = h[i - 1];
            b[j] = 2.0 * (h[i - 1] + h[i]);
            c[j] = h[i];
            d[j] = 6.0 * (delta[i] - delta[i - 1]);
        }
        // Left: M_0 = (1 + h0/h1) M_1 − (h0/h1) M_2
        let r0 = h[0] / h[1];
        b[0] += h[0] * (1.0 + r0);
        if k > 1 {
            c[0] -= h[0] * r0;
        }
        // Right: M_{n−1} = (1 + h_{n−2}/h_{n−3}) M_{n−2} − (h_{n−2}/h_{n−3}) M_{n−3}
        let rn = h[n - 2] / h[n - 3];
        b[k - 1] += h[n - 2] * (1.0 + rn);
        if k > 1 {
            a[k - 1] -= h[n - 2] * rn;
        }
        let inner = crate::linalg::solve_tridiagonal(&a, &b, &c, &d)?;
        let mut m = vec![0.0; n];
        m[1..n - 1].copy_from_slice(&inner);
        m[0] = (1.0 + r0) * m[1] - r0 * m[2];
        m[n - 1] = (1.0 + rn) * m[n - 2] - rn * m[n - 3];
        let mut sp = CubicSpline { x: x.to_vec(), y: y.to_vec(), m, cum1: vec![0.0; n] };
        for i in 0..n - 1 {
            let seg = sp.moment1_local(i, 0.0, h[i]);
            sp.cum1[i + 1] = sp.cum1[i] + seg;
        }
        Ok(sp)
    }

    fn segment(&self, r: f64) -> usize {
        let i = self.x.partition_point(|&v| v <= r);
        i.saturating_sub(1).min(self.x.len() - 2)
    }

    /// Coefficients (y, b, c, e) of f = y + b d + c d² + e d³, d = r − x_i.
    #[inline]
    fn coeffs(&self, i: usize) -> (f64, f64, f64, f64) {
        let h = self.x[i + 1] - self.x[i];
        let yi = self.y[i];
        let mi = self.m[i];
        let mj = self.m[i + 1];
        let b = (self.y[i + 1] - yi) / h - h * (2.0 * mi + mj) / 6.0;
        (yi, b, 0.5 * mi, (mj - mi) / (6.0 * h))
    }

    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let i = self.segment(r);
        let (y, b, c, e) = self.coeffs(i);
        let d = r - self.x[i];
        (
            y + d * (b + d * (c + d * e)),
            b + d * (2.0 * c + 3.0 * d * e),
            2.0 * c + 6.0 * d * e,
        )
    }

    /// ∫ f(v) v dv over v − x_i ∈ [d0, d1] on segment i.
    fn moment1_local(&self, i: usize, d0: f64, d1: f64) -> f64 {
        let (y, b, c, e) = self.coeffs(i);
        let xi = self.x[i];
        // f·v = xi y + (xi b + y) d + (xi c + b) d² + (xi e + c) d³ + e d⁴
        let p = [xi * y, xi * b + y, xi * c + b, xi * e + c, e];
        let anti = |d: f64| {
            let mut acc = 0.0;
            let mut dp = d;
            for (k, &pk) in p.iter().enumerate() {
                acc += pk * dp / (k as f64 + 1.0);
                dp *= d;
            }
            acc
        };
        anti(d1) - anti(d0)
    }

    /// ∫_{lo}^{hi} f(v) v dv for x_0 ≤ lo ≤ hi ≤ x_{n−1}.
    fn moment1(&self, lo: f64, hi: f64) -> f64 {
        let i0 = self.segment(lo);
        let i1 = self.segment(hi);
        if i0 == i1 {
            return self.moment1_local(i0, lo - self.x[i0], hi - self.x[i0]);
        }
        let head = self.moment1_local(i0, lo - self.x[i0], self.x[i0 + 1] - self.x[i0]);
        let tail = self.moment1_local(i1, 0.0, hi - self.x[i1]);
        let mid = if i1 - i0 <= 8 {
            (i0 + 1..i1).map(|j| self.moment1_local(j, 0.0, self.x[j + 1] - self.x[j])).sum()
        } else {
            self.cum1[i1] - self.cum1[i0 + 1]
        };
        head + mid + tail
    }
}

// ═══════════════════════════════════════════════════════════════════
// Inner and tail models
// ═══════════════════════════════════════════════════════════════════

/// Model of the function on [0, r_1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InnerModel {
    /// a + b r², matching value and slope at r_1 (smooth even functions).
    Even,
    /// c r^{−γ}, exponent fitted on the first nodes (singular profiles).
    PowerLaw,
    /// constant u(r_1).
    Flat,
}

/// Model of the function beyond r_M.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailModel {
    /// Zero beyond r_M (decaying data).
    Zero,
    /// u(r_M) continued as a constant.
    Constant,
    /// c r^{−γ} with γ fitted on the last decade of nodes, continuous at r_M.
    PowerLaw,
    /// c r^{−γ} with prescribed exponent, continuous at r_M.
    PowerLawExponent(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum InnerFit {
    Even { a: f64, b: f64 },
    Power { c: f64, gamma: f64 },
    Flat { a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TailFit {
    Zero,
    Constant { c: f64 },
    Power { c: f64, gamma: f64 },
}

impl TailFit {
    /// ∫_{lo}^{hi} T(v) v dv.
    fn moment1(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            TailFit::Zero => 0.0,
            TailFit::Constant { c } => 0.5 * c * (hi * hi - lo * lo),
            TailFit::Power { c, gamma } => {
                let e = 2.0 - gamma;
                if e.abs() < 1e-12 {
                    c * (hi / lo).ln()
                } else {
                    c * (hi.powf(e) - lo.powf(e)) / e
                }
            }
        }
    }
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

// ═══════════════════════════════════════════════════════════════════
// RadialFunction
// ═══════════════════════════════════════════════════════════════════

/// Samples u(r_i) on a [`RadialGrid`] plus inner and tail models.
#[derive(Debug, Clone)]
pub struct RadialFunction {
    grid: RadialGrid,
    values: Vec<f64>,
    inner: InnerModel,
    tail: TailModel,
    spline: CubicSpline,
    inner_fit: InnerFit,
    tail_fit: TailFit,
}

impl RadialFunction {
    /// Samples with the default models (even inner model, zero tail).
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        Self::with_models(grid, values, InnerModel::Even, TailModel::Zero)
    }

    pub fn with_models(grid: RadialGrid, values: Vec<f64>, inner: InnerModel, tail: TailModel) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("radial function values must be finite".into()));
        }
        let spline = CubicSpline::new(grid.nodes(), &values)?;
        let x = grid.nodes();
        let inner_fit = match inner {
            InnerModel::Even => {
                let (_, d1, _) = spline.eval(x[0]);
                let b = d1 / (2.0 * x[0]);
                InnerFit::Even { a: values[0] - b * x[0] * x[0], b }
            }
            InnerModel::Flat => InnerFit::Flat { a: values[0] },
            InnerModel::PowerLaw => {
                let k = 4.min(values.len());
                if values[..k].iter().any(|v| v * values[0] <= 0.0) {
                    return Err(Error::Domain("power-law inner model needs one-signed data near 0".into()));
                }
                let lx: Vec<f64> = x[..k].iter().map(|r| r.ln()).collect();
                let ly: Vec<f64> = values[..k].iter().map(|v| v.abs().ln()).collect();
                let gamma = -least_squares_slope(&lx, &ly);
                InnerFit::Power { c: values[0] * x[0].powf(gamma), gamma }
            }
        };
        let rm = grid.r_max();
        let last = *values.last().unwrap();
        let tail_fit = match tail {
            TailModel::Zero => TailFit::Zero,
            TailModel::Constant => TailFit::Constant { c: last },
            TailModel::PowerLawExponent(gamma) => TailFit::Power { c: last * rm.powf(gamma), gamma },
            TailModel::PowerLaw => {
                let idx: Vec<usize> = (0..x.len()).filter(|&i| x[i] >= 0.1 * rm).collect();
                let idx = if idx.len() < 3 { (x.len() - 3..x.len()).collect() } else { idx };
                if idx.iter().any(|&i| values[i] * last <= 0.0) {
                    return Err(Error::Truncation("power-law tail needs one-signed data on the last decade".into()));
                }
                let lx: Vec<f64> = idx.iter().map(|&i| x[i].ln()).collect();
                let ly: Vec<f64> = idx.iter().map(|&i| values[i].abs().ln()).collect();
                let gamma = -least_squares_slope(&lx, &ly);
                TailFit::Power { c: last * rm.powf(gamma), gamma }
            }
        };
        Ok(RadialFunction { grid, values, inner, tail, spline, inner_fit, tail_fit })
    }

    /// Samples a closure on the grid.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: RadialGrid, f: F, inner: InnerModel, tail: TailModel) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::with_models(grid, values, inner, tail)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn inner_model(&self) -> InnerModel {
        self.inner
    }

    pub fn tail_model(&self) -> TailModel {
        self.tail
    }

    /// Same models, new samples on the same grid.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::with_models(self.grid.clone(), values, self.inner, self.tail)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Fitted tail exponent γ (u ~ r^{−γ}), if the tail is a power law.
    pub fn tail_exponent(&self) -> Option<f64> {
        match self.tail_fit {
            TailFit::Power { gamma, .. } => Some(gamma),
            _ => None,
        }
    }

    /// Whether the data are negligible at r_max relative to the maximum.
    pub fn decays(&self, rel: f64) -> bool {
        self.values.last().unwrap().abs() <= rel * self.max_abs()
    }

    /// Value, first and second derivative at r.
    pub fn eval_d2(&self, r: f64) -> (f64, f64, f64) {
        let x = self.grid.nodes();
        if r < x[0] {
            return match self.inner_fit {
                InnerFit::Even { a, b } => (a + b * r * r, 2.0 * b * r, 2.0 * b),
                InnerFit::Flat { a } => (a, 0.0, 0.0),
                InnerFit::Power { c, gamma } => {
                    let v = c * r.powf(-gamma);
                    (v, -gamma * v / r, gamma * (gamma + 1.0) * v / (r * r))
                }
            };
        }
        if r > self.grid.r_max() {
            return match self.tail_fit {
                TailFit::Zero => (0.0, 0.0, 0.0),
                TailFit::Constant { c } => (c, 0.0, 0.0),
                TailFit::Power { c, gamma } => {
                    let v = c * r.powf(-gamma);
                    (v, -gamma * v / r, gamma * (gamma + 1.0) * v / (r * r))
                }
            };
        }
        self.spline.eval(r)
    }

    fn inner_moment1(&self, lo: f64, hi: f64) -> f64 {
        let anti = |w: f64| match self.inner_fit {
            InnerFit::Even { a, b } => 0.5 * a * w * w + 0.25 * b * w.powi(4),
            InnerFit::Flat { a } => 0.5 * a * w * w,
            InnerFit::Power { c, gamma } => c * w.powf(2.0 - gamma) / (2.0 - gamma),
        };
        anti(hi) - anti(lo)
    }

    /// ∫_{lo}^{hi} u(v) v dv over the body [0, r_M].
    fn body_moment1(&self, lo: f64, hi: f64) -> f64 {
        let r1 = self.grid.r_min();
        let mut acc = 0.0;
        if lo < r1 {
            acc += self.inner_moment1(lo, hi.min(r1));
        }
        let a = lo.max(r1);
        if hi > a {
            acc += self.spline.moment1(a, hi);
        }
        acc
    }

    /// CSV with header `r,value`.
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["r", "value"])?;
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            w.write_record([format!("{r:e}"), format!("{v:e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a `r,value` CSV.
    pub fn read_csv<P: AsRef<Path>>(path: P, inner: InnerModel, tail: TailModel) -> Result<Self> {
        let mut rd = csv::Reader::from_path(path)?;
        let mut rs = Vec::new();
        let mut vs = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Domain("short CSV record".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Domain(format!("bad number in CSV: {e}")))
            };
            rs.push(parse(0)?);
            vs.push(parse(1)?);
        }
        Self::with_models(RadialGrid::new(rs, 1.0)?, vs, inner, tail)
    }
}

impl RadialProfile for RadialFunction {
    fn value(&self, r: f64) -> f64 {
        self.eval_d2(r).0
    }

    fn body_radius(&self) -> f64 {
        self.grid.r_max()
    }

    fn kinks(&self) -> Vec<f64> {
        vec![self.grid.r_min()]
    }

    fn laplacian(&self, n: usize, r: f64) -> f64 {
        let (_, d1, d2) = self.eval_d2(r);
        d2 + (n as f64 - 1.0) * d1 / r
    }

    fn sphere_integral(&self, n: usize, r: f64, rho: f64, part: Part) -> f64 {
        if r == 0.0 || rho == 0.0 {
            return default_sphere_integral(self, n, r, rho, part);
        }
        if n != 3 {
            // The spline is only C² at its nodes: use them as breakpoints so
            // every panel integrand is smooth.
            let (lo, hi) = ((r - rho).abs(), r + rho);
            let x = self.grid.nodes();
            let a = x.partition_point(|&v| v <= lo);
            let b = x.partition_point(|&v| v < hi);
            let mut knots = vec![self.grid.r_min()];
            if part == Part::Body {
                knots.extend_from_slice(&x[a..b]);
            }
            return sphere_integral_with_knots(self, n, r, rho, part, &knots, true);
        }
        let big_r = self.grid.r_max();
        let lo = (r - rho).abs();
        let hi = r + rho;
        let m = match part {
            Part::Body => {
                if lo >= big_r {
                    0.0
                } else {
                    self.body_moment1(lo, hi.min(big_r))
                }
            }
            Part::Tail => {
                let a = lo.max(big_r);
                if hi > a {
                    self.tail_fit.moment1(a, hi)
                } else {
                    0.0
                }
            }
        };
        2.0 * PI / (r * rho) * m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants_enforced() {
        assert!(RadialGrid::new(vec![1.0, 2.0, 3.0, 4.0], 1.0).is_err());
        assert!(RadialGrid::new(vec![0.0, 0.1, 0.11, 0.12], 1.0).is_err());
        let g = RadialGrid::log_uniform(1e-3, 10.0, 200).unwrap();
        assert_eq!(g.len(), 200);
        assert!((g.r_max() - 10.0).abs() < 1e-12);
        assert!(RadialGrid::log_uniform(1e-3, 10.0, 20).is_err());
    }

    #[test]
    fn spline_reproduces_cubics() {
        let g = RadialGrid::log_uniform(0.01, 5.0, 80).unwrap();
        let f = |r: f64| 1.0 - 0.5 * r + 0.25 * r * r - 0.1 * r * r * r;
        let u = RadialFunction::from_fn(g, f, InnerModel::Even, TailModel::Zero).unwrap();
        for &r in &[0.0137, 0.5, 1.234, 4.9] {
            let (v, d1, d2) = u.eval_d2(r);
            assert!((v - f(r)).abs() < 1e-12);
            assert!((d1 - (-0.5 + 0.5 * r - 0.3 * r * r)).abs() < 1e-10);
            assert!((d2 - (0.5 - 0.6 * r)).abs() < 1e-9);
        }
    }

    #[test]
    fn n3_sphere_integral_matches_quadrature() {
        let g = RadialGrid::log_uniform(1e-3, 12.0, 400).unwrap();
        let f = |r: f64| (-r * r).exp();
        let u = RadialFunction::from_fn(g, f, InnerModel::Even, TailModel::Zero).unwrap();
        let an = FnProfile::new(f);
        for &(r, rho) in &[(1.0, 0.3), (0.5, 2.0), (2.0, 1.99), (0.01, 0.02)] {
            let a = u.sphere_integral(3, r, rho, Part::Body);
            let b = an.sphere_integral(3, r, rho, Part::Body);
            assert!((a - b).abs() < 1e-6 * b.abs().max(1e-300), "{r} {rho}: {a} {b}");
        }
    }

    #[test]
    fn power_law_models_are_fitted() {
        let g = RadialGrid::log_uniform(1e-3, 1e3, 300).unwrap();
        let u = RadialFunction::from_fn(g, |r| r.powf(-1.3), InnerModel::PowerLaw, TailModel::PowerLaw).unwrap();
        assert!((u.value(1e-4) - 1e-4f64.powf(-1.3)).abs() < 1e-9 * 1e-4f64.powf(-1.3));
        assert!((u.value(1e5) - 1e5f64.powf(-1.3)).abs() < 1e-9 * 1e5f64.powf(-1.3));
        assert!((u.tail_exponent().unwrap() - 1.3).abs() < 1e-12);
    }
}

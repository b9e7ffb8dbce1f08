//! The Caffarelli–Silvestre extension of radial functions.
//!
//! * [`poisson_extend`] — U = P_s ∗ u by radial quadrature,
//! * [`weighted_flux`] — −lim t^{1−2s}∂_tU from a boundary-layer fit,
//! * [`solve_degenerate`] — finite-volume solver for div(t^{1−2s}∇U) = 0 with
//!   a nonlinear flux condition at t = 0 (Picard iteration),
//! * [`extension_energy`] — ∫ t^{1−2s}|∇U|² over the truncated half-strip.
//!
//! Fields are radial in x and live on a [`HalfStripGrid`] (|x|, t). The
//! boundary row t = 0 is stored separately as the trace.

use crate::constants::{kappa_s, poisson_normalizer, sphere_area};
use crate::error::{Error, Result};
use crate::grid::{Part, RadialFunction, RadialGrid, RadialProfile, TailModel};
use crate::linalg::BandedSym;
use crate::quad;
use serde::{Deserialize, Serialize};
use std::path::Path;

// ═══════════════════════════════════════════════════════════════════
// HalfStripGrid
// ═══════════════════════════════════════════════════════════════════

/// Tensor grid of radii (a [`RadialGrid`]) and heights 0 < t_1 < … < t_N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfStripGrid {
    pub radial: RadialGrid,
    t_nodes: Vec<f64>,
}

impl HalfStripGrid {
    /// Validates explicit heights: increasing, t_1 > 0, and at least 8 of
    /// them below 0.01·t_max so the t^{2s} boundary layer is resolved.
    pub fn new(radial: RadialGrid, t_nodes: Vec<f64>) -> Result<Self> {
        if t_nodes.len() < 10 {
            return Err(Error::Domain("a half-strip grid needs at least 10 heights".into()));
        }
        if !(t_nodes[0] > 0.0) {
            return Err(Error::Domain("first height must be positive".into()));
        }
        if t_nodes.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::Domain("heights must be strictly increasing and finite".into()));
        }
        let t_max = *t_nodes.last().unwrap();
        let low = t_nodes.iter().filter(|&&t| t < 0.01 * t_max).count();
        if low < 8 {
            return Err(Error::Resolution(format!(
                "only {low} heights below 0.01·t_max; at least 8 are required"
            )));
        }
        Ok(HalfStripGrid { radial, t_nodes })
    }

    /// Geometric heights from t_min to t_max.
    pub fn geometric(radial: RadialGrid, t_min: f64, t_max: f64, nt: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min) || nt < 2 {
            return Err(Error::Domain("geometric heights need 0 < t_min < t_max".into()));
        }
        let q = (t_max / t_min).powf(1.0 / (nt - 1) as f64);
        let mut t: Vec<f64> = (0..nt).map(|j| t_min * q.powi(j as i32)).collect();
        t[nt - 1] = t_max;
        Self::new(radial, t)
    }

    /// Algebraically graded heights t_j = t_max (j/N)^γ, j = 1..N.
    pub fn graded(radial: RadialGrid, t_max: f64, nt: usize, gamma_t: f64) -> Result<Self> {
        if !(t_max > 0.0 && gamma_t >= 1.0) {
            return Err(Error::Domain("graded heights need t_max > 0 and γ_t ≥ 1".into()));
        }
        let t = (1..=nt).map(|j| t_max * (j as f64 / nt as f64).powf(gamma_t)).collect();
        Self::new(radial, t)
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t_nodes
    }

    pub fn nr(&self) -> usize {
        self.radial.len()
    }

    pub fn nt(&self) -> usize {
        self.t_nodes.len()
    }

    pub fn r_max(&self) -> f64 {
        self.radial.r_max()
    }

    pub fn t_max(&self) -> f64 {
        *self.t_nodes.last().unwrap()
    }

    /// Heights including the boundary level t = 0.
    fn levels(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.t_nodes.iter().cloned()).collect()
    }
}

// ═══════════════════════════════════════════════════════════════════
// ExtensionField
// ═══════════════════════════════════════════════════════════════════

/// How a field was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Convolved,
    Solved,
    Sampled,
}

/// Values U(r_i, t_j) plus the trace U(r_i, 0).
#[derive(Debug, Clone)]
pub struct ExtensionField {
    pub grid: HalfStripGrid,
    /// Row-major: `values[i * nt + j]` = U(r_i, t_j).
    pub values: Vec<f64>,
    /// U(r_i, 0).
    pub trace: Vec<f64>,
    pub provenance: Provenance,
    /// Per-point kernel-mass deficit of the convolution (empty otherwise).
    pub mass_deficit: Vec<f64>,
}

impl ExtensionField {
    /// Samples U(r, t) (t = 0 for the trace).
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &HalfStripGrid, f: F) -> Self {
        let r = grid.radial.nodes();
        let t = grid.t_nodes();
        let mut values = Vec::with_capacity(r.len() * t.len());
        for &ri in r {
            for &tj in t {
                values.push(f(ri, tj));
            }
        }
        let trace = r.iter().map(|&ri| f(ri, 0.0)).collect();
        ExtensionField { grid: grid.clone(), values, trace, provenance: Provenance::Sampled, mass_deficit: Vec::new() }
    }

    /// U at grid node (i, level), level 0 being the trace.
    #[inline]
    pub fn at_level(&self, i: usize, level: usize) -> f64 {
        if level == 0 {
            self.trace[i]
        } else {
            self.values[i * self.grid.nt() + level - 1]
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.nt() + j]
    }

    /// Maximum deviation between the trace and the first height row,
    /// relative to max|trace|.
    pub fn trace_consistency(&self) -> f64 {
        let m = self.trace.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        (0..self.grid.nr())
            .map(|i| (self.get(i, 0) - self.trace[i]).abs())
            .fold(0.0, f64::max)
            / m
    }

    /// Linear combination a·self + b·other on the same grid.
    pub fn combine(&self, a: f64, other: &ExtensionField, b: f64) -> Result<ExtensionField> {
        if self.grid != other.grid {
            return Err(Error::Domain("fields live on different grids".into()));
        }
        let mut out = self.clone();
        for (x, y) in out.values.iter_mut().zip(&other.values) {
            *x = a * *x + b * y;
        }
        for (x, y) in out.trace.iter_mut().zip(&other.trace) {
            *x = a * *x + b * y;
        }
        out.provenance = Provenance::Sampled;
        Ok(out)
    }

    /// Trace as a [`RadialFunction`].
    pub fn trace_function(&self, tail: TailModel) -> Result<RadialFunction> {
        RadialFunction::with_models(self.grid.radial.clone(), self.trace.clone(), crate::grid::InnerModel::Even, tail)
    }

    /// Local tensor-product cubic interpolation in (r, τ = t^{2s}), with the
    /// even reflection r ↦ −r below r_1. Returns (U, ∂_rU, ∂_tU), or `None`
    /// outside the grid.
    pub fn eval_with_grad(&self, s: f64, r: f64, t: f64) -> Option<(f64, f64, f64)> {
        let rn = self.grid.radial.nodes();
        let levels = self.grid.levels();
        if !(r >= 0.0 && r <= self.grid.r_max() && t >= 0.0 && t <= self.grid.t_max()) {
            return None;
        }
        // Radial stencil: 4 abscissae around r, using mirrored nodes near 0.
        let mirrored = |k: isize| -> (f64, usize) {
            if k < 0 {
                let m = (-k - 1) as usize;
                (-rn[m], m)
            } else {
                (rn[k as usize], k as usize)
            }
        };
        let pos = rn.partition_point(|&x| x <= r) as isize; // rn[pos-1] <= r < rn[pos]
        let mut k0 = pos - 2;
        let nr = rn.len() as isize;
        if k0 + 3 > nr - 1 {
            k0 = nr - 4;
        }
        let rs: Vec<(f64, usize)> = (0..4).map(|q| mirrored(k0 + q)).collect();
        // Height stencil in τ = t^{2s}.
        let two_s = 2.0 * s;
        let tau = t.powf(two_s);
        let lt = levels.len();
        let posj = levels.partition_point(|&x| x <= t);
        let mut j0 = posj as isize - 2;
        j0 = j0.clamp(0, lt as isize - 4);
        let js: Vec<usize> = (0..4).map(|q| (j0 + q) as usize).collect();
        let taus: Vec<f64> = js.iter().map(|&j| levels[j].powf(two_s)).collect();
        let (lr, dlr) = lagrange(&rs.iter().map(|x| x.0).collect::<Vec<_>>(), r);
        let (lt_w, dlt) = lagrange(&taus, tau);
        let mut u = 0.0;
        let mut ur = 0.0;
        let mut utau = 0.0;
        for (a, &(_, i)) in rs.iter().enumerate() {
            for (b, &j) in js.iter().enumerate() {
                let v = self.at_level(i, j);
                u += lr[a] * lt_w[b] * v;
                ur += dlr[a] * lt_w[b] * v;
                utau += lr[a] * dlt[b] * v;
            }
        }
        let ut = if t > 0.0 { utau * two_s * t.powf(two_s - 1.0) } else { f64::NAN };
        Some((u, ur, ut))
    }

    /// Interpolated value (see [`ExtensionField::eval_with_grad`]).
    pub fn eval(&self, s: f64, r: f64, t: f64) -> Option<f64> {
        self.eval_with_grad(s, r, t).map(|v| v.0)
    }

    /// CSV with header `r,t,value` (trace rows have t = 0).
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["r", "t", "value"])?;
        let levels = self.grid.levels();
        for (i, r) in self.grid.radial.nodes().iter().enumerate() {
            for (j, t) in levels.iter().enumerate() {
                w.write_record([format!("{r:e}"), format!("{t:e}"), format!("{:e}", self.at_level(i, j))])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Lagrange basis values and derivatives at x for the given abscissae.
fn lagrange(xs: &[f64], x: f64) -> (Vec<f64>, Vec<f64>) {
    let m = xs.len();
    let mut l = vec![0.0; m];
    let mut d = vec![0.0; m];
    for a in 0..m {
        let mut num = 1.0;
        let mut den = 1.0;
        let mut dsum = 0.0;
        for b in 0..m {
            if b != a {
                num *= x - xs[b];
                den *= xs[a] - xs[b];
            }
        }
        for b in 0..m {
            if b != a {
                let mut p = 1.0;
                for c in 0..m {
                    if c != a && c != b {
                        p *= x - xs[c];
                    }
                }
                dsum += p;
            }
        }
        l[a] = num / den;
        d[a] = dsum / den;
    }
    (l, d)
}

// ═══════════════════════════════════════════════════════════════════
// Poisson extension
// ═══════════════════════════════════════════════════════════════════

/// Options for the convolution quadrature.
#[derive(Debug, Clone, Copy)]
pub struct PoissonOptions {
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Radius of the Taylor-model ball around x as a fraction of r.
    pub taylor_fraction: f64,
}

impl Default for PoissonOptions {
    fn default() -> Self {
        PoissonOptions { rel_tol: 1e-10, max_panels: 4000, taylor_fraction: 1e-3 }
    }
}

/// Indicator of |y| > R, used for the kernel-mass bookkeeping.
struct Outside(f64);

impl RadialProfile for Outside {
    fn value(&self, r: f64) -> f64 {
        if r > self.0 {
            1.0
        } else {
            0.0
        }
    }
    fn kinks(&self) -> Vec<f64> {
        vec![self.0]
    }
}

/// U(x, t) − u(x) for |x| = r, t > 0, written in polar coordinates around x:
///
/// ```text
/// U − u = ι t^{2s} ∫_0^∞ ρ^{n−1}(ρ²+t²)^{−(n+2s)/2} [A(r,ρ) − |S^{n−1}|u(r)] dρ
/// ```
///
/// with A the spherical integral of u (body and tail model).
pub fn poisson_increment<P: RadialProfile + ?Sized>(
    u: &P,
    n: usize,
    s: f64,
    r: f64,
    t: f64,
    opts: PoissonOptions,
) -> Result<f64> {
    let iota = poisson_normalizer(n, s)?;
    let area = sphere_area(n);
    let fr = u.value(r);
    let big_r = u.body_radius();
    let e = 0.5 * (n as f64 + 2.0 * s);
    let nf = n as f64;
    let kernel = |rho: f64| rho.powf(nf - 1.0) * (rho * rho + t * t).powf(-e);
    let full = |rho: f64| u.sphere_integral(n, r, rho, Part::Body) + u.sphere_integral(n, r, rho, Part::Tail);

    let mut a = opts.taylor_fraction * r;
    let kinks = u.kinks();
    for &k in kinks.iter().chain(std::iter::once(&big_r)) {
        let d = (r - k).abs();
        if d > 0.0 && d < 4.0 * a {
            a = a.min(0.25 * d);
        }
    }
    // Taylor part: A − |S|u ≈ |S|Δu ρ²/(2n).
    let lap = u.laplacian(n, r);
    let taylor = quad::adaptive(
        |rho| kernel(rho) * rho * rho,
        &quad::breakpoints(0.0, a, &[t]),
        1e-300,
        1e-12,
        200,
    );
    let mut acc = area * lap / (2.0 * nf) * taylor.value;

    let mut pts = vec![t];
    for &k in kinks.iter().chain([0.0, big_r].iter()) {
        if k.is_finite() {
            pts.push((r - k).abs());
            pts.push(r + k);
        }
    }
    let b = if big_r.is_finite() {
        big_r + r
    } else {
        let kmax = kinks.iter().fold(0.0f64, |m, &k| m.max(k));
        (4.0 * r).max(2.0 * (kmax + r)).max(4.0 * t)
    };
    let brk = quad::breakpoints(a, b, &pts);
    let mid = quad::adaptive(|rho| kernel(rho) * (full(rho) - area * fr), &brk, 1e-300, opts.rel_tol, opts.max_panels);
    acc += mid.value;
    // Far field ρ > b, with ρ = b w^{−1/(2s)}: ρ^{n−1}(ρ²+t²)^{−e}dρ = ρ^{−1−2s}(1+t²/ρ²)^{−e}dρ.
    let scale = b.powf(-2.0 * s) / (2.0 * s);
    let far = quad::adaptive(
        |w: f64| {
            if w <= 0.0 {
                return 0.0;
            }
            let rho = b * w.powf(-1.0 / (2.0 * s));
            (1.0 + t * t / (rho * rho)).powf(-e) * (full(rho) - area * fr)
        },
        &[0.0, 1e-6, 1e-3, 0.1, 1.0],
        1e-300,
        opts.rel_tol,
        opts.max_panels,
    );
    acc += scale * far.value;
    Ok(iota * t.powf(2.0 * s) * acc)
}

/// Fraction of the Poisson kernel at (r, t) falling outside |y| ≤ R.
pub fn kernel_mass_outside(n: usize, s: f64, r: f64, t: f64, big_r: f64) -> Result<f64> {
    let iota = poisson_normalizer(n, s)?;
    let ind = Outside(big_r);
    let e = 0.5 * (n as f64 + 2.0 * s);
    let nf = n as f64;
    let lo = (big_r - r).max(0.0);
    let hi = big_r + r;
    let brk = quad::breakpoints(lo, hi, &[t]);
    let near = quad::adaptive(
        |rho| rho.powf(nf - 1.0) * (rho * rho + t * t).powf(-e) * ind.sphere_integral(n, r, rho, Part::Body),
        &brk,
        1e-300,
        1e-8,
        400,
    );
    // Beyond R + r the whole sphere lies outside.
    let area = sphere_area(n);
    let far = quad::adaptive(
        |w: f64| {
            if w <= 0.0 {
                return 0.0;
            }
            let rho = hi * w.powf(-1.0 / (2.0 * s));
            (1.0 + t * t / (rho * rho)).powf(-e) * area
        },
        &[0.0, 1e-3, 1.0],
        1e-300,
        1e-8,
        200,
    );
    Ok(iota * t.powf(2.0 * s) * (near.value + hi.powf(-2.0 * s) / (2.0 * s) * far.value))
}

/// U = P_s ∗ u sampled on the half-strip grid. The kernel-mass deficit
/// (mass of P_s(x−·, t) beyond r_max) is recorded per point; the tail model
/// of u supplies the data out there.
pub fn poisson_extend(u: &RadialFunction, n: usize, s: f64, grid: &HalfStripGrid) -> Result<ExtensionField> {
    poisson_extend_with(u, n, s, grid, PoissonOptions::default())
}

pub fn poisson_extend_with(
    u: &RadialFunction,
    n: usize,
    s: f64,
    grid: &HalfStripGrid,
    opts: PoissonOptions,
) -> Result<ExtensionField> {
    if u.tail_model() == TailModel::Zero && !u.decays(1e-6) {
        return Err(Error::Truncation("extension of data that do not decay at r_max".into()));
    }
    let rn = grid.radial.nodes();
    let tn = grid.t_nodes();
    let big_r = u.grid().r_max();
    let mut values = Vec::with_capacity(rn.len() * tn.len());
    let mut deficit = Vec::with_capacity(rn.len() * tn.len());
    for &r in rn {
        let ur = u.value(r);
        for &t in tn {
            values.push(ur + poisson_increment(u, n, s, r, t, opts)?);
            deficit.push(kernel_mass_outside(n, s, r, t, big_r)?);
        }
    }
    let trace = rn.iter().map(|&r| u.value(r)).collect();
    Ok(ExtensionField { grid: grid.clone(), values, trace, provenance: Provenance::Convolved, mass_deficit: deficit })
}

/// Number of grid points whose kernel mass inside r_max is below 0.999.
pub fn truncation_flags(field: &ExtensionField) -> usize {
    field.mass_deficit.iter().filter(|&&d| d > 1e-3).count()
}

// ═══════════════════════════════════════════════════════════════════
// Weighted flux
// ═══════════════════════════════════════════════════════════════════

/// −lim t^{1−2s}∂_tU per radius, with fit diagnostics.
#[derive(Debug, Clone)]
pub struct FluxResult {
    pub flux: RadialFunction,
    /// max_j |misfit_j| / (|c| t_j^{2s}) over the fitted heights.
    pub residual: Vec<f64>,
    /// Radii whose residual exceeds 10% (unreliable flux).
    pub unreliable: Vec<usize>,
}

/// Number of smallest heights used by the boundary-layer fit.
pub const FLUX_FIT_NODES: usize = 6;

/// Fits U(r,t) − U(r,0) ≈ c t^{2s} + d t² on the smallest heights and returns
/// −2s·c = −lim t^{1−2s}∂_tU.
pub fn weighted_flux(field: &ExtensionField, s: f64) -> Result<FluxResult> {
    let tn = field.grid.t_nodes();
    let k = FLUX_FIT_NODES.min(tn.len());
    let low = tn.iter().filter(|&&t| t < 0.01 * field.grid.t_max()).count();
    if low < 3 {
        return Err(Error::Resolution("fewer than 3 heights below 0.01·t_max".into()));
    }
    let nr = field.grid.nr();
    let mut flux = Vec::with_capacity(nr);
    let mut residual = Vec::with_capacity(nr);
    let mut unreliable = Vec::new();
    let two_s = 2.0 * s;
    for i in 0..nr {
        // Least squares in the scaled basis (t/t_k)^{2s}, (t/t_k)².
        let tk = tn[k - 1];
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut dmax = 0.0f64;
        for (j, &t) in tn[..k].iter().enumerate() {
            let x1 = (t / tk).powf(two_s);
            let x2 = (t / tk).powi(2);
            let d = field.get(i, j) - field.trace[i];
            dmax = dmax.max(d.abs());
            a11 += x1 * x1;
            a12 += x1 * x2;
            a22 += x2 * x2;
            b1 += x1 * d;
            b2 += x2 * d;
        }
        let det = a11 * a22 - a12 * a12;
        let (c1, c2) = if det.abs() > 1e-14 * a11 * a22 {
            ((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det)
        } else {
            (b1 / a11, 0.0)
        };
        let c = c1 / tk.powf(two_s);
        let mut res = 0.0f64;
        for (j, &t) in tn[..k].iter().enumerate() {
            let x1 = (t / tk).powf(two_s);
            let x2 = (t / tk).powi(2);
            let d = field.get(i, j) - field.trace[i];
            let lead = (c * t.powf(two_s)).abs();
            let mis = (d - c1 * x1 - c2 * x2).abs();
            if lead > 0.0 {
                res = res.max(mis / lead);
            } else if mis > 1e-14 * dmax.max(1e-300) {
                res = f64::INFINITY;
            }
        }
        if res > 0.1 {
            unreliable.push(i);
        }
        residual.push(res);
        flux.push(-two_s * c);
    }
    let flux = RadialFunction::with_models(
        field.grid.radial.clone(),
        flux,
        crate::grid::InnerModel::Even,
        TailModel::Zero,
    )?;
    Ok(FluxResult { flux, residual, unreliable })
}

// ═══════════════════════════════════════════════════════════════════
// Finite-volume solver
// ═══════════════════════════════════════════════════════════════════

/// Boundary flux −lim t^{1−2s}∂_tU = κ_s(λ|x|^{−α}U + c_p|U|^{p−1}U) + f(x).
#[derive(Debug, Clone)]
pub struct FluxModel {
    pub lambda: f64,
    pub alpha: f64,
    pub p: f64,
    /// Coefficient c_p of the power nonlinearity (1 for the model equation,
    /// 0 to switch it off).
    pub power_coeff: f64,
    /// Prescribed flux f(r_i) on the radial nodes (already including any κ_s).
    pub forcing: Option<Vec<f64>>,
}

impl FluxModel {
    pub fn new(lambda: f64, alpha: f64, p: f64) -> Self {
        FluxModel { lambda, alpha, p, power_coeff: 1.0, forcing: None }
    }

    /// Pure prescribed flux (no potential, no nonlinearity).
    pub fn prescribed(forcing: Vec<f64>) -> Self {
        FluxModel { lambda: 0.0, alpha: 1.0, p: 1.0, power_coeff: 0.0, forcing: Some(forcing) }
    }
}

/// Dirichlet data on the artificial boundary.
#[derive(Debug, Clone)]
pub struct OuterData {
    /// U(r_max, t) at the levels 0, t_1, …, t_N.
    pub right: Vec<f64>,
    /// U(r_i, t_max) for every radius.
    pub top: Vec<f64>,
}

impl OuterData {
    pub fn zero(grid: &HalfStripGrid) -> Self {
        OuterData { right: vec![0.0; grid.nt() + 1], top: vec![0.0; grid.nr()] }
    }

    /// Boundary values of a reference field.
    pub fn from_field(field: &ExtensionField) -> Self {
        let nr = field.grid.nr();
        let nt = field.grid.nt();
        let right = (0..=nt).map(|l| field.at_level(nr - 1, l)).collect();
        let top = (0..nr).map(|i| field.get(i, nt - 1)).collect();
        OuterData { right, top }
    }
}

/// Picard options.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub relaxation: f64,
    /// Recompute the outer data from the Poisson extension of the current
    /// trace every `refresh_every` iterations (0 = never).
    pub refresh_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iter: 500, tol: 1e-8, relaxation: 0.5, refresh_every: 0 }
    }
}

/// Solution of [`solve_degenerate`].
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub field: ExtensionField,
    /// Relative change per Picard iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
    /// Non-positive pivots met in any linearization (indefinite system).
    pub indefinite: bool,
}

/// Two-point finite-volume conductances of div(r^{n−1}t^{1−2s}∇U).
struct Stencil {
    /// Radial face (i, i+1) at level l: `tr[l][i]`.
    tr: Vec<Vec<f64>>,
    /// Height face (l, l+1) at radius i: `tt[i][l]`.
    tt: Vec<Vec<f64>>,
    /// ∫_cell r^{n−1} dr.
    wr: Vec<f64>,
    /// ∫_cell r^{n−1−α} dr.
    wr_alpha: Vec<f64>,
}

fn r_cells(r: &[f64]) -> Vec<(f64, f64)> {
    let m = r.len();
    (0..m)
        .map(|i| {
            let lo = if i == 0 { 0.0 } else { 0.5 * (r[i - 1] + r[i]) };
            let hi = if i + 1 == m { r[i] } else { 0.5 * (r[i] + r[i + 1]) };
            (lo, hi)
        })
        .collect()
}

fn stencil(grid: &HalfStripGrid, n: usize, s: f64, alpha: f64) -> Stencil {
    let r = grid.radial.nodes();
    let lv = grid.levels();
    let nf = n as f64;
    let cells = r_cells(r);
    let wr: Vec<f64> = cells.iter().map(|&(a, b)| (b.powf(nf) - a.powf(nf)) / nf).collect();
    let wr_alpha: Vec<f64> = cells
        .iter()
        .map(|&(a, b)| {
            let e = nf - alpha;
            (b.powf(e) - a.powf(e)) / e
        })
        .collect();
    // ∫_{r_i}^{r_{i+1}} ρ^{1−n} dρ
    let inv_r: Vec<f64> = r
        .windows(2)
        .map(|w| if n == 2 { (w[1] / w[0]).ln() } else { (w[1].powf(2.0 - nf) - w[0].powf(2.0 - nf)) / (2.0 - nf) })
        .collect();
    let two_s = 2.0 * s;
    let tcell = |l: usize| -> (f64, f64) {
        let lo = if l == 0 { 0.0 } else { 0.5 * (lv[l - 1] + lv[l]) };
        let hi = if l + 1 == lv.len() { lv[l] } else { 0.5 * (lv[l] + lv[l + 1]) };
        (lo, hi)
    };
    let wt: Vec<f64> = (0..lv.len())
        .map(|l| {
            let (a, b) = tcell(l);
            (b.powf(2.0 - two_s) - a.powf(2.0 - two_s)) / (2.0 - two_s)
        })
        .collect();
    let tr = (0..lv.len()).map(|l| inv_r.iter().map(|ir| wt[l] / ir).collect()).collect();
    let tt = (0..r.len())
        .map(|i| lv.windows(2).map(|w| wr[i] * two_s / (w[1].powf(two_s) - w[0].powf(two_s))).collect())
        .collect();
    Stencil { tr, tt, wr, wr_alpha }
}

/// Solves div(t^{1−2s}∇U) = 0 in (0, r_max) × (0, t_max), radial in x, with
/// the flux condition of `model` at t = 0 and Dirichlet `outer` data at
/// r = r_max and t = t_max. The power term is frozen at the previous iterate
/// (Picard), the update relaxed, and iteration stops when the relative
/// change drops below `opts.tol`.
pub fn solve_degenerate(
    model: &FluxModel,
    outer: &OuterData,
    grid: &HalfStripGrid,
    n: usize,
    s: f64,
    initial: Option<&ExtensionField>,
    opts: SolverOptions,
) -> Result<SolveResult> {
    let nr = grid.nr();
    let nt = grid.nt();
    if outer.right.len() != nt + 1 || outer.top.len() != nr {
        return Err(Error::Domain("outer data do not match the grid".into()));
    }
    if let Some(f) = &model.forcing {
        if f.len() != nr {
            return Err(Error::Domain("forcing must be given on every radius".into()));
        }
    }
    if model.lambda != 0.0 && !(model.alpha > 0.0 && model.alpha < n as f64) {
        return Err(Error::InvalidParams("potential exponent must satisfy 0 < α < n".into()));
    }
    let kappa = kappa_s(s)?;
    let st = stencil(grid, n, s, model.alpha);
    let mut outer = outer.clone();
    // Unknowns: radii 0..nr−1 (exclusive of r_max), levels 0..nt (exclusive of t_max).
    let ur = nr - 1;
    let ul = nt;
    let idx = |i: usize, l: usize| i * ul + l;
    let nunk = ur * ul;
    let mut u: Vec<f64> = match initial {
        Some(f) => {
            let mut v = vec![0.0; nunk];
            for i in 0..ur {
                for l in 0..ul {
                    v[idx(i, l)] = f.at_level(i, l);
                }
            }
            v
        }
        None => vec![0.0; nunk],
    };
    let nonlinear = model.power_coeff != 0.0 && model.p != 1.0;
    let mut history = Vec::new();
    let mut indefinite = false;
    let mut iterations = 0;
    let max_iter = if nonlinear { opts.max_iter.max(1) } else { 1 };
    for it in 0..max_iter {
        if opts.refresh_every > 0 && it > 0 && it % opts.refresh_every == 0 {
            outer = refresh_outer(&u, idx, grid, n, s, &outer)?;
        }
        let mut a = BandedSym::zeros(nunk, ul);
        let mut rhs = vec![0.0; nunk];
        for i in 0..ur {
            for l in 0..ul {
                let c = idx(i, l);
                // radial faces
                if i > 0 {
                    let tface = st.tr[l][i - 1];
                    a.add(c, c, tface);
                    a.add(c, idx(i - 1, l), -tface);
                }
                let tface = st.tr[l][i];
                a.add(c, c, tface);
                if i + 1 < ur {
                    // neighbour added once from its own row
                } else {
                    rhs[c] += tface * outer.right[l];
                }
                // height faces
                if l > 0 {
                    let tf = st.tt[i][l - 1];
                    a.add(c, c, tf);
                    a.add(c, idx(i, l - 1), -tf);
                }
                let tf = st.tt[i][l];
                a.add(c, c, tf);
                if l + 1 == ul {
                    rhs[c] += tf * outer.top[i];
                }
                if l == 0 {
                    if model.lambda != 0.0 {
                        a.add(c, c, -kappa * model.lambda * st.wr_alpha[i]);
                    }
                    if model.power_coeff != 0.0 {
                        let uo = u[c].abs();
                        let frozen = if model.p == 1.0 { 1.0 } else { uo.powf(model.p - 1.0) };
                        a.add(c, c, -kappa * model.power_coeff * frozen * st.wr[i]);
                    }
                    if let Some(f) = &model.forcing {
                        rhs[c] += st.wr[i] * f[i];
                    }
                }
            }
        }
        let (fac, nonpos) = a.ldlt()?;
        if nonpos > 0 {
            indefinite = true;
        }
        let new = fac.solve(&rhs);
        iterations = it + 1;
        if !nonlinear {
            u = new;
            history.push(0.0);
            break;
        }
        let w = if it == 0 && initial.is_none() { 1.0 } else { opts.relaxation };
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..nunk {
            let upd = w * new[k] + (1.0 - w) * u[k];
            num += (upd - u[k]).powi(2);
            den += upd * upd;
            u[k] = upd;
        }
        let change = (num / den.max(1e-300)).sqrt();
        history.push(change);
        if !change.is_finite() {
            return Err(Error::Divergence { iterations, last_change: change, history });
        }
        if change <= opts.tol {
            break;
        }
        if it + 1 == max_iter {
            return Err(Error::Divergence { iterations, last_change: change, history });
        }
    }
    let field = assemble_field(&u, idx, grid, &outer, Provenance::Solved);
    Ok(SolveResult { field, history, iterations, indefinite })
}

fn assemble_field<I: Fn(usize, usize) -> usize>(
    u: &[f64],
    idx: I,
    grid: &HalfStripGrid,
    outer: &OuterData,
    provenance: Provenance,
) -> ExtensionField {
    let nr = grid.nr();
    let nt = grid.nt();
    let level = |i: usize, l: usize| -> f64 {
        if i == nr - 1 {
            outer.right[l]
        } else if l == nt {
            outer.top[i]
        } else {
            u[idx(i, l)]
        }
    };
    let mut values = Vec::with_capacity(nr * nt);
    for i in 0..nr {
        for l in 1..=nt {
            values.push(level(i, l));
        }
    }
    let trace = (0..nr).map(|i| level(i, 0)).collect();
    ExtensionField { grid: grid.clone(), values, trace, provenance, mass_deficit: Vec::new() }
}

fn refresh_outer<I: Fn(usize, usize) -> usize + Copy>(
    u: &[f64],
    idx: I,
    grid: &HalfStripGrid,
    n: usize,
    s: f64,
    outer: &OuterData,
) -> Result<OuterData> {
    let nr = grid.nr();
    let mut trace: Vec<f64> = (0..nr - 1).map(|i| u[idx(i, 0)]).collect();
    trace.push(outer.right[0]);
    let tail = if trace.iter().all(|v| *v > 0.0) { TailModel::PowerLaw } else { TailModel::Zero };
    let f = RadialFunction::with_models(grid.radial.clone(), trace, crate::grid::InnerModel::Even, tail)?;
    let opts = PoissonOptions::default();
    let rmax = grid.r_max();
    let mut right = vec![f.value(rmax)];
    for &t in grid.t_nodes() {
        right.push(f.value(rmax) + poisson_increment(&f, n, s, rmax, t, opts)?);
    }
    let tmax = grid.t_max();
    let mut top = Vec::with_capacity(nr);
    for &r in grid.radial.nodes() {
        top.push(f.value(r) + poisson_increment(&f, n, s, r, tmax, opts)?);
    }
    Ok(OuterData { right, top })
}

// ═══════════════════════════════════════════════════════════════════
// Energy and residuals
// ═══════════════════════════════════════════════════════════════════

/// |S^{n−1}| ∫∫ t^{1−2s}|∇U|² r^{n−1} dr dt over the half-strip, evaluated
/// with the finite-volume conductances (exact first-cell weights in t).
pub fn extension_energy(field: &ExtensionField, n: usize, s: f64) -> f64 {
    let grid = &field.grid;
    let st = stencil(grid, n, s, 1.0);
    let nr = grid.nr();
    let nl = grid.nt() + 1;
    let mut e = 0.0;
    for i in 0..nr {
        for l in 0..nl {
            let u = field.at_level(i, l);
            if i + 1 < nr {
                let d = field.at_level(i + 1, l) - u;
                e += st.tr[l][i] * d * d;
            }
            if l + 1 < nl {
                let d = field.at_level(i, l + 1) - u;
                e += st.tt[i][l] * d * d;
            }
        }
    }
    sphere_area(n) * e
}

/// Relative finite-volume residual of div(t^{1−2s}∇U) = 0 at interior nodes
/// (levels ≥ 1, radii below r_max): max|Σ T ΔU| / max Σ|T ΔU|.
pub fn harmonic_residual(field: &ExtensionField, n: usize, s: f64) -> f64 {
    let grid = &field.grid;
    let st = stencil(grid, n, s, 1.0);
    let nr = grid.nr();
    let nl = grid.nt() + 1;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..nr - 1 {
        for l in 1..nl - 1 {
            let u = field.at_level(i, l);
            let mut sum = 0.0;
            let mut abs = 0.0;
            let mut push = |t: f64, v: f64| {
                sum += t * (v - u);
                abs += (t * (v - u)).abs();
            };
            if i > 0 {
                push(st.tr[l][i - 1], field.at_level(i - 1, l));
            }
            push(st.tr[l][i], field.at_level(i + 1, l));
            push(st.tt[i][l - 1], field.at_level(i, l - 1));
            push(st.tt[i][l], field.at_level(i, l + 1));
            worst = worst.max(sum.abs());
            scale = scale.max(abs);
        }
    }
    if scale > 0.0 {
        worst / scale
    } else {
        0.0
    }
}

/// Pointwise weighted Laplacian ΔV + (1−2s)V_t/t of a field that is radial in
/// x (n dimensions), by centered differences with relative step h.
pub fn weighted_laplacian<F: Fn(f64, f64) -> f64>(f: F, n: usize, s: f64, r: f64, t: f64, h: f64) -> f64 {
    let hr = h * r.max(t);
    let ht = h * t;
    let c = f(r, t);
    let frr = (f(r + hr, t) - 2.0 * c + f(r - hr, t)) / (hr * hr);
    let fr = (f(r + hr, t) - f(r - hr, t)) / (2.0 * hr);
    let ftt = (f(r, t + ht) - 2.0 * c + f(r, t - ht)) / (ht * ht);
    let ft = (f(r, t + ht) - f(r, t - ht)) / (2.0 * ht);
    frr + (n as f64 - 1.0) * fr / r + ftt + (1.0 - 2.0 * s) * ft / t
}

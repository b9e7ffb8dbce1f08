//! Inversions and Kelvin transforms.
//!
//! For a sphere ∂B_ρ(x₀) the inversion is x_{ρ,x₀} = x₀ + ρ²(x−x₀)/|x−x₀|²
//! and the Kelvin transform of order s is
//!
//! ```text
//! u_{x₀,ρ}(ξ) = (ρ/|ξ−x₀|)^{n−2s} u(ξ_{ρ,x₀}).
//! ```
//!
//! It intertwines (−Δ)^s: (−Δ)^s u_{x₀,ρ}(ξ) = (ρ/|ξ−x₀|)^{n+2s} [(−Δ)^s u](ξ_{ρ,x₀}),
//! so a solution of (−Δ)^s u = λ|x|^{−α}u + u^p is mapped to a solution of
//!
//! ```text
//! (−Δ)^s v = (ρ/|ξ−x₀|)^{4s} λ|ξ_{ρ,x₀}|^{−α} v + (ρ/|ξ−x₀|)^{n+2s−p(n−2s)} v^p,
//! ```
//!
//! whose second factor is 1 exactly at the conformal power p = (n+2s)/(n−2s).
//! The extension analogue inverts about the boundary point X = (x₀, 0) of
//! R^{n+1}_+ with the same weight exponent n−2s.

use crate::constants::FracParams;
use crate::error::{Error, Result};
use crate::extension::ExtensionField;
use crate::fraclap::{fraclap_point, fraclap_profile, FracLapOptions};
use crate::grid::RadialProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

// ═══════════════════════════════════════════════════════════════════
// Spheres and inversion
// ═══════════════════════════════════════════════════════════════════

/// Centre x₀ ∈ R^n and radius ρ of an inversion sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePair {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl SpherePair {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::Domain("sphere centre needs at least one coordinate".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(SpherePair { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// 0 < ρ < |x₀|: the regime of the comparison inequalities.
    pub fn is_subcritical(&self) -> bool {
        self.radius < norm(&self.center)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Domain(format!("point has dimension {}, sphere {}", x.len(), self.dim())));
        }
        Ok(())
    }

    fn require_subcritical(&self) -> Result<()> {
        if !self.is_subcritical() {
            return Err(Error::Domain(format!(
                "need 0 < rho < |x0|, got rho = {} and |x0| = {}",
                self.radius,
                norm(&self.center)
            )));
        }
        Ok(())
    }
}

/// x_{ρ,x₀} = x₀ + ρ²(x−x₀)/|x−x₀|².
pub fn invert_point(x: &[f64], sp: &SpherePair) -> Result<Vec<f64>> {
    sp.check_dim(x)?;
    let d2: f64 = x.iter().zip(&sp.center).map(|(a, b)| (a - b) * (a - b)).sum();
    if d2 == 0.0 {
        return Err(Error::Domain("cannot invert the centre of the sphere".into()));
    }
    let k = sp.radius * sp.radius / d2;
    Ok(x.iter().zip(&sp.center).map(|(a, c)| c + k * (a - c)).collect())
}

/// Evaluator of the Kelvin transform of a function on R^n.
pub struct KelvinBoundary<F> {
    u: F,
    sphere: SpherePair,
    exponent: f64,
}

/// u_{x₀,ρ}(ξ) = (ρ/|ξ−x₀|)^{n−2s} u(ξ_{ρ,x₀}).
pub fn kelvin_boundary<F: Fn(&[f64]) -> f64>(u: F, s: f64, sp: &SpherePair) -> KelvinBoundary<F> {
    KelvinBoundary { u, sphere: sp.clone(), exponent: sp.dim() as f64 - 2.0 * s }
}

impl<F: Fn(&[f64]) -> f64> KelvinBoundary<F> {
    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        let y = invert_point(xi, &self.sphere)?;
        let d = dist(xi, &self.sphere.center);
        Ok((self.sphere.radius / d).powf(self.exponent) * (self.u)(&y))
    }

    pub fn sphere(&self) -> &SpherePair {
        &self.sphere
    }
}

/// Evaluator of the Kelvin transform of a half-space function U(x, t)
/// about the boundary point X = (x₀, 0).
pub struct KelvinExtension<F> {
    big_u: F,
    sphere: SpherePair,
    exponent: f64,
}

/// U_{X,ρ}(ξ, τ) = (ρ/|(ξ,τ)−X|)^{n−2s} U(X + ρ²((ξ,τ)−X)/|(ξ,τ)−X|²).
/// The inversion keeps the height's sign, so the half-space is preserved.
pub fn kelvin_extension<F: Fn(&[f64], f64) -> f64>(big_u: F, s: f64, sp: &SpherePair) -> KelvinExtension<F> {
    KelvinExtension { big_u, sphere: sp.clone(), exponent: sp.dim() as f64 - 2.0 * s }
}

impl<F: Fn(&[f64], f64) -> f64> KelvinExtension<F> {
    pub fn eval(&self, xi: &[f64], t: f64) -> Result<f64> {
        self.sphere.check_dim(xi)?;
        let d2 = xi.iter().zip(&self.sphere.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + t * t;
        if d2 == 0.0 {
            return Err(Error::Domain("cannot invert the centre of the sphere".into()));
        }
        let k = self.sphere.radius * self.sphere.radius / d2;
        let y: Vec<f64> = xi.iter().zip(&self.sphere.center).map(|(a, c)| c + k * (a - c)).collect();
        Ok(k.powf(0.5 * self.exponent) * (self.big_u)(&y, k * t))
    }
}

/// Radial profile as a function of a point.
pub fn radial_evaluator<P: RadialProfile + ?Sized>(u: &P) -> impl Fn(&[f64]) -> f64 + '_ {
    move |x: &[f64]| u.value(norm(x))
}

/// A radial-in-x extension field as a function of (x, t). Outside the grid
/// the field is continued along rays through the origin with the decay
/// |X|^{2s−n} of the extension of a decaying trace.
pub fn field_evaluator(field: &ExtensionField, s: f64) -> impl Fn(&[f64], f64) -> f64 + '_ {
    move |x: &[f64], t: f64| {
        let n = x.len() as f64;
        let r = norm(x);
        if let Some(v) = field.eval(s, r, t) {
            return v;
        }
        let g = &field.grid;
        let shrink = (0.999 * g.r_max() / r).min(0.999 * g.t_max() / t.max(1e-300)).min(1.0);
        let v = field.eval(s, shrink * r, shrink * t).unwrap_or(0.0);
        v * shrink.powf(n - 2.0 * s)
    }
}

// ═══════════════════════════════════════════════════════════════════
// Comparison inequality of the inversion
// ═══════════════════════════════════════════════════════════════════

/// Position of x relative to the inversion sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// 0 < |x−x₀| < ρ: the inequality holds with ≥.
    Inside,
    /// ρ < |x−x₀| < |x₀|: the inequality holds with ≤.
    Annulus,
    /// |x−x₀| ∈ {ρ, |x₀|} (within 1e−12 relative).
    Boundary,
    /// |x−x₀| > |x₀|: no prediction.
    Outside,
}

/// Signed margin of (ρ/|x−x₀|)^{4s}|x_{ρ,x₀}|^{−2s} versus |x|^{−2s}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionMargin {
    /// lhs − rhs.
    pub margin: f64,
    pub rhs: f64,
    pub region: Region,
}

impl InversionMargin {
    /// Whether the margin has the predicted sign (boundary and outside
    /// points always pass; ties within 1e−12·rhs are accepted).
    pub fn holds(&self) -> bool {
        let slack = 1e-12 * self.rhs;
        match self.region {
            Region::Inside => self.margin >= -slack,
            Region::Annulus => self.margin <= slack,
            Region::Boundary | Region::Outside => true,
        }
    }
}

/// Evaluates the inversion comparison inequality at x (requires ρ < |x₀|).
pub fn lemma52_check(x: &[f64], s: f64, sp: &SpherePair) -> Result<InversionMargin> {
    sp.require_subcritical()?;
    let y = invert_point(x, sp)?;
    let d = dist(x, &sp.center);
    let nx = norm(x);
    if nx == 0.0 {
        return Err(Error::Domain("x = 0 is a singular point of |x|^{-2s}".into()));
    }
    let x0 = norm(&sp.center);
    let rhs = nx.powf(-2.0 * s);
    let lhs = (sp.radius / d).powf(4.0 * s) * norm(&y).powf(-2.0 * s);
    let near = |a: f64| (d - a).abs() <= 1e-12 * a;
    let region = if near(sp.radius) || near(x0) {
        Region::Boundary
    } else if d < sp.radius {
        Region::Inside
    } else if d < x0 {
        Region::Annulus
    } else {
        Region::Outside
    };
    Ok(InversionMargin { margin: lhs - rhs, rhs, region })
}

// ═══════════════════════════════════════════════════════════════════
// Sampling
// ═══════════════════════════════════════════════════════════════════

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let l = norm(&v);
        if l > 1e-3 && l <= 1.0 {
            return v.into_iter().map(|a| a / l).collect();
        }
    }
}

/// `count` points x₀ + d·ω with ω uniform on the sphere and d uniform in
/// (d_min, d_max), from a seeded generator.
pub fn shell_samples(sp: &SpherePair, d_min: f64, d_max: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sp.dim();
    (0..count)
        .map(|_| {
            let w = random_direction(&mut rng, n);
            let d = d_min + (d_max - d_min) * rng.gen::<f64>();
            sp.center.iter().zip(&w).map(|(c, a)| c + d * a).collect()
        })
        .collect()
}

/// Random sphere pair in R^n with 1 ≤ |x₀| ≤ 3 and ρ uniform in (0.1, 0.9)·|x₀|.
pub fn random_sphere_pair(rng: &mut ChaCha8Rng, n: usize) -> SpherePair {
    let w = random_direction(rng, n);
    let len = rng.gen_range(1.0..3.0);
    let rho = len * rng.gen_range(0.1..0.9);
    SpherePair { center: w.into_iter().map(|a| a * len).collect(), radius: rho }
}

/// JSON record of a sampled check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub params: serde_json::Value,
    pub n_samples: usize,
    pub worst_margin: f64,
    pub verdict: bool,
}

/// Samples the comparison inequality in both regions (`per_region` points
/// each) and reports the worst signed margin, oriented so that positive
/// means violated.
pub fn lemma52_sweep(s: f64, sp: &SpherePair, per_region: usize, seed: u64) -> Result<CheckReport> {
    sp.require_subcritical()?;
    let x0 = norm(&sp.center);
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0usize;
    let regions = [(0.0, sp.radius, Region::Inside), (sp.radius, x0, Region::Annulus)];
    for (k, &(lo, hi, expected)) in regions.iter().enumerate() {
        for x in shell_samples(sp, lo, hi, per_region, seed.wrapping_add(k as u64)) {
            if norm(&x) == 0.0 || dist(&x, &sp.center) == 0.0 {
                continue;
            }
            let m = lemma52_check(&x, s, sp)?;
            let oriented = match expected {
                Region::Inside => -m.margin / m.rhs,
                _ => m.margin / m.rhs,
            };
            if m.region == expected {
                worst = worst.max(oriented);
            }
            if !m.holds() {
                violations += 1;
            }
        }
    }
    Ok(CheckReport {
        check: "inversion_inequality".into(),
        params: serde_json::json!({ "s": s, "center": sp.center, "radius": sp.radius, "per_region": per_region, "seed": seed, "violations": violations }),
        n_samples: 2 * per_region,
        worst_margin: worst,
        verdict: violations == 0,
    })
}

// ═══════════════════════════════════════════════════════════════════
// Transformed equation and moving spheres
// ═══════════════════════════════════════════════════════════════════

/// n + 2s − p(n − 2s): the exponent of the power-term factor after the
/// transform; zero exactly at the conformal power.
pub fn conformal_defect(params: &FracParams) -> f64 {
    let n = params.n as f64;
    n + 2.0 * params.s - params.p * (n - 2.0 * params.s)
}

/// Residual of the transformed equation at the sample points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualSummary {
    /// max |lhs − rhs|.
    pub max_abs: f64,
    /// max |lhs − rhs| / max |rhs|.
    pub max_rel: f64,
    /// Root mean square of lhs − rhs.
    pub l2: f64,
    /// max over the samples of (ρ/|ξ−x₀|)^{n+2s}|residual of u at ξ_{ρ,x₀}|,
    /// the error inherited from u itself.
    pub inherited: f64,
    /// Quadrature error estimate (max over the samples).
    pub quadrature: f64,
    pub evaluated: usize,
    pub skipped: Vec<String>,
}

/// Evaluates (−Δ)^s u_{x₀,ρ} by pointwise quadrature (n ≤ 3) at the samples
/// and subtracts the transformed right-hand side.
pub fn transformed_residual<P: RadialProfile + ?Sized>(
    u: &P,
    sp: &SpherePair,
    params: &FracParams,
    samples: &[Vec<f64>],
    opts: FracLapOptions,
) -> Result<ResidualSummary> {
    params.validate()?;
    if sp.dim() != params.n {
        return Err(Error::Domain("sphere dimension differs from n".into()));
    }
    let (s, n) = (params.s, params.n as f64);
    let base = radial_evaluator(u);
    let kt = kelvin_boundary(&base, s, sp);
    let v = |x: &[f64]| kt.eval(x).unwrap_or(0.0);
    let image_of_origin = invert_point(&vec![0.0; params.n], sp).ok();
    let mut special = vec![sp.center.clone()];
    special.extend(image_of_origin);
    let defect = conformal_defect(params);
    let mut out = ResidualSummary { max_abs: 0.0, max_rel: 0.0, l2: 0.0, inherited: 0.0, quadrature: 0.0, evaluated: 0, skipped: Vec::new() };
    let mut max_rhs: f64 = 0.0;
    let mut sq = 0.0;
    for xi in samples {
        let d = dist(xi, &sp.center);
        if d < 1e-8 || norm(xi) < 1e-8 || special.iter().any(|p| dist(xi, p) < 1e-8) {
            out.skipped.push(format!("sample {xi:?} at a singular point"));
            continue;
        }
        let y = invert_point(xi, sp)?;
        let ny = norm(&y);
        let lhs = fraclap_point(v, s, xi, &special, opts)?;
        let vx = v(xi);
        let q = sp.radius / d;
        let rhs = q.powf(4.0 * s) * params.lambda * ny.powf(-params.alpha) * vx + q.powf(defect) * vx.abs().powf(params.p - 1.0) * vx;
        let res = lhs.value - rhs;
        // residual of u itself at the inverted point, carried over
        let base_lhs = fraclap_profile(u, params.n, s, ny, opts)?;
        let uy = u.value(ny);
        let base_res = base_lhs.total() - params.lambda * ny.powf(-params.alpha) * uy - uy.abs().powf(params.p - 1.0) * uy;
        out.inherited = out.inherited.max(q.powf(n + 2.0 * s) * base_res.abs());
        out.quadrature = out.quadrature.max(lhs.error);
        out.max_abs = out.max_abs.max(res.abs());
        max_rhs = max_rhs.max(rhs.abs());
        sq += res * res;
        out.evaluated += 1;
    }
    if out.evaluated == 0 {
        return Err(Error::Domain("no admissible sample points".into()));
    }
    out.l2 = (sq / out.evaluated as f64).sqrt();
    out.max_rel = if max_rhs > 0.0 { out.max_abs / max_rhs } else { out.max_abs };
    Ok(out)
}

/// max over the samples of u_{x₀,ρ}(ξ) − u(ξ) (samples with |ξ−x₀| ≥ ρ,
/// ξ ≠ 0). `tolerance` is the producing solver's accuracy; the verdict is
/// worst ≤ tolerance.
pub fn moving_sphere_check<F: Fn(&[f64]) -> f64>(
    u: F,
    s: f64,
    sp: &SpherePair,
    samples: &[Vec<f64>],
    tolerance: f64,
) -> Result<CheckReport> {
    sp.require_subcritical()?;
    if samples.is_empty() {
        return Err(Error::Domain("moving-sphere check needs at least one sample".into()));
    }
    let kt = kelvin_boundary(&u, s, sp);
    let mut worst = f64::NEG_INFINITY;
    let mut used = 0usize;
    for xi in samples {
        sp.check_dim(xi)?;
        if dist(xi, &sp.center) < sp.radius * (1.0 - 1e-14) || norm(xi) == 0.0 {
            continue;
        }
        worst = worst.max(kt.eval(xi)? - u(xi));
        used += 1;
    }
    if used == 0 {
        return Err(Error::Domain("no sample lies outside the sphere".into()));
    }
    Ok(CheckReport {
        check: "moving_sphere".into(),
        params: serde_json::json!({ "s": s, "center": sp.center, "radius": sp.radius, "tolerance": tolerance }),
        n_samples: used,
        worst_margin: worst,
        verdict: worst <= tolerance,
    })
}

/// Finite-difference Δ_{x,t}V + (1−2s)V_t/t for V(x, t) with x ∈ R^n, the
/// weighted Laplacian whose zeros are the extensions.
pub fn weighted_laplacian_point<F: Fn(&[f64], f64) -> f64>(f: F, s: f64, x: &[f64], t: f64, h: f64) -> f64 {
    let f0 = f(x, t);
    let mut y = x.to_vec();
    let mut acc = 0.0;
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let fp = f(&y, t);
        y[i] = x[i] - h;
        let fm = f(&y, t);
        y[i] = x[i];
        acc += (fp - 2.0 * f0 + fm) / (h * h);
    }
    let (tp, tm) = (f(x, t + h), f(x, t - h));
    acc + (tp - 2.0 * f0 + tm) / (h * h) + (1.0 - 2.0 * s) * (tp - tm) / (2.0 * h * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_inversion_example() {
        let sp = SpherePair::new(vec![0.0; 3], 1.0).unwrap();
        let y = invert_point(&[2.0, 0.0, 0.0], &sp).unwrap();
        assert_eq!(y, vec![0.5, 0.0, 0.0]);
        assert!(invert_point(&[0.0; 3], &sp).is_err());
    }

    #[test]
    fn fixed_sphere_has_zero_margin() {
        let sp = SpherePair::new(vec![2.0, 0.0, 0.0], 0.5).unwrap();
        let m = lemma52_check(&[2.0, 0.5, 0.0], 0.4, &sp).unwrap();
        assert_eq!(m.region, Region::Boundary);
        assert!(m.margin.abs() < 1e-12 * m.rhs);
    }

    #[test]
    fn midway_point_is_strict() {
        let sp = SpherePair::new(vec![2.0, 0.0, 0.0], 0.5).unwrap();
        let d = 0.5 * (0.5 + 2.0);
        let m = lemma52_check(&[2.0 - d, 0.0, 0.0], 0.5, &sp).unwrap();
        assert_eq!(m.region, Region::Annulus);
        assert!(m.margin < 0.0);
    }
}

//! The Pohozaev identity of the extended problem, term by term, the
//! companion energy identity, and the sign classification of its left side.
//!
//! For a solution U of div(t^{1−2s}∇U) = 0 with
//! −lim t^{1−2s}∂_tU = κ_s(λ|x|^{−α}U + |U|^{p−1}U), and every resolved r,
//!
//! ```text
//! κλ(2s−α)/2 ∫_{B_r} U²/|x|^α + κ(n/(p+1) − (n−2s)/2) ∫_{B_r} |U|^{p+1}
//!   = r/2 ∫_{S_r^+} t^{1−2s}|∇U|² − r ∫_{S_r^+} t^{1−2s}(∂_νU)²
//!     − κλr/2 ∫_{∂B_r} U²/|x|^α − κr/(p+1) ∫_{∂B_r} |U|^{p+1}
//!     − (n−2s)/2 ∫_{S_r^+} t^{1−2s} U ∂_νU,
//!
//! ∫_{B_r^+} t^{1−2s}|∇U|² = ∫_{S_r^+} t^{1−2s} U ∂_νU
//!   + κλ ∫_{B_r} U²/|x|^α + κ ∫_{B_r} |U|^{p+1}.
//! ```
//!
//! Fields are radial in x. S_r^+ is parameterized by the elevation φ:
//! x = r cosφ ω, t = r sinφ, dS = r^n cos^{n−1}φ dφ dω, so every sphere
//! integral is |S^{n−1}| r^n ∫_0^{π/2} cos^{n−1}φ (…) dφ.

use crate::constants::{sphere_area, FracParams};
use crate::error::{Error, Result};
use crate::extension::ExtensionField;
use crate::quad;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

/// Uniform panels of the composite rules (plus geometric grading at 0).
const PANELS: usize = 64;

// ═══════════════════════════════════════════════════════════════════
// Field access
// ═══════════════════════════════════════════════════════════════════

/// A radial-in-x half-space field with gradient: (r, t) ↦ (U, ∂_rU, ∂_tU).
pub trait HalfSpaceField {
    fn value_grad(&self, r: f64, t: f64) -> Option<(f64, f64, f64)>;
    /// U(r, 0).
    fn trace(&self, r: f64) -> Option<f64>;
    /// Largest radius r for which the half-sphere S_r^+ is resolved.
    fn resolved_radius(&self) -> f64;
}

/// An [`ExtensionField`] together with its order s (needed by the
/// interpolation in τ = t^{2s}).
pub struct GridField<'a> {
    pub field: &'a ExtensionField,
    pub s: f64,
}

impl HalfSpaceField for GridField<'_> {
    fn value_grad(&self, r: f64, t: f64) -> Option<(f64, f64, f64)> {
        self.field.eval_with_grad(self.s, r, t)
    }

    fn trace(&self, r: f64) -> Option<f64> {
        self.field.eval(self.s, r, 0.0)
    }

    fn resolved_radius(&self) -> f64 {
        0.5 * self.field.grid.r_max().min(self.field.grid.t_max())
    }
}

/// A field given in closed form.
pub struct ClosedForm<F> {
    pub value_grad: F,
    pub radius: f64,
}

impl<F: Fn(f64, f64) -> (f64, f64, f64)> HalfSpaceField for ClosedForm<F> {
    fn value_grad(&self, r: f64, t: f64) -> Option<(f64, f64, f64)> {
        Some((self.value_grad)(r, t))
    }

    fn trace(&self, r: f64) -> Option<f64> {
        Some((self.value_grad)(r, 0.0).0)
    }

    fn resolved_radius(&self) -> f64 {
        self.radius
    }
}

fn check_radius<F: HalfSpaceField + ?Sized>(u: &F, r: f64) -> Result<()> {
    if !(r > 0.0) || r > u.resolved_radius() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "radius {r} outside the resolved region (0, {}]",
            u.resolved_radius()
        )));
    }
    Ok(())
}

fn interp_error() -> Error {
    Error::Domain("interpolation point outside the grid".into())
}

/// Composite Gauss–Legendre rule on (0, len): geometric panels down to
/// 1e−10·len at 0 (where t^{1−2s} and t^{2s−1} are singular) and uniform
/// panels elsewhere. Fixed rules keep the cost predictable on piecewise
/// interpolated fields, whose kinks defeat adaptive refinement.
fn graded_rule(len: f64) -> quad::Rule {
    let mut brk = vec![0.0];
    let mut d = 1e-10 * len;
    while d < 0.05 * len {
        brk.push(d);
        d *= 2.0;
    }
    for k in 0..=PANELS {
        brk.push(0.05 * len + 0.95 * len * k as f64 / PANELS as f64);
    }
    quad::Rule::composite(&brk, &quad::gauss_legendre(10))
}

fn arc_integral<G: FnMut(f64) -> f64>(g: G) -> f64 {
    graded_rule(FRAC_PI_2).integrate(g)
}

/// |S^{n−1}| ∫_0^r g(ρ) ρ^{n−1} dρ.
fn ball_integral<G: FnMut(f64) -> f64>(n: usize, r: f64, mut g: G) -> f64 {
    sphere_area(n) * graded_rule(r).integrate(|rho| g(rho) * rho.powi(n as i32 - 1))
}

/// Integrals over S_r^+ needed by both identities.
struct SphereTerms {
    grad_sq: f64,
    normal_sq: f64,
    mixed: f64,
}

fn sphere_terms<F: HalfSpaceField + ?Sized>(u: &F, n: usize, s: f64, r: f64) -> Result<SphereTerms> {
    let mut failed = false;
    let mut eval = |phi: f64, which: usize| -> f64 {
        let (c, sn) = (phi.cos(), phi.sin());
        let (x, t) = (r * c, r * sn);
        match u.value_grad(x, t) {
            Some((v, ur, ut)) => {
                let w = c.powi(n as i32 - 1) * t.powf(1.0 - 2.0 * s);
                let dnu = c * ur + sn * ut;
                match which {
                    0 => w * (ur * ur + ut * ut),
                    1 => w * dnu * dnu,
                    _ => w * dnu * v,
                }
            }
            None => {
                failed = true;
                0.0
            }
        }
    };
    let scale = sphere_area(n) * r.powi(n as i32);
    let grad_sq = scale * arc_integral(|p| eval(p, 0));
    let normal_sq = scale * arc_integral(|p| eval(p, 1));
    let mixed = scale * arc_integral(|p| eval(p, 2));
    if failed {
        return Err(interp_error());
    }
    Ok(SphereTerms { grad_sq, normal_sq, mixed })
}

/// (∫_{B_r} U²/|x|^α, ∫_{B_r} |U|^{p+1}) over the trace.
fn ball_terms<F: HalfSpaceField + ?Sized>(u: &F, params: &FracParams, r: f64) -> Result<(f64, f64)> {
    let mut failed = false;
    let mut tr = |rho: f64| match u.trace(rho) {
        Some(v) => v,
        None => {
            failed = true;
            0.0
        }
    };
    let hardy = ball_integral(params.n, r, |rho| {
        let v = tr(rho);
        v * v * rho.powf(-params.alpha)
    });
    let power = ball_integral(params.n, r, |rho| tr(rho).abs().powf(params.p + 1.0));
    if failed {
        return Err(interp_error());
    }
    Ok((hardy, power))
}

// ═══════════════════════════════════════════════════════════════════
// Pohozaev identity
// ═══════════════════════════════════════════════════════════════════

/// Every term of the Pohozaev identity at one radius, each including its
/// coefficient and sign as it appears in the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PohozaevReport {
    pub radius: f64,
    /// κλ(2s−α)/2 ∫_{B_r} U²/|x|^α.
    pub lhs_hardy_term: f64,
    /// κ(n/(p+1) − (n−2s)/2) ∫_{B_r} |U|^{p+1}.
    pub lhs_power_term: f64,
    /// r/2 ∫_{S_r^+} t^{1−2s}|∇U|².
    pub sphere_gradient: f64,
    /// −r ∫_{S_r^+} t^{1−2s}(∂_νU)².
    pub sphere_normal: f64,
    /// −κλr/2 ∫_{∂B_r} U²/|x|^α.
    pub boundary_hardy: f64,
    /// −κr/(p+1) ∫_{∂B_r} |U|^{p+1}.
    pub boundary_power: f64,
    /// −(n−2s)/2 ∫_{S_r^+} t^{1−2s} U ∂_νU.
    pub sphere_mixed: f64,
    /// lhs − rhs.
    pub residual: f64,
    /// |residual| / Σ|terms|.
    pub relative_residual: f64,
}

impl PohozaevReport {
    pub fn lhs(&self) -> f64 {
        self.lhs_hardy_term + self.lhs_power_term
    }

    pub fn rhs(&self) -> f64 {
        self.sphere_gradient + self.sphere_normal + self.boundary_hardy + self.boundary_power + self.sphere_mixed
    }

    fn terms(&self) -> [f64; 7] {
        [
            self.lhs_hardy_term,
            self.lhs_power_term,
            self.sphere_gradient,
            self.sphere_normal,
            self.boundary_hardy,
            self.boundary_power,
            self.sphere_mixed,
        ]
    }

    fn finish(mut self) -> Self {
        self.residual = self.lhs() - self.rhs();
        let scale: f64 = self.terms().iter().map(|v| v.abs()).sum();
        self.relative_residual = if scale > 0.0 { self.residual.abs() / scale } else { 0.0 };
        self
    }
}

/// The two coefficients of the left side: ((2s−α)/2, n/(p+1) − (n−2s)/2).
pub fn lhs_coefficients(params: &FracParams) -> (f64, f64) {
    let n = params.n as f64;
    (0.5 * (2.0 * params.s - params.alpha), n / (params.p + 1.0) - 0.5 * (n - 2.0 * params.s))
}

/// Evaluates every term of the Pohozaev identity on S_r^+, ∂B_r and B_r.
pub fn pohozaev_terms<F: HalfSpaceField + ?Sized>(u: &F, params: &FracParams, r: f64) -> Result<PohozaevReport> {
    params.validate()?;
    check_radius(u, r)?;
    let (n, s, lam, p) = (params.n, params.s, params.lambda, params.p);
    let kappa = params.kappa();
    let (c_h, c_p) = lhs_coefficients(params);
    let sph = sphere_terms(u, n, s, r)?;
    let (hardy, power) = ball_terms(u, params, r)?;
    let ur = u.trace(r).ok_or_else(interp_error)?;
    let shell = sphere_area(n) * r.powi(n as i32 - 1);
    let rep = PohozaevReport {
        radius: r,
        lhs_hardy_term: kappa * lam * c_h * hardy,
        lhs_power_term: kappa * c_p * power,
        sphere_gradient: 0.5 * r * sph.grad_sq,
        sphere_normal: -r * sph.normal_sq,
        boundary_hardy: -0.5 * kappa * lam * r * shell * ur * ur * r.powf(-params.alpha),
        boundary_power: -kappa * r / (p + 1.0) * shell * ur.abs().powf(p + 1.0),
        sphere_mixed: -0.5 * (n as f64 - 2.0 * s) * sph.mixed,
        residual: 0.0,
        relative_residual: 0.0,
    };
    Ok(rep.finish())
}

/// Writes one CSV row per radius with all seven terms and both residuals.
pub fn write_reports_csv<P: AsRef<Path>>(reports: &[PohozaevReport], path: P) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "r",
        "lhs_hardy_term",
        "lhs_power_term",
        "sphere_gradient",
        "sphere_normal",
        "boundary_hardy",
        "boundary_power",
        "sphere_mixed",
        "residual",
        "relative_residual",
    ])?;
    for rep in reports {
        let mut row = vec![rep.radius];
        row.extend(rep.terms());
        row.push(rep.residual);
        row.push(rep.relative_residual);
        w.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

// ═══════════════════════════════════════════════════════════════════
// Energy identity
// ═══════════════════════════════════════════════════════════════════

/// Both sides of the energy identity on B_r^+.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub radius: f64,
    /// ∫_{B_r^+} t^{1−2s}|∇U|².
    pub bulk: f64,
    /// ∫_{S_r^+} t^{1−2s} U ∂_νU.
    pub sphere: f64,
    /// κλ ∫_{B_r} U²/|x|^α.
    pub hardy: f64,
    /// κ ∫_{B_r} |U|^{p+1}.
    pub power: f64,
    pub residual: f64,
    /// |residual| / max(|bulk|, |sphere + hardy + power|) (0 when both vanish).
    pub relative_residual: f64,
}

/// Evaluates the energy identity; the bulk integral is ∫_0^r R^n ∫ (…) dφ dR
/// with the same composite rules as the sphere and ball terms.
pub fn energy_identity<F: HalfSpaceField + ?Sized>(u: &F, params: &FracParams, r: f64) -> Result<EnergyReport> {
    params.validate()?;
    check_radius(u, r)?;
    let (n, s) = (params.n, params.s);
    let kappa = params.kappa();
    let mut failed = false;
    let shell_energy = |rad: f64, failed: &mut bool| -> f64 {
        arc_integral(|phi: f64| {
            let (c, sn) = (phi.cos(), phi.sin());
            let t = rad * sn;
            match u.value_grad(rad * c, t) {
                Some((_, ur, ut)) => c.powi(n as i32 - 1) * t.powf(1.0 - 2.0 * s) * (ur * ur + ut * ut),
                None => {
                    *failed = true;
                    0.0
                }
            }
        })
    };
    let bulk = sphere_area(n) * graded_rule(r).integrate(|rad| rad.powi(n as i32) * shell_energy(rad, &mut failed));
    if failed {
        return Err(interp_error());
    }
    let sph = sphere_terms(u, n, s, r)?;
    let (hardy, power) = ball_terms(u, params, r)?;
    let rhs = sph.mixed + kappa * params.lambda * hardy + kappa * power;
    let residual = bulk - rhs;
    let scale = bulk.abs().max(rhs.abs());
    Ok(EnergyReport {
        radius: r,
        bulk,
        sphere: sph.mixed,
        hardy: kappa * params.lambda * hardy,
        power: kappa * power,
        residual,
        relative_residual: if scale > 0.0 { residual.abs() / scale } else { 0.0 },
    })
}

// ═══════════════════════════════════════════════════════════════════
// Nonexistence classification
// ═══════════════════════════════════════════════════════════════════

/// Which nonexistence regime the parameters fall into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NonexistenceCase {
    /// λ ≥ 0, α < 2s, 1 ≤ p < 2*(s) − 1: both left-side coefficients are
    /// nonnegative and the power one is positive.
    SubcriticalPower,
    /// α = 2s, p ≠ 2*(s) − 1: only the power term is left, with a nonzero
    /// coefficient.
    CriticalPotential,
    /// α ≠ 2s, p = 2*(s) − 1: only the Hardy term is left.
    CriticalPower,
    /// None of the above (e.g. the conformal case α = 2s, p = 2*(s) − 1).
    Outside,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Classification {
    pub case: NonexistenceCase,
    /// (2s−α)/2.
    pub hardy_coefficient: f64,
    /// n/(p+1) − (n−2s)/2.
    pub power_coefficient: f64,
    pub explanation: String,
}

/// Classifies the parameters by the signs of the Pohozaev left side.
pub fn classify_nonexistence(params: &FracParams) -> Classification {
    let (ch, cp) = lhs_coefficients(params);
    let crit = params.conformal_power();
    let tol = 1e-12;
    let alpha_crit = (params.alpha - 2.0 * params.s).abs() <= tol * params.alpha.max(1.0);
    let p_crit = (params.p - crit).abs() <= tol * crit;
    let (case, explanation) = if alpha_crit && !p_crit {
        (
            NonexistenceCase::CriticalPotential,
            format!("alpha = 2s removes the Hardy term; the power coefficient {cp:.6} is nonzero, so no nontrivial solution in H^s ∩ L^(p+1)"),
        )
    } else if !alpha_crit && p_crit {
        (
            NonexistenceCase::CriticalPower,
            format!("p = 2*(s)-1 removes the power term; the Hardy coefficient {ch:.6} is nonzero, so no nontrivial solution in H^s ∩ L^2(|x|^-alpha)"),
        )
    } else if params.lambda >= 0.0 && params.alpha < 2.0 * params.s && params.p >= 1.0 && params.p < crit {
        (
            NonexistenceCase::SubcriticalPower,
            format!("lambda >= 0, alpha < 2s, p < 2*(s)-1: coefficients {ch:.6} >= 0 and {cp:.6} > 0 make the left side positive"),
        )
    } else if alpha_crit && p_crit {
        (NonexistenceCase::Outside, "conformal case alpha = 2s, p = 2*(s)-1: both coefficients vanish".to_string())
    } else {
        (NonexistenceCase::Outside, format!("no sign information: coefficients {ch:.6} and {cp:.6}"))
    };
    Classification { case, hardy_coefficient: ch, power_coefficient: cp, explanation }
}

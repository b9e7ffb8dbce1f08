//! Ground states of the critical Hardy problem by minimizing the Rayleigh
//! quotient
//!
//! ```text
//! R(u) = Q(u)/‖u‖²_{2*(s)},   Q(u) = ‖u‖²_{Ḣ^s} − λ∫u²|x|^{−2s},
//! ```
//!
//! over nonnegative radial P1 functions, plus the checks applied to the
//! result: the Euler–Lagrange residual of
//! (−Δ)^s u = λ|x|^{−2s}u + u^{(n+2s)/(n−2s)}, strict radial monotonicity,
//! and an indefiniteness probe of Q for λ above the Hardy constant.
//!
//! A minimizer v with ‖v‖_{2*} = 1 satisfies (A − λD)v = β w v^{2*−1}, so
//! u = β^{1/(2*−2)} v solves the equation (the Lagrange scale).

use crate::constants::{hardy_constant, FracParams};
use crate::error::{Error, Result};
use crate::fraclap::{fraclap_radial_with, FracLapOptions, QuadraticFormAssembly};
use crate::grid::{InnerModel, RadialFunction, RadialGrid, TailModel};
use crate::sphere_eig::eta_eps;
use log::{debug, info};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

// ═══════════════════════════════════════════════════════════════════
// Rayleigh quotient
// ═══════════════════════════════════════════════════════════════════

fn sobolev_exponent(forms: &QuadraticFormAssembly) -> f64 {
    2.0 * forms.n as f64 / (forms.n as f64 - 2.0 * forms.s)
}

fn check_grid(u: &RadialFunction, forms: &QuadraticFormAssembly) -> Result<()> {
    if u.grid().hash() != forms.grid.hash() {
        return Err(Error::Domain("function and forms live on different grids".into()));
    }
    Ok(())
}

/// R(u) on nodal values.
pub fn rayleigh_values(u: &[f64], lambda: f64, forms: &QuadraticFormAssembly) -> Result<f64> {
    let q = sobolev_exponent(forms);
    let l = forms.lp(u, q);
    if !(l > 0.0) {
        return Err(Error::Domain("Rayleigh quotient of the zero function".into()));
    }
    Ok(forms.q_form(u, lambda) / l.powf(2.0 / q))
}

/// (uᵀAu − λuᵀDu)/‖u‖²_{2n/(n−2s)} with the assembled forms.
pub fn rayleigh(u: &RadialFunction, lambda: f64, forms: &QuadraticFormAssembly) -> Result<f64> {
    check_grid(u, forms)?;
    rayleigh_values(u.values(), lambda, forms)
}

// ═══════════════════════════════════════════════════════════════════
// Minimization
// ═══════════════════════════════════════════════════════════════════

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub max_iter: usize,
    /// Initial step along the preconditioned direction (0.5 is the
    /// normalized fixed-point step).
    pub step: f64,
    /// Stop when the relative quotient decrease of an accepted step is ≤ tol.
    /// The discrete quotient is not exactly dilation invariant, so below
    /// ~1e−10 the descent only drifts slowly along the dilation direction.
    pub tol: f64,
    /// Attempt the rearrangement and scale fix every this many iterations
    /// (0 disables them).
    pub rearrange_every: usize,
    /// Also stop when the preconditioned gradient, with its dilation
    /// component removed, is ≤ grad_tol relative to u (A-norms).
    pub grad_tol: f64,
    /// Smallest step before the descent is declared stalled.
    pub min_step: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { max_iter: 2000, step: 0.5, tol: 1e-9, rearrange_every: 25, grad_tol: 1e-4, min_step: 1e-10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundStateResult {
    pub lambda: f64,
    /// Euler–Lagrange solution u = lagrange_scale · minimizer.
    #[serde(skip)]
    pub profile: Option<RadialFunction>,
    /// Minimizer normalized by ‖v‖_{2*} = 1.
    pub minimizer: Vec<f64>,
    pub beta: f64,
    pub lagrange_scale: f64,
    pub iterations: usize,
    /// Weighted relative L² residual of the equation for the profile.
    pub el_residual: f64,
    pub monotone: bool,
    /// Quotient after each accepted step.
    pub history: Vec<f64>,
    pub rearrangements_applied: usize,
    pub rearrangements_skipped: usize,
    pub scale_fixes: usize,
}

impl GroundStateResult {
    pub fn profile(&self) -> &RadialFunction {
        self.profile.as_ref().expect("profile is set by the minimizer")
    }
}

fn normalize(u: &mut [f64], forms: &QuadraticFormAssembly, q: f64) -> Result<()> {
    let l = forms.lp(u, q);
    if !(l > 0.0) {
        return Err(Error::Numerical("iterate vanished".into()));
    }
    let c = l.powf(-1.0 / q);
    u.iter_mut().for_each(|v| *v *= c);
    Ok(())
}

/// Discrete symmetric-decreasing rearrangement: the nodal values sorted
/// in decreasing order onto the fixed radii.
pub fn rearrange(u: &[f64]) -> Vec<f64> {
    let mut v = u.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn radial_function(grid: &RadialGrid, values: Vec<f64>) -> Result<RadialFunction> {
    RadialFunction::with_models(grid.clone(), values, InnerModel::PowerLaw, TailModel::PowerLaw)
}

/// Dilation u ↦ R^{−(n−2s)/2}u(·/R), resampled on the same grid, with R
/// chosen so that half of ∫|u|^{2*} lies inside |x| < 1.
fn scale_fix(u: &[f64], forms: &QuadraticFormAssembly, q: f64) -> Result<Option<Vec<f64>>> {
    let grid = &forms.grid;
    let total = forms.lp(u, q);
    let mut acc = 0.0;
    let mut median = grid.r_max();
    for (i, (&v, &w)) in u.iter().zip(&forms.lp_weights).enumerate() {
        acc += w * v.abs().powf(q);
        if acc >= 0.5 * total {
            median = grid.nodes()[i];
            break;
        }
    }
    let big_r = 1.0 / median;
    if (big_r.ln()).abs() < 0.1 {
        return Ok(None);
    }
    let f = radial_function(grid, u.to_vec())?;
    let beta = 0.5 * (forms.n as f64 - 2.0 * forms.s);
    let scaled = grid
        .nodes()
        .iter()
        .map(|&r| {
            let x = r / big_r;
            if x > grid.r_max() {
                0.0
            } else {
                big_r.powf(-beta) * f.eval_d2(x).0.max(0.0)
            }
        })
        .collect();
    Ok(Some(scaled))
}

/// ‖g − P_ζ g‖_A / ‖u‖_A: the preconditioned gradient with its component
/// along the dilation generator ζ = −βu − r u' removed (A-orthogonally).
/// The discrete quotient is only approximately dilation invariant, so the
/// descent direction keeps a small component along ζ that does not vanish
/// at discrete stationarity modulo dilations.
fn stationarity(u: &[f64], dir: &DVector<f64>, forms: &QuadraticFormAssembly) -> f64 {
    let r = forms.grid.nodes();
    let m = u.len();
    let beta = 0.5 * (forms.n as f64 - 2.0 * forms.s);
    let zeta = DVector::from_fn(m, |i, _| {
        let (a, b) = if i == 0 { (0, 1) } else if i == m - 1 { (m - 2, m - 1) } else { (i - 1, i + 1) };
        let du = (u[b] - u[a]) / (r[b] - r[a]);
        -beta * u[i] - r[i] * du
    });
    let a = &forms.gagliardo_matrix;
    let uv = DVector::from_column_slice(u);
    let az = a * &zeta;
    let zz = zeta.dot(&az);
    let coef = if zz > 0.0 { dir.dot(&az) / zz } else { 0.0 };
    let perp = dir - zeta * coef;
    (perp.dot(&(a * &perp)) / uv.dot(&(a * &uv))).sqrt()
}

/// Preconditioned projected descent on the Rayleigh quotient.
///
/// Each step moves along g = A⁻¹∇R (A the Gagliardo matrix), clips at 0 and
/// renormalizes to ‖u‖_{2*} = 1; it is accepted only if R does not
/// increase (otherwise the step is halved). Every `rearrange_every`
/// iterations the decreasing rearrangement and the dilation fix are tried,
/// each kept only if R does not increase.
pub fn minimize_groundstate(
    lambda: f64,
    forms: &QuadraticFormAssembly,
    opts: MinimizeOptions,
) -> Result<GroundStateResult> {
    let (n, s) = (forms.n, forms.s);
    let big_lambda = hardy_constant(n, s)?;
    if !(lambda >= 0.0 && lambda < big_lambda) {
        return Err(Error::Domain(format!("lambda must lie in [0, {big_lambda}), got {lambda}")));
    }
    let q = sobolev_exponent(forms);
    let m = forms.len();
    let a = &forms.gagliardo_matrix;
    let chol = a.clone().cholesky().ok_or_else(|| Error::Numerical("Gagliardo matrix is not positive definite".into()))?;
    let d = DVector::from_column_slice(&forms.hardy_diag);
    let w = DVector::from_column_slice(&forms.lp_weights);

    let mut u: Vec<f64> = forms.grid.nodes().iter().map(|r| (-r).exp()).collect();
    normalize(&mut u, forms, q)?;
    let mut value = rayleigh_values(&u, lambda, forms)?;
    let mut history = vec![value];
    let mut step = opts.step;
    let (mut applied, mut skipped, mut fixes) = (0, 0, 0);
    let mut converged = false;
    let mut iterations = 0;
    let mut last_change = f64::NAN;
    for it in 1..=opts.max_iter {
        iterations = it;
        // ∇R at ‖u‖_q = 1: 2(A − λD)u − 2R w u^{q−1}
        let uv = DVector::from_column_slice(&u);
        let pw = DVector::from_iterator(m, u.iter().map(|x| x.abs().powf(q - 2.0) * x));
        let grad = (a * &uv - d.component_mul(&uv) * lambda - w.component_mul(&pw) * value) * 2.0;
        let dir = chol.solve(&grad);
        let gperp = stationarity(&u, &dir, forms);
        if gperp <= opts.grad_tol {
            converged = true;
            break;
        }
        let mut accepted = false;
        while step >= opts.min_step {
            let mut trial: Vec<f64> = u.iter().zip(dir.iter()).map(|(x, g)| (x - step * g).max(0.0)).collect();
            if normalize(&mut trial, forms, q).is_ok() {
                let tv = rayleigh_values(&trial, lambda, forms)?;
                if tv <= value {
                    let change = (value - tv) / value.abs();
                    last_change = change;
                    u = trial;
                    value = tv;
                    history.push(value);
                    accepted = true;
                    step = (step * 1.5).min(opts.step);
                    if change <= opts.tol {
                        converged = true;
                    }
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::Stall { iterations: it, history });
        }
        if opts.rearrange_every > 0 && it % opts.rearrange_every == 0 {
            let mut r = rearrange(&u);
            normalize(&mut r, forms, q)?;
            let rv = rayleigh_values(&r, lambda, forms)?;
            if rv <= value {
                if r != u {
                    applied += 1;
                }
                u = r;
                value = rv;
            } else {
                skipped += 1;
                debug!("rearrangement skipped at iteration {it}: {rv} > {value}");
            }
            if let Some(mut sc) = scale_fix(&u, forms, q)? {
                normalize(&mut sc, forms, q)?;
                let sv = rayleigh_values(&sc, lambda, forms)?;
                if sv <= value {
                    u = sc;
                    value = sv;
                    fixes += 1;
                }
            }
            if *history.last().unwrap() != value {
                history.push(value);
            }
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::Divergence { iterations, last_change, history });
    }
    info!("ground state lambda={lambda}: beta={value} after {iterations} iterations");
    let scale = value.powf(1.0 / (q - 2.0));
    let values: Vec<f64> = u.iter().map(|v| scale * v).collect();
    let profile = radial_function(&forms.grid, values)?;
    let params = FracParams::critical(n, s, lambda)?;
    let el = verify_solution(&profile, lambda, &params)?;
    let mono = monotonicity_check(profile.values());
    Ok(GroundStateResult {
        lambda,
        profile: Some(profile),
        minimizer: u,
        beta: value,
        lagrange_scale: scale,
        iterations,
        el_residual: el.weighted_l2,
        monotone: mono.monotone,
        history,
        rearrangements_applied: applied,
        rearrangements_skipped: skipped,
        scale_fixes: fixes,
    })
}

// ═══════════════════════════════════════════════════════════════════
// Verification
// ═══════════════════════════════════════════════════════════════════

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionResidual {
    /// max |res| / max |rhs| over the evaluation radii.
    pub max_relative: f64,
    /// (Σ w res²)^{1/2} / (Σ w rhs²)^{1/2} with w = r^{n−1}·Δr.
    pub weighted_l2: f64,
    pub radii: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Number of evaluation radii used by [`verify_solution`].
pub const VERIFY_POINTS: usize = 25;

/// Residual of (−Δ)^s u = λ|x|^{−2s}u + u^{(n+2s)/(n−2s)} at VERIFY_POINTS
/// nodes spread logarithmically over the interior decades of the grid
/// (two decades away from either end, or the middle third if the grid is
/// shorter).
pub fn verify_solution(u: &RadialFunction, lambda: f64, params: &FracParams) -> Result<SolutionResidual> {
    let (n, s) = (params.n, params.s);
    let p = params.conformal_power();
    let nodes = u.grid().nodes();
    let (lo, hi) = {
        let (a, b) = (nodes[0].ln(), nodes[nodes.len() - 1].ln());
        let margin = (2.0 * 10f64.ln()).min((b - a) / 3.0);
        ((a + margin).exp(), (b - margin).exp())
    };
    let interior: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i] >= lo && nodes[i] <= hi).collect();
    if interior.is_empty() {
        return Err(Error::Resolution("grid too short for verification".into()));
    }
    let picks: Vec<usize> = if interior.len() <= VERIFY_POINTS {
        interior.clone()
    } else {
        let last = interior.len() - 1;
        (0..VERIFY_POINTS).map(|k| interior[k * last / (VERIFY_POINTS - 1)]).collect()
    };
    let opts = FracLapOptions { allow_truncation: true, rel_tol: 1e-9, ..Default::default() };
    let max_u = u.max_abs();
    let mut radii = Vec::new();
    let mut residuals = Vec::new();
    let (mut num, mut den, mut max_res, mut max_rhs) = (0.0, 0.0, 0.0f64, 0.0f64);
    if max_u == 0.0 {
        return Ok(SolutionResidual { max_relative: 0.0, weighted_l2: 0.0, radii: picks.iter().map(|&i| nodes[i]).collect(), residuals: vec![0.0; picks.len()] });
    }
    for &i in &picks {
        let r = nodes[i];
        let ui = u.values()[i];
        let lhs = fraclap_radial_with(u, n, s, r, opts)?.total();
        let rhs = lambda * r.powf(-2.0 * s) * ui + ui.abs().powf(p - 1.0) * ui;
        let res = lhs - rhs;
        let dr = if i + 1 < nodes.len() { nodes[i + 1] - nodes[i] } else { nodes[i] - nodes[i - 1] };
        let wgt = r.powi(n as i32 - 1) * dr;
        num += wgt * res * res;
        den += wgt * rhs * rhs;
        max_res = max_res.max(res.abs());
        max_rhs = max_rhs.max(rhs.abs());
        radii.push(r);
        residuals.push(res);
    }
    Ok(SolutionResidual {
        max_relative: max_res / max_rhs,
        weighted_l2: (num / den).sqrt(),
        radii,
        residuals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub monotone: bool,
    /// 1-based index i of the first pair with u(r_i) ≤ u(r_{i+1}).
    pub first_violation: Option<usize>,
}

/// Strict decrease u(r_i) > u(r_{i+1}); pairs where both values are below
/// 1e−12·max|u| (round-off level) are not judged.
pub fn monotonicity_check(u: &[f64]) -> MonotoneReport {
    let max = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let slack = 1e-12 * max;
    for i in 0..u.len().saturating_sub(1) {
        if u[i].abs() <= slack && u[i + 1].abs() <= slack {
            continue;
        }
        if !(u[i] > u[i + 1]) {
            return MonotoneReport { monotone: false, first_violation: Some(i + 1) };
        }
    }
    MonotoneReport { monotone: true, first_violation: None }
}

// ═══════════════════════════════════════════════════════════════════
// Indefiniteness probe
// ═══════════════════════════════════════════════════════════════════

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeResult {
    pub lambda: f64,
    /// Largest ε with Q(u_ε) < 0, if any.
    pub witness_eps: Option<f64>,
    /// Q(u_ε)/∫u_ε²|x|^{−2s} = (Hardy quotient) − λ at the witness.
    pub witness_q: Option<f64>,
    /// min over the scanned ε of Q(u_ε)/∫u_ε²|x|^{−2s}.
    pub min_q: f64,
    /// (ε, normalized Q) for every ε scanned.
    pub scan: Vec<(f64, f64)>,
}

/// Scans u_ε(r) = r^{−(n−2s)/2}η_ε(r) for ε = 2^{−1}, 2^{−2}, … while the
/// support [ε/2, 2/ε] fits well inside the grid, and reports the first
/// (largest) ε with Q(u_ε) < 0. Q is normalized by the Hardy integral, so
/// the reported value is the Hardy quotient of u_ε minus λ.
pub fn indefiniteness_probe(lambda: f64, forms: &QuadraticFormAssembly) -> Result<ProbeResult> {
    let beta = 0.5 * (forms.n as f64 - 2.0 * forms.s);
    let nodes = forms.grid.nodes();
    let (r_min, r_max) = (forms.grid.r_min(), forms.grid.r_max());
    let mut scan = Vec::new();
    let mut witness = None;
    let mut eps = 0.5;
    while eps / 2.0 >= 4.0 * r_min && 2.0 / eps <= 0.25 * r_max {
        let u: Vec<f64> = nodes.iter().map(|&r| r.powf(-beta) * eta_eps(eps, r)).collect();
        let h = forms.hardy(&u);
        let qn = forms.q_form(&u, lambda) / h;
        scan.push((eps, qn));
        if qn < 0.0 && witness.is_none() {
            witness = Some((eps, qn));
        }
        eps *= 0.5;
    }
    if scan.is_empty() {
        return Err(Error::Resolution("grid too short for the cut-off family".into()));
    }
    let min_q = scan.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    Ok(ProbeResult { lambda, witness_eps: witness.map(|w| w.0), witness_q: witness.map(|w| w.1), min_q, scan })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_not_monotone() {
        let r = monotonicity_check(&[1.0; 5]);
        assert!(!r.monotone);
        assert_eq!(r.first_violation, Some(1));
    }

    #[test]
    fn rearrangement_sorts_decreasingly() {
        assert_eq!(rearrange(&[0.1, 0.5, 0.3]), vec![0.5, 0.3, 0.1]);
    }
}

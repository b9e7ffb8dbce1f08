//! The weighted Steklov eigenproblem on the upper half-sphere S^n_+ and the
//! homogeneous fields built from its first eigenfunction.
//!
//! Axisymmetric functions ψ(φ), φ ∈ [0, π/2] measured from the pole e_{n+1}
//! (θ_{n+1} = cos φ; the equator S^{n−1} is φ = π/2). With
//! w(φ) = sin^{n−1}φ · cos^{1−2s}φ and β = (n−2s)/2,
//!
//! ```text
//! E(ψ) = |S^{n−1}| [ ∫ w (ψ'² + β²ψ²) dφ − λκ_s ψ(π/2)² ],
//! μ₁(λ) = min E(ψ) / (κ_s |S^{n−1}| ψ(π/2)²).
//! ```
//!
//! With S the P1 matrix of ∫w(ψ'² + β²ψ²), the constrained minimum is
//! μ₁(λ) + λ = 1/(κ_s (S^{−1})_{KK}) and ψ₁ ∝ S^{−1}e_K.
//!
//! Boundary orientation: the minimizer satisfies the natural condition
//! w ψ'(π/2) = κ_s(μ₁+λ)ψ(π/2) (the outward derivative on the equator is
//! ∂_φ). Near φ = π/2, ψ ≈ ψ_K + b cos^{2s}φ with w ψ' → −2s·b, so
//! −2s·b = κ_s(μ₁+λ)ψ_K; for W₁ = |X|^{−β}ψ₁ this is exactly
//! −lim t^{1−2s}∂_tW₁ = κ_s(μ₁+λ)W₁(x,0)/|x|^{2s}, and μ₁(0) = Λ_{n,s}.

use crate::constants::{kappa_s, sphere_area};
use crate::error::{Error, Result};
use crate::extension::{ExtensionField, HalfStripGrid};
use crate::linalg::solve_tridiagonal;
use crate::quad::{gauss_jacobi_unit, gauss_legendre, Rule};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

// ═══════════════════════════════════════════════════════════════════
// Mesh and forms
// ═══════════════════════════════════════════════════════════════════

/// Colatitudes 0 = φ_0 < … < φ_K = π/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularMesh {
    nodes: Vec<f64>,
}

impl AngularMesh {
    /// Validates explicit nodes; at least 8 must lie in the last 1% of arc.
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 || nodes[0] != 0.0 || (nodes[nodes.len() - 1] - FRAC_PI_2).abs() > 1e-15 {
            return Err(Error::Domain("angular mesh must run from 0 to π/2".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("angular nodes must be strictly increasing".into()));
        }
        let near = nodes.iter().filter(|&&p| p >= 0.99 * FRAC_PI_2).count();
        if near < 8 {
            return Err(Error::Resolution(format!("{near} nodes in the last 1% of arc; at least 8 required")));
        }
        let mut nodes = nodes;
        let k = nodes.len() - 1;
        nodes[k] = FRAC_PI_2;
        Ok(AngularMesh { nodes })
    }

    /// φ_k = (π/2)(1 − (1 − k/K)^q): q = 1 is uniform, q > 1 grades toward
    /// the equator where the weight degenerates.
    pub fn graded(cells: usize, q: f64) -> Result<Self> {
        if cells < 2 || !(q >= 1.0) {
            return Err(Error::Domain("graded mesh needs ≥ 2 cells and q ≥ 1".into()));
        }
        let nodes = (0..=cells)
            .map(|k| FRAC_PI_2 * (1.0 - (1.0 - k as f64 / cells as f64).powf(q)))
            .collect();
        Self::new(nodes)
    }

    /// Graded mesh with the exponent q = clamp(1/s, 1.5, 4), which balances
    /// resolution of the cos^{2s}φ equator layer against round-off in the
    /// smallest cells.
    pub fn for_order(cells: usize, s: f64) -> Result<Self> {
        Self::graded(cells, (1.0 / s).clamp(1.5, 4.0))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Every other node (the last one always kept).
    fn coarsened(&self) -> Option<AngularMesh> {
        let k = self.cells();
        if k < 4 {
            return None;
        }
        let mut nodes: Vec<f64> = self.nodes.iter().step_by(2).cloned().collect();
        if k % 2 == 1 {
            nodes.push(FRAC_PI_2);
        }
        AngularMesh::new(nodes).ok()
    }
}

/// Tridiagonal P1 matrices: `diag[k]`, `off[k]` = entry (k, k+1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    fn zeros(m: usize) -> Self {
        Tridiagonal { diag: vec![0.0; m], off: vec![0.0; m - 1] }
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.diag.len() {
            acc += self.diag[k] * x[k] * x[k];
        }
        for k in 0..self.off.len() {
            acc += 2.0 * self.off[k] * x[k] * x[k + 1];
        }
        acc
    }
}

/// Discrete forms of the eigenproblem (all without the |S^{n−1}| factor).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngularForms {
    pub n: usize,
    pub s: f64,
    pub mesh: AngularMesh,
    /// ∫ w ψ'χ'.
    pub stiffness: Tridiagonal,
    /// ∫ w ψχ.
    pub mass: Tridiagonal,
    /// ∫ w ψχ / sin²φ (azimuthal modes).
    pub mass_sin2: Tridiagonal,
    /// Zero-order coefficient β² = ((n−2s)/2)².
    pub bulk_coefficient: f64,
}

/// Quadrature rule for one cell, Gauss–Jacobi on the cell touching π/2.
fn cell_rule(a: f64, b: f64, s: f64, gl: &Rule) -> (Rule, bool) {
    if b >= FRAC_PI_2 {
        // y = π/2 − φ ∈ [0, h]: ∫ y^{1−2s} g(y) dy with exact weight.
        let h = b - a;
        let g = 1.0 - 2.0 * s;
        let gj = gauss_jacobi_unit(12, g);
        let nodes = gj.nodes.iter().map(|x| FRAC_PI_2 - h * x).collect();
        let weights = gj.weights.iter().map(|w| w * h.powf(1.0 + g)).collect();
        (Rule { nodes, weights }, true)
    } else {
        (gl.mapped(a, b), false)
    }
}

/// w(φ), or w(φ)/(π/2−φ)^{1−2s} when `stripped` (Gauss–Jacobi cell).
fn weight(n: usize, s: f64, phi: f64, stripped: bool) -> f64 {
    let sn = phi.sin().powi(n as i32 - 1);
    if stripped {
        let y = FRAC_PI_2 - phi;
        let ratio = if y > 0.0 { y.sin() / y } else { 1.0 };
        sn * ratio.powf(1.0 - 2.0 * s)
    } else {
        sn * phi.cos().powf(1.0 - 2.0 * s)
    }
}

/// Assembles stiffness and mass matrices of the weighted eigenproblem.
pub fn assemble_angular(n: usize, s: f64, mesh: &AngularMesh) -> Result<AngularForms> {
    if !(s > 0.0 && s < 1.0) || n < 1 || (n as f64) <= 2.0 * s {
        return Err(Error::InvalidParams("need n ≥ 1, 0 < s < 1 and n > 2s".into()));
    }
    let x = mesh.nodes();
    let m = x.len();
    let gl = gauss_legendre(12);
    let mut st = Tridiagonal::zeros(m);
    let mut ms = Tridiagonal::zeros(m);
    let mut m2 = Tridiagonal::zeros(m);
    for k in 0..m - 1 {
        let (a, b) = (x[k], x[k + 1]);
        let h = b - a;
        let (rule, stripped) = cell_rule(a, b, s, &gl);
        let (mut w0, mut m00, mut m01, mut m11, mut q00, mut q01, mut q11) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (&p, &q) in rule.nodes.iter().zip(&rule.weights) {
            let w = weight(n, s, p, stripped) * q;
            let l1 = (p - a) / h;
            let l0 = 1.0 - l1;
            w0 += w;
            m00 += w * l0 * l0;
            m01 += w * l0 * l1;
            m11 += w * l1 * l1;
            let sin2 = p.sin().powi(2);
            if sin2 > 0.0 {
                q00 += w * l0 * l0 / sin2;
                q01 += w * l0 * l1 / sin2;
                q11 += w * l1 * l1 / sin2;
            }
        }
        if !(w0.is_finite() && w0 > 0.0) {
            return Err(Error::Numerical(format!("weight quadrature failed on cell {k}")));
        }
        let kk = w0 / (h * h);
        st.diag[k] += kk;
        st.diag[k + 1] += kk;
        st.off[k] -= kk;
        ms.diag[k] += m00;
        ms.diag[k + 1] += m11;
        ms.off[k] += m01;
        m2.diag[k] += q00;
        m2.diag[k + 1] += q11;
        m2.off[k] += q01;
    }
    let beta = 0.5 * (n as f64 - 2.0 * s);
    Ok(AngularForms { n, s, mesh: mesh.clone(), stiffness: st, mass: ms, mass_sin2: m2, bulk_coefficient: beta * beta })
}

// ═══════════════════════════════════════════════════════════════════
// First eigenpair
// ═══════════════════════════════════════════════════════════════════

/// First Steklov eigenpair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenResult {
    pub n: usize,
    pub s: f64,
    pub lambda: f64,
    pub mu1: f64,
    pub phi: Vec<f64>,
    /// ψ₁ on the mesh, normalized by ψ₁(π/2) = 1.
    pub psi1: Vec<f64>,
    /// |μ₁(mesh) − μ₁(every other node)|.
    pub estimate: f64,
    pub mesh_size: usize,
    /// b in ψ₁ ≈ 1 + b cos^{2s}φ at the equator, from the natural boundary
    /// condition −2s·b = κ_s(μ₁+λ).
    pub boundary_slope: f64,
}

/// (μ₁ + λ, ψ with ψ_K = 1) for the azimuthal mode ℓ (0 = axisymmetric).
fn constrained_min(forms: &AngularForms, ell: usize) -> Result<(f64, Vec<f64>)> {
    let kappa = kappa_s(forms.s)?;
    let m = forms.stiffness.diag.len();
    let pot = (ell * (ell + forms.n).saturating_sub(2)) as f64;
    let b2 = forms.bulk_coefficient;
    let first = if ell > 0 { 1 } else { 0 }; // ψ(0) = 0 for ℓ ≥ 1
    let size = m - first;
    let entry_d = |k: usize| forms.stiffness.diag[k] + b2 * forms.mass.diag[k] + pot * forms.mass_sin2.diag[k];
    let entry_o = |k: usize| forms.stiffness.off[k] + b2 * forms.mass.off[k] + pot * forms.mass_sin2.off[k];
    let diag: Vec<f64> = (first..m).map(entry_d).collect();
    let off: Vec<f64> = (first..m - 1).map(entry_o).collect();
    let mut lower = vec![0.0];
    lower.extend_from_slice(&off);
    let mut upper = off.clone();
    upper.push(0.0);
    let mut rhs = vec![0.0; size];
    rhs[size - 1] = 1.0;
    let x = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
    let xk = x[size - 1];
    if !(xk > 0.0) {
        return Err(Error::Numerical("angular stiffness matrix is not positive definite".into()));
    }
    let mut psi = vec![0.0; first];
    psi.extend(x.iter().map(|v| v / xk));
    Ok((1.0 / (kappa * xk), psi))
}

/// Solves for μ₁(λ) and the positive eigenfunction ψ₁.
pub fn solve_mu1(lambda: f64, forms: &AngularForms) -> Result<EigenResult> {
    let (shifted, psi) = constrained_min(forms, 0)?;
    if psi.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Resolution("first eigenfunction is not positive (mesh too coarse)".into()));
    }
    let estimate = match forms.mesh.coarsened() {
        Some(coarse) => {
            let cf = assemble_angular(forms.n, forms.s, &coarse)?;
            (constrained_min(&cf, 0)?.0 - shifted).abs()
        }
        None => f64::NAN,
    };
    let kappa = kappa_s(forms.s)?;
    Ok(EigenResult {
        boundary_slope: -kappa * shifted / (2.0 * forms.s),
        n: forms.n,
        s: forms.s,
        lambda,
        mu1: shifted - lambda,
        phi: forms.mesh.nodes().to_vec(),
        psi1: psi,
        estimate,
        mesh_size: forms.mesh.cells(),
    })
}

/// Validation mode: μ + λ of the lowest state carrying the azimuthal
/// harmonic of degree ℓ on S^{n−1} (ψ(φ)Y_ℓ). Entry 0 is the axisymmetric
/// value; the first eigenvalue is attained there iff it is the smallest.
pub fn azimuthal_spectrum(forms: &AngularForms, max_ell: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(max_ell + 1);
    for ell in 0..=max_ell {
        if forms.n == 1 && ell > 1 {
            break; // S^0 only carries even and odd functions
        }
        out.push(constrained_min(forms, ell)?.0);
    }
    Ok(out)
}

impl EigenResult {
    /// ψ₁(φ) = 1 + b·v + ρ(φ) with v = cos^{2s}φ. The equator term b·v is
    /// exact (it carries the boundary flux); the remainder ρ, which behaves
    /// like a smooth function of cos²φ near the equator, is interpolated
    /// linearly in z = cos²φ between the mesh values.
    pub fn psi_at(&self, phi: f64) -> f64 {
        let phi = phi.clamp(0.0, FRAC_PI_2);
        let k = self.phi.partition_point(|&p| p <= phi).clamp(1, self.phi.len() - 1);
        let (a, b) = (self.phi[k - 1], self.phi[k]);
        let v = |p: f64| p.cos().max(0.0).powf(2.0 * self.s);
        let z = |p: f64| p.cos().powi(2);
        let rho = |j: usize| self.psi1[j] - 1.0 - self.boundary_slope * v(self.phi[j]);
        let (za, zb, zx) = (z(a), z(b), z(phi));
        let w = if (za - zb).abs() < 1e-300 { 0.0 } else { (zx - zb) / (za - zb) };
        1.0 + self.boundary_slope * v(phi) + w * rho(k - 1) + (1.0 - w) * rho(k)
    }

    /// W₁(r, t) = |X|^{(2s−n)/2} ψ₁(X/|X|).
    pub fn w1(&self, r: f64, t: f64) -> f64 {
        let rr = (r * r + t * t).sqrt();
        let beta = 0.5 * (self.n as f64 - 2.0 * self.s);
        rr.powf(-beta) * self.psi_at(r.atan2(t))
    }

    /// ∫ w ψ₁² dφ by the P1 mass matrix of the given forms.
    fn psi_mass(&self, forms: &AngularForms) -> f64 {
        forms.mass.quad_form(&self.psi1)
    }
}

/// W₁ sampled on a half-strip grid (the grid never contains |X| = 0).
pub fn build_w1(res: &EigenResult, grid: &HalfStripGrid) -> ExtensionField {
    ExtensionField::from_fn(grid, |r, t| res.w1(r, t))
}

// ═══════════════════════════════════════════════════════════════════
// Cut-off family W_ε
// ═══════════════════════════════════════════════════════════════════

fn bump(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth cut-off: 0 on [0, 1/2], 1 on [1, ∞).
pub fn eta(l: f64) -> f64 {
    let x = 2.0 * l - 1.0;
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        bump(x) / (bump(x) + bump(1.0 - x))
    }
}

fn eta_prime(l: f64) -> f64 {
    let x = 2.0 * l - 1.0;
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let (f, g) = (bump(x), bump(1.0 - x));
    let (df, dg) = (f / (x * x), -g / ((1.0 - x) * (1.0 - x)));
    2.0 * (df * (f + g) - f * (df + dg)) / ((f + g) * (f + g))
}

/// η_ε(l) = η(l/ε) for l ≤ 1 and η(1/(εl)) for l ≥ 1.
pub fn eta_eps(eps: f64, l: f64) -> f64 {
    if l <= 1.0 {
        eta(l / eps)
    } else {
        eta(1.0 / (eps * l))
    }
}

/// Quotient of the cut-off family, evaluated two ways.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WEpsQuotient {
    pub eps: f64,
    /// Separated-variables value μ₁ + J∫wψ₁²/(κ_s ψ₁(π/2)² I_ε) with
    /// I_ε = ∫η_ε²/l dl and J = ∫ l η_ε'² dl.
    pub separated: f64,
    /// Same quotient from the sampled field (finite-volume energy and
    /// trapezoidal Hardy integral on the grid).
    pub grid: f64,
    /// Radial integrals I_ε and J.
    pub log_integral: f64,
    pub gradient_integral: f64,
}

/// W_ε(X) = |X|^{(2s−n)/2} η_ε(|X|) ψ₁(X/|X|) on the grid, together with its
/// half-space quotient (∫t^{1−2s}|∇W|² − λκ_s∫W²/|x|^{2s}) / (κ_s∫W²/|x|^{2s}).
pub fn w_eps_family(
    res: &EigenResult,
    forms: &AngularForms,
    eps: f64,
    grid: &HalfStripGrid,
) -> Result<(ExtensionField, WEpsQuotient)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain("ε must lie in (0, 1)".into()));
    }
    if grid.radial.r_min() > 0.25 * eps || grid.r_max() < 4.0 / eps || grid.t_max() < 4.0 / eps {
        return Err(Error::Resolution(format!(
            "grid must cover [ε/4, 4/ε] = [{:e}, {:e}] in |x| and t",
            0.25 * eps,
            4.0 / eps
        )));
    }
    let (n, s) = (res.n, res.s);
    let kappa = kappa_s(s)?;
    let field = ExtensionField::from_fn(grid, |r, t| {
        let rr = (r * r + t * t).sqrt();
        eta_eps(eps, rr) * res.w1(r, t)
    });
    // Radial integrals in ln l, all smooth pieces.
    let integ = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
        crate::quad::adaptive(|x: f64| f(x.exp()) * x.exp(), &[a.ln(), b.ln()], 1e-300, 1e-12, 400).value
    };
    let i_trans = integ(&|l| eta(l).powi(2) / l, 0.5, 1.0);
    let log_integral = 2.0 * (i_trans + (1.0 / eps).ln());
    let j0 = integ(&|l| l * eta_prime(l).powi(2), 0.5, 1.0);
    let gradient_integral = 2.0 * j0;
    let shifted = res.mu1 + res.lambda;
    let psi_k = *res.psi1.last().unwrap();
    let separated = shifted + gradient_integral * res.psi_mass(forms) / (kappa * psi_k * psi_k * log_integral) - res.lambda;
    // Grid version.
    let energy = crate::extension::extension_energy(&field, n, s);
    let rn = grid.radial.nodes();
    let area = sphere_area(n);
    let mut hardy = 0.0;
    for k in 0..rn.len() - 1 {
        let g = |i: usize| field.trace[i].powi(2) * rn[i].powf(n as f64 - 1.0 - 2.0 * s);
        hardy += 0.5 * (g(k) + g(k + 1)) * (rn[k + 1] - rn[k]);
    }
    hardy *= area;
    let gridq = (energy - res.lambda * kappa * hardy) / (kappa * hardy);
    Ok((
        field,
        WEpsQuotient { eps, separated, grid: gridq, log_integral, gradient_integral },
    ))
}

//! Dense quadratic forms on a radial grid: the Gagliardo form ⟨u,u⟩_{Ḣ^s},
//! the Hardy weight ∫u²|x|^{−2s} and the L^q functional.
//!
//! Discretization: continuous piecewise-linear functions in r. The first
//! basis function equals 1 on [0, r_1] and the last one ramps down to 0 at a
//! virtual node r_{M+1} = r_M²/r_{M−1}; beyond it u = 0. Element pairs are
//! integrated as
//!
//! * same element — Duffy-type split of the square with Gauss–Jacobi weights
//!   absorbing the |r−ρ|^{1−2s} behaviour of k(r,ρ)(r−ρ)²;
//! * touching elements — corner Duffy transform with a Gauss–Jacobi weight
//!   x^{2−2s} (elements of very different size are first split);
//! * separated elements — tensor Gauss–Legendre whose order is chosen from the
//!   relative separation, subdividing close pairs.
//!
//! The interaction of the support with the exterior r > r_{M+1} is added as
//! 2∫u(r)²κ_out(r)dr with κ_out(r) = ∫_{r_{M+1}}^∞ k(r,ρ) dρ.

use super::kernel::RadialKernel;
use crate::constants::{sphere_area, FracParams};
use crate::error::{Error, Result};
use crate::grid::{RadialFunction, RadialGrid};
use crate::quad::{gauss_jacobi_unit, gauss_legendre, Rule};
use nalgebra::{DMatrix, DVector};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy)]
struct Elem {
    a: f64,
    b: f64,
    dofs: [Option<usize>; 2],
    flat: bool,
}

impl Elem {
    #[inline]
    fn vals(&self, r: f64) -> [f64; 2] {
        if self.flat {
            [1.0, 0.0]
        } else {
            let h = self.b - self.a;
            [(self.b - r) / h, (r - self.a) / h]
        }
    }

    fn slopes(&self) -> [f64; 2] {
        if self.flat {
            [0.0, 0.0]
        } else {
            let h = self.b - self.a;
            [-1.0 / h, 1.0 / h]
        }
    }
}

fn elements(grid: &RadialGrid) -> Vec<Elem> {
    let x = grid.nodes();
    let m = x.len();
    let mut el = Vec::with_capacity(m + 1);
    el.push(Elem { a: 0.0, b: x[0], dofs: [Some(0), None], flat: true });
    for k in 1..m {
        el.push(Elem { a: x[k - 1], b: x[k], dofs: [Some(k - 1), Some(k)], flat: false });
    }
    let xv = x[m - 1] * x[m - 1] / x[m - 2];
    el.push(Elem { a: x[m - 1], b: xv, dofs: [Some(m - 1), None], flat: false });
    el
}

/// Dense matrices realizing the three functionals on a radial grid.
#[derive(Debug, Clone)]
pub struct QuadraticFormAssembly {
    pub grid: RadialGrid,
    pub n: usize,
    pub s: f64,
    /// uᵀAu = ‖u‖²_{Ḣ^s} = C_{n,s}∬(u(x)−u(y))²|x−y|^{−n−2s}.
    pub gagliardo_matrix: DMatrix<f64>,
    /// uᵀDu = ∫u²|x|^{−2s} (lumped).
    pub hardy_diag: Vec<f64>,
    /// Σ wᵢ|uᵢ|^q = ∫|u|^q (lumped).
    pub lp_weights: Vec<f64>,
    /// Relative shift used by the positive-semidefiniteness check.
    pub assembly_tolerance: f64,
}

struct Assembler<'a> {
    kern: &'a RadialKernel,
    el: &'a [Elem],
    a: DMatrix<f64>,
    duffy_x: Rule,
    duffy_z: Rule,
    same_x: Rule,
    same_z: Rule,
    gl: [Rule; 3],
}

impl<'a> Assembler<'a> {
    fn add_point(&mut self, w: f64, e: usize, r: f64, f: usize, rho: f64) {
        let ee = self.el[e];
        let ef = self.el[f];
        let ve = ee.vals(r);
        let vf = ef.vals(rho);
        let mut ids = [0usize; 4];
        let mut d = [0.0f64; 4];
        let mut cnt = 0;
        for (slot, dof) in ee.dofs.iter().enumerate() {
            if let Some(id) = *dof {
                ids[cnt] = id;
                d[cnt] = ve[slot];
                cnt += 1;
            }
        }
        for (slot, dof) in ef.dofs.iter().enumerate() {
            if let Some(id) = *dof {
                if let Some(pos) = ids[..cnt].iter().position(|&q| q == id) {
                    d[pos] -= vf[slot];
                } else {
                    ids[cnt] = id;
                    d[cnt] = -vf[slot];
                    cnt += 1;
                }
            }
        }
        for i in 0..cnt {
            let wi = w * d[i];
            for j in 0..cnt {
                self.a[(ids[i], ids[j])] += wi * d[j];
            }
        }
    }

    /// 2∫_{I1}∫_{I2} k (u(r)−u(ρ))² for separated or touching sub-intervals
    /// (I1 ⊂ element e lies to the left of I2 ⊂ element f).
    fn pair(&mut self, e: usize, i1: (f64, f64), f: usize, i2: (f64, f64), depth: usize) {
        let l1 = i1.1 - i1.0;
        let l2 = i2.1 - i2.0;
        let gap = i2.0 - i1.1;
        if gap <= 0.0 {
            // touching at c = i1.1 = i2.0
            if l1 > 2.0 * l2 && depth < 60 {
                let cut = i1.1 - l2;
                self.pair(e, (i1.0, cut), f, i2, depth + 1);
                self.pair(e, (cut, i1.1), f, i2, depth + 1);
                return;
            }
            if l2 > 2.0 * l1 && depth < 60 {
                let cut = i2.0 + l1;
                self.pair(e, i1, f, (i2.0, cut), depth + 1);
                self.pair(e, i1, f, (cut, i2.1), depth + 1);
                return;
            }
            self.touching(e, i1, f, i2);
            return;
        }
        let sigma = gap / l1.max(l2);
        if sigma < 3.0 && depth < 60 {
            if l1 >= l2 {
                let m = 0.5 * (i1.0 + i1.1);
                self.pair(e, (i1.0, m), f, i2, depth + 1);
                self.pair(e, (m, i1.1), f, i2, depth + 1);
            } else {
                let m = 0.5 * (i2.0 + i2.1);
                self.pair(e, i1, f, (i2.0, m), depth + 1);
                self.pair(e, i1, f, (m, i2.1), depth + 1);
            }
            return;
        }
        let which = if sigma >= 30.0 { 0 } else if sigma >= 8.0 { 1 } else { 2 };
        let r1 = self.gl[which].mapped(i1.0, i1.1);
        let r2 = self.gl[which].mapped(i2.0, i2.1);
        for (&r, &wr) in r1.nodes.iter().zip(&r1.weights) {
            for (&rho, &wp) in r2.nodes.iter().zip(&r2.weights) {
                let w = 2.0 * wr * wp * self.kern.k(r, rho);
                self.add_point(w, e, r, f, rho);
            }
        }
    }

    /// Corner Duffy rule for intervals touching at c.
    fn touching(&mut self, e: usize, i1: (f64, f64), f: usize, i2: (f64, f64)) {
        let c = i1.1;
        let h1 = i1.1 - i1.0;
        let h2 = i2.1 - i2.0;
        let g = 2.0 - 2.0 * self.kern.s;
        let xs = self.duffy_x.clone();
        let zs = self.duffy_z.clone();
        for (&x, &wx) in xs.nodes.iter().zip(&xs.weights) {
            for (&z, &wz) in zs.nodes.iter().zip(&zs.weights) {
                // T1: ξ = x, η = xz ; T2: ξ = xz, η = x ; r = c − h1ξ, ρ = c + h2η
                for (xi, eta) in [(x, x * z), (x * z, x)] {
                    let r = c - h1 * xi;
                    let rho = c + h2 * eta;
                    let w = 2.0 * wx * wz * h1 * h2 * x / x.powf(g) * self.kern.k(r, rho);
                    self.add_point(w, e, r, f, rho);
                }
            }
        }
    }

    /// Same-element contribution slope_a slope_b ∫∫_{E×E} k (r−ρ)².
    fn same(&mut self, e: usize) {
        let el = self.el[e];
        if el.flat {
            return;
        }
        let h = el.b - el.a;
        let s = self.kern.s;
        let mut acc = 0.0;
        for (&x, &wx) in self.same_x.nodes.iter().zip(&self.same_x.weights) {
            for (&z, &wz) in self.same_z.nodes.iter().zip(&self.same_z.weights) {
                let r = el.a + h * x;
                let rho = el.a + h * x * (1.0 - z);
                let d = h * x * z;
                let full = 2.0 * self.kern.k(r, rho) * d * d * h * h * x;
                acc += wx * wz * full / (x.powf(2.0 - 2.0 * s) * z.powf(1.0 - 2.0 * s));
            }
        }
        let sl = el.slopes();
        for i in 0..2 {
            for j in 0..2 {
                if let (Some(a), Some(b)) = (el.dofs[i], el.dofs[j]) {
                    self.a[(a, b)] += sl[i] * sl[j] * acc;
                }
            }
        }
    }
}

/// κ_out(r) = ∫_{R}^∞ k(r, ρ) dρ for r < R.
fn kappa_out(kern: &RadialKernel, r: f64, big_r: f64, gl: &Rule) -> f64 {
    let s = kern.s;
    let far = 1e4 * big_r;
    let d = big_r - r;
    let smax = ((far - r) / d).ln();
    let panels = smax.ceil().max(1.0) as usize;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = smax * p as f64 / panels as f64;
        let hi = smax * (p + 1) as f64 / panels as f64;
        let rule = gl.mapped(lo, hi);
        acc += rule.integrate(|sig| {
            let jac = d * sig.exp();
            kern.k(r, r + jac) * jac
        });
    }
    acc + kern.far_coefficient(r) * far.powf(-2.0 * s) / (2.0 * s)
}

impl QuadraticFormAssembly {
    /// Assembles the three forms for (n, s) = (params.n, params.s).
    pub fn assemble(grid: &RadialGrid, params: &FracParams) -> Result<Self> {
        params.validate()?;
        let (n, s) = (params.n, params.s);
        let kern = RadialKernel::new(n, s)?;
        let el = elements(grid);
        let m = grid.len();
        let mut asm = Assembler {
            kern: &kern,
            el: &el,
            a: DMatrix::zeros(m, m),
            duffy_x: gauss_jacobi_unit(12, 2.0 - 2.0 * s),
            duffy_z: gauss_legendre(12).mapped(0.0, 1.0),
            same_x: gauss_jacobi_unit(12, 2.0 - 2.0 * s),
            same_z: gauss_jacobi_unit(12, 1.0 - 2.0 * s),
            gl: [gauss_legendre(3), gauss_legendre(4), gauss_legendre(6)],
        };
        let ne = el.len();
        for e in 0..ne {
            asm.same(e);
            for f in e + 1..ne {
                let (a1, b1) = (el[e].a, el[e].b);
                let (a2, b2) = (el[f].a, el[f].b);
                asm.pair(e, (a1, b1), f, (a2, b2), 0);
            }
        }
        // Exterior interaction.
        let big_r = el[ne - 1].b;
        let gl8 = gauss_legendre(8);
        let gl16 = gauss_legendre(16);
        let mut a = asm.a;
        for (idx, elem) in el.iter().enumerate() {
            let rule = if idx == ne - 1 {
                // κ_out ~ (R−r)^{−2s}: graded rule in y = R − r with u² ~ y².
                let h = elem.b - elem.a;
                let g = Rule::graded_endpoint(h, 2.0 - 2.0 * s, 12, 0.35, 10);
                Rule { nodes: g.nodes.iter().map(|y| big_r - y).collect(), weights: g.weights }
            } else {
                gl8.mapped(elem.a, elem.b)
            };
            for (&r, &w) in rule.nodes.iter().zip(&rule.weights) {
                let ko = kappa_out(&kern, r, big_r, &gl16);
                let v = elem.vals(r);
                for i in 0..2 {
                    for j in 0..2 {
                        if let (Some(p), Some(q)) = (elem.dofs[i], elem.dofs[j]) {
                            a[(p, q)] += 2.0 * w * ko * v[i] * v[j];
                        }
                    }
                }
            }
        }
        // Symmetrize away round-off.
        let at = a.transpose();
        let a = (a + at) * 0.5;
        let area = sphere_area(n);
        let hardy_diag = lumped_weights(&el, m, n as f64 - 1.0 - 2.0 * s, area);
        let lp_weights = lumped_weights(&el, m, n as f64 - 1.0, area);
        let out = QuadraticFormAssembly {
            grid: grid.clone(),
            n,
            s,
            gagliardo_matrix: a,
            hardy_diag,
            lp_weights,
            assembly_tolerance: 1e-10,
        };
        out.check_psd()?;
        Ok(out)
    }

    /// Cholesky of A + tol·‖A‖·I; on failure reports the most negative eigenvalue.
    pub fn check_psd(&self) -> Result<()> {
        let norm = self.gagliardo_matrix.amax();
        let shift = self.assembly_tolerance * norm;
        let mut b = self.gagliardo_matrix.clone();
        for i in 0..b.nrows() {
            b[(i, i)] += shift;
        }
        if b.cholesky().is_some() {
            return Ok(());
        }
        let eig = nalgebra::SymmetricEigen::new(self.gagliardo_matrix.clone());
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        Err(Error::Assembly { message: "Gagliardo matrix is not positive semidefinite".into(), eigenvalue: min })
    }

    pub fn len(&self) -> usize {
        self.hardy_diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hardy_diag.is_empty()
    }

    /// uᵀAu.
    pub fn gagliardo(&self, u: &[f64]) -> f64 {
        let v = DVector::from_column_slice(u);
        (self.gagliardo_matrix.clone() * &v).dot(&v)
    }

    /// ⟨u,v⟩ = uᵀAv.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let x = DVector::from_column_slice(u);
        let y = DVector::from_column_slice(v);
        x.dot(&(&self.gagliardo_matrix * y))
    }

    /// uᵀDu.
    pub fn hardy(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.hardy_diag).map(|(x, d)| d * x * x).sum()
    }

    /// Σ wᵢ|uᵢ|^q.
    pub fn lp(&self, u: &[f64], q: f64) -> f64 {
        u.iter().zip(&self.lp_weights).map(|(x, w)| w * x.abs().powf(q)).sum()
    }

    /// Q(u) = uᵀAu − λuᵀDu.
    pub fn q_form(&self, u: &[f64], lambda: f64) -> f64 {
        self.gagliardo(u) - lambda * self.hardy(u)
    }

    /// ⟨u,u⟩_{Ḣ^s} / ∫u²|x|^{−2s}.
    pub fn hardy_quotient(&self, u: &[f64]) -> Result<f64> {
        let h = self.hardy(u);
        if !(h > 0.0) {
            return Err(Error::Domain("Hardy integral vanishes (u ≡ 0)".into()));
        }
        Ok(self.gagliardo(u) / h)
    }

    /// Minimum of uᵀAu/uᵀDu over the grid and its minimizer.
    pub fn min_hardy_quotient(&self) -> Result<(f64, Vec<f64>)> {
        let m = self.len();
        let dinv: Vec<f64> = self.hardy_diag.iter().map(|d| 1.0 / d.sqrt()).collect();
        let b = DMatrix::from_fn(m, m, |i, j| self.gagliardo_matrix[(i, j)] * dinv[i] * dinv[j]);
        let (mu, v) = smallest_eigenpair(&b)?;
        let u: Vec<f64> = v.iter().zip(&dinv).map(|(x, d)| x * d).collect();
        Ok((mu, u))
    }

    /// Writes the assembly to a binary sidecar keyed by (n, s, grid hash).
    pub fn save_sidecar<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(SIDECAR_MAGIC)?;
        f.write_all(&(self.n as u64).to_le_bytes())?;
        f.write_all(&self.s.to_bits().to_le_bytes())?;
        f.write_all(&self.grid.hash().to_le_bytes())?;
        f.write_all(&(self.len() as u64).to_le_bytes())?;
        for v in self.gagliardo_matrix.iter().chain(&self.hardy_diag).chain(&self.lp_weights) {
            f.write_all(&v.to_le_bytes())?;
        }
        f.flush()?;
        Ok(())
    }

    /// Loads a sidecar; returns `None` when its key does not match.
    pub fn load_sidecar<P: AsRef<Path>>(path: P, grid: &RadialGrid, n: usize, s: f64) -> Result<Option<Self>> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        let word = |k: usize| -> Option<[u8; 8]> { buf.get(8 + 8 * k..16 + 8 * k)?.try_into().ok() };
        if buf.len() < 40 || &buf[..8] != SIDECAR_MAGIC {
            return Ok(None);
        }
        let nn = u64::from_le_bytes(word(0).unwrap()) as usize;
        let ss = f64::from_bits(u64::from_le_bytes(word(1).unwrap()));
        let hash = u64::from_le_bytes(word(2).unwrap());
        let m = u64::from_le_bytes(word(3).unwrap()) as usize;
        if nn != n || ss.to_bits() != s.to_bits() || hash != grid.hash() || m != grid.len() {
            return Ok(None);
        }
        let need = 40 + 8 * (m * m + 2 * m);
        if buf.len() != need {
            return Ok(None);
        }
        let vals: Vec<f64> = buf[40..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Some(QuadraticFormAssembly {
            grid: grid.clone(),
            n,
            s,
            gagliardo_matrix: DMatrix::from_column_slice(m, m, &vals[..m * m]),
            hardy_diag: vals[m * m..m * m + m].to_vec(),
            lp_weights: vals[m * m + m..].to_vec(),
            assembly_tolerance: 1e-10,
        }))
    }
}

const SIDECAR_MAGIC: &[u8; 8] = b"FLQFORM1";

/// Assembles the Gagliardo, Hardy and L^q forms of `params` on `grid`.
pub fn assemble_forms(grid: &RadialGrid, params: &FracParams) -> Result<QuadraticFormAssembly> {
    QuadraticFormAssembly::assemble(grid, params)
}

/// ⟨u,u⟩_{Ḣ^s}/∫u²|x|^{−2s} for a sampled function (assembles on its grid).
pub fn hardy_quotient(u: &RadialFunction, n: usize, s: f64) -> Result<f64> {
    let params = FracParams::critical(n, s, 0.0)?;
    let forms = QuadraticFormAssembly::assemble(u.grid(), &params)?;
    forms.hardy_quotient(u.values())
}

/// Lumped weights |S^{n−1}|∫φᵢ(r) r^γ dr.
fn lumped_weights(el: &[Elem], m: usize, gamma: f64, area: f64) -> Vec<f64> {
    let mut w = vec![0.0; m];
    let gl = gauss_legendre(10);
    for e in el {
        if e.flat {
            w[0] += area * e.b.powf(gamma + 1.0) / (gamma + 1.0);
            continue;
        }
        let rule = gl.mapped(e.a, e.b);
        for (&r, &q) in rule.nodes.iter().zip(&rule.weights) {
            let v = e.vals(r);
            let rg = r.powf(gamma);
            for k in 0..2 {
                if let Some(id) = e.dofs[k] {
                    w[id] += area * q * v[k] * rg;
                }
            }
        }
    }
    w
}

/// Smallest eigenpair of a symmetric positive-definite matrix by shifted
/// inverse iteration; a successful Cholesky factorization of B − σI certifies
/// that the shift stays below the spectrum.
pub fn smallest_eigenpair(b: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    let m = b.nrows();
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
    let mut x = DVector::from_element(m, 1.0 / (m as f64).sqrt());
    for _ in 0..30 {
        let y = chol.solve(&x);
        x = &y / y.norm();
    }
    let mut mu = x.dot(&(b * &x));
    let mut delta = 0.02;
    let factor = loop {
        let sigma = mu * (1.0 - delta);
        let mut shifted = b.clone();
        for i in 0..m {
            shifted[(i, i)] -= sigma;
        }
        if let Some(c) = shifted.cholesky() {
            break (c, sigma);
        }
        delta *= 2.0;
        if delta > 1.0 {
            break (chol.clone(), 0.0);
        }
    };
    let (fac, _sigma) = factor;
    for _ in 0..2000 {
        let y = fac.solve(&x);
        x = &y / y.norm();
        let new_mu = x.dot(&(b * &x));
        let done = (new_mu - mu).abs() <= 1e-14 * new_mu.abs();
        mu = new_mu;
        if done {
            break;
        }
    }
    if x.sum() < 0.0 {
        x = -x;
    }
    Ok((mu, x.iter().cloned().collect()))
}

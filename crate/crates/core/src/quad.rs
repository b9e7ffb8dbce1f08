//! Quadrature toolbox shared by every module.
//!
//! * [`gauss_legendre`] — Newton-polished Gauss–Legendre rules on [−1, 1].
//! * [`gauss_jacobi`] — Golub–Welsch rules for the weight (1−x)^a (1+x)^b.
//! * [`adaptive`] — globally adaptive Gauss–Kronrod (7/15) integration.
//! * [`Rule`] — a plain node/weight list with helpers to map, concatenate and
//!   build graded rules for integrands with an algebraic endpoint behaviour.

use crate::constants::gamma;
use nalgebra::{DMatrix, SymmetricEigen};
use std::collections::BinaryHeap;

/// A quadrature rule: Σ wᵢ f(xᵢ).
#[derive(Debug, Clone, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Affinely maps a rule on [−1, 1] to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        Rule {
            nodes: self.nodes.iter().map(|&x| c + h * x).collect(),
            weights: self.weights.iter().map(|&w| h * w).collect(),
        }
    }

    pub fn extend(&mut self, other: &Rule) {
        self.nodes.extend_from_slice(&other.nodes);
        self.weights.extend_from_slice(&other.weights);
    }

    /// Composite Gauss–Legendre rule over consecutive breakpoints.
    pub fn composite(breaks: &[f64], base: &Rule) -> Rule {
        let mut out = Rule::default();
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                out.extend(&base.mapped(w[0], w[1]));
            }
        }
        out
    }

    /// Rule for ∫_0^L f(x) dx where f(x) ≈ x^γ · (smooth) near x = 0.
    ///
    /// Geometric panels [L q^{k+1}, L q^k] use Gauss–Legendre of `order`
    /// points; the innermost panel [0, L q^levels] uses Gauss–Jacobi with the
    /// weight x^γ, whose weights are divided by x^γ so the returned rule is
    /// applied to f itself.
    pub fn graded_endpoint(len: f64, gamma_exp: f64, levels: usize, ratio: f64, order: usize) -> Rule {
        let gl = gauss_legendre(order);
        let mut out = Rule::default();
        let mut hi = len;
        for _ in 0..levels {
            let lo = hi * ratio;
            out.extend(&gl.mapped(lo, hi));
            hi = lo;
        }
        let gj = gauss_jacobi_unit(order, gamma_exp);
        for (&x, &w) in gj.nodes.iter().zip(&gj.weights) {
            let xn = hi * x;
            out.nodes.push(xn);
            out.weights.push(hi * w * hi.powf(gamma_exp) / xn.powf(gamma_exp));
        }
        out
    }
}

/// Gauss–Legendre rule with `n` points on [−1, 1].
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "Gauss–Legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Jacobi rule with `n` points on [−1, 1] for the weight (1−x)^a (1+x)^b,
/// a, b > −1, computed by the Golub–Welsch eigenvalue method.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Rule {
    assert!(n >= 1 && a > -1.0 && b > -1.0, "invalid Gauss–Jacobi request");
    let ab = a + b;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jm[(k, k)] = diag;
        if k + 1 < n {
            let j = kf + 1.0;
            let beta = if k == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * j * (j + a) * (j + b) * (j + ab)
                    / ((2.0 * j + ab).powi(2) * (2.0 * j + ab + 1.0) * (2.0 * j + ab - 1.0))
            };
            let off = beta.sqrt();
            jm[(k, k + 1)] = off;
            jm[(k + 1, k)] = off;
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma(a + 1.0).unwrap() * gamma(b + 1.0).unwrap()
        / gamma(ab + 2.0).unwrap();
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Rule for ∫_0^1 x^γ f(x) dx (weights include x^γ; apply to f only).
pub fn gauss_jacobi_unit(n: usize, gamma_exp: f64) -> Rule {
    let r = gauss_jacobi(n, 0.0, gamma_exp);
    let scale = 2f64.powf(-gamma_exp - 1.0);
    Rule {
        nodes: r.nodes.iter().map(|&y| 0.5 * (1.0 + y)).collect(),
        weights: r.weights.iter().map(|&w| w * scale).collect(),
    }
}

// Gauss–Kronrod 7/15 abscissae and weights (positive half, centre last).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

#[derive(PartialEq)]
struct Panel {
    err: f64,
    a: f64,
    b: f64,
    val: f64,
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Globally adaptive Gauss–Kronrod integration of f over the panels defined
/// by `breaks` (sorted). Stops when the summed error estimate is below
/// max(abs_tol, rel_tol·|I|) or `max_panels` is reached.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Integral {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(&mut f, w[0], w[1]);
            total += v;
            err += e;
            heap.push(Panel { err: e, a: w[0], b: w[1], val: v });
        }
    }
    let mut converged = err <= abs_tol.max(rel_tol * total.abs());
    while !converged && heap.len() < max_panels {
        let p = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        total += v1 + v2 - p.val;
        err += e1 + e2 - p.err;
        heap.push(Panel { err: e1, a: p.a, b: m, val: v1 });
        heap.push(Panel { err: e2, a: m, b: p.b, val: v2 });
        converged = err <= abs_tol.max(rel_tol * total.abs());
    }
    // Re-sum to avoid drift from the incremental updates.
    let value: f64 = heap.iter().map(|p| p.val).sum();
    let error: f64 = heap.iter().map(|p| p.err).sum();
    Integral { value, error, converged: converged || error <= abs_tol.max(rel_tol * value.abs()) }
}

/// Sorted, deduplicated breakpoints restricted to [a, b] (endpoints included).
pub fn breakpoints(a: f64, b: f64, interior: &[f64]) -> Vec<f64> {
    let mut v = vec![a, b];
    for &x in interior {
        if x.is_finite() && x > a && x < b {
            v.push(x);
        }
    }
    v.sort_by(f64::total_cmp);
    v.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * y.abs().max(1e-300));
    v
}

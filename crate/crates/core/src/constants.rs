//! Special functions and the closed-form constants of the problem
//!
//! ```text
//! (−Δ)^s u = λ|x|^{−α} u + |u|^{p−1} u   in R^n,
//! ```
//!
//! together with its Caffarelli–Silvestre extension. Every other module reads
//! its constants from here.
//!
//! | Function | Value |
//! |----------|-------|
//! | [`hardy_constant`] | Λ_{n,s} = 2^{2s} Γ²((n+2s)/4) / Γ²((n−2s)/4) |
//! | [`kappa_s`] | κ_s = Γ(1−s) / (2^{2s−1} Γ(s)) |
//! | [`gagliardo_constant`] | C_{n,s} = 2^{2s−1} π^{−n/2} Γ((n+2s)/2) / \|Γ(−s)\| |
//! | [`singular_integral_constant`] | 2·C_{n,s}, the P.V. normalisation of (−Δ)^s |
//! | [`poisson_normalizer`] | ι(n,s) with ∫ P_s(x,1) dx = 1 |
//!
//! With the unitary Fourier transform, ‖u‖²_{Ḣ^s} = ∫|ξ|^{2s}|û|² equals
//! C_{n,s}∬(u(x)−u(y))²/|x−y|^{n+2s}, while the pointwise operator is
//! (−Δ)^s u(x) = 2C_{n,s}·P.V.∫(u(x)−u(y))/|x−y|^{n+2s} dy.

use crate::error::{Error, Result};
use crate::quad;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

// ═══════════════════════════════════════════════════════════════════
// Problem parameters
// ═══════════════════════════════════════════════════════════════════

/// Problem parameters (n, s, λ, α, p).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub n: usize,
    pub s: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub p: f64,
}

impl FracParams {
    /// Validating constructor: 0 < s < 1, n ≥ 1, n > 2s, α > 0, p ≥ 1.
    pub fn new(n: usize, s: f64, lambda: f64, alpha: f64, p: f64) -> Result<Self> {
        let fp = FracParams { n, s, lambda, alpha, p };
        fp.validate()?;
        Ok(fp)
    }

    /// The conformal critical problem: α = 2s and p = 2*(s) − 1.
    pub fn critical(n: usize, s: f64, lambda: f64) -> Result<Self> {
        check_order(s)?;
        let p = (n as f64 + 2.0 * s) / (n as f64 - 2.0 * s);
        Self::new(n, s, lambda, 2.0 * s, p)
    }

    pub fn validate(&self) -> Result<()> {
        check_dimension(self.n, self.s)?;
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParams(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(Error::InvalidParams(format!("p must be >= 1, got {}", self.p)));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParams("lambda must be finite".into()));
        }
        Ok(())
    }

    /// 2*(s) = 2n/(n−2s).
    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.n, self.s)
    }

    /// p = 2*(s) − 1 = (n+2s)/(n−2s).
    pub fn conformal_power(&self) -> f64 {
        self.critical_exponent() - 1.0
    }

    /// Homogeneity exponent β = (n−2s)/2 of the Hardy saturator |x|^{−β}.
    pub fn beta(&self) -> f64 {
        0.5 * (self.n as f64 - 2.0 * self.s)
    }

    pub fn hardy(&self) -> f64 {
        hardy_constant(self.n, self.s).expect("validated parameters")
    }

    pub fn kappa(&self) -> f64 {
        kappa_s(self.s).expect("validated parameters")
    }
}

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParams(format!("s must lie in (0,1), got {s}")));
    }
    Ok(())
}

fn check_dimension(n: usize, s: f64) -> Result<()> {
    check_order(s)?;
    if n == 0 {
        return Err(Error::InvalidParams("n must be >= 1".into()));
    }
    if (n as f64) <= 2.0 * s {
        return Err(Error::Domain(format!("need n > 2s, got n={n}, s={s}")));
    }
    Ok(())
}

/// 2*(s) = 2n/(n−2s).
pub fn critical_exponent(n: usize, s: f64) -> f64 {
    2.0 * n as f64 / (n as f64 - 2.0 * s)
}

// ═══════════════════════════════════════════════════════════════════
// Gamma function
// ═══════════════════════════════════════════════════════════════════

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(z: f64) -> f64 {
    let mut a = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    a
}

/// Euler gamma function (Lanczos, g = 7, with reflection for x < 1/2).
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("gamma of non-finite argument {x}")));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::Domain(format!("gamma has a pole at {x}")));
    }
    if x < 0.5 {
        let g = gamma(1.0 - x)?;
        return Ok(PI / ((PI * x).sin() * g));
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    // t^{z+1/2} e^{−t} split in two factors to postpone overflow.
    let half = t.powf(0.5 * (z + 0.5));
    Ok((2.0 * PI).sqrt() * half * (half * (-t).exp()) * lanczos_sum(z))
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma needs x > 0, got {x}")));
    }
    if x < 0.5 {
        return Ok((PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)?);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln())
}

/// Beta function B(a, b) for a, b > 0.
pub fn beta(a: f64, b: f64) -> Result<f64> {
    Ok((ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?).exp())
}

/// Surface area |S^{n−1}| = 2π^{n/2}/Γ(n/2) of the unit sphere in R^n (|S^0| = 2).
pub fn sphere_area(n: usize) -> f64 {
    let h = 0.5 * n as f64;
    2.0 * PI.powf(h) / gamma(h).expect("n >= 1")
}

// ═══════════════════════════════════════════════════════════════════
// Constants of the problem
// ═══════════════════════════════════════════════════════════════════

/// Sharp fractional Hardy constant Λ_{n,s} = 2^{2s} Γ²((n+2s)/4)/Γ²((n−2s)/4).
pub fn hardy_constant(n: usize, s: f64) -> Result<f64> {
    check_dimension(n, s)?;
    let nf = n as f64;
    let r = gamma((nf + 2.0 * s) / 4.0)? / gamma((nf - 2.0 * s) / 4.0)?;
    Ok(4f64.powf(s) * r * r)
}

/// κ_s = Γ(1−s)/(2^{2s−1}Γ(s)).
pub fn kappa_s(s: f64) -> Result<f64> {
    check_order(s)?;
    Ok(gamma(1.0 - s)? / (2f64.powf(2.0 * s - 1.0) * gamma(s)?))
}

/// C_{n,s} = 2^{2s−1}π^{−n/2}Γ((n+2s)/2)/|Γ(−s)|, the constant of the
/// bilinear form ⟨u,v⟩_{Ḣ^s} = C_{n,s}∬(u(x)−u(y))(v(x)−v(y))/|x−y|^{n+2s}.
pub fn gagliardo_constant(n: usize, s: f64) -> Result<f64> {
    check_order(s)?;
    if n == 0 {
        return Err(Error::InvalidParams("n must be >= 1".into()));
    }
    let nf = n as f64;
    Ok(2f64.powf(2.0 * s - 1.0) * PI.powf(-0.5 * nf) * gamma(0.5 * nf + s)? / gamma(-s)?.abs())
}

/// Normalisation of the principal-value form of the operator,
/// (−Δ)^s u(x) = c·P.V.∫(u(x)−u(y))/|x−y|^{n+2s} dy with c = 2·C_{n,s}.
pub fn singular_integral_constant(n: usize, s: f64) -> Result<f64> {
    Ok(2.0 * gagliardo_constant(n, s)?)
}

/// Closed form ι(n,s) = Γ((n+2s)/2)/(π^{n/2}Γ(s)).
pub fn poisson_normalizer_closed(n: usize, s: f64) -> Result<f64> {
    check_order(s)?;
    let nf = n as f64;
    Ok(gamma(0.5 * nf + s)? / (PI.powf(0.5 * nf) * gamma(s)?))
}

/// ι(n,s) from quadrature of ∫_{R^n} (1+|x|²)^{−(n+2s)/2} dx.
///
/// With |x| = tan θ the integral becomes |S^{n−1}|∫_0^{π/2} sin^{n−1}θ cos^{2s−1}θ dθ;
/// the endpoint factor cos^{2s−1} is absorbed by a Gauss–Jacobi weight and the
/// rule order is doubled until two successive values agree.
pub fn poisson_normalizer_quadrature(n: usize, s: f64) -> Result<f64> {
    check_order(s)?;
    let half = 0.5 * PI;
    // φ = π/2 − θ: ∫_0^{π/2} cos^{n−1}φ · sin^{2s−1}φ dφ, weight φ^{2s−1}.
    let eval = |order: usize| {
        let r = quad::gauss_jacobi_unit(order, 2.0 * s - 1.0);
        let scale = half.powf(2.0 * s);
        scale
            * r.integrate(|x| {
                let phi = half * x;
                let ratio = if phi > 0.0 { phi.sin() / phi } else { 1.0 };
                phi.cos().powi(n as i32 - 1) * ratio.powf(2.0 * s - 1.0)
            })
    };
    let mut order = 8;
    let mut prev = eval(order);
    loop {
        order *= 2;
        let cur = eval(order);
        if (cur - prev).abs() <= 1e-14 * cur.abs() || order >= 256 {
            if (cur - prev).abs() > 1e-11 * cur.abs() {
                return Err(Error::Numerical("normalizer quadrature did not settle".into()));
            }
            return Ok(1.0 / (sphere_area(n) * cur));
        }
        prev = cur;
    }
}

/// ι(n,s), computed in closed form and by quadrature; the two must agree to 1e−10.
pub fn poisson_normalizer(n: usize, s: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be >= 1".into()));
    }
    let closed = poisson_normalizer_closed(n, s)?;
    let quadr = poisson_normalizer_quadrature(n, s)?;
    if (closed - quadr).abs() > 1e-10 * closed {
        return Err(Error::Numerical(format!(
            "normalizer mismatch: closed form {closed} vs quadrature {quadr}"
        )));
    }
    Ok(closed)
}

/// Best constant S_{n,s} of the Sobolev inequality ‖u‖²_{Ḣ^s} ≥ S‖u‖²_{L^{2*(s)}}.
pub fn sobolev_constant(n: usize, s: f64) -> Result<f64> {
    check_dimension(n, s)?;
    let nf = n as f64;
    Ok(4f64.powf(s) * PI.powf(s) * gamma(0.5 * nf + s)? / gamma(0.5 * nf - s)?
        * (gamma(0.5 * nf)? / gamma(nf)?).powf(2.0 * s / nf))
}

/// Coefficient c with (−Δ)^s (1+|x|²)^{−(n−2s)/2} = c·(1+|x|²)^{−(n+2s)/2},
/// c = 2^{2s}Γ((n+2s)/2)/Γ((n−2s)/2).
pub fn bubble_coefficient(n: usize, s: f64) -> Result<f64> {
    check_dimension(n, s)?;
    let nf = n as f64;
    Ok(4f64.powf(s) * gamma(0.5 * nf + s)? / gamma(0.5 * nf - s)?)
}

/// Amplitude K such that K(1+|x|²)^{−(n−2s)/2} solves (−Δ)^s u = u^{(n+2s)/(n−2s)}.
pub fn bubble_amplitude(n: usize, s: f64) -> Result<f64> {
    let c = bubble_coefficient(n, s)?;
    let p = (n as f64 + 2.0 * s) / (n as f64 - 2.0 * s);
    Ok(c.powf(1.0 / (p - 1.0)))
}

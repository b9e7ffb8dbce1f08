//! Numerical laboratory for the fractional Laplacian with a Hardy potential,
//!
//! ```text
//! (−Δ)^s u = λ|x|^{−α} u + |u|^{p−1} u   in R^n,
//! ```
//!
//! and its Caffarelli–Silvestre extension. Modules:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`constants`] | Γ, Λ_{n,s}, κ_s, C_{n,s}, ι(n,s), [`FracParams`] |
//! | [`grid`] | radial grids, sampled radial functions, spherical integrals |
//! | [`fraclap`] | pointwise and spectral (−Δ)^s, Gagliardo/Hardy/L^q forms |
//! | [`extension`] | Poisson extension, weighted flux, degenerate elliptic solver |
//! | [`kelvin`] | inversions, Kelvin transforms, comparison inequalities |
//! | [`pohozaev`] | term-by-term Pohozaev and energy identities |
//! | [`groundstate`] | Rayleigh-quotient minimization and verification |
//! | [`sphere_eig`] | weighted half-sphere Steklov eigenproblem, W₁ and W_ε |

pub mod constants;
pub mod error;
pub mod extension;
pub mod fraclap;
pub mod grid;
pub mod groundstate;
pub mod kelvin;
pub mod linalg;
pub mod pohozaev;
pub mod quad;
pub mod sphere_eig;

pub use constants::FracParams;
pub use error::{Error, Result};
pub use grid::{FnProfile, InnerModel, RadialFunction, RadialGrid, RadialProfile, TailModel};

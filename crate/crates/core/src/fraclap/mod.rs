//! Two independent realizations of (−Δ)^s — singular-integral quadrature for
//! radial functions and a periodic Fourier multiplier — plus the dense
//! quadratic forms built from the Gagliardo kernel.

pub mod forms;
pub mod kernel;
pub mod pointwise;
pub mod radial;
pub mod spectral;

pub use forms::{assemble_forms, hardy_quotient, smallest_eigenpair, QuadraticFormAssembly};
pub use kernel::RadialKernel;
pub use pointwise::fraclap_point;
pub use radial::{fraclap_profile, fraclap_radial, fraclap_radial_with, FracLapOptions, FracLapValue};
pub use spectral::{fraclap_spectral, periodic_image_sum, PeriodicGrid, SpectralResult};

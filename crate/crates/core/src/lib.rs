//! Phase-space methods for linear dispersive waves in the high-frequency
//! limit: symbol calculus, parametrices, ray and Wigner transport, paraxial
//! beams, and a spectral reference solver.

pub mod jet;
pub mod symbols;
pub mod linalg;
pub mod medium;
pub mod ode;
pub mod parametrix;
pub mod dispersion;
pub mod rays;
pub mod wigner;
pub mod beam;
pub mod oracle;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Pseudospectral toolkit for the Constantin-Lax-Majda model with
//! convection (the De Gregorio model) on the circle.
//!
//! * [`spectral`]: truncated Fourier series, Hilbert transform, dealiased products.
//! * [`dynamics`]: right-hand sides, RK4 integration, conserved-quantity diagnostics.
//! * [`hdw`]: the weighted space 𝓗_DW, its orthonormal basis and norms.
//! * [`linear`]: linearized operators at `-sin θ` and `-sin 2θ`, weights, decay fits.
//! * [`sqrt_scheme`]: Picard / characteristics solver for `f = √ω`.

pub mod dynamics;
pub mod error;
pub mod hdw;
pub mod linear;
pub mod profiles;
pub mod spectral;
pub mod sqrt_scheme;

pub use dynamics::{DiagnosticsRow, Integrator, ModelKind};
pub use error::{BlowUpKind, DynamicsError, HdwError, LinearError, SchemeError, SpectralError};
pub use hdw::TildeCoeffs;
pub use linear::{TridiagonalOperator, XWeights};
pub use spectral::{Dealias, GaugeChoice, GridField, SpectralField};

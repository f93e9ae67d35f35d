//! Ensemble eddy-viscosity (EEV) turbulence model in a periodic box.
//!
//! The crate is layered bottom-up:
//!
//! - [`spectral`]: Fourier fields, derivatives, projection, dealiasing, norms.
//! - [`ensemble`]: ensemble statistics and the shared eddy viscosity
//!   `ν_turb = μ |u′|ₑ l` with `l = |u′|ₑ τ` (optionally capped).
//! - [`dynamics`]: integrating-factor Runge–Kutta time stepping of all members.
//! - [`setup`]: seeded initial conditions, body forces and forcing scales.
//! - [`diagnostics`]: energy budget, flow scales, the dissipation bound and the
//!   term-by-term inequality ledger behind it.
//! - [`harness`]: configuration, runs, Reynolds sweeps, verification and I/O.

pub mod diagnostics;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod setup;
pub mod spectral;

pub use error::{Error, Result};

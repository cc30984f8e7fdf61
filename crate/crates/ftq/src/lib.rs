//! Relativistic phase-space quantum mechanics on the future tube.
//!
//! The phase space is the future tube Γ: complexified Minkowski points
//! z = x − i r whose imaginary part −r is timelike and past-pointing
//! (equivalently r·r > 0, r⁰ > 0 with signature (+,−,−,−)). Holomorphic
//! square-integrable functions on Γ form the state space; the Bergman kernel
//! of Γ is the identity operator, coherent states are its normalized slices,
//! and the conformal group acts by kernel-represented unitaries.
//!
//! Modules follow the mathematical layering: four-vector and tube geometry
//! ([`minkowski`]), Hamiltonian flows on the cotangent bundle and on Γ
//! ([`dynamics`]), the kernel and its metric ([`bergman`]), states and POVM
//! measurement ([`states`]), the conformal unitaries ([`conformal`]), Fourier
//! analysis on the forward momentum cone ([`fourier`]), and the phase-space
//! localization bound ([`localization`]). [`mc`] holds the seeded Monte-Carlo
//! machinery shared by the integration-based identities, and [`verify`] the
//! runnable identity suites.

pub mod bergman;
pub mod conformal;
pub mod dynamics;
pub mod error;
pub mod fourier;
pub mod localization;
pub mod mc;
pub mod minkowski;
pub mod quad;
pub mod states;
pub mod verify;

pub use error::{Error, Result};
pub use minkowski::{ComplexFourVector, FutureTubePoint, RealFourVector};

/// Boundary tolerance for future-tube membership: points with r·r at or below
/// this are treated as boundary and rejected, since kernel denominators
/// degenerate there.
pub const EPS_GAMMA: f64 = 1e-12;

//! Error types shared across the toolkit.

use thiserror::Error;

/// Errors surfaced by geometry, integration, and estimation routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A vector required to be timelike future-pointing is not.
    #[error("vector is not timelike future-pointing (v·v = {vv})")]
    DegenerateVector { vv: f64 },

    /// A matrix that must be inverted is singular.
    #[error("map is singular: {context}")]
    SingularMap { context: &'static str },

    /// A kernel denominator degenerated towards the tube boundary.
    #[error("kernel evaluation too close to the boundary (|denominator| = {denom})")]
    BoundaryDivergence { denom: f64 },

    /// Initial data does not lie on a positive mass shell.
    #[error("initial data violates the mass shell (H² = {h_squared})")]
    MassShellViolation { h_squared: f64 },

    /// An integration step left the Hamiltonian's domain.
    #[error("integration step failed at s = {s}: {reason}")]
    StepFailure { s: f64, reason: &'static str },

    /// A future-tube trajectory reached the cone boundary.
    #[error("trajectory left the future tube at s = {s}")]
    LeftFutureTube { s: f64 },

    /// A Monte-Carlo estimate did not reach the requested precision.
    #[error("estimate unreliable: relative std err {rel_std_err} exceeds {limit}")]
    InsufficientSamples { rel_std_err: f64, limit: f64 },

    /// A measurement region carries no probability mass.
    #[error("region probability underflow ({prob})")]
    ZeroProbabilityRegion { prob: f64 },

    /// Tail diagnostics flagged a non-integrable expectation.
    #[error("expectation dominated by extreme samples (max weight fraction {fraction})")]
    NonIntegrable { fraction: f64 },

    /// Round-off pushed an image point onto the tube boundary.
    #[error("image point numerically on the tube boundary (r·r = {rr})")]
    NumericalBoundary { rr: f64 },

    /// Malformed caller input.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

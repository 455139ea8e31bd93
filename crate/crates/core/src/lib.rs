//! Photodetection statistics of coherent radiation transmitted or reflected
//! by multimode random media with linear gain or absorption.
//!
//! The crate is organized around the `2N x 2N` scattering matrix of a
//! disordered medium. Spontaneous emission in an amplifying medium (or
//! thermal noise in an absorbing one) beats against a coherent input and
//! raises the photocurrent noise above shot level. Everything measurable by
//! a photodetector — mean current, excess noise power, noise figure, the
//! full photocount distribution — is computed from the reflection and
//! transmission blocks of the scattering matrix.
//!
//! Module map:
//!
//! - [`linalg`]: dense complex matrices (row-major), LU/Cholesky/Jacobi.
//! - [`scatter`]: scattering matrices, block structure, deficit matrices,
//!   Redheffer star composition of cascaded sections.
//! - [`ensembles`]: random generators for disordered waveguides, chaotic
//!   cavities, near-threshold single-pole resonances and Haar coupling
//!   vectors, all on reproducible counter-based RNG streams.
//! - [`photostat`]: generating function of the photocount, factorial
//!   cumulants, noise power, noise figures, photocount distribution.
//! - [`analytic`]: closed-form large-N reference curves the Monte Carlo
//!   ensembles are validated against.
//! - [`oracle`]: an independent semiclassical Monte Carlo check of the
//!   closed formulas (shares no code path with `photostat`).
//! - [`stats`]: estimator plumbing (batch means, KS and chi-square tests).
//! - [`exec`]: sequential/parallel ensemble execution.

pub mod analytic;
pub mod ensembles;
pub mod exec;
pub mod linalg;
pub mod oracle;
pub mod photostat;
pub mod scatter;
pub mod stats;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

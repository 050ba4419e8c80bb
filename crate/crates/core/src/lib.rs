//! Verification workbench for three-dimensional constant-curvature geometry.
//!
//! Metrics and fields are written as expressions ([`dsl`]), evaluated as
//! truncated Taylor jets ([`jet`]) so that every partial derivative is exact,
//! and fed to curvature routines ([`tensor`]), PDE residuals ([`residual`])
//! and sampled verdicts ([`verdict`]). [`extension`] builds six-dimensional
//! Riemann extensions and [`corpus`] holds the worked examples.

pub mod cli;
pub mod corpus;
pub mod dsl;
pub mod error;
pub mod extension;
pub mod jet;
pub mod residual;
pub mod tensor;
pub mod verdict;

pub use error::{Error, Result};

//! Dense semidefinite programming for small problems.
//!
//! The solver works on a block-diagonal real symmetric variable and handles
//! equality and `<=` inequality constraints. Complex Hermitian problems are
//! mapped to real ones with [`embed_hermitian`]; inner products of embedded
//! matrices are twice the real part of the complex ones, so callers halve the
//! objective when they read it back.

mod admm;
mod embed;
mod problem;

pub use admm::{project_psd, solve_sdp, SdpSettings, SdpSolution, SdpStatus, WarmStart};
pub use embed::{embed_hermitian, extract_hermitian};
pub use problem::{Constraint, SdpError, SdpProblem, Sense, SymCoeffs};

//! Sensing analysis for IRS-assisted non-line-of-sight targets.
//!
//! Two receiver architectures are compared throughout. A *fully-passive*
//! surface only reflects, so echoes come back to the BS over the
//! BS-IRS-target-IRS-BS path. A *semi-passive* surface carries `M_r` sensors
//! and receives the echo itself.
//!
//! - [`channel`]: geometry, steering vectors, path loss and channel draws.
//! - [`metrics`]: sensing SNR, CRB, detection probability, Fisher oracle.
//! - [`beamforming`]: closed-form, benchmark and optimized designs.
//! - [`analysis`]: expectation bounds, thresholds, scaling fits, crossovers.
//! - [`experiments`]: configs, seeded sweeps, CSV/SVG output and figures.

pub mod analysis;
pub mod beamforming;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod metrics;

pub use error::{Error, Result};

/// Complex scalar used everywhere.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<C64>;

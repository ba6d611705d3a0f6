//! Rigorous bounds on the maximum photon emission rate of atomic ensembles.
//!
//! The crate builds collective dissipative matrices for atoms in free space,
//! cavities, waveguides and behind finite-aperture detectors, extracts their
//! extremal spectra, solves the vector relaxation of the maximum-rate
//! problem, and fits disorder-averaged power laws in the atom number.

pub mod analytic;
pub mod ensembles;
pub mod error;
pub mod fit;
pub mod harness;
pub mod kernels;
pub mod quadrature;
pub mod rng;
pub mod sdp;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};

/// Free-space wavenumber for the unit wavelength used throughout (k0 = 2 pi / lambda0).
pub const K0_UNIT: f64 = 2.0 * std::f64::consts::PI;

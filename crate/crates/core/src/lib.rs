//! Coherent Kapitza-Dirac diffraction of electrons by two inclined laser beams.
//!
//! Two engines share the configuration types in [`model`]:
//!
//! * [`analytic`] evaluates the Volkov/Bessel-series populations of the
//!   `|l,o⟩` photon-exchange states (ponderomotive, absorptive and combined).
//! * [`tdse`] propagates a Gaussian wavepacket through the two-beam field with a
//!   matrix-free pseudospectral Hamiltonian and a Lanczos exponential
//!   integrator.
//!
//! [`diagnostics`] turns wavefunctions into detector spectra and order tables,
//! and [`harness`] drives parameter scans and the command line interface.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod harness;
pub mod model;
pub mod par;
pub mod tdse;

pub use error::{Error, Result};
pub use model::{
    derive_kinematics, Angle, BeamConfig, DerivedQuantities, ElectronConfig, Envelope,
    InteractionWindow, TemporalEnvelope,
};

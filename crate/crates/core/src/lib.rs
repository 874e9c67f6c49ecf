//! Virtual nonlinear vibration test rig.
//!
//! A base-excited two-mode structure with softening-hardening stiffness,
//! friction damping and a quadratic modal coupling is driven through a
//! shaker model by a phase-locked loop and amplitude controllers. The test
//! records feed backbone, power-balance and circle-fit identification, and
//! single-mode forced response predictions.

pub mod acceptance;
pub mod campaign;
pub mod control;
pub mod dsp;
pub mod error;
pub mod exciter;
pub mod ident;
pub mod output;
pub mod plant;
pub mod protocols;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
